"""Executable checks of the geometric lemmas and theorem constructions.

Links are given as ``(tx_xy, rx_xy)`` coordinate pairs throughout, so the
checks can audit any slot outcome without the originating network object.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .engine import SimConfig, run
from .mac import feasible_at_power
from .optimal import optimal_capacity
from .phy import PhysicalParams, power_for_range, sinr, transmission_range
from .routing import _seg_distance, hop_distances, min_hop_route
from .topology import (FlowSpec, connectivity, gen_theorem2, gen_uniform,
                       min_connecting_range, normalize_pattern)

REL_TOL = 1e-9


@dataclass(frozen=True)
class GuardDisc:
    center: tuple
    radius: float


def _links(link_set):
    return [(np.asarray(tx, dtype=float), np.asarray(rx, dtype=float)) for tx, rx in link_set]


def guard_discs(link_set, params: PhysicalParams) -> list[GuardDisc]:
    """One disc per link, centred on the receiver, radius (delta/2) * length."""
    return [GuardDisc(tuple(rx), params.delta / 2 * float(np.hypot(*(rx - tx))))
            for tx, rx in _links(link_set)]


def check_lemma1(link_set, params: PhysicalParams) -> bool:
    """Receivers of simultaneous links are separated by delta/2 times the summed lengths.

    Equivalent to the guard discs being pairwise disjoint (touching allowed).
    """
    discs = guard_discs(link_set, params)
    for i in range(len(discs)):
        for j in range(i + 1, len(discs)):
            gap = math.dist(discs[i].center, discs[j].center)
            need = discs[i].radius + discs[j].radius
            if gap < need * (1 - REL_TOL):
                return False
    return True


def lemma2_bound(R: float, d_min: float, params: PhysicalParams) -> int:
    """Most links of length >= d_min from one feasible set that can meet a disc of radius R."""
    if R < 0 or d_min <= 0:
        raise ValueError("need R >= 0 and d_min > 0")
    if params.beta <= 1:
        raise ValueError("bound needs beta > 1")
    delta = params.delta
    return math.floor((4 * (delta + 1) * R / d_min + delta + 2) ** 2 / delta ** 4)


def links_meeting_disc(link_set, center, R: float) -> int:
    """Number of link segments intersecting the closed disc (exact segment distance)."""
    c = np.asarray(center, dtype=float)
    return sum(_seg_distance(c, tx, rx) <= R * (1 + REL_TOL) for tx, rx in _links(link_set))


def check_lemma2(link_set, center, R: float, d_min: float, params: PhysicalParams) -> bool:
    return links_meeting_disc(link_set, center, R) <= lemma2_bound(R, d_min, params)


def random_feasible_set(rng: np.random.Generator, params: PhysicalParams, n: int = 60,
                        side: float = 1000.0, r: float = 250.0, d_min: float = 20.0):
    """A random maximal feasible link set among links of length in [d_min, r].

    Nodes are uniform in the square; candidate links are admitted greedily in
    random order until none fits.  Returns coordinate pairs.
    """
    pos = rng.uniform(0.0, side, size=(n, 2))
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    tx, rx = np.nonzero((dist >= d_min) & (dist <= r))
    if len(tx) == 0:
        return []
    p_t = power_for_range(r, params)
    with np.errstate(divide="ignore"):
        gain = p_t / dist ** params.alpha
    np.fill_diagonal(gain, np.inf)
    order = rng.permutation(len(tx)).astype(np.int64)
    adm = _kernels.cen_admit(tx.astype(np.int64), rx.astype(np.int64), order, gain,
                             params.beta, params.h_r, params.n0, n)
    return [(tuple(pos[tx[c]]), tuple(pos[rx[c]])) for c in adm]


@dataclass
class Theorem2Report:
    m: int
    n: int
    middle_sinr: float
    min_sinr: float
    all_feasible: bool
    routes_through_chain: bool
    gain_bound: float
    beta: float
    c_high: float | None = None
    c_low: float | None = None

    @property
    def ok(self) -> bool:
        # the middle link takes the most interference
        middle_worst = self.middle_sinr <= self.min_sinr * (1 + REL_TOL)
        return (middle_worst and self.min_sinr > self.beta and self.all_feasible
                and self.routes_through_chain)


def check_theorem2(m: int, d: float = 100.0, params: PhysicalParams | None = None,
                   K: float | None = None, r_low: float | None = None,
                   simulate: bool = False, workload: int = 500, seed: int = 0) -> Theorem2Report:
    """Audit the parallel-links construction with 2m+1 vertical links.

    Low power is set by ``r_low`` (default 0.75 d), high power by ``K`` times
    the low power (default: the power reaching 10 d).  With ``simulate`` the
    report also carries Cen capacities at both powers.
    """
    params = params or PhysicalParams()
    r_low = 0.75 * d if r_low is None else r_low
    if not 2 * d / 3 < r_low < d:
        raise ValueError("low-power range must lie strictly between 2d/3 and d")
    p_low = power_for_range(r_low, params)
    p_high = power_for_range(10 * d, params) if K is None else K * p_low
    if K is not None and K < 1:
        raise ValueError("K must be at least 1")
    net, flows = gen_theorem2(m, d, workload)
    pos = net.positions
    vertical = [(pos[f.src], pos[f.dst]) for f in flows]
    tops = [tx for tx, _ in vertical]
    sinrs = []
    for j, (tx, rx) in enumerate(vertical):
        others = [t for i, t in enumerate(tops) if i != j]
        sinrs.append(sinr(tx, rx, others, p_high, params))
    feasible = feasible_at_power(vertical, p_high, params)

    graph = connectivity(net, r_low)
    a1, a2, a3 = net.roles["A1"], net.roles["A2"], net.roles["A3"]
    through = True
    for f in flows:
        nodes = min_hop_route(graph, f.src, f.dst).nodes
        chain = any(nodes[i:i + 3] == (a1, a3, a2) for i in range(len(nodes) - 2))
        # no route at all avoids A3
        through = through and chain and not _reachable_without(graph, f.src, f.dst, a3)
    n = net.n
    report = Theorem2Report(m, n, sinrs[m], min(sinrs), feasible, through, n / 3 + 1,
                             params.beta)
    if simulate:
        report.c_high = run(SimConfig(net, flows, p_t=p_high, params=params, seed=seed)).capacity
        report.c_low = run(SimConfig(net, flows, p_t=p_low, params=params, seed=seed)).capacity
    return report


def _reachable_without(graph, src, dst, banned) -> bool:
    seen = {src, banned}
    stack = [src]
    while stack:
        u = stack.pop()
        if u == dst:
            return True
        for v in graph.adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return False


def check_theorem1(instance, ladder, params: PhysicalParams | None = None,
                   route_slack: int = 1) -> bool:
    """Optimal capacity is non-decreasing along an ascending power ladder.

    ``instance`` is ``(network, flows)``.  The route hop budget is fixed from
    the lowest power so that candidate sets only grow with power.
    """
    params = params or PhysicalParams()
    net, flows = instance
    ladder = sorted(ladder)
    graph = connectivity(net, transmission_range(ladder[0], params))
    budget = [int(hop_distances(graph, f.dst)[f.src]) + route_slack for f in flows]
    caps = [optimal_capacity(net, flows, p, params, max_hops=budget) for p in ladder]
    return all(b >= a * (1 - REL_TOL) for a, b in zip(caps, caps[1:]))


def random_instance(seed: int, n_max: int = 8, n_flows: int = 2, side: float = 1000.0,
                    params: PhysicalParams | None = None, steps: int = 4):
    """A random connected instance with a power ladder: ``((network, flows), ladder)``.

    The lowest rung is just above the connectivity threshold; rungs grow
    geometrically until every pair is in range.
    """
    params = params or PhysicalParams()
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, n_max + 1))
    net = gen_uniform(n, side, int(rng.integers(2**31)))
    r0 = min_connecting_range(net) * 1.001
    r_top = net.diameter() * 1.001
    ranges = np.geomspace(r0, max(r_top, r0 * 1.5), steps)
    pairs = rng.choice(n, size=(n_flows, 2), replace=True)
    flows = []
    for s, t in pairs:
        if s == t:
            t = (s + 1) % n
        flows.append(FlowSpec(int(s), int(t)))
    return (net, normalize_pattern(flows)), [power_for_range(r, params) for r in ranges]


@dataclass
class TraceAudit:
    slots: int = 0
    checked_sets: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def audit_trace(lines, params: PhysicalParams | None = None) -> TraceAudit:
    """Check every slot of a JSON-lines trace.

    Each succeeded set must be feasible at the trace's power, keep its
    receivers separated (see :func:`check_lemma1`) and be a subset of the
    attempted set.  Parameters default to the header's.
    """
    audit = TraceAudit()
    nodes = p_t = None
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        rec = json.loads(line)
        if rec.get("type") == "header":
            nodes = np.asarray(rec["nodes"], dtype=float)
            p_t = float(rec["p_t"])
            if params is None:
                params = PhysicalParams(**rec["params"])
            continue
        if nodes is None:
            raise ValueError("trace has no header line before its first slot")
        audit.slots += 1
        succeeded = [tuple(p) for p in rec["succeeded"]]
        if not set(succeeded) <= {tuple(p) for p in rec["attempted"]}:
            audit.violations.append((lineno, rec["slot"], "success without attempt"))
        if not succeeded:
            continue
        audit.checked_sets += 1
        links = [(nodes[u], nodes[v]) for u, v in succeeded]
        if not feasible_at_power(links, p_t, params):
            audit.violations.append((lineno, rec["slot"], "infeasible succeeded set"))
        if not check_lemma1(links, params):
            audit.violations.append((lineno, rec["slot"], "receiver separation"))
    return audit


def audit_trace_file(path, params: PhysicalParams | None = None) -> TraceAudit:
    with open(path) as fh:
        return audit_trace(fh, params)


__all__ = ["GuardDisc", "Theorem2Report", "TraceAudit", "audit_trace", "audit_trace_file",
           "check_lemma1", "check_lemma2", "check_theorem1", "check_theorem2", "guard_discs",
           "lemma2_bound", "links_meeting_disc", "random_feasible_set", "random_instance"]
