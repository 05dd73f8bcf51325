"""Exhaustive optimal capacity for small instances.

Capacity under a traffic pattern v is ``a * sum(v) * W`` for the largest
scaling ``a`` such that, with one route per flow, a time-sharing of
simultaneously feasible link sets serves every link's load.  Feasible sets are
enumerated exactly (SINR plus single radio per node); the time-sharing and
route choice form a mixed-integer LP solved with HiGHS.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import coo_matrix

from ._kernels import _LO
from .mac import Channel
from .phy import PhysicalParams, transmission_range
from .routing import NoRouteError, hop_distances, simple_paths
from .topology import FlowSpec, Network, connectivity

MAX_NODES = 12
MAX_LINKS = 64
MAX_SETS = 200_000


class InstanceTooLarge(Exception):
    """The exhaustive oracle refuses; use the slot simulator instead."""


@dataclass
class OptimalSolution:
    capacity: float
    scale: float
    routes: list
    schedule: list  # (time share, links) pairs with positive share


def _candidate_routes(graph, flows, route_slack, max_hops):
    out = []
    for i, f in enumerate(flows):
        h = hop_distances(graph, f.dst)[f.src]
        if h < 0:
            raise NoRouteError(f"flow {f.src}->{f.dst} has no route")
        if max_hops is None:
            budget = h + route_slack
        else:
            budget = max_hops[i] if isinstance(max_hops, (list, tuple)) else max_hops
        paths = list(simple_paths(graph, f.src, f.dst, budget))
        if not paths:
            raise NoRouteError(f"flow {f.src}->{f.dst} has no route within {budget} hops")
        out.append(paths)
    return out


def maximal_feasible_sets(pairs, gain, params: PhysicalParams, max_sets: int = MAX_SETS):
    """All maximal sets of links that can succeed together.

    ``pairs`` are (tx, rx) node indices and ``gain`` the pairwise power matrix.
    Subsets of feasible sets are feasible, so a depth-first extension in index
    order visits exactly the feasible sets.
    """
    L = len(pairs)
    tx = np.array([p[0] for p in pairs])
    rx = np.array([p[1] for p in pairs])
    sig = gain[tx, rx]
    cross = gain[np.ix_(tx, rx)]  # cross[l, m]: power of l's transmitter at m's receiver
    np.fill_diagonal(cross, 0.0)
    clash = ((tx[:, None] == tx[None, :]) | (tx[:, None] == rx[None, :])
             | (rx[:, None] == tx[None, :]) | (rx[:, None] == rx[None, :]))
    np.fill_diagonal(clash, False)
    beta, n0 = params.beta, params.n0
    usable = sig >= params.h_r * _LO

    def fits(members, interf, cand):
        if not usable[cand] or clash[cand, members].any():
            return False
        own = n0 + cross[members, cand].sum()
        if own > 0 and sig[cand] / own < beta * _LO:
            return False
        if members:
            grown = interf + cross[cand, members]
            if np.any(sig[members] / grown < beta * _LO):
                return False
        return True

    found = []
    count = 0

    def dfs(members, interf, start):
        nonlocal count
        count += 1
        if count > max_sets:
            raise InstanceTooLarge(f"more than {max_sets} feasible link sets")
        for c in range(start, L):
            if fits(members, interf, c):
                grown = interf + cross[c, members] if members else interf
                own = n0 + cross[members, c].sum()
                dfs(members + [c], np.append(grown, own), c + 1)
        if members and not any(fits(members, interf, c) for c in range(L) if c not in members):
            found.append(tuple(members))

    dfs([], np.zeros(0), 0)
    return found


def solve_optimal(network: Network, flows: list[FlowSpec], p_t: float,
                  params: PhysicalParams, *, route_slack: int = 1, max_hops=None,
                  max_nodes: int = MAX_NODES, max_links: int = MAX_LINKS) -> OptimalSolution:
    """Optimal single-path routing and time-sharing schedule.

    Candidate routes are simple paths of at most ``min hops + route_slack``
    hops, or at most ``max_hops`` (an int or per-flow list) when given.  A
    fixed hop budget keeps candidate sets nested as power grows.
    """
    if network.n > max_nodes:
        raise InstanceTooLarge(f"{network.n} nodes > {max_nodes}; use simulation mode")
    graph = connectivity(network, transmission_range(p_t, params))
    routes = _candidate_routes(graph, flows, route_slack, max_hops)
    pairs = sorted({l for rs in routes for p in rs for l in zip(p[:-1], p[1:])})
    if len(pairs) > max_links:
        raise InstanceTooLarge(f"{len(pairs)} candidate links > {max_links}; use simulation mode")
    link_id = {p: i for i, p in enumerate(pairs)}
    sets = maximal_feasible_sets(pairs, Channel(network, p_t, params).gain, params)

    v = np.array([f.weight for f in flows])
    route_vars = [(i, p) for i, rs in enumerate(routes) for p in rs]
    n_s, n_r = len(sets), len(route_vars)

    def build(integral):
        n_var = 1 + n_s + n_r + (n_r if integral else 0)
        rows, cols, vals, lo, hi = [], [], [], [], []
        row = 0

        def add(entries, lb, ub):
            nonlocal row
            for c, val in entries:
                rows.append(row)
                cols.append(c)
                vals.append(val)
            lo.append(lb)
            hi.append(ub)
            row += 1

        add([(1 + s, 1.0) for s in range(n_s)], -np.inf, 1.0)
        served = [[] for _ in pairs]
        for s, members in enumerate(sets):
            for l in members:
                served[l].append(1 + s)
        loaded = [[] for _ in pairs]
        for k, (_, p) in enumerate(route_vars):
            for l in zip(p[:-1], p[1:]):
                loaded[link_id[l]].append(1 + n_s + k)
        for l in range(len(pairs)):
            add([(c, 1.0) for c in loaded[l]] + [(c, -1.0) for c in served[l]], -np.inf, 0.0)
        for i in range(len(flows)):
            ks = [1 + n_s + k for k, (fi, _) in enumerate(route_vars) if fi == i]
            add([(c, 1.0) for c in ks] + [(0, -v[i])], 0.0, 0.0)
            if integral:
                add([(c + n_r, 1.0) for c in ks], 1.0, 1.0)
        if integral:
            for k in range(n_r):
                # a flow's rate never exceeds one packet per slot
                add([(1 + n_s + k, 1.0), (1 + n_s + n_r + k, -1.0)], -np.inf, 0.0)
        A = coo_matrix((vals, (rows, cols)), shape=(row, n_var)).tocsr()
        cost = np.zeros(n_var)
        cost[0] = -1.0
        integrality = np.zeros(n_var)
        ub = np.full(n_var, np.inf)
        if integral:
            integrality[1 + n_s + n_r:] = 1
            ub[1 + n_s + n_r:] = 1.0
        res = milp(cost, constraints=LinearConstraint(A, lo, hi), integrality=integrality,
                   bounds=Bounds(np.zeros(n_var), ub), options={"mip_rel_gap": 0.0})
        if not res.success:
            raise RuntimeError(f"solver failed: {res.message}")
        return res.x

    x = build(integral=False)
    y = x[1 + n_s:1 + n_s + n_r]
    tol = 1e-9
    split = any(sum(1 for k, (fi, _) in enumerate(route_vars) if fi == i and y[k] > tol) > 1
                for i in range(len(flows)))
    if split:
        x = build(integral=True)
        y = x[1 + n_s:1 + n_s + n_r]
    chosen = []
    for i in range(len(flows)):
        ks = [k for k, (fi, _) in enumerate(route_vars) if fi == i]
        chosen.append(route_vars[max(ks, key=lambda k: y[k])][1])
    a = float(x[0])
    schedule = [(float(x[1 + s]), [pairs[l] for l in sets[s]])
                for s in range(n_s) if x[1 + s] > tol]
    return OptimalSolution(a * float(v.sum()) * params.w, a, chosen, schedule)


def optimal_capacity(network: Network, flows: list[FlowSpec], p_t: float,
                     params: PhysicalParams, **kwargs) -> float:
    """Optimal network capacity in units of W (see :func:`solve_optimal`)."""
    return solve_optimal(network, flows, p_t, params, **kwargs).capacity
