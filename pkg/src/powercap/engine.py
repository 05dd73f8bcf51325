"""Slot-loop simulator: drains flow workloads and reports capacity.

Capacity is measured as delivered workload over drain time,
``sum(workload_i) / T`` packets per slot, i.e. units of the channel rate W.
"""

from __future__ import annotations

import json
import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .mac import (CW_MAX, CW_MIN, Channel, LinkQueueState, LinkTable, cen_schedule_slot,
                  cs_schedule_slot)
from .phy import PhysicalParams, power_for_range, transmission_range
from .routing import Route, min_hop_route
from .topology import Network, connectivity, is_connected

log = logging.getLogger(__name__)

SCHEDULERS = ("cs", "cen")
ROUTINGS = ("hop",)


class SimulationTimeout(Exception):
    """max_slots elapsed before every workload was delivered."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


class UndefinedGain(ValueError):
    pass


@dataclass
class SimConfig:
    network: Network
    flows: list
    r: float | None = None
    p_t: float | None = None
    params: PhysicalParams = field(default_factory=PhysicalParams)
    scheduler: str = "cen"
    routing: str = "hop"
    seed: int = 0
    max_slots: int | None = None
    cw_min: int = CW_MIN
    cw_max: int = CW_MAX
    cen_order: str = "random"
    routes: list | None = None

    def __post_init__(self):
        if (self.r is None) == (self.p_t is None):
            raise ValueError("give exactly one of r (target range) or p_t")
        if self.scheduler not in SCHEDULERS:
            raise ValueError(f"unknown scheduler {self.scheduler!r}")
        if self.routing not in ROUTINGS:
            raise ValueError(f"unknown routing {self.routing!r}")
        if any(f.workload <= 0 for f in self.flows):
            raise ValueError("workloads must be positive")
        if self.max_slots is not None and self.max_slots <= 0:
            raise ValueError("max_slots must be positive")

    @property
    def power(self) -> float:
        return self.p_t if self.p_t is not None else power_for_range(self.r, self.params)

    @property
    def range(self) -> float:
        return transmission_range(self.power, self.params)


@dataclass
class CapacityReport:
    T: int
    capacity: float
    delivered: int
    completion: list
    spatial_reuse: float
    avg_hops: float
    collision_rate: float
    attempts: int = 0
    successes: int = 0
    finished: bool = True


def compute_routes(network: Network, flows, r: float) -> list[Route]:
    graph = connectivity(network, r)
    return [min_hop_route(graph, f.src, f.dst, network) for f in flows]


def run(config: SimConfig, trace=None) -> CapacityReport:
    """Drain every flow's workload hop by hop and measure the drain time.

    Sources are saturated: a flow's whole workload waits at its first hop from
    slot 0 (unbounded buffers).  Relays forward in FIFO order.  Collided
    packets stay queued and are retried.  ``trace`` may be a writable text
    stream; each slot's outcome is written to it as one JSON line.
    """
    net, flows = config.network, config.flows
    p_t = config.power
    r = transmission_range(p_t, config.params)
    routes = config.routes
    if routes is None:
        graph = connectivity(net, r)
        if not is_connected(graph):
            log.warning("network is not connected at r=%.1f", r)
        routes = [min_hop_route(graph, f.src, f.dst, net) for f in flows]

    pairs = sorted({l for rt in routes for l in rt.links()})
    links = LinkTable(pairs)
    # next_link[f][h]: link id of hop h of flow f
    next_link = [[links.id(u, v) for u, v in rt.links()] for rt in routes]
    queues = [deque() for _ in pairs]
    state = LinkQueueState.fresh(len(pairs), config.cw_min, config.cw_max)
    # interleave flows sharing a first hop
    pending = [[i, f.workload] for i, f in enumerate(flows)]
    while pending:
        for item in pending:
            i = item[0]
            queues[next_link[i][0]].append((i, 0))
            item[1] -= 1
        pending = [it for it in pending if it[1] > 0]
    for l, q in enumerate(queues):
        state.backlog[l] = len(q)

    channel = Channel(net, p_t, config.params)
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0x5107]))
    total = sum(f.workload for f in flows)
    max_slots = config.max_slots or 200 * total
    delivered = [0] * len(flows)
    completion = [None] * len(flows)
    done = 0
    attempts = successes = collisions = busy_slots = 0
    if trace is not None:
        trace.write(json.dumps(trace_header(net, config.params, p_t, links)) + "\n")

    t = 0
    while done < total:
        if t >= max_slots:
            report = _report(t, total, done, completion, attempts, successes, collisions,
                             busy_slots, routes, finished=False)
            raise SimulationTimeout(f"{done}/{total} packets delivered after {t} slots", report)
        ready = np.flatnonzero(state.backlog)
        if config.scheduler == "cen":
            out = cen_schedule_slot(state, ready, links, channel, rng, config.cen_order)
        else:
            out = cs_schedule_slot(state, ready, links, channel, rng)
        t += 1
        if len(out.attempted):
            busy_slots += 1
            attempts += len(out.attempted)
            successes += len(out.succeeded)
            collisions += len(out.collided)
        for l in out.succeeded:
            f, h = queues[l].popleft()
            state.backlog[l] -= 1
            if h + 1 == len(next_link[f]):
                delivered[f] += 1
                done += 1
                if delivered[f] == flows[f].workload:
                    completion[f] = t
            else:
                nxt = next_link[f][h + 1]
                queues[nxt].append((f, h + 1))
                state.backlog[nxt] += 1
        if trace is not None:
            trace.write(json.dumps(out.to_json(links, t - 1)) + "\n")
    return _report(t, total, done, completion, attempts, successes, collisions, busy_slots, routes)


def _report(t, total, done, completion, attempts, successes, collisions, busy_slots, routes,
            finished=True) -> CapacityReport:
    return CapacityReport(
        T=t,
        capacity=done / t if t else 0.0,
        delivered=done,
        completion=list(completion),
        spatial_reuse=successes / busy_slots if busy_slots else 0.0,
        avg_hops=float(np.mean([rt.hops for rt in routes])) if routes else 0.0,
        collision_rate=collisions / attempts if attempts else 0.0,
        attempts=attempts,
        successes=successes,
        finished=finished,
    )


def trace_header(network: Network, params: PhysicalParams, p_t: float, links: LinkTable) -> dict:
    return {"type": "header", "nodes": network.positions.tolist(), "params": params.to_dict(),
            "p_t": p_t, "links": [list(p) for p in links.pairs]}


def gain(c_high: float, c_low: float) -> float:
    """Capacity gain of the higher power setting over the lower one."""
    if c_low <= 0:
        raise UndefinedGain("capacity at the low power setting is zero")
    return c_high / c_low


@dataclass
class SweepRow:
    scheduler: str
    routing: str
    r_m: float
    seed: int
    report: CapacityReport

    def csv_fields(self) -> list:
        rep = self.report
        return [self.scheduler, self.routing, f"{self.r_m:g}", self.seed, rep.T,
                f"{rep.capacity:.6f}", f"{rep.spatial_reuse:.6f}", f"{rep.avg_hops:.6f}",
                f"{rep.collision_rate:.6f}"]


CSV_COLUMNS = ["scheduler", "routing", "r_m", "seed", "T_slots", "capacity_W",
               "spatial_reuse", "avg_hops", "collision_rate"]


def sweep(instances, ladder, schedulers=SCHEDULERS, params: PhysicalParams | None = None,
          routing: str = "hop", **config_kw) -> list[SweepRow]:
    """Run every (instance, r, scheduler) combination.

    ``instances`` is a sequence of ``(seed, network, flows)``; ``flows`` may
    be a callable ``r -> flows``.  Routes are recomputed per r.
    """
    params = params or PhysicalParams()
    rows = []
    for seed, net, flows in instances:
        for r in ladder:
            fl = flows(r) if callable(flows) else flows
            routes = compute_routes(net, fl, r)
            for sched in schedulers:
                cfg = SimConfig(net, fl, r=r, params=params, scheduler=sched, routing=routing,
                                seed=seed, routes=routes, **config_kw)
                try:
                    rep = run(cfg)
                except SimulationTimeout as exc:
                    raise SimulationTimeout(f"r={r:g} seed={seed} {sched}: {exc}", exc.report) from exc
                log.info("r=%g seed=%d %s: T=%d capacity=%.4f", r, seed, sched, rep.T, rep.capacity)
                rows.append(SweepRow(sched, routing, r, seed, rep))
    return rows


def mean_by(rows: list[SweepRow], attr: str = "capacity") -> dict:
    """Average a report attribute over seeds, keyed by (scheduler, r)."""
    acc: dict = {}
    for row in rows:
        acc.setdefault((row.scheduler, row.r_m), []).append(getattr(row.report, attr))
    return {k: float(np.mean(v)) for k, v in acc.items()}
