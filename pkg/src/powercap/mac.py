"""Per-slot link schedulers: carrier sensing with exponential backoff (CS) and
a centralized collision-free greedy benchmark (Cen).

Both enforce a single radio per node: a node is in at most one transmission
per slot.  Under CS this is only the transmitter's own knowledge; a link whose
receiver is itself transmitting simply fails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .phy import PhysicalParams, gain_matrix, received_power, reception_ok, sinr
from .topology import Network

CW_MIN = 16
CW_MAX = 1024


class Channel:
    """A network radiating at common power ``p_t``; caches the pairwise gain matrix."""

    def __init__(self, network: Network, p_t: float, params: PhysicalParams):
        self.network = network
        self.p_t = p_t
        self.params = params
        self._gain = None

    @property
    def gain(self) -> np.ndarray:
        if self._gain is None:
            self._gain = gain_matrix(self.network.positions, self.p_t, self.params)
        return self._gain


class LinkTable:
    """Directed links indexed densely from 0."""

    def __init__(self, pairs):
        self.pairs = [tuple(int(x) for x in p) for p in pairs]
        self.index = {p: i for i, p in enumerate(self.pairs)}
        if len(self.index) != len(self.pairs):
            raise ValueError("duplicate directed link")
        arr = np.array(self.pairs, dtype=np.int64).reshape(-1, 2)
        self.tx = np.ascontiguousarray(arr[:, 0])
        self.rx = np.ascontiguousarray(arr[:, 1])

    def __len__(self):
        return len(self.pairs)

    def id(self, u: int, v: int) -> int:
        return self.index[(u, v)]


@dataclass
class LinkQueueState:
    backlog: np.ndarray
    backoff: np.ndarray
    cw: np.ndarray
    cw_min: int = CW_MIN
    cw_max: int = CW_MAX

    @classmethod
    def fresh(cls, n_links: int, cw_min: int = CW_MIN, cw_max: int = CW_MAX):
        if not 1 <= cw_min <= cw_max:
            raise ValueError("need 1 <= cw_min <= cw_max")
        return cls(np.zeros(n_links, dtype=np.int64), np.zeros(n_links, dtype=np.int64),
                   np.full(n_links, cw_min, dtype=np.int64), cw_min, cw_max)


_EMPTY = np.zeros(0, dtype=np.int64)


@dataclass(frozen=True)
class SlotOutcome:
    attempted: np.ndarray = field(default_factory=lambda: _EMPTY)
    succeeded: np.ndarray = field(default_factory=lambda: _EMPTY)
    collided: np.ndarray = field(default_factory=lambda: _EMPTY)
    deferred: np.ndarray = field(default_factory=lambda: _EMPTY)

    def to_json(self, links: LinkTable, slot: int) -> dict:
        def pairs(ids):
            return [list(links.pairs[i]) for i in ids]
        return {"type": "slot", "slot": slot, "attempted": pairs(self.attempted),
                "succeeded": pairs(self.succeeded), "collided": pairs(self.collided),
                "deferred": pairs(self.deferred)}


def _as_ids(ready) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(ready, dtype=np.int64))


def cs_schedule_slot(state: LinkQueueState, ready, links: LinkTable, channel: Channel,
                     rng: np.random.Generator) -> SlotOutcome:
    """One carrier-sensing slot.

    Ready links sense one by one in a fresh random order.  A link transmits iff
    the sensed power at its transmitter is at most ``h_s`` and its backoff is
    zero.  Links that sensed idle count their backoff down; links that sensed
    busy freeze it.  Collisions double the window (capped) and redraw the
    backoff; successes reset the window to ``cw_min``.
    """
    ready = _as_ids(ready)
    if len(ready) == 0:
        return SlotOutcome()
    p = channel.params
    order = rng.permutation(ready)
    status = _kernels.cs_sense(links.tx, order, state.backoff, channel.gain,
                               p.h_s, p.n0, channel.network.n)
    attempted = order[status == _kernels.ADMITTED]
    ok = _kernels.judge(links.tx, links.rx, attempted, channel.gain,
                        p.beta, p.h_r, p.n0, channel.network.n)
    succeeded = attempted[ok]
    collided = attempted[~ok]

    state.backoff[order[status == _kernels.WAITING]] -= 1
    state.cw[succeeded] = state.cw_min
    if len(collided):
        state.cw[collided] = np.minimum(state.cw[collided] * 2, state.cw_max)
        state.backoff[collided] = rng.integers(0, state.cw[collided])
    return SlotOutcome(np.sort(attempted), np.sort(succeeded), np.sort(collided),
                       np.sort(order[status != _kernels.ADMITTED]))


def cen_schedule_slot(state: LinkQueueState, ready, links: LinkTable, channel: Channel,
                      rng: np.random.Generator | None = None,
                      order: str = "random") -> SlotOutcome:
    """Greedy collision-free maximal set built one link at a time.

    A link is admitted iff it and every already-admitted link still pass the
    reception test.  ``order="random"`` considers ready links in a fresh random
    order (needs ``rng``); ``order="backlog"`` goes by descending backlog with
    ties broken by link id.
    """
    ready = _as_ids(ready)
    if len(ready) == 0:
        return SlotOutcome()
    p = channel.params
    if order == "random":
        if rng is None:
            raise ValueError("random admission order needs an rng")
        seq = rng.permutation(ready)
    elif order == "backlog":
        seq = ready[np.lexsort((ready, -state.backlog[ready]))]
    else:
        raise ValueError(f"unknown admission order {order!r}")
    admitted = np.sort(_kernels.cen_admit(links.tx, links.rx, seq, channel.gain,
                                          p.beta, p.h_r, p.n0, channel.network.n))
    deferred = np.setdiff1d(ready, admitted)
    return SlotOutcome(admitted, admitted, _EMPTY, deferred)


def _half_duplex_ok(link_set) -> bool:
    seen = set()
    for tx, rx in link_set:
        for node in (tuple(tx), tuple(rx)):
            if node in seen:
                return False
            seen.add(node)
    return True


def feasible_at_power(link_set, p_t: float, params: PhysicalParams) -> bool:
    """Can these links (pairs of tx/rx coordinates) all succeed in one slot?

    Requires a node to appear in at most one link.  Nodes are identified by
    their coordinates (coincident nodes are rejected at topology build).
    """
    link_set = [(tuple(map(float, tx)), tuple(map(float, rx))) for tx, rx in link_set]
    if not _half_duplex_ok(link_set):
        return False
    for i, (tx, rx) in enumerate(link_set):
        others = [t for j, (t, _) in enumerate(link_set) if j != i]
        p_r = received_power(p_t, math.dist(tx, rx), params)
        if not reception_ok(p_r, sinr(tx, rx, others, p_t, params), params):
            return False
    return True
