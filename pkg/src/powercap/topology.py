"""Node placements, flow sets and range-dependent connectivity graphs."""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial import cKDTree

# Edges are inclusive at distance r; the slack absorbs rounding on lattice hops
# that land exactly on r (e.g. 5 x 200 m at r = 1000 m).
EDGE_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class Network:
    positions: np.ndarray
    area: dict
    seed: int | None = None
    roles: dict = field(default_factory=dict)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ValueError("positions must be an (n, 2) array")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        if len(np.unique(pos, axis=0)) != len(pos):
            raise ValueError("coincident nodes")
        lo, hi = _bounds(self.area)
        eps = 1e-9 * max(1.0, float(np.max(np.abs(hi))))
        if np.any(pos < np.asarray(lo) - eps) or np.any(pos > np.asarray(hi) + eps):
            raise ValueError("node outside the declared area")

    @property
    def n(self) -> int:
        return len(self.positions)

    @cached_property
    def tree(self) -> cKDTree:
        return cKDTree(self.positions)

    def dist(self, u: int, v: int) -> float:
        a, b = self.positions[u], self.positions[v]
        return math.hypot(a[0] - b[0], a[1] - b[1])

    def diameter(self) -> float:
        diff = self.positions[:, None, :] - self.positions[None, :, :]
        return float(np.hypot(diff[..., 0], diff[..., 1]).max())

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return (np.array_equal(self.positions, other.positions) and self.area == other.area
                and self.seed == other.seed and self.roles == other.roles)

    __hash__ = None


def _bounds(area: dict):
    shape = area.get("shape")
    if shape == "square":
        return (0.0, 0.0), (area["side"], area["side"])
    if shape == "disc":
        c = area.get("center", (0.0, 0.0))
        rad = area["radius"]
        return (c[0] - rad, c[1] - rad), (c[0] + rad, c[1] + rad)
    if shape == "box":
        x0, y0, x1, y1 = area["bounds"]
        return (x0, y0), (x1, y1)
    raise ValueError(f"unknown area shape {shape!r}")


@dataclass(frozen=True)
class FlowSpec:
    src: int
    dst: int
    weight: float = 1.0
    workload: int = 500

    def __post_init__(self):
        if self.src == self.dst:
            raise ValueError("flow source and destination coincide")
        if self.weight <= 0:
            raise ValueError("pattern weight must be positive")


def normalize_pattern(flows: list[FlowSpec]) -> list[FlowSpec]:
    """Rescale pattern weights to unit Euclidean norm."""
    norm = math.sqrt(sum(f.weight ** 2 for f in flows))
    return [FlowSpec(f.src, f.dst, f.weight / norm, f.workload) for f in flows]


def with_workload(flows: list[FlowSpec], per_unit_weight: float) -> list[FlowSpec]:
    """Assign workloads proportional to weight: workload_i = round(b * v_i)."""
    return [FlowSpec(f.src, f.dst, f.weight, max(1, round(per_unit_weight * f.weight)))
            for f in flows]


@dataclass(frozen=True)
class ConnectivityGraph:
    r: float
    adj: tuple

    @property
    def n(self) -> int:
        return len(self.adj)

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adjsets[u]

    @cached_property
    def _adjsets(self):
        return [frozenset(a) for a in self.adj]

    def edges(self):
        for u, nbrs in enumerate(self.adj):
            for v in nbrs:
                if u < v:
                    yield u, v


def connectivity(network: Network, r: float) -> ConnectivityGraph:
    """Unit-disc graph: u ~ v iff |u - v| <= r."""
    if r <= 0:
        raise ValueError("range must be positive")
    adj = [[] for _ in range(network.n)]
    for u, v in network.tree.query_pairs(r * (1 + EDGE_RTOL)):
        adj[u].append(v)
        adj[v].append(u)
    return ConnectivityGraph(r, tuple(tuple(sorted(a)) for a in adj))


def is_connected(graph: ConnectivityGraph) -> bool:
    if graph.n == 0:
        return True
    seen = {0}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in graph.adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == graph.n


def min_connecting_range(network: Network) -> float:
    """Smallest r for which the unit-disc graph is connected (longest MST edge)."""
    diff = network.positions[:, None, :] - network.positions[None, :, :]
    d = np.hypot(diff[..., 0], diff[..., 1])
    mst = minimum_spanning_tree(d)
    return float(mst.max()) if mst.nnz else 0.0


def critical_range(n: int, area: float = 1.0, k_n: float | None = None) -> float:
    """Critical connectivity range of n uniform nodes in a region of the given area.

    Uses the disc formula ``sqrt(area) * sqrt((ln n + k_n) / (pi n))`` with
    ``k_n = ln ln n`` by default.  For squares this is an approximation.
    """
    if n < 3:
        raise ValueError("critical range needs n >= 3 (ln ln n undefined below)")
    if k_n is None:
        k_n = math.log(math.log(n))
    return math.sqrt(area) * math.sqrt((math.log(n) + k_n) / (math.pi * n))


def gen_uniform(n: int, side: float, seed: int) -> Network:
    if n < 2 or side <= 0:
        raise ValueError("need n >= 2 and a positive side")
    rng = np.random.default_rng(seed)
    pos = rng.uniform(0.0, side, size=(n, 2))
    while True:
        _, first = np.unique(pos, axis=0, return_index=True)
        if len(first) == n:
            break
        dup = np.setdiff1d(np.arange(n), first)
        pos[dup] = rng.uniform(0.0, side, size=(len(dup), 2))
    return Network(pos, {"shape": "square", "side": float(side)}, seed)


def gen_grid(rows: int, cols: int, spacing: float,
             workload: int = 500) -> tuple[Network, list[FlowSpec]]:
    """Lattice with one flow along every row and one down every column.

    Node (i, j) sits at ``(j * spacing, i * spacing)`` with index ``i * cols + j``.
    """
    if rows < 2 or cols < 2:
        raise ValueError("grid needs at least 2 rows and 2 columns")
    ii, jj = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    pos = np.column_stack([jj.ravel() * spacing, ii.ravel() * spacing]).astype(float)
    area = {"shape": "box", "bounds": [0.0, 0.0, (cols - 1) * spacing, (rows - 1) * spacing]}
    flows = [FlowSpec(i * cols, i * cols + cols - 1, workload=workload) for i in range(rows)]
    flows += [FlowSpec(j, (rows - 1) * cols + j, workload=workload) for j in range(cols)]
    return Network(pos, area), normalize_pattern(flows)


def gen_theorem2(m: int, d: float, workload: int = 500) -> tuple[Network, list[FlowSpec]]:
    """Row of 2m+1 parallel vertical links of length d, spaced 2d apart.

    Top and bottom rows carry two evenly spaced relays between horizontal
    neighbours; the middle link alone has a midpoint relay.  That gives
    n = 12m + 3 nodes.  Flows run top -> bottom along every vertical link.
    Roles: ``A1``/``A2`` are the middle link's top/bottom, ``A3`` its midpoint.
    """
    if m < 1 or d <= 0:
        raise ValueError("need m >= 1 and d > 0")
    k = 2 * m + 1
    xs = [2.0 * d * j for j in range(k)]
    tops = [(x, d) for x in xs]
    bottoms = [(x, 0.0) for x in xs]
    fillers = []
    for y in (d, 0.0):
        for j in range(k - 1):
            fillers += [(xs[j] + 2.0 * d / 3.0, y), (xs[j] + 4.0 * d / 3.0, y)]
    mid = (xs[m], d / 2.0)
    pos = np.array(tops + bottoms + fillers + [mid])
    roles = {"A1": m, "A2": k + m, "A3": len(pos) - 1}
    area = {"shape": "box", "bounds": [0.0, 0.0, xs[-1], d]}
    flows = [FlowSpec(j, k + j, workload=workload) for j in range(k)]
    return Network(pos, area, roles=roles), normalize_pattern(flows)


def gen_star(k: int, spacing: float = 100.0, hops_per_side: int = 1,
             workload: int = 500) -> tuple[Network, list[FlowSpec]]:
    """Star of k flows crossing a shared centre node.

    Sources sit on spokes at angles ``pi*i/k``, destinations on the opposite
    spokes; each spoke holds ``hops_per_side`` nodes spaced ``spacing`` apart.
    With :func:`star_ranges` every flow goes through the centre at low power
    and is a direct hop at high power.  ``k=2, hops_per_side=1`` is the
    five-node, two-flow example.
    """
    if k < 2 or hops_per_side < 1:
        raise ValueError("need k >= 2 and at least one hop per side")
    pts = [(0.0, 0.0)]
    ends = []
    for i in range(k):
        spoke_ends = []
        for theta in (math.pi * i / k, math.pi * i / k + math.pi):
            c, s = math.cos(theta), math.sin(theta)
            for h in range(1, hops_per_side + 1):
                pts.append((round(h * spacing * c, 9), round(h * spacing * s, 9)))
            spoke_ends.append(len(pts) - 1)
        ends.append(spoke_ends)
    half = hops_per_side * spacing
    area = {"shape": "box", "bounds": [-half, -half, half, half]}
    flows = [FlowSpec(src, dst, workload=workload) for src, dst in ends]
    return Network(np.array(pts), area, roles={"center": 0}), normalize_pattern(flows)


def star_ranges(spacing: float = 100.0, hops_per_side: int = 1) -> tuple[float, float]:
    """(low, high) transmission ranges for :func:`gen_star`.

    Low reaches only the next node along a spoke; high spans a whole flow.
    """
    return 1.1 * spacing, 2.0 * hops_per_side * spacing * 1.05


def gen_shared_relay(spacing: float = 1.0) -> tuple[Network, list[FlowSpec]]:
    """Four nodes A, B, C, D; flows A->C and B->D, the latter relayed by C.

    At range ``spacing`` the only links are (A,C), (B,C), (C,D): three links
    sharing node C, so at most one is active per slot.
    """
    pos = np.array([(-spacing, 0.0), (0.0, spacing), (0.0, 0.0), (spacing, 0.0)])
    area = {"shape": "box", "bounds": [-spacing, 0.0, spacing, spacing]}
    roles = {"A": 0, "B": 1, "C": 2, "D": 3}
    return Network(pos, area, roles=roles), normalize_pattern([FlowSpec(0, 2), FlowSpec(1, 3)])


def nearest_neighbor_flows(network: Network, r: float, seed: int,
                           workload: int = 500, skip_isolated: bool = False) -> list[FlowSpec]:
    """One one-hop flow per node, to a random neighbour within range r.

    A node with no neighbour within r raises, or originates no flow when
    ``skip_isolated`` is set.
    """
    rng = np.random.default_rng(seed)
    graph = connectivity(network, r)
    flows = []
    for u in range(network.n):
        nbrs = graph.adj[u]
        if not nbrs:
            if skip_isolated:
                continue
            raise ValueError(f"node {u} has no neighbour within {r} m")
        flows.append(FlowSpec(u, int(nbrs[rng.integers(len(nbrs))]), workload=workload))
    if not flows:
        raise ValueError(f"no node has a neighbour within {r} m")
    return normalize_pattern(flows)


def random_pair_flows(network: Network, seed: int, workload: int = 500,
                      per_source: int = 1) -> list[FlowSpec]:
    """Every node sends to ``per_source`` distinct random other nodes."""
    rng = np.random.default_rng(seed)
    flows = []
    for u in range(network.n):
        others = np.delete(np.arange(network.n), u)
        for v in rng.choice(others, size=per_source, replace=False):
            flows.append(FlowSpec(u, int(v), workload=workload))
    return normalize_pattern(flows)


def to_json(network: Network, flows: list[FlowSpec] | None = None) -> dict:
    doc = {
        "nodes": network.positions.tolist(),
        "area": network.area,
        "seed": network.seed,
        "roles": network.roles,
    }
    if flows is not None:
        doc["flows"] = [{"src": f.src, "dst": f.dst, "weight": f.weight, "workload": f.workload}
                        for f in flows]
    return doc


def from_json(doc: dict) -> tuple[Network, list[FlowSpec]]:
    net = Network(np.array(doc["nodes"], dtype=float), doc["area"], doc.get("seed"),
                  doc.get("roles", {}))
    flows = [FlowSpec(int(f["src"]), int(f["dst"]), float(f.get("weight", 1.0)),
                      int(f.get("workload", 500))) for f in doc.get("flows", [])]
    return net, flows


def save(path, network: Network, flows: list[FlowSpec] | None = None) -> None:
    Path(path).write_text(json.dumps(to_json(network, flows), indent=1))


def load(path) -> tuple[Network, list[FlowSpec]]:
    return from_json(json.loads(Path(path).read_text()))
