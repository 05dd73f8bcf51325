"""Min-hop routing over connectivity graphs and the segment-covering route construction."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .topology import ConnectivityGraph, Network


class NoRouteError(Exception):
    """Source and destination lie in different components."""


class SegmentRouteError(Exception):
    """A covering disc along the segment holds no node."""


@dataclass(frozen=True)
class Route:
    nodes: tuple
    hop_lengths: tuple = ()

    @property
    def src(self) -> int:
        return self.nodes[0]

    @property
    def dst(self) -> int:
        return self.nodes[-1]

    @property
    def hops(self) -> int:
        return len(self.nodes) - 1

    def links(self) -> list[tuple[int, int]]:
        return list(zip(self.nodes[:-1], self.nodes[1:]))


def make_route(network: Network, nodes) -> Route:
    nodes = tuple(int(v) for v in nodes)
    return Route(nodes, tuple(network.dist(u, v) for u, v in zip(nodes[:-1], nodes[1:])))


def hop_distances(graph: ConnectivityGraph, src: int) -> np.ndarray:
    """BFS hop count from ``src`` to every node; -1 where unreachable."""
    dist = np.full(graph.n, -1, dtype=int)
    dist[src] = 0
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v in graph.adj[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def min_hop_route(graph: ConnectivityGraph, src: int, dst: int,
                  network: Network | None = None) -> Route:
    """Fewest-hop route; among those, the lexicographically smallest node sequence."""
    to_dst = hop_distances(graph, dst)
    if to_dst[src] < 0:
        raise NoRouteError(f"no route from {src} to {dst} at r={graph.r}")
    path = [src]
    u = src
    while u != dst:
        # adjacency is sorted, so the first closer neighbour is the smallest index
        u = next(v for v in graph.adj[u] if to_dst[v] == to_dst[u] - 1)
        path.append(u)
    if network is not None:
        return make_route(network, path)
    return Route(tuple(path))


def simple_paths(graph: ConnectivityGraph, src: int, dst: int,
                 max_hops: int) -> Iterator[tuple]:
    """Every simple path src -> dst with at most ``max_hops`` hops, in DFS order."""
    to_dst = hop_distances(graph, dst)
    if to_dst[src] < 0 or to_dst[src] > max_hops:
        return
    path = [src]
    on_path = {src}

    def extend(u):
        if u == dst:
            yield tuple(path)
            return
        left = max_hops - (len(path) - 1)
        for v in graph.adj[u]:
            # prune branches that cannot reach dst within the hop budget
            if v in on_path or to_dst[v] < 0 or to_dst[v] > left - 1:
                continue
            path.append(v)
            on_path.add(v)
            yield from extend(v)
            path.pop()
            on_path.discard(v)

    yield from extend(src)


def _seg_distance(p, a, b) -> float:
    """Distance from point p to the closed segment ab."""
    ax, ay = a
    dx, dy = b[0] - ax, b[1] - ay
    seg2 = dx * dx + dy * dy
    t = 0.0 if seg2 == 0 else max(0.0, min(1.0, ((p[0] - ax) * dx + (p[1] - ay) * dy) / seg2))
    return math.hypot(p[0] - (ax + t * dx), p[1] - (ay + t * dy))


def _line_distance(p, a, b) -> float:
    """Perpendicular distance from point p to the line through a and b."""
    dx, dy = b[0] - a[0], b[1] - a[1]
    norm = math.hypot(dx, dy)
    if norm == 0:
        return math.hypot(p[0] - a[0], p[1] - a[1])
    return abs(dx * (p[1] - a[1]) - dy * (p[0] - a[0])) / norm


def segment_route(network: Network, a: int, b: int, r_c: float, r: float) -> Route:
    """Route hugging the straight segment from a to b.

    Direct when ``|a-b| <= 4 r_c``.  Otherwise the segment is cut into pieces
    of length 2 r_c, each covered by a disc of radius r_c centred at
    ``(2i - 1) r_c`` from a; the node nearest each centre becomes a relay.
    """
    if r <= 4 * r_c:
        raise ValueError("construction needs r > 4 r_c")
    pa, pb = network.positions[a], network.positions[b]
    length = math.hypot(*(pb - pa))
    if length <= 4 * r_c:
        return make_route(network, (a, b))
    unit = (pb - pa) / length
    n_discs = math.ceil(length / (2 * r_c))
    centers = pa + np.outer((2 * np.arange(1, n_discs + 1) - 1) * r_c, unit)
    nodes = [a]
    for i, c in enumerate(centers):
        hits = network.tree.query_ball_point(c, r_c)
        if not hits:
            raise SegmentRouteError(f"covering disc {i + 1}/{n_discs} between {a} and {b} is empty")
        pick = min(hits, key=lambda v: (float(np.hypot(*(network.positions[v] - c))), v))
        if pick in (a, b) or pick == nodes[-1]:
            continue
        nodes.append(pick)
    nodes.append(b)
    return make_route(network, nodes)


def check_lemma3(network: Network, route: Route, a: int, b: int, r_c: float) -> bool:
    """Validate a route between a and b against the segment-hugging conditions.

    (a) every hop is at most 4 r_c long; (b) every relay lies within
    perpendicular distance r_c of the line through a and b; (c) any two relays u, v on the route are separated by at most
    ``|u - v| / (2 r_c) + 1`` hops (checked for all pairs, not only adjacent).
    """
    tol = 1e-9 * r_c
    if route.nodes[0] != a or route.nodes[-1] != b:
        return False
    pos = network.positions
    for u, v in route.links():
        if network.dist(u, v) > 4 * r_c + tol:
            return False
    relays = route.nodes[1:-1]
    for v in relays:
        if _line_distance(pos[v], pos[a], pos[b]) > r_c + tol:
            return False
    for i in range(len(relays)):
        for j in range(i + 1, len(relays)):
            if j - i > network.dist(relays[i], relays[j]) / (2 * r_c) + 1 + 1e-9:
                return False
    return True
