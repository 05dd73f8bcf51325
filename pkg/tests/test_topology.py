import math

import numpy as np
import pytest

from powercap import topology as T


def test_gen_uniform_bounds_and_determinism():
    net = T.gen_uniform(200, 3000.0, 7)
    assert net.n == 200
    assert (net.positions >= 0).all() and (net.positions <= 3000).all()
    assert net == T.gen_uniform(200, 3000.0, 7)
    assert net != T.gen_uniform(200, 3000.0, 8)
    assert T.gen_uniform(20, 1000.0, 1).n == 20


def test_network_validation():
    with pytest.raises(ValueError):
        T.Network(np.array([[0.0, 0.0], [0.0, 0.0]]), {"shape": "square", "side": 1.0})
    with pytest.raises(ValueError):
        T.Network(np.array([[0.0, 0.0], [2.0, 0.0]]), {"shape": "square", "side": 1.0})
    net = T.Network(np.array([[0.0, 0.0], [0.5, 0.5]]), {"shape": "disc", "radius": 1.0})
    assert net.n == 2
    with pytest.raises(ValueError):
        T.Network(np.array([[0.0, 0.0]]), {"shape": "hexagon"})


def test_flowspec_validation():
    with pytest.raises(ValueError):
        T.FlowSpec(1, 1)
    with pytest.raises(ValueError):
        T.FlowSpec(0, 1, weight=0)
    flows = T.normalize_pattern([T.FlowSpec(0, 1, 3.0), T.FlowSpec(1, 2, 4.0)])
    assert sum(f.weight ** 2 for f in flows) == pytest.approx(1.0)
    assert [f.workload for f in T.with_workload(flows, 500)] == [300, 400]


def test_gen_grid():
    net, flows = T.gen_grid(25, 25, 200.0)
    assert net.n == 625 and len(flows) == 50
    net, flows = T.gen_grid(2, 2, 1.0)
    assert net.n == 4 and len(flows) == 4
    net, flows = T.gen_grid(3, 4, 10.0)
    assert tuple(net.positions[1 * 4 + 2]) == (20.0, 10.0)
    assert len(flows) == 3 + 4
    assert len({f.weight for f in flows}) == 1


def test_grid_connectivity_at_250():
    net, _ = T.gen_grid(25, 25, 200.0)
    g = T.connectivity(net, 250.0)
    for u, v in g.edges():
        assert net.dist(u, v) == pytest.approx(200.0)
    assert T.is_connected(g)
    # lattice hops of exactly r survive rounding
    g = T.connectivity(net, 1000.0)
    assert g.has_edge(0, 5) and not g.has_edge(0, 6)


def test_connectivity_extremes():
    net = T.gen_uniform(30, 100.0, 3)
    d = net.positions[:, None] - net.positions[None]
    dmin = np.hypot(d[..., 0], d[..., 1])[np.triu_indices(30, 1)].min()
    g = T.connectivity(net, dmin * 0.99)
    assert not list(g.edges()) and not T.is_connected(g)
    g = T.connectivity(net, net.diameter())
    assert len(list(g.edges())) == 30 * 29 // 2
    with pytest.raises(ValueError):
        T.connectivity(net, 0.0)


def test_min_connecting_range():
    net = T.gen_uniform(40, 1000.0, 5)
    r = T.min_connecting_range(net)
    assert T.is_connected(T.connectivity(net, r))
    assert not T.is_connected(T.connectivity(net, r * 0.999))


def test_gen_theorem2():
    for m in (1, 2, 3):
        net, flows = T.gen_theorem2(m, 100.0)
        assert net.n == 12 * m + 3 and len(flows) == 2 * m + 1
    net, _ = T.gen_theorem2(2, 100.0)
    a1, a2, a3 = (net.roles[k] for k in ("A1", "A2", "A3"))
    assert net.dist(a1, a2) == pytest.approx(100.0)
    assert tuple(net.positions[a3]) == pytest.approx((net.positions[a1][0], 50.0))


def test_gen_theorem2_low_power_chain():
    net, _ = T.gen_theorem2(2, 100.0)
    g = T.connectivity(net, 75.0)
    a3 = net.roles["A3"]
    assert set(g.adj[a3]) == {net.roles["A1"], net.roles["A2"]}
    assert T.is_connected(g)


def test_gen_star():
    net, flows = T.gen_star(2)
    assert net.n == 5 and len(flows) == 2
    lo, hi = T.star_ranges()
    g = T.connectivity(net, lo)
    assert all(set(g.adj[f.src]) == {0} for f in flows)
    g = T.connectivity(net, hi)
    assert all(g.has_edge(f.src, f.dst) for f in flows)
    net, flows = T.gen_star(5, hops_per_side=2)
    assert net.n == 1 + 5 * 4
    with pytest.raises(ValueError):
        T.gen_star(1)


def test_critical_range():
    assert T.critical_range(200) == pytest.approx(0.1053, abs=5e-5)
    assert T.critical_range(200, area=4.0) == pytest.approx(2 * T.critical_range(200))
    vals = [T.critical_range(n) for n in (100, 1000, 10000)]
    assert vals[0] > vals[1] > vals[2]
    with pytest.raises(ValueError):
        T.critical_range(2)


def test_flow_builders():
    net = T.gen_uniform(50, 1000.0, 2)
    flows = T.nearest_neighbor_flows(net, 300.0, 0, workload=10, skip_isolated=True)
    g = T.connectivity(net, 300.0)
    assert all(g.has_edge(f.src, f.dst) and f.workload == 10 for f in flows)
    pairs = T.random_pair_flows(net, 0, per_source=2)
    assert len(pairs) == 100 and all(f.src != f.dst for f in pairs)
    lonely = T.Network(np.array([[0.0, 0.0], [1.0, 0.0], [9.0, 9.0]]), {"shape": "square", "side": 9})
    with pytest.raises(ValueError):
        T.nearest_neighbor_flows(lonely, 2.0, 0)
    assert len(T.nearest_neighbor_flows(lonely, 2.0, 0, skip_isolated=True)) == 2


def test_json_roundtrip(tmp_path):
    net, flows = T.gen_theorem2(1, 10.0, workload=7)
    T.save(tmp_path / "t.json", net, flows)
    net2, flows2 = T.load(tmp_path / "t.json")
    assert net2 == net and flows2 == flows
    assert math.isclose(net2.dist(0, 1), net.dist(0, 1))
