"""Property tests: SINR scale invariance, feasibility monotonicity, scheduler invariants."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from powercap import topology as T
from powercap.mac import (Channel, LinkQueueState, LinkTable, cen_schedule_slot,
                          cs_schedule_slot, feasible_at_power)
from powercap.phy import (PhysicalParams, carrier_sense_range, power_for_range, received_power,
                          sinr, transmission_range)
from powercap.routing import min_hop_route
from powercap.verify import check_lemma1

P = PhysicalParams()
coord = st.floats(0.0, 1000.0, allow_nan=False)
point = st.tuples(coord, coord)


@given(tx=point, rx=point, others=st.lists(point, max_size=6), k=st.floats(1.0, 1e6))
def test_sinr_scale_invariant(tx, rx, others, k):
    others = [o for o in others if o != rx]
    if tx == rx or not others:
        return
    a = sinr(tx, rx, others, 1.0, P)
    b = sinr(tx, rx, others, k, P)
    assert np.isclose(a, b, rtol=1e-9)


@given(d1=st.floats(1.0, 1e4), d2=st.floats(1.0, 1e4), p=st.floats(1e-6, 1e6))
def test_monotone_ranges(d1, d2, p):
    if d1 < d2:
        assert received_power(p, d1, P) > received_power(p, d2, P)
    assert transmission_range(2 * p, P) > transmission_range(p, P)
    assert carrier_sense_range(2 * p, P) > carrier_sense_range(p, P)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.floats(1.0, 1e4), r=st.floats(100.0, 500.0))
def test_feasibility_monotone_in_power(seed, k, r):
    rng = np.random.default_rng(seed)
    pos = rng.uniform(0, 1000, size=(10, 2))
    idx = rng.permutation(10)
    links = [(pos[idx[2 * i]], pos[idx[2 * i + 1]]) for i in range(int(rng.integers(1, 6)))]
    p = power_for_range(r, P)
    if feasible_at_power(links, p, P):
        assert feasible_at_power(links, k * p, P)
        assert check_lemma1(links, P)


def _random_links(seed, n=30, r=300.0):
    net = T.gen_uniform(n, 1000.0, seed)
    g = T.connectivity(net, r)
    pairs = [(u, v) for u in range(n) for v in g.adj[u]]
    return net, pairs


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 5000))
def test_cen_invariants(seed):
    net, pairs = _random_links(seed)
    if not pairs:
        return
    links = LinkTable(pairs)
    state = LinkQueueState.fresh(len(links))
    state.backlog[:] = 1
    ch = Channel(net, power_for_range(300.0, P), P)
    out = cen_schedule_slot(state, range(len(links)), links, ch, np.random.default_rng(seed))
    pos = net.positions
    chosen = [(pos[links.tx[i]], pos[links.rx[i]]) for i in out.succeeded]
    assert len(out.collided) == 0
    assert feasible_at_power(chosen, ch.p_t, P) and check_lemma1(chosen, P)
    assert set(out.succeeded).isdisjoint(out.deferred)
    assert set(out.succeeded) | set(out.deferred) == set(range(len(links)))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 5000), slots=st.integers(1, 30))
def test_cs_invariants(seed, slots):
    net, pairs = _random_links(seed)
    if not pairs:
        return
    links = LinkTable(pairs)
    state = LinkQueueState.fresh(len(links))
    state.backlog[:] = 1
    ch = Channel(net, power_for_range(300.0, P), P)
    rng = np.random.default_rng(seed)
    allowed = {state.cw_min * 2 ** j for j in range(11)} | {state.cw_max}
    pos = net.positions
    for _ in range(slots):
        before = state.backoff.copy()
        out = cs_schedule_slot(state, range(len(links)), links, ch, rng)
        assert set(out.succeeded).isdisjoint(out.collided)
        assert set(out.attempted) == set(out.succeeded) | set(out.collided)
        assert (before[out.attempted] == 0).all()
        assert ((state.backoff >= 0) & (state.backoff < state.cw)).all()
        assert set(np.unique(state.cw)) <= allowed
        ok = [(pos[links.tx[i]], pos[links.rx[i]]) for i in out.succeeded]
        assert check_lemma1(ok, P)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 5000))
def test_hops_non_increasing_in_range(seed):
    net = T.gen_uniform(25, 1000.0, seed)
    r0 = T.min_connecting_range(net) * 1.001
    flows = T.random_pair_flows(net, seed)
    last = None
    for r in (r0, 1.5 * r0, 2.5 * r0, 4 * r0):
        g = T.connectivity(net, r)
        hops = [min_hop_route(g, f.src, f.dst).hops for f in flows]
        if last is not None:
            assert all(h <= l for h, l in zip(hops, last))
        last = hops
