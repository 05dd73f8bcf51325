import io

import numpy as np
import pytest

from powercap import topology as T
from powercap.engine import SimConfig, run
from powercap.phy import PhysicalParams, power_for_range
from powercap.verify import (audit_trace, check_lemma1, check_lemma2, check_theorem1,
                             check_theorem2, guard_discs, lemma2_bound, links_meeting_disc,
                             random_feasible_set, random_instance)


def test_guard_disc_radius(params):
    (disc,) = guard_discs([((0, 0), (10, 0))], params)
    assert disc.center == (10.0, 0.0)
    assert disc.radius == pytest.approx(params.delta / 2 * 10)


def test_lemma1_examples(params):
    far = [((0, 0), (100, 0)), ((1000, 0), (1100, 0))]
    assert check_lemma1(far, params)
    shared = [((0, 0), (100, 0)), ((200, 0), (100, 0))]
    assert not check_lemma1(shared, params)
    net, flows = T.gen_theorem2(2, 100.0)
    vertical = [(net.positions[f.src], net.positions[f.dst]) for f in flows]
    assert check_lemma1(vertical, params)


def test_lemma2_bound_values(params):
    assert lemma2_bound(1.0, 1.0, params) == 266
    d = params.delta
    assert lemma2_bound(0.0, 1.0, params) == int((d + 2) ** 2 / d ** 4)
    vals = [lemma2_bound(R, 1.0, params) for R in (0.5, 1.0, 2.0, 4.0)]
    assert vals == sorted(vals) and vals[0] < vals[-1]
    with pytest.raises(ValueError):
        lemma2_bound(1.0, 0.0, params)


def test_lemma2_bound_needs_beta_above_one(params):
    fake = PhysicalParams()
    object.__setattr__(fake, "beta", 1.0)
    with pytest.raises(ValueError):
        lemma2_bound(1.0, 1.0, fake)


def test_lemma2_theorem2_set(params):
    net, flows = T.gen_theorem2(2, 100.0)
    vertical = [(net.positions[f.src], net.positions[f.dst]) for f in flows]
    center = (net.positions[net.roles["A3"]])
    assert links_meeting_disc(vertical, center, 200.0) == 3
    assert check_lemma2(vertical, center, 200.0, 100.0, params)
    assert check_lemma2(vertical, (1e5, 1e5), 10.0, 100.0, params)


def test_lemma2_monte_carlo(params):
    rng = np.random.default_rng(42)
    for _ in range(50):
        links = random_feasible_set(rng, params)
        assert check_lemma1(links, params)
        center = rng.uniform(0, 1000, 2)
        assert check_lemma2(links, center, float(rng.uniform(0, 300)), 20.0, params)


def test_theorem2_report():
    rep = check_theorem2(2)
    assert rep.n == 27 and rep.gain_bound == 10
    assert rep.middle_sinr == pytest.approx(11.51, abs=0.01)
    assert rep.middle_sinr == pytest.approx(rep.min_sinr)
    assert rep.all_feasible and rep.routes_through_chain and rep.ok
    assert check_theorem2(50).middle_sinr == pytest.approx(11.0, abs=0.25)


@pytest.mark.parametrize("r_low", [60.0, 100.0, 66.0])
def test_theorem2_rejects_low_range(r_low):
    with pytest.raises(ValueError):
        check_theorem2(2, d=100.0, r_low=r_low)


def test_theorem1_examples(params):
    net = T.Network(np.array([[0.0, 0.0], [100.0, 0.0]]), {"shape": "box", "bounds": [0, 0, 100, 0]})
    ladder = [power_for_range(r, params) for r in (100, 200, 400, 800)]
    assert check_theorem1((net, [T.FlowSpec(0, 1)]), ladder)
    star = T.gen_star(2)
    assert check_theorem1(star, [power_for_range(r, params) for r in T.star_ranges()])


def test_theorem1_random_instances():
    for seed in range(10):
        assert check_theorem1(*random_instance(seed))


def test_audit_trace_clean_and_corrupted():
    net, flows = T.gen_grid(4, 4, 100.0, workload=5)
    buf = io.StringIO()
    run(SimConfig(net, flows, r=150.0, scheduler="cs"), trace=buf)
    lines = buf.getvalue().splitlines()
    audit = audit_trace(lines)
    assert audit.ok and audit.slots == len(lines) - 1
    # two adjacent links sharing a receiver cannot both succeed
    bad = lines[:1] + ['{"type": "slot", "slot": 0, "attempted": [[0, 1], [2, 1]], '
                       '"succeeded": [[0, 1], [2, 1]], "collided": [], "deferred": []}']
    assert not audit_trace(bad).ok
    with pytest.raises(ValueError):
        audit_trace(lines[1:])
