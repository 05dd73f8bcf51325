import math

import numpy as np
import pytest

from powercap.phy import (INFINITE_SINR, PhysicalParams, carrier_sense_range, dbm_to_linear,
                          gain_matrix, interference_range, linear_to_dbm, power_for_range,
                          received_power, reception_ok, sensed_noise, sinr, transmission_range)


def test_defaults(params):
    assert params.alpha == 4 and params.beta == 10 and params.n0 == 0 and params.w == 1
    assert params.h_r == pytest.approx(10 ** -8.1)
    assert params.h_s == pytest.approx(params.h_r / 10)
    assert params.delta == pytest.approx(10 ** 0.25 - 1)


@pytest.mark.parametrize("kw", [dict(alpha=1.5), dict(beta=1.0), dict(h_r=0.0), dict(n0=-1.0),
                                dict(h_s=-1.0)])
def test_invalid_params(kw):
    with pytest.raises(ValueError):
        PhysicalParams(**kw)


def test_with_recomputes_sense_threshold(params):
    assert params.with_(beta=5).h_s == pytest.approx(params.h_r / 5)
    assert params.with_(h_s=1e-3).h_s == 1e-3


def test_dbm_roundtrip():
    assert linear_to_dbm(dbm_to_linear(-81.0)) == pytest.approx(-81.0)
    assert linear_to_dbm(0.0) == -math.inf


def test_received_power(params):
    assert received_power(7.0, 1.0, params) == 7.0
    assert received_power(1.0, 2.0, params) == pytest.approx(received_power(1.0, 1.0, params) / 16)
    with pytest.raises(ValueError):
        received_power(1.0, 0.0, params)


def test_received_power_at_250m_is_minus_81_dbm(params):
    # hand value: -81 + 40 log10(250) = 14.918 dBm
    p_t = dbm_to_linear(14.92)
    assert linear_to_dbm(received_power(p_t, 250.0, params)) == pytest.approx(-81.0, abs=0.1)


def test_sinr_no_interferers_is_infinite(params):
    assert sinr((0, 0), (1, 0), [], 1.0, params) == INFINITE_SINR
    assert INFINITE_SINR > 1e300


def test_sinr_interferer_at_interference_range(params):
    d = 10.0
    r_i = interference_range(d, params)
    assert sinr((0, 0), (d, 0), [(d, r_i)], 1.0, params) == pytest.approx(params.beta)


def test_sinr_theorem2_middle_link(params):
    d = 1.0
    tops = [(2 * d * j, d) for j in range(-2, 3)]
    val = sinr((0, d), (0, 0), [t for t in tops if t[0] != 0], 5.0, params)
    assert val == pytest.approx(1 / (2 * (1 / 25 + 1 / 289)))
    assert round(val, 2) == 11.50
    assert reception_ok(received_power(5.0, d, params.with_(h_r=1.0)), val, params)


def test_sinr_rejects_coincident_interferer(params):
    with pytest.raises(ValueError):
        sinr((0, 0), (1, 0), [(1, 0)], 1.0, params)


def test_reception_ok_boundaries(params):
    assert reception_ok(params.h_r, params.beta, params)
    assert not reception_ok(params.h_r / 2, INFINITE_SINR, params)
    assert not reception_ok(params.h_r, params.beta * 0.99, params)


def test_transmission_range(params):
    assert transmission_range(params.h_r * 250 ** 4, params) == pytest.approx(250.0)
    p = power_for_range(300.0, params)
    assert transmission_range(2 * p, params) / 300.0 == pytest.approx(2 ** 0.25)
    noisy = params.with_(n0=params.h_r)  # n0 * beta > h_r
    p = 1.0
    assert transmission_range(p, noisy) == pytest.approx((p / (noisy.n0 * noisy.beta)) ** 0.25)
    assert transmission_range(p, noisy) < (p / noisy.h_r) ** 0.25


def test_power_for_range_inverts(params):
    for r in (250.0, 1000.0):
        assert transmission_range(power_for_range(r, params), params) == pytest.approx(r)
        assert received_power(power_for_range(r, params), r, params) == pytest.approx(params.h_r)
    noisy = params.with_(n0=params.h_r)
    assert transmission_range(power_for_range(50.0, noisy), noisy) == pytest.approx(50.0)


def test_interference_range(params):
    assert interference_range(250.0, params) == pytest.approx(444.6, abs=0.05)
    # beta must exceed 1, so approach the unit-threshold limit instead
    assert interference_range(250.0, params.with_(beta=1 + 1e-12)) == pytest.approx(250.0)
    with pytest.raises(ValueError):
        interference_range(0.0, params)


def test_carrier_sense_range(params):
    assert carrier_sense_range(power_for_range(250.0, params), params) == pytest.approx(444.6, abs=0.05)
    assert carrier_sense_range(power_for_range(1000.0, params), params) == pytest.approx(1778.3, abs=0.05)
    same = params.with_(h_s=params.h_r)
    assert carrier_sense_range(power_for_range(250.0, same), same) == pytest.approx(250.0)


def test_sense_range_equals_interference_range_of_longest_link(params):
    for r in (100.0, 250.0, 777.0):
        p = power_for_range(r, params)
        assert carrier_sense_range(p, params) == pytest.approx(interference_range(r, params), rel=1e-9)


def test_sensed_noise(params):
    assert sensed_noise((0, 0), [], 1.0, params) == 0.0
    p = power_for_range(250.0, params)
    r_s = carrier_sense_range(p, params)
    assert sensed_noise((0, 0), [(r_s, 0)], p, params) == pytest.approx(params.h_s)
    a = sensed_noise((0, 0), [(10, 0)], p, params)
    b = sensed_noise((0, 0), [(0, 30)], p, params)
    assert sensed_noise((0, 0), [(10, 0), (0, 30)], p, params) == pytest.approx(a + b)


def test_gain_matrix(params):
    pos = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]])
    g = gain_matrix(pos, 16.0, params)
    assert np.isinf(np.diag(g)).all()
    assert g[0, 1] == pytest.approx(1.0) and g[1, 0] == g[0, 1]
    assert g[0, 2] == pytest.approx(16.0)
