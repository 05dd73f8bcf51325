"""Physical-layer model: path loss, SINR, reception tests and characteristic ranges.

All power arithmetic is linear (the path-loss constant is folded into the
transmit power).  dBm only appears at the config/report boundary through
:func:`dbm_to_linear` and :func:`linear_to_dbm`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

# Returned by sinr() when there is neither interference nor noise.  Compares
# greater than every finite threshold.
INFINITE_SINR = math.inf

# Threshold tests are inclusive; this relative slack keeps a link of length
# exactly r (or an interferer exactly at r_I) on the passing side of rounding.
THRESHOLD_RTOL = 1e-9


def dbm_to_linear(dbm: float) -> float:
    """Convert dBm to milliwatts."""
    return 10.0 ** (dbm / 10.0)


def linear_to_dbm(mw: float) -> float:
    if mw <= 0:
        return -math.inf
    return 10.0 * math.log10(mw)


@dataclass(frozen=True)
class PhysicalParams:
    """Radio constants shared by every node.

    ``h_s`` defaults to ``h_r / beta``: the carrier-sense threshold obtained by
    conservatively estimating the received power at the receiver by ``h_r``.
    """

    alpha: float = 4.0
    beta: float = 10.0
    h_r: float = dbm_to_linear(-81.0)
    h_s: float | None = None
    n0: float = 0.0
    w: float = 1.0

    def __post_init__(self):
        if self.h_s is None:
            object.__setattr__(self, "h_s", self.h_r / self.beta)
        if self.alpha < 2:
            raise ValueError(f"path-loss exponent must be >= 2, got {self.alpha}")
        if self.beta <= 1:
            raise ValueError(f"SINR threshold must exceed 1, got {self.beta}")
        if self.h_r <= 0 or self.h_s <= 0:
            raise ValueError("receive and sense thresholds must be positive")
        if self.n0 < 0:
            raise ValueError("noise power must be non-negative")

    @property
    def delta(self) -> float:
        """``beta**(1/alpha) - 1``, the guard-zone factor of simultaneous links."""
        return self.beta ** (1.0 / self.alpha) - 1.0

    def with_(self, **changes) -> "PhysicalParams":
        # h_s follows h_r/beta unless given explicitly
        if "h_s" not in changes and ("h_r" in changes or "beta" in changes):
            changes["h_s"] = None
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "h_r": self.h_r,
                "h_s": self.h_s, "n0": self.n0, "w": self.w}


def _dist(a: Sequence[float], b: Sequence[float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def received_power(p_t: float, d: float, params: PhysicalParams) -> float:
    if d <= 0:
        raise ValueError("distance must be positive (coincident nodes)")
    return p_t / d ** params.alpha


def sinr(tx, rx, interferers: Iterable, p_t: float, params: PhysicalParams) -> float:
    """SINR at ``rx`` of a transmission from ``tx`` with the given interfering transmitters.

    Every transmitter uses the common power ``p_t``.
    """
    signal = received_power(p_t, _dist(tx, rx), params)
    noise = params.n0
    for pos in interferers:
        d = _dist(pos, rx)
        if d == 0:
            raise ValueError("interferer coincides with the receiver")
        noise += received_power(p_t, d, params)
    if noise == 0:
        return INFINITE_SINR
    return signal / noise


def reception_ok(p_r: float, sinr_val: float, params: PhysicalParams) -> bool:
    slack = 1.0 - THRESHOLD_RTOL
    return p_r >= params.h_r * slack and sinr_val >= params.beta * slack


def transmission_range(p_t: float, params: PhysicalParams) -> float:
    if p_t <= 0:
        raise ValueError("transmit power must be positive")
    inv = 1.0 / params.alpha
    by_threshold = (p_t / params.h_r) ** inv
    if params.n0 == 0:
        return by_threshold
    return min((p_t / (params.n0 * params.beta)) ** inv, by_threshold)


def power_for_range(r: float, params: PhysicalParams) -> float:
    """Smallest common power whose transmission range is ``r``."""
    if r <= 0:
        raise ValueError("range must be positive")
    return max(params.h_r, params.n0 * params.beta) * r ** params.alpha


def interference_range(d: float, params: PhysicalParams) -> float:
    if d <= 0:
        raise ValueError("link length must be positive")
    return params.beta ** (1.0 / params.alpha) * d


def carrier_sense_range(p_t: float, params: PhysicalParams) -> float:
    if p_t <= 0:
        raise ValueError("transmit power must be positive")
    return (p_t / params.h_s) ** (1.0 / params.alpha)


def sensed_noise(tx_pos, active_transmitters: Iterable, p_t: float,
                 params: PhysicalParams) -> float:
    """Power sensed at ``tx_pos``: other transmitters' signals plus white noise."""
    total = params.n0
    for pos in active_transmitters:
        total += received_power(p_t, _dist(pos, tx_pos), params)
    return total


def gain_matrix(positions: np.ndarray, p_t: float, params: PhysicalParams) -> np.ndarray:
    """Pairwise received power ``p_t / |i - j|**alpha``; the diagonal is ``inf``.

    The dense form feeds the slot schedulers, which look powers up by index.
    """
    diff = positions[:, None, :] - positions[None, :, :]
    d = np.hypot(diff[..., 0], diff[..., 1])
    with np.errstate(divide="ignore"):
        g = p_t / d ** params.alpha
    np.fill_diagonal(g, np.inf)
    return g
