"""Compiled inner loops for the slot schedulers.

``gain[i, j]`` is the power node j receives from node i transmitting.  The
threshold slack mirrors :data:`powercap.phy.THRESHOLD_RTOL`.
"""

import numpy as np
from numba import njit

from .phy import THRESHOLD_RTOL

_LO = 1.0 - THRESHOLD_RTOL
_HI = 1.0 + THRESHOLD_RTOL

# per-candidate status codes of the carrier-sense pass
ADMITTED = 0
WAITING = 1  # channel idle, backoff still running
BUSY = 2  # channel sensed busy or radio already in use


@njit(cache=True)
def cen_admit(tx, rx, order, gain, beta, h_r, n0, n_nodes):
    """Greedy collision-free admission in the given order; returns admitted link ids."""
    busy = np.zeros(n_nodes, dtype=np.bool_)
    adm = np.empty(len(order), dtype=np.int64)
    interf = np.empty(len(order), dtype=np.float64)
    k = 0
    for c in order:
        t = tx[c]
        r = rx[c]
        if busy[t] or busy[r]:
            continue
        sig = gain[t, r]
        if sig < h_r * _LO:
            continue
        own = n0
        for j in range(k):
            own += gain[tx[adm[j]], r]
        if own > 0.0 and sig / own < beta * _LO:
            continue
        ok = True
        for j in range(k):
            a = adm[j]
            extra = interf[j] + gain[t, rx[a]]
            if gain[tx[a], rx[a]] / extra < beta * _LO:
                ok = False
                break
        if not ok:
            continue
        for j in range(k):
            interf[j] += gain[t, rx[adm[j]]]
        interf[k] = own
        adm[k] = c
        k += 1
        busy[t] = True
        busy[r] = True
    return adm[:k]


@njit(cache=True)
def cs_sense(tx, order, backoff, gain, h_s, n0, n_nodes):
    """Sequential carrier sensing; returns a status code per entry of ``order``."""
    status = np.empty(len(order), dtype=np.int8)
    radio = np.zeros(n_nodes, dtype=np.bool_)
    active = np.empty(len(order), dtype=np.int64)
    k = 0
    for i in range(len(order)):
        c = order[i]
        t = tx[c]
        if radio[t]:
            status[i] = BUSY
            continue
        sensed = n0
        for j in range(k):
            sensed += gain[active[j], t]
        if sensed > h_s * _HI:
            status[i] = BUSY
            continue
        if backoff[c] > 0:
            status[i] = WAITING
            continue
        status[i] = ADMITTED
        active[k] = t
        k += 1
        radio[t] = True
    return status


@njit(cache=True)
def judge(tx, rx, links, gain, beta, h_r, n0, n_nodes):
    """Reception outcome of each simultaneously transmitting link."""
    ok = np.empty(len(links), dtype=np.bool_)
    talking = np.zeros(n_nodes, dtype=np.bool_)
    for c in links:
        talking[tx[c]] = True
    for i in range(len(links)):
        c = links[i]
        r = rx[c]
        if talking[r]:
            ok[i] = False
            continue
        sig = gain[tx[c], r]
        noise = n0
        for j in range(len(links)):
            if j != i:
                noise += gain[tx[links[j]], r]
        ok[i] = sig >= h_r * _LO and (noise == 0.0 or sig / noise >= beta * _LO)
    return ok
