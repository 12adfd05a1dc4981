"""Compiled RK4 method-of-lines kernel for ``u_t = w, w_t = D2 u - dV/du``.

Loops run in a fixed order without fastmath, so results are bitwise
reproducible and exactly odd under ``(u, w) -> (-u, -w)``.
"""

import numpy as np
from numba import njit

from .grid import D2_EDGE0, D2_EDGE1, D2_INTERIOR

# Weights travel as arguments: numba's disk cache would freeze globals.
WEIGHTS = np.stack([np.concatenate([D2_INTERIOR, [0.0]]), D2_EDGE0, D2_EDGE1])


@njit(cache=True, nogil=True)
def accel(u, trap, inv_dx2, wts, out):
    """``out = D2 u - dV/du`` with ``trap = omega^2 x^2 / 2``."""
    n = u.shape[0]
    c0, c1, c2, c3, c4 = wts[0, 0], wts[0, 1], wts[0, 2], wts[0, 3], wts[0, 4]
    for i in range(2, n - 2):
        d2 = c0 * u[i - 2] + c1 * u[i - 1] + c2 * u[i] + c3 * u[i + 1] + c4 * u[i + 2]
        ui = u[i]
        out[i] = d2 * inv_dx2 - (2.0 * ui * (ui * ui - 1.0) + trap[i] * ui)
    for r in range(2):
        s_lo = 0.0
        s_hi = 0.0
        for k in range(6):
            s_lo += wts[1 + r, k] * u[k]
            s_hi += wts[1 + r, k] * u[n - 1 - k]
        ui = u[r]
        out[r] = s_lo * inv_dx2 - (2.0 * ui * (ui * ui - 1.0) + trap[r] * ui)
        j = n - 1 - r
        uj = u[j]
        out[j] = s_hi * inv_dx2 - (2.0 * uj * (uj * uj - 1.0) + trap[j] * uj)


@njit(cache=True, nogil=True)
def rk4_advance(u, w, nsteps, h, trap, inv_dx2, wts, work):
    """Advance ``(u, w)`` in place by ``nsteps`` RK4 steps of size ``h``.

    ``wts`` is :data:`WEIGHTS`; ``work`` is a ``(6, n)`` scratch array.
    """
    n = u.shape[0]
    ut = work[0]
    wt = work[1]
    acc = work[2]
    su = work[3]
    sw = work[4]
    half = 0.5 * h
    sixth = h / 6.0
    for _ in range(nsteps):
        # stage 1
        accel(u, trap, inv_dx2, wts, acc)
        for i in range(n):
            su[i] = w[i]
            sw[i] = acc[i]
            ut[i] = u[i] + half * w[i]
            wt[i] = w[i] + half * acc[i]
        # stage 2
        accel(ut, trap, inv_dx2, wts, acc)
        for i in range(n):
            k2u = wt[i]
            su[i] += 2.0 * k2u
            sw[i] += 2.0 * acc[i]
            ut[i] = u[i] + half * k2u
            wt[i] = w[i] + half * acc[i]
        # stage 3
        accel(ut, trap, inv_dx2, wts, acc)
        for i in range(n):
            k3u = wt[i]
            su[i] += 2.0 * k3u
            sw[i] += 2.0 * acc[i]
            ut[i] = u[i] + h * k3u
            wt[i] = w[i] + h * acc[i]
        # stage 4
        accel(ut, trap, inv_dx2, wts, acc)
        for i in range(n):
            u[i] += sixth * (su[i] + wt[i])
            w[i] += sixth * (sw[i] + acc[i])


def make_work(n: int) -> np.ndarray:
    return np.zeros((6, n))
