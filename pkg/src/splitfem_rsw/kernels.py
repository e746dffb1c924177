"""Compiled inner kernels for the time-stepping hot path.

Everything here is plain sequential numba; the numpy-facing modules keep the
assembled matrix objects for oracle tests and wrap these kernels behind the
documented solver and tendency interfaces.  The Thomas elimination runs
without pivoting, which is valid for the diagonally dominant or SPD systems
this package assembles (pivot breakdown is reported through the info flag).
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _thomas_two_rhs(dl, d, du, b1, b2, x1, x2):
    """Solve the strictly tridiagonal system for two right-hand sides.

    dl[i] multiplies x[i-1] in row i (dl[0] unused), du[i] multiplies x[i+1]
    (du[n-1] unused).  Returns 0 on success, 1 on a vanishing pivot.
    """
    n = d.size
    cp = np.empty(n)
    tiny = 1e-300
    piv = d[0]
    if abs(piv) < tiny:
        return 1
    cp[0] = du[0] / piv
    x1[0] = b1[0] / piv
    x2[0] = b2[0] / piv
    for i in range(1, n):
        piv = d[i] - dl[i] * cp[i - 1]
        if abs(piv) < tiny:
            return 1
        cp[i] = du[i] / piv
        x1[i] = (b1[i] - dl[i] * x1[i - 1]) / piv
        x2[i] = (b2[i] - dl[i] * x2[i - 1]) / piv
    for i in range(n - 2, -1, -1):
        x1[i] -= cp[i] * x1[i + 1]
        x2[i] -= cp[i] * x2[i + 1]
    return 0


@njit(cache=True)
def _thomas_one_rhs(dl, d, du, b, x):
    n = d.size
    cp = np.empty(n)
    tiny = 1e-300
    piv = d[0]
    if abs(piv) < tiny:
        return 1
    cp[0] = du[0] / piv
    x[0] = b[0] / piv
    for i in range(1, n):
        piv = d[i] - dl[i] * cp[i - 1]
        if abs(piv) < tiny:
            return 1
        cp[i] = du[i] / piv
        x[i] = (b[i] - dl[i] * x[i - 1]) / piv
    for i in range(n - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]
    return 0


@njit(cache=True)
def cyclic_thomas(lower, diag, upper, b, x):
    """Solve the cyclic tridiagonal system A x = b.

    A[i, i-1 mod n] = lower[i], A[i, i] = diag[i], A[i, i+1 mod n] = upper[i].
    The two corner entries are removed by a rank-one correction and the
    remaining band solved by Thomas sweeps.  Returns 0 on success, 1 on a
    vanishing pivot, 2 when the cyclic correction denominator vanishes.
    """
    n = diag.size
    corner_top = lower[0]  # A[0, n-1]
    corner_bot = upper[n - 1]  # A[n-1, 0]
    gamma = -diag[0]
    if gamma == 0.0:
        gamma = -1.0
    d = diag.copy()
    d[0] -= gamma
    d[n - 1] -= corner_top * corner_bot / gamma
    u = np.zeros(n)
    u[0] = gamma
    u[n - 1] = corner_bot
    y = np.empty(n)
    z = np.empty(n)
    info = _thomas_two_rhs(lower, d, upper, b, u, y, z)
    if info != 0:
        return 1
    vtail = corner_top / gamma
    denom = 1.0 + z[0] + vtail * z[n - 1]
    if abs(denom) < 1e-14 * (1.0 + abs(z[0]) + abs(vtail * z[n - 1])):
        return 2
    factor = (y[0] + vtail * y[n - 1]) / denom
    for i in range(n):
        x[i] = y[i] - factor * z[i]
    return 0


@njit(cache=True)
def _bidiag_sweep(r, x):
    """Solve x[i] + x[i+1 mod n] = r[i] for odd n in closed form: the
    alternating sum pins x[0], a forward recurrence fills the rest."""
    n = r.size
    acc = 0.0
    sign = 1.0
    for i in range(n):
        acc += sign * r[i]
        sign = -sign
    x[0] = acc / 2.0
    for i in range(n - 1):
        x[i + 1] = r[i] - x[i]


@njit(cache=True)
def cyclic_bidiag_equal_bands(band, b, x):
    """Solve band[i] * (x[i] + x[i+1 mod n]) = b[i] (odd n).

    Closed form plus one refinement pass to hold the residual near machine
    precision for large n.  Returns 0 on success, 2 for even n (singular:
    the alternating vector is a null vector).
    """
    n = band.size
    if n % 2 == 0:
        return 2
    r = np.empty(n)
    for i in range(n):
        r[i] = b[i] / band[i]
    _bidiag_sweep(r, x)
    delta = np.empty(n)
    for i in range(n):
        ip = i + 1 if i + 1 < n else 0
        r[i] = b[i] / band[i] - (x[i] + x[ip])
    _bidiag_sweep(r, delta)
    for i in range(n):
        x[i] += delta[i]
    return 0


@njit(cache=True)
def avg_close(c, out):
    """out[l] = (c[l-1] + c[l]) / 2 with periodic wrap."""
    n = c.size
    out[0] = 0.5 * (c[n - 1] + c[0])
    for l in range(1, n):
        out[l] = 0.5 * (c[l - 1] + c[l])


@njit(cache=True)
def gp1_rhs(c, dx, out):
    """out[l] = (dx[l-1] c[l-1] + dx[l] c[l]) / 2, the P0-to-P1 pairing."""
    n = c.size
    out[0] = 0.5 * (dx[n - 1] * c[n - 1] + dx[0] * c[0])
    for l in range(1, n):
        out[l] = 0.5 * (dx[l - 1] * c[l - 1] + dx[l] * c[l])


@njit(cache=True)
def pv_system(h, v0, dx, f, lower, diag, upper, r):
    """Bands of the height-weighted P1 mass matrix and the PV right-hand side."""
    n = h.size
    for l in range(n):
        lm = l - 1 if l > 0 else n - 1
        lp = l + 1 if l + 1 < n else 0
        hdx_prev = h[lm] * dx[lm]
        hdx_here = h[l] * dx[l]
        lower[l] = hdx_prev / 6.0
        upper[l] = hdx_here / 6.0
        diag[l] = (hdx_prev + hdx_here) / 3.0
        r[l] = 0.5 * (v0[lp] - v0[lm]) + 0.5 * f * (dx[lm] + dx[l])


@njit(cache=True)
def tendencies(h0, u0, v0, q, dx, g, du, dv, dh):
    """Fluxes, Bernoulli function, and the three coefficient tendencies."""
    n = h0.size
    for e in range(n):
        ep = e + 1 if e + 1 < n else 0
        fu_l = h0[e] * u0[e]
        fu_r = h0[ep] * u0[ep]
        fv_l = h0[e] * v0[e]
        fv_r = h0[ep] * v0[ep]
        b_l = 0.5 * (u0[e] * u0[e] + v0[e] * v0[e]) + g * h0[e]
        b_r = 0.5 * (u0[ep] * u0[ep] + v0[ep] * v0[ep]) + g * h0[ep]
        du[e] = (-(b_r - b_l)) / dx[e] + 0.5 * (q[e] * fv_l + q[ep] * fv_r)
        dv[e] = -0.5 * (q[e] * fu_l + q[ep] * fu_r)
        dh[e] = -(fu_r - fu_l) / dx[e]
