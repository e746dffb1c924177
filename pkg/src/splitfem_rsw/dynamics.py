"""Topological prognostic tendencies and potential-vorticity diagnosis.

The semi-discrete equations, written on integrated 1-form values and then
divided by the diagonal P0 mass matrix so integrators see plain coefficient
ODEs:

    du[e] = ( -(G B)[e]        + (M_ne (q o Fv))[e] ) / dx[e]
    dv[e] = ( -(M_ne (q o Fu))[e]                   ) / dx[e]
    dh[e] = ( -(G Fu)[e]                            ) / dx[e]

with nodal Hadamard products Fu = h0 o u0, Fv = h0 o v0 and
B = u0 o u0 / 2 + v0 o v0 / 2 + g h0.  G is the exact derivative pairing
(no integration by parts anywhere), M_ne the element-row mass pairing.

PV q is diagnosed weakly from  W(h) q = r,  where W(h) is the P1 mass matrix
weighted by the P0 height and r[l] = (v0[l+1] - v0[l-1])/2 + f (dx[l-1]+dx[l])/2.
The first term is the pairing of hat_l with d(v0_h)/dx, which reduces to the
centered difference exactly on any mesh (slope times dx/2 on each support
element telescopes).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .closures import ClosureSpec, _close_fast
from .errors import SingularSystemError, ValidationError
from .kernels import cyclic_thomas, pv_system, tendencies
from .mesh import ModelParams, State
from .operators import OperatorSet, TridiagCirculant, solve_counter


@dataclass(frozen=True)
class Tendency:
    """Coefficient time derivatives of the three prognostic fields."""

    du: np.ndarray
    dv: np.ndarray
    dh: np.ndarray


class Workspace:
    """Per-simulation scratch buffers for the tendency hot path.

    Reusing these avoids re-faulting fresh pages on every evaluation at large
    n; a workspace must not be shared across concurrent simulations.  The
    tendency outputs themselves are always freshly allocated (integrator
    stages hold several of them at once).
    """

    def __init__(self, n: int):
        self.h0 = np.empty(n)
        self.u0 = np.empty(n)
        self.v0 = np.empty(n)
        self.p1_rhs = np.empty(n)
        self.pv_lower = np.empty(n)
        self.pv_diag = np.empty(n)
        self.pv_upper = np.empty(n)
        self.pv_rhs = np.empty(n)
        self.q = np.empty(n)


def mass_fluxes(h0: np.ndarray, u0: np.ndarray, v0: np.ndarray):
    """Nodal mass fluxes (Fu, Fv) = (h0 o u0, h0 o v0)."""
    return h0 * u0, h0 * v0


def bernoulli(h0: np.ndarray, u0: np.ndarray, v0: np.ndarray, g: float) -> np.ndarray:
    """Nodal Bernoulli function u0^2/2 + v0^2/2 + g h0."""
    return 0.5 * (u0 * u0 + v0 * v0) + g * h0


def weighted_p1_mass(h_coeffs: np.ndarray, ops: OperatorSet) -> TridiagCirculant:
    """P1 mass matrix weighted by the P0 height field:
    W[l,l'] = sum_e h[e] * integral_e hat_l hat_l'.  SPD for h > 0."""
    hdx = h_coeffs * ops.mesh.dx
    hdxl = np.roll(hdx, 1)
    return TridiagCirculant(diag=(hdxl + hdx) / 3.0, lower=hdxl / 6.0, upper=hdx / 6.0)


def diagnose_pv(
    h_coeffs: np.ndarray, v0: np.ndarray, f: float, ops: OperatorSet, ws: Workspace | None = None
) -> np.ndarray:
    """Diagnose nodal potential vorticity from W(h) q = <hat, d v0> + f <hat, 1>."""
    h = np.ascontiguousarray(h_coeffs, dtype=float)
    if np.any(h <= 0.0):
        bad = int(np.argmin(h))
        raise ValidationError(
            f"height coefficient must be positive for PV diagnosis; h[{bad}] = {h[bad]:.6g}"
        )
    if ws is None:
        ws = Workspace(h.size)
    pv_system(
        h, np.ascontiguousarray(v0, dtype=float), ops.mesh.dx, f,
        ws.pv_lower, ws.pv_diag, ws.pv_upper, ws.pv_rhs,
    )
    solve_counter.bump()
    info = cyclic_thomas(ws.pv_lower, ws.pv_diag, ws.pv_upper, ws.pv_rhs, ws.q)
    if info != 0:
        raise SingularSystemError("PV mass matrix solve failed (vanishing pivot)")
    return ws.q


def rhs(
    state: State, params: ModelParams, spec: ClosureSpec, ops: OperatorSet, ws: Workspace | None = None
) -> Tendency:
    """Assemble the full semi-discrete tendency for one state.

    Pass a Workspace to reuse the closure and PV scratch arrays between
    evaluations of one simulation; the returned Tendency arrays are always
    fresh.
    """
    if ws is None:
        ws = Workspace(ops.mesh.n)
    h0 = _close_fast(spec.height, ops, state.h, ws.h0, ws.p1_rhs)
    u0 = _close_fast(spec.velocity, ops, state.u, ws.u0, ws.p1_rhs)
    v0 = _close_fast(spec.velocity, ops, state.v, ws.v0, ws.p1_rhs)
    q = diagnose_pv(state.h, v0, params.f, ops, ws=ws)
    n = ops.mesh.n
    du = np.empty(n)
    dv = np.empty(n)
    dh = np.empty(n)
    tendencies(h0, u0, v0, q, ops.mesh.dx, params.g, du, dv, dh)
    return Tendency(du=du, dv=dv, dh=dh)
