"""Time integration of the semi-discrete coefficient ODEs.

Two schemes are offered: classical RK4 (default) and implicit midpoint via
fixed-point iteration (preserves quadratic invariants exactly, useful for
tightening conservation tests).  Mass and total PV are telescoping identities
of the spatial operators and are conserved to roundoff by any linear
combination of tendency evaluations, so the integrator choice only shows up
in energy and enstrophy drift.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .closures import ClosureSpec
from .dynamics import Tendency, Workspace, rhs
from .errors import BlowUpError, FixedPointError, SimulationAbort, ValidationError
from .mesh import Mesh, ModelParams, State
from .operators import OperatorSet, build_operators

SCHEMES = ("rk4", "implicit_midpoint")

RhsFn = Callable[[State], Tendency]


@dataclass(frozen=True)
class TimeConfig:
    dt: float
    scheme: str = "rk4"
    fp_tol: float = 1e-13
    fp_max_iters: int = 100

    def __post_init__(self):
        if not (self.dt > 0.0):
            raise ValidationError(f"dt must be positive, got {self.dt}")
        if self.scheme not in SCHEMES:
            raise ValidationError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not (self.fp_tol > 0.0):
            raise ValidationError("fp_tol must be positive")


def default_dt(mesh: Mesh, params: ModelParams, cfl: float = 0.1) -> float:
    """CFL-style default step: cfl * min(dx) / sqrt(g h_mean)."""
    return cfl * float(np.min(mesh.dx)) / params.wave_speed


def _axpy(state: State, coef: float, tend: Tendency) -> State:
    return State(
        state.mesh,
        state.u + coef * tend.du,
        state.v + coef * tend.dv,
        state.h + coef * tend.dh,
    )


def _checked(state: State) -> State:
    if not state.is_finite():
        raise BlowUpError("non-finite values in updated state")
    return state


def rk4_step(state: State, dt: float, rhs_fn: RhsFn) -> State:
    """One classical 4-stage Runge-Kutta step."""
    k1 = rhs_fn(state)
    k2 = rhs_fn(_axpy(state, 0.5 * dt, k1))
    k3 = rhs_fn(_axpy(state, 0.5 * dt, k2))
    k4 = rhs_fn(_axpy(state, dt, k3))
    du = (k1.du + 2.0 * (k2.du + k3.du) + k4.du) / 6.0
    dv = (k1.dv + 2.0 * (k2.dv + k3.dv) + k4.dv) / 6.0
    dh = (k1.dh + 2.0 * (k2.dh + k3.dh) + k4.dh) / 6.0
    return _checked(_axpy(state, dt, Tendency(du, dv, dh)))


def midpoint_step(
    state: State,
    dt: float,
    rhs_fn: RhsFn,
    fp_tol: float = 1e-13,
    fp_max_iters: int = 100,
    stats: Optional[dict] = None,
) -> State:
    """One implicit-midpoint step, solving s_mid = s + (dt/2) rhs(s_mid) by
    fixed-point iteration on the infinity norm of successive iterates."""
    mid = _axpy(state, 0.5 * dt, rhs_fn(state))
    diff = np.inf
    for it in range(1, fp_max_iters + 1):
        nxt = _axpy(state, 0.5 * dt, rhs_fn(mid))
        diff = max(
            np.max(np.abs(nxt.u - mid.u)),
            np.max(np.abs(nxt.v - mid.v)),
            np.max(np.abs(nxt.h - mid.h)),
        )
        if not np.isfinite(diff):
            raise BlowUpError("non-finite values in fixed-point iterate")
        mid = nxt
        if diff <= fp_tol:
            if stats is not None:
                stats["iterations"] = it
            return _checked(_axpy(state, dt, rhs_fn(mid)))
    raise FixedPointError(
        f"implicit midpoint did not converge in {fp_max_iters} iterations "
        f"(last update {diff:.3e} > tol {fp_tol:.3e})",
        residual=diff,
        iterations=fp_max_iters,
    )


def make_rhs(params: ModelParams, spec: ClosureSpec, ops: OperatorSet) -> RhsFn:
    """Tendency closure with a private scratch workspace (one per simulation)."""
    ws = Workspace(ops.mesh.n)
    return lambda state: rhs(state, params, spec, ops, ws=ws)


def run_simulation(
    initial: State,
    params: ModelParams,
    spec: ClosureSpec,
    time: TimeConfig,
    t_end: float,
    sample_every: int = 1,
    ops: Optional[OperatorSet] = None,
    diagnostics_fn=None,
):
    """Advance to t_end, sampling diagnostics along the way.

    Steps use time.dt with the final step shortened to land exactly on t_end.
    Samples are taken at step 0, every sample_every-th step, and at the last
    step; each sample is a (t, State, DiagnosticsRecord) triple.  On a step
    failure a SimulationAbort carrying the partial series is raised.
    """
    from .diagnostics import compute_diagnostics  # local import to avoid a cycle

    if not (t_end > 0.0):
        raise ValidationError(f"t_end must be positive, got {t_end}")
    if sample_every < 1:
        raise ValidationError("sample_every must be a positive integer")
    if ops is None:
        ops = build_operators(initial.mesh)
    if diagnostics_fn is None:
        diagnostics_fn = lambda t, s: compute_diagnostics(s, params, spec, ops, t)

    rhs_fn = make_rhs(params, spec, ops)
    n_steps = max(1, int(np.ceil(t_end / time.dt - 1e-12)))
    series = [(0.0, initial, diagnostics_fn(0.0, initial))]
    state = initial
    t = 0.0
    for step in range(1, n_steps + 1):
        dt = time.dt if step < n_steps else t_end - time.dt * (n_steps - 1)
        try:
            if time.scheme == "rk4":
                state = rk4_step(state, dt, rhs_fn)
            else:
                state = midpoint_step(state, dt, rhs_fn, time.fp_tol, time.fp_max_iters)
        except (BlowUpError, FixedPointError, ValidationError) as exc:
            raise SimulationAbort(
                f"step {step} of {n_steps} failed at t={t:.6g}: {exc}",
                series=series,
                step=step,
            ) from exc
        t = t_end if step == n_steps else step * time.dt
        if step % sample_every == 0 or step == n_steps:
            try:
                series.append((t, state, diagnostics_fn(t, state)))
            except ValidationError as exc:
                raise SimulationAbort(
                    f"diagnostics after step {step} failed at t={t:.6g}: {exc}",
                    series=series,
                    step=step,
                ) from exc
    return series
