"""Conserved-quantity diagnostics, error norms, and discrete dispersion relations.

Energy conventions.  The kinetic terms are
``(1/2) integral u_h (h0_h u0_h) + (1/2) integral v_h (h0_h v0_h)`` with the
closed nodal fields entering as pointwise P1 products (P0*P1*P1 integrands,
2-point Gauss exact).  Two potential-energy conventions are carried side by
side:

* ``energy_raw_potential`` adds ``g * integral h_h h0_h`` (no 1/2);
* ``energy`` adds ``(1/2) g * integral h_h h0_h``.

Only the second is compatible with the Bernoulli function ``g h0 + ...`` used
by the dynamics (the functional derivative of the potential term must give
``g h0``, which requires the 1/2), and only it is near-conserved by the
semi-discrete flow: exactly on the rotation-free subsystem (see
``energy_nodal_pairing``), to a bounded small oscillation once the potential
vorticity coupling is active.  The conservation harness therefore monitors
``energy`` while both values stay available.

Dispersion.  ``dispersion_avg_analytic`` is the closed form for the averaged
closure, ``omega = sqrt(gH) sin(k dx) / dx``.  ``dispersion_measured`` is the
oracle for every closure pair: it builds the linearized tendency operator at
the rest state (exact by symmetric differences, the gravity-wave subsystem
being a quadratic polynomial in the state), restricts it to the Fourier mode
pair at wavenumber k, and reads the rotation rate of that invariant plane.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .closures import ClosureSpec, close_state
from .dynamics import diagnose_pv, rhs, weighted_p1_mass
from .errors import ModeAnalysisError, ValidationError
from .mesh import GAUSS2_XI, GAUSS2_W, Mesh, ModelParams, State, eval_p0, eval_p1, gauss_points_all
from .operators import OperatorSet, build_operators


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One sampled row of the conservation time series (CSV schema:
    t,energy,mass_e,mass_n,total_pv,enstrophy)."""

    t: float
    energy: float
    mass_e: float
    mass_n: float
    total_pv: float
    enstrophy: float

    FIELDS = ("t", "energy", "mass_e", "mass_n", "total_pv", "enstrophy")

    def as_tuple(self):
        return (self.t, self.energy, self.mass_e, self.mass_n, self.total_pv, self.enstrophy)


@dataclass(frozen=True)
class DispersionSample:
    k: float
    omega: float
    scheme: str


def _p1_pair_integrals(mesh: Mesh, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-element integrals of the pointwise product of two P1 fields,
    evaluated by the 2-point Gauss rule (degree 2, exact)."""
    ar = np.roll(a, -1)
    br = np.roll(b, -1)
    vals = 0.0
    for xi, w in zip(GAUSS2_XI, GAUSS2_W):
        vals = vals + w * (a + (ar - a) * xi) * (b + (br - b) * xi)
    return mesh.dx * vals


def _p1_integrals(mesh: Mesh, a: np.ndarray) -> np.ndarray:
    """Per-element integrals of one P1 field (its trapezoid values)."""
    return mesh.dx * 0.5 * (a + np.roll(a, -1))


def energy_parts(state: State, spec: ClosureSpec, ops: OperatorSet, g: float):
    """Kinetic and raw potential contributions (ke_u, ke_v, pe_raw) with
    pe_raw = g * integral h_h h0_h carrying no 1/2."""
    h0, u0, v0 = close_state(spec, ops, state)
    mesh = ops.mesh
    ke_u = 0.5 * float(np.sum(state.u * _p1_pair_integrals(mesh, h0, u0)))
    ke_v = 0.5 * float(np.sum(state.v * _p1_pair_integrals(mesh, h0, v0)))
    pe_raw = g * float(np.sum(state.h * _p1_integrals(mesh, h0)))
    return ke_u, ke_v, pe_raw


def energy(state: State, spec: ClosureSpec, ops: OperatorSet, g: float) -> float:
    """Conserved total energy: kinetic terms plus half the raw potential term."""
    ke_u, ke_v, pe_raw = energy_parts(state, spec, ops, g)
    return ke_u + ke_v + 0.5 * pe_raw


def energy_raw_potential(state: State, spec: ClosureSpec, ops: OperatorSet, g: float) -> float:
    """Total with the full potential pairing g <h, h0>; rest state gives g H^2 L.

    Not a conserved functional (its g h^2 term is twice the potential energy
    whose derivative is the g h0 in the Bernoulli function); kept for
    comparison and logging.
    """
    ke_u, ke_v, pe_raw = energy_parts(state, spec, ops, g)
    return ke_u + ke_v + pe_raw


def energy_nodal_pairing(state: State, spec: ClosureSpec, ops: OperatorSet, g: float) -> float:
    """Energy with the closed products paired through the element-row mass
    pairing (trapezoid quadrature of the nodal Hadamard products).

    This is the quadratic functional the averaged closure conserves exactly
    on the rotation-free subsystem (v = 0, f = 0), which makes it the
    sharpest probe of integrator-induced drift; with the potential-vorticity
    coupling active it agrees with ``energy`` up to a bounded O(dx^2)
    difference.
    """
    h0, u0, v0 = close_state(spec, ops, state)
    dx = ops.mesh.dx

    def pair(coeffs, nodal):
        return float(np.sum(coeffs * dx * 0.5 * (nodal + np.roll(nodal, -1))))

    return (
        0.5 * pair(state.u, h0 * u0)
        + 0.5 * pair(state.v, h0 * v0)
        + 0.5 * g * pair(state.h, h0)
    )


def mass_e(state: State, mesh: Mesh) -> float:
    """Element mass: sum_e dx[e] h[e]."""
    return float(np.sum(mesh.dx * state.h))


def mass_n(state: State, spec: ClosureSpec, ops: OperatorSet) -> float:
    """Nodal mass: integral of the closed height field h0_h."""
    h0, _u0, _v0 = close_state(spec, ops, state)
    return float(np.sum(ops.node_weights * h0))


def total_pv(state: State, v0: np.ndarray, f: float, ops: OperatorSet) -> float:
    """Integral of q_h h_h; equals f L identically after PV diagnosis."""
    q = diagnose_pv(state.h, v0, f, ops)
    return float(np.sum(weighted_p1_mass(state.h, ops).matvec(q)))


def enstrophy(state: State, q: np.ndarray, ops: OperatorSet) -> float:
    """Integral of q_h^2 h_h (P1^2 * P0 integrand, 2-point Gauss exact)."""
    qr = np.roll(q, -1)
    # integral of q_h^2 over element e: dx/3 (q_e^2 + q_e q_{e+1} + q_{e+1}^2)
    per_elem = ops.mesh.dx / 3.0 * (q * q + q * qr + qr * qr)
    return float(np.sum(state.h * per_elem))


def compute_diagnostics(
    state: State, params: ModelParams, spec: ClosureSpec, ops: OperatorSet, t: float
) -> DiagnosticsRecord:
    h0, u0, v0 = close_state(spec, ops, state)
    mesh = ops.mesh
    ke_u = 0.5 * float(np.sum(state.u * _p1_pair_integrals(mesh, h0, u0)))
    ke_v = 0.5 * float(np.sum(state.v * _p1_pair_integrals(mesh, h0, v0)))
    pe_raw = params.g * float(np.sum(state.h * _p1_integrals(mesh, h0)))
    q = diagnose_pv(state.h, v0, params.f, ops)
    return DiagnosticsRecord(
        t=t,
        energy=ke_u + ke_v + 0.5 * pe_raw,
        mass_e=mass_e(state, mesh),
        mass_n=float(np.sum(ops.node_weights * h0)),
        total_pv=float(np.sum(weighted_p1_mass(state.h, ops).matvec(q))),
        enstrophy=enstrophy(state, q, ops),
    )


def l2_error(values: np.ndarray, reference, mesh: Mesh, kind: str, npts: int = 5) -> float:
    """L2 norm of (field_h - reference) by per-element Gauss quadrature.

    kind selects the reconstruction: 'p0' treats values as element
    coefficients, 'p1' as nodal values.  reference must accept an array of
    coordinates.
    """
    pts, wts = gauss_points_all(mesh, npts)
    flat = pts.ravel()
    if kind == "p0":
        fh = eval_p0(mesh, values, flat)
    elif kind == "p1":
        fh = eval_p1(mesh, values, flat)
    else:
        raise ValidationError(f"kind must be 'p0' or 'p1', got {kind!r}")
    err = fh - np.asarray(reference(flat), dtype=float)
    return float(np.sqrt(np.sum(wts.ravel() * err * err)))


def dispersion_avg_analytic(k: float, g: float, h_mean: float, dx: float) -> float:
    """Closed-form dispersion of the averaged closure: sqrt(gH) sin(k dx) / dx."""
    return float(np.sqrt(g * h_mean) * np.sin(k * dx) / dx)


def linearized_wave_operator(
    spec: ClosureSpec, mesh: Mesh, params: ModelParams, ops: OperatorSet | None = None
) -> np.ndarray:
    """Exact linearization of the tendency map about the rest state, f = 0,
    restricted to the (u, h) gravity-wave subspace; a (2n x 2n) matrix acting
    on stacked (u, h) coefficient perturbations.

    With v = 0 and f = 0 the PV flux vanishes identically, the remaining
    tendency is a quadratic polynomial in (u, h), and the symmetric difference
    below is exact for any step size.
    """
    if params.f != 0.0:
        raise ValidationError("dispersion measurement requires f = 0")
    if ops is None:
        ops = build_operators(mesh)
    n = mesh.n
    eps = 0.1 * params.h_mean  # keeps h positive; exactness does not depend on eps
    zero = np.zeros(n)
    base = np.full(n, params.h_mean)
    op = np.zeros((2 * n, 2 * n))

    def column(du, dh):
        plus = rhs(State(mesh, eps * du, zero, base + eps * dh), params, spec, ops)
        minus = rhs(State(mesh, -eps * du, zero, base - eps * dh), params, spec, ops)
        return np.concatenate(((plus.du - minus.du), (plus.dh - minus.dh))) / (2.0 * eps)

    unit = np.zeros(n)
    for j in range(n):
        unit[:] = 0.0
        unit[j] = 1.0
        op[:, j] = column(unit, zero)
        op[:, n + j] = column(zero, unit)
    return op


def dispersion_measured(
    spec: ClosureSpec,
    k_index: int,
    mesh: Mesh,
    params: ModelParams,
    operator: np.ndarray | None = None,
    ops: OperatorSet | None = None,
) -> float:
    """Angular frequency of the discrete mode at k = 2 pi k_index / L.

    Applies the linearized wave operator to the cosine/sine mode pair, checks
    that their span is invariant, and returns the nonnegative rotation rate
    (largest imaginary part of the restricted operator's eigenvalues).  Pass a
    precomputed operator when sweeping many wavenumbers.
    """
    n = mesh.n
    if not 0 <= k_index <= n // 2:
        raise ValidationError(f"k_index {k_index} outside resolvable range [0, {n // 2}]")
    if np.max(mesh.dx) - np.min(mesh.dx) > 1e-12 * np.max(mesh.dx):
        raise ValidationError("dispersion measurement expects a uniform mesh")
    if operator is None:
        operator = linearized_wave_operator(spec, mesh, params, ops=ops)
    k = 2.0 * np.pi * k_index / mesh.length
    phase = k * mesh.node_x
    cos, sin = np.cos(phase), np.sin(phase)
    zero = np.zeros(n)
    candidates = [
        np.concatenate((cos, zero)),
        np.concatenate((sin, zero)),
        np.concatenate((zero, cos)),
        np.concatenate((zero, sin)),
    ]
    basis = [b for b in candidates if np.linalg.norm(b) > 1e-12 * np.sqrt(n)]
    q, _ = np.linalg.qr(np.column_stack(basis))
    image = operator @ q
    restricted = q.T @ image
    resid = np.linalg.norm(image - q @ restricted)
    # floor the scale with the operator norm so exact zero modes pass
    scale = max(np.linalg.norm(image), 1e-3 * np.linalg.norm(operator))
    if resid > 1e-9 * scale:
        raise ModeAnalysisError(
            f"mode k_index={k_index} does not span an invariant plane of the "
            f"linearized operator (residual {resid:.3e}, scale {scale:.3e})",
            residual=resid,
        )
    eigs = np.linalg.eigvals(restricted)
    return float(max(np.max(eigs.imag), 0.0))
