"""Metric closures: reconstruct nodal (P1) fields from element (P0) coefficients.

Three realizations of the element-to-node map are provided:

* GP1 -- Galerkin projection tested against P1 hats: solve
  ``M_nn x = r`` with ``r[l] = (dx[l-1] c[l-1] + dx[l] c[l]) / 2``, i.e. the
  L2-orthogonal projection of the P0 field onto P1 (one cyclic tridiagonal
  solve).
* GP0 -- Galerkin projection tested against P0 boxes: the per-element mean of
  the P1 reconstruction equals the coefficient, ``(x[e] + x[e+1]) / 2 = c[e]``
  (one cyclic bidiagonal solve; requires odd n).
* AVG -- mass-matrix-free averaging: ``x[l] = (c[l-1] + c[l]) / 2``
  (no linear solve at all).

All three preserve constant fields exactly and are linear maps.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import SingularSystemError, ValidationError
from .kernels import avg_close, cyclic_bidiag_equal_bands, gp1_rhs
from .mesh import State
from .operators import OperatorSet, solve_counter


class ClosureKind(enum.Enum):
    GP1 = "gp1"
    GP0 = "gp0"
    AVG = "avg"

    @classmethod
    def from_string(cls, name: str) -> "ClosureKind":
        try:
            return cls(name.lower())
        except ValueError:
            raise ValidationError(
                f"unknown closure kind {name!r}; expected one of 'gp1', 'gp0', 'avg'"
            ) from None

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class ClosureSpec:
    """Closure pair: one kind for the height field, one shared by u and v."""

    height: ClosureKind
    velocity: ClosureKind

    @property
    def label(self) -> str:
        """Scheme label in velocity-height order, e.g. 'gp1-gp0' or 'avg-avg'."""
        return f"{self.velocity.value}-{self.height.value}"

    @classmethod
    def from_label(cls, label: str) -> "ClosureSpec":
        parts = label.split("-")
        if len(parts) != 2:
            raise ValidationError(f"closure label {label!r} must look like 'gp1-gp0'")
        vel, hgt = parts
        return cls(height=ClosureKind.from_string(hgt), velocity=ClosureKind.from_string(vel))

    def needs_odd_n(self) -> bool:
        return ClosureKind.GP0 in (self.height, self.velocity)


def _close_fast(
    kind: ClosureKind,
    ops: OperatorSet,
    c: np.ndarray,
    out: np.ndarray | None = None,
    scratch: np.ndarray | None = None,
) -> np.ndarray:
    """Closure dispatch without input validation; the time-stepping hot path.

    out receives the nodal values when given; scratch may hold the
    intermediate right-hand side (it must not alias out or c).
    """
    if out is None:
        out = np.empty_like(c)
    if kind is ClosureKind.AVG:
        if ops.length_weighted_avg:
            np.copyto(out, ops.averaging.matvec(c))
            return out
        avg_close(c, out)
        return out
    if kind is ClosureKind.GP1:
        r = scratch if scratch is not None else np.empty_like(c)
        gp1_rhs(c, ops.mesh.dx, r)
        return ops.mass_nn_solver.solve(r, out=out)
    if kind is ClosureKind.GP0:
        # element-row system (dx/2)(x[e] + x[e+1]) = dx c[e]; the equal bands
        # are ops-owned so per-call band validation is unnecessary
        solve_counter.bump()
        if scratch is not None:
            b = np.multiply(ops.mesh.dx, c, out=scratch)
        else:
            b = ops.mesh.dx * c
        info = cyclic_bidiag_equal_bands(ops.mass_ne.bands[0], b, out)
        if info != 0:
            raise SingularSystemError(
                f"GP0 closure is singular on even n={ops.mesh.n}: the alternating "
                "nodal vector (+1, -1, ...) is invisible to element means"
            )
        return out
    raise ValidationError(f"unknown closure kind {kind!r}")


def close_to_nodal(kind: ClosureKind, ops: OperatorSet, coeffs: np.ndarray) -> np.ndarray:
    """Apply one metric closure to a P0 coefficient array, returning nodal values."""
    c = np.ascontiguousarray(coeffs, dtype=float)
    if c.shape != (ops.mesh.n,):
        raise ValidationError(f"coefficient array has shape {c.shape}, expected ({ops.mesh.n},)")
    if not np.all(np.isfinite(c)):
        raise ValidationError("closure input contains non-finite values")
    return _close_fast(kind, ops, c)


def close_state(spec: ClosureSpec, ops: OperatorSet, state: State):
    """Close all three prognostic fields: returns (h0, u0, v0) nodal arrays."""
    h0 = close_to_nodal(spec.height, ops, state.h)
    u0 = close_to_nodal(spec.velocity, ops, state.u)
    v0 = close_to_nodal(spec.velocity, ops, state.v)
    return h0, u0, v0
