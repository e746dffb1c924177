"""Mass, derivative and averaging matrices on the periodic P0/P1 pair, plus
the direct cyclic banded solvers they require.

All matrices are N x N.  Row/column roles follow the mesh conventions:

* ``mass_nn``  M[l,l'] = integral of hat_l * hat_l'          (node rows)
* ``mass_ee``  M[m,m'] = integral of box_m * box_m' = dx     (diagonal)
* ``mass_en``  M[l,m]  = integral of hat_l * box_m           (node rows);
  the transposed element-row pairing ("mass_ne") integrates a P1 field over
  each element: (M x)[e] = dx[e] * (x[e] + x[e+1]) / 2.
* ``deriv``    element-row G with G[e,e] = -1, G[e,e+1] = +1; metric free,
  (G x)[e] = x[e+1] - x[e] is the exact integral of d(x_h)/dx over element e.
* ``averaging`` node-row A with A[l,l-1] = A[l,l] = 1/2 acting on coefficient
  arrays (node value = mean of the two adjacent element coefficients); a
  length-weighted variant is available for non-uniform meshes.

Solvers are direct (cyclic Thomas via a rank-one correction, and a closed-form
alternating sweep for the cyclic bidiagonal case), never iterative.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SingularSystemError, ValidationError
from .kernels import cyclic_bidiag_equal_bands, cyclic_thomas
from .mesh import Mesh


class SolveCounter:
    """Counts banded linear solves; used to assert structurally that the
    averaging closure never touches a solver."""

    def __init__(self):
        self.count = 0

    def bump(self):
        self.count += 1


solve_counter = SolveCounter()


@dataclass(frozen=True)
class TridiagCirculant:
    """Cyclic tridiagonal matrix: A[l, l-1] = lower[l], A[l, l] = diag[l],
    A[l, l+1] = upper[l], indices mod n."""

    diag: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    @property
    def n(self) -> int:
        return self.diag.size

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.diag * x + self.lower * np.roll(x, 1) + self.upper * np.roll(x, -1)

    def toarray(self) -> np.ndarray:
        n = self.n
        a = np.zeros((n, n))
        idx = np.arange(n)
        a[idx, idx] = self.diag
        a[idx, (idx - 1) % n] = self.lower
        a[idx, (idx + 1) % n] = self.upper
        return a

    def row_sums(self) -> np.ndarray:
        return self.diag + self.lower + self.upper


@dataclass(frozen=True)
class DiagonalMatrix:
    diag: np.ndarray

    @property
    def n(self) -> int:
        return self.diag.size

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.diag * x

    def toarray(self) -> np.ndarray:
        return np.diag(self.diag)


@dataclass(frozen=True)
class TwoBandCirculant:
    """Cyclic matrix with exactly two nonzeros per row:
    A[i, (i + offsets[0]) % n] = bands[0][i], same for the second band."""

    n: int
    offsets: tuple
    bands: tuple

    def __post_init__(self):
        if self.offsets[0] == self.offsets[1]:
            raise ValidationError("band offsets must differ")

    def matvec(self, x: np.ndarray) -> np.ndarray:
        d0, d1 = self.offsets
        b0, b1 = self.bands
        return b0 * np.roll(x, -d0) + b1 * np.roll(x, -d1)

    def toarray(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        idx = np.arange(self.n)
        a[idx, (idx + self.offsets[0]) % self.n] = self.bands[0]
        a[idx, (idx + self.offsets[1]) % self.n] = self.bands[1]
        return a

    def transpose(self) -> "TwoBandCirculant":
        # A^T[j, j - d] = band[j - d] for each band
        d0, d1 = self.offsets
        b0, b1 = self.bands
        return TwoBandCirculant(
            n=self.n,
            offsets=(-d0, -d1),
            bands=(np.roll(b0, d0), np.roll(b1, d1)),
        )


def assemble_mass_nn(mesh: Mesh) -> TridiagCirculant:
    """P1 mass matrix: row l has diagonal (dx[l-1]+dx[l])/3 and off-diagonal
    entries dx[l-1]/6, dx[l]/6 (cyclic)."""
    dxl = np.roll(mesh.dx, 1)  # dx[l-1]
    return TridiagCirculant(diag=(dxl + mesh.dx) / 3.0, lower=dxl / 6.0, upper=mesh.dx / 6.0)


def assemble_mass_ee(mesh: Mesh) -> DiagonalMatrix:
    """P0 mass matrix: diag[e] = dx[e]."""
    return DiagonalMatrix(diag=mesh.dx.copy())


def assemble_mass_en(mesh: Mesh, element_rows: bool = False) -> TwoBandCirculant:
    """Mixed P1/P0 mass pairing.

    Node rows (default): row l pairs elements l-1 and l with entries
    dx[l-1]/2 and dx[l]/2.  With element_rows=True the transpose is
    returned: row e pairs nodes e and e+1 with entries dx[e]/2 each.
    """
    if element_rows:
        half = mesh.dx / 2.0
        return TwoBandCirculant(n=mesh.n, offsets=(0, 1), bands=(half, half.copy()))
    return TwoBandCirculant(
        n=mesh.n, offsets=(-1, 0), bands=(np.roll(mesh.dx, 1) / 2.0, mesh.dx / 2.0)
    )


def assemble_deriv_en(mesh: Mesh, element_rows: bool = True) -> TwoBandCirculant:
    """Metric-free derivative pairing.

    Element rows (default): G[e, e] = -1, G[e, e+1] = +1, so that
    (G x)[e] integrates d(x_h)/dx exactly over element e.  Node rows give
    the transpose: D[l, l-1] = +1, D[l, l] = -1 on element columns.
    """
    ones = np.ones(mesh.n)
    if element_rows:
        return TwoBandCirculant(n=mesh.n, offsets=(0, 1), bands=(-ones, ones.copy()))
    return TwoBandCirculant(n=mesh.n, offsets=(-1, 0), bands=(ones.copy(), -ones))


def averaging_en(mesh: Mesh, length_weighted: bool = False) -> TwoBandCirculant:
    """Element-to-node averaging on coefficient arrays.

    Node l receives the mean of the two adjacent element coefficients.  The
    plain mean preserves constants on any mesh; the length-weighted variant
    additionally makes the averaged nodal field carry the same total mass as
    the element field on non-uniform meshes.
    """
    dxl = np.roll(mesh.dx, 1)
    if length_weighted:
        wsum = dxl + mesh.dx
        return TwoBandCirculant(n=mesh.n, offsets=(-1, 0), bands=(dxl / wsum, mesh.dx / wsum))
    half = np.full(mesh.n, 0.5)
    return TwoBandCirculant(n=mesh.n, offsets=(-1, 0), bands=(half, half.copy()))


def _diagnose_tridiag(a: TridiagCirculant, detail: str) -> str:
    msg = f"cyclic tridiagonal system of size {a.n} is singular or ill-conditioned ({detail})"
    if a.n <= 128:
        cond = np.linalg.cond(a.toarray())
        msg += f"; condition number estimate {cond:.3e}"
    return msg


_CYCLIC_INFO = {
    1: "vanishing Thomas pivot",
    2: "vanishing cyclic correction denominator",
}


class TridiagCirculantSolver:
    """Direct solver for cyclic tridiagonal systems: the two corner entries
    are removed by a rank-one correction (Sherman-Morrison) and the remaining
    band solved by Thomas sweeps without pivoting, which the diagonally
    dominant / SPD systems assembled here permit."""

    def __init__(self, a: TridiagCirculant):
        if a.n < 3:
            raise ValidationError("cyclic tridiagonal solver needs n >= 3")
        self._matrix = a
        self._lower = np.ascontiguousarray(a.lower, dtype=float)
        self._diag = np.ascontiguousarray(a.diag, dtype=float)
        self._upper = np.ascontiguousarray(a.upper, dtype=float)

    def solve(self, b: np.ndarray, check_residual: bool = False, out: np.ndarray | None = None) -> np.ndarray:
        solve_counter.bump()
        b = np.ascontiguousarray(b, dtype=float)
        x = out if out is not None else np.empty_like(b)
        info = cyclic_thomas(self._lower, self._diag, self._upper, b, x)
        if info != 0:
            raise SingularSystemError(_diagnose_tridiag(self._matrix, _CYCLIC_INFO[info]))
        if check_residual:
            resid = np.max(np.abs(self._matrix.matvec(x) - b))
            bound = 1e-12 * max(np.max(np.abs(b)), 1e-300)
            if resid > bound:
                raise SingularSystemError(
                    _diagnose_tridiag(self._matrix, f"residual {resid:.3e} exceeds {bound:.3e}")
                )
        return x


def solve_tridiag_circulant(a: TridiagCirculant, b: np.ndarray, check_residual: bool = True) -> np.ndarray:
    """Solve the cyclic tridiagonal system A x = b directly.

    Exact-arithmetic method (Thomas sweeps plus a rank-one cyclic correction),
    not iterative; the residual check enforces |A x - b|_inf <= 1e-12 |b|_inf
    and is on by default for one-shot solves.
    """
    return TridiagCirculantSolver(a).solve(b, check_residual=check_residual)


def solve_two_band(a: TwoBandCirculant, b: np.ndarray, check_residual: bool = True) -> np.ndarray:
    """Solve the cyclic bidiagonal system A x = b for adjacent equal bands.

    The system band_i * (x[i] + x[i+1]) = b_i closes around the periodic seam
    and is invertible iff n is odd; for even n the alternating vector
    (+1, -1, +1, ...) spans the null space and a singularity error is raised.
    """
    solve_counter.bump()
    if a.offsets != (0, 1):
        raise ValidationError("solve_two_band expects an element-row system with offsets (0, 1)")
    b0, b1 = a.bands
    scale = max(np.max(np.abs(b0)), np.max(np.abs(b1)))
    if np.max(np.abs(b0 - b1)) > 1e-12 * scale:
        raise ValidationError("solve_two_band supports equal-band systems only")
    b = np.ascontiguousarray(b, dtype=float)
    x = np.empty_like(b)
    info = cyclic_bidiag_equal_bands(np.ascontiguousarray(b0, dtype=float), b, x)
    if info != 0:
        raise SingularSystemError(
            f"cyclic two-band system with equal bands is singular for even n={a.n}: "
            "the alternating vector (+1, -1, +1, ...) is a null vector"
        )
    if check_residual:
        resid = np.max(np.abs(a.matvec(x) - b))
        bound = 1e-12 * max(np.max(np.abs(b)), 1e-300)
        if resid > bound:
            raise SingularSystemError(
                f"two-band solve residual {resid:.3e} exceeds {bound:.3e} (n={a.n})"
            )
    return x


@dataclass(frozen=True)
class OperatorSet:
    """All assembled operators for one mesh, built once and shared.

    node_weights[l] = (dx[l-1] + dx[l]) / 2 is the integral of hat_l, used by
    the PV right-hand side and the nodal mass diagnostic.
    """

    mesh: Mesh
    mass_nn: TridiagCirculant
    mass_ee: DiagonalMatrix
    mass_en: TwoBandCirculant  # node rows
    mass_ne: TwoBandCirculant  # element rows
    deriv: TwoBandCirculant  # element rows (G)
    averaging: TwoBandCirculant  # node rows
    node_weights: np.ndarray
    length_weighted_avg: bool = False
    mass_nn_solver: TridiagCirculantSolver = field(repr=False, default=None)


def build_operators(mesh: Mesh, length_weighted_avg: bool = False) -> OperatorSet:
    mass_nn = assemble_mass_nn(mesh)
    return OperatorSet(
        mesh=mesh,
        mass_nn=mass_nn,
        mass_ee=assemble_mass_ee(mesh),
        mass_en=assemble_mass_en(mesh),
        mass_ne=assemble_mass_en(mesh, element_rows=True),
        deriv=assemble_deriv_en(mesh),
        averaging=averaging_en(mesh, length_weighted=length_weighted_avg),
        node_weights=(np.roll(mesh.dx, 1) + mesh.dx) / 2.0,
        length_weighted_avg=length_weighted_avg,
        mass_nn_solver=TridiagCirculantSolver(mass_nn),
    )
