"""Periodic 1-D mesh, the P0/P1 field conventions, and exact quadrature rules.

Index conventions, fixed once and used by every assembly routine:

* node ``l`` sits at ``node_x[l]``; element ``e`` spans
  ``[node_x[e], node_x[e+1])``, the last element wrapping to
  ``node_x[0] + length``;
* element ``e`` has endpoint nodes ``(e, e+1 mod n)``, so node ``l`` is the
  left endpoint of element ``l``;
* P0 fields (one coefficient per element) and P1 fields (one value per node)
  are plain float64 arrays of length ``n``.

P0 coefficient arrays double as the coefficient functions of discrete
1-forms: the integrated 1-form values are ``dx * coeffs`` and the diagonal
element mass matrix is applied explicitly wherever an integral pairing is
required.  Orientation is fixed positive, so twisted and straight forms share
identical coefficient arrays and no sign bookkeeping is computed at runtime.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

# 2-point Gauss-Legendre rule on [0, 1]; exact for polynomials of degree <= 3,
# which covers every integrand assembled in this package (at most P0*P1*P1).
GAUSS2_XI = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
GAUSS2_W = np.array([0.5, 0.5])


def _as_field(values, n: int, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (n,):
        raise ValidationError(f"{name}: expected shape ({n},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name}: non-finite entries")
    return arr


@dataclass(frozen=True)
class Mesh:
    """Periodic 1-D mesh with n elements and n nodes.

    Attributes:
        node_x: node coordinates, strictly increasing in [0, length).
        length: domain length L > 0.
        dx:     element widths, dx[e] = node_x[e+1] - node_x[e] (wrapping
                with +L at the seam).
    """

    node_x: np.ndarray
    length: float
    dx: np.ndarray = field(init=False)

    def __post_init__(self):
        node_x = np.asarray(self.node_x, dtype=float)
        if node_x.ndim != 1 or node_x.size < 3:
            raise ValidationError("mesh needs at least 3 nodes")
        if not (self.length > 0.0 and np.isfinite(self.length)):
            raise ValidationError("mesh length must be positive and finite")
        if node_x[0] < 0.0 or node_x[-1] >= self.length:
            raise ValidationError("node coordinates must lie in [0, length)")
        dx = np.diff(node_x, append=node_x[0] + self.length)
        if np.any(dx <= 0.0):
            raise ValidationError("node coordinates must be strictly increasing")
        if abs(dx.sum() - self.length) > 1e-14 * self.length:
            raise ValidationError("element widths do not partition the domain")
        node_x = node_x.copy()
        dx = np.ascontiguousarray(dx)
        node_x.setflags(write=False)
        dx.setflags(write=False)
        object.__setattr__(self, "node_x", node_x)
        object.__setattr__(self, "dx", dx)

    @property
    def n(self) -> int:
        return self.node_x.size


def build_mesh(n: int, length: float) -> Mesh:
    """Uniform periodic mesh with n elements on [0, length)."""
    if not isinstance(n, (int, np.integer)) or n < 3:
        raise ValidationError(f"need at least 3 elements, got n={n}")
    if not (length > 0.0):
        raise ValidationError(f"domain length must be positive, got {length}")
    node_x = np.arange(n) * (length / n)
    return Mesh(node_x=node_x, length=float(length))


def mesh_from_nodes(node_x, length: float) -> Mesh:
    """Non-uniform periodic mesh from explicit node coordinates in [0, length)."""
    return Mesh(node_x=np.asarray(node_x, dtype=float), length=float(length))


def gauss2_quadrature(e: int, mesh: Mesh):
    """2-point Gauss rule on element e; returns (points, weights).

    Weights sum to dx[e]; the rule integrates cubics on the element exactly.
    """
    if not 0 <= e < mesh.n:
        raise ValidationError(f"element index {e} out of range [0, {mesh.n})")
    x0 = mesh.node_x[e]
    h = mesh.dx[e]
    return x0 + h * GAUSS2_XI, h * GAUSS2_W


def gauss_points_all(mesh: Mesh, npts: int = 2):
    """Gauss points and weights for every element at once.

    Returns arrays of shape (n, npts): points[e, j] lies in element e and
    weights[e] sums to dx[e].  npts >= 4 makes the rule exact to degree 7,
    enough headroom for error norms against arbitrary smooth references.
    """
    xi, w = np.polynomial.legendre.leggauss(npts)
    xi = 0.5 * (xi + 1.0)  # map [-1, 1] -> [0, 1]
    w = 0.5 * w
    pts = mesh.node_x[:, None] + mesh.dx[:, None] * xi[None, :]
    wts = mesh.dx[:, None] * w[None, :]
    return pts, wts


def locate_elements(mesh: Mesh, x) -> np.ndarray:
    """Element index containing each coordinate (taken modulo the period)."""
    xw = np.mod(np.asarray(x, dtype=float), mesh.length)
    e = np.searchsorted(mesh.node_x, xw, side="right") - 1
    return np.where(e < 0, mesh.n - 1, e)  # seam: x below node_x[0]


def eval_p0(mesh: Mesh, coeffs, x) -> np.ndarray:
    """Evaluate the piecewise-constant field with the given coefficients at x."""
    c = _as_field(coeffs, mesh.n, "coeffs")
    return c[locate_elements(mesh, x)]


def eval_p1(mesh: Mesh, nodal, x) -> np.ndarray:
    """Evaluate the periodic piecewise-linear field with the given nodal values at x."""
    v = _as_field(nodal, mesh.n, "nodal")
    xw = np.mod(np.asarray(x, dtype=float), mesh.length)
    e = locate_elements(mesh, xw)
    left = mesh.node_x[e]
    # distance measured within the element, wrapping across the seam
    t = np.mod(xw - left, mesh.length) / mesh.dx[e]
    right = v[(e + 1) % mesh.n]
    return v[e] * (1.0 - t) + right * t


@dataclass(frozen=True)
class ModelParams:
    """Physical constants: gravity g, Coriolis parameter f, mean height H."""

    g: float
    f: float
    h_mean: float

    def __post_init__(self):
        if not (self.g > 0.0):
            raise ValidationError(f"g must be positive, got {self.g}")
        if not (self.h_mean > 0.0):
            raise ValidationError(f"h_mean must be positive, got {self.h_mean}")
        if not np.isfinite(self.f):
            raise ValidationError("f must be finite")

    @property
    def wave_speed(self) -> float:
        """Gravity-wave speed sqrt(g * h_mean)."""
        return float(np.sqrt(self.g * self.h_mean))


@dataclass(frozen=True)
class State:
    """Prognostic P0 coefficient arrays on a shared mesh.

    u holds the zonal-velocity 1-form coefficients, v the slice-normal
    velocity, h the height.  Shapes are checked at construction; finiteness
    is not (the integrators check once per step so intermediate stages stay
    cheap), and positive h is required for physically valid states but only
    enforced where it matters (PV diagnosis).
    """

    mesh: Mesh
    u: np.ndarray
    v: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        n = self.mesh.n
        for name in ("u", "v", "h"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ValidationError(f"state.{name}: expected shape ({n},), got {arr.shape}")
            object.__setattr__(self, name, arr)

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v)) and np.all(np.isfinite(self.h))
        )

    @staticmethod
    def rest(mesh: Mesh, h_mean: float) -> "State":
        z = np.zeros(mesh.n)
        return State(mesh, z, z.copy(), np.full(mesh.n, float(h_mean)))
