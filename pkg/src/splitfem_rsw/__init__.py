"""Split P0/P1 finite-element solver for the rotating shallow-water slice model.

The prognostic equations are assembled from metric-free incidence and pairing
matrices (the "topological" part, responsible for conservation), while the
element-to-node field reconstructions go through interchangeable "metric
closures" (Galerkin projections GP1/GP0 or mass-matrix-free averaging AVG),
which set accuracy, stability and dispersion.
"""

__version__ = "0.1.0"

from .mesh import Mesh, ModelParams, State, build_mesh, mesh_from_nodes
from .closures import ClosureKind, ClosureSpec
from .operators import OperatorSet, build_operators

__all__ = [
    "Mesh",
    "ModelParams",
    "State",
    "build_mesh",
    "mesh_from_nodes",
    "ClosureKind",
    "ClosureSpec",
    "OperatorSet",
    "build_operators",
    "__version__",
]
