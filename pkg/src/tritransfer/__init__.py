"""Conservative scalar field transfer between non-matching 2D triangular meshes.

Three transfer operators over a shared domain:

- mesh-intersection Galerkin projection (deterministic, conservative),
- Monte Carlo / quasi-Monte Carlo Galerkin projection (black-box sources,
  asymptotically conservative),
- local weighted-polynomial RBF fitting (non-conservative baseline),

plus the supermesh/DoF error metrics and CLI experiment harnesses.
"""

from ._kernels import BACKEND as kernel_backend
from .fem import NodalField, assemble_mass_matrix, cg_solve, integrate_field
from .mesh import TriMesh, generate_square_mesh, load_msh, save_msh

__all__ = [
    "TriMesh",
    "NodalField",
    "generate_square_mesh",
    "load_msh",
    "save_msh",
    "assemble_mass_matrix",
    "cg_solve",
    "integrate_field",
    "kernel_backend",
]

__version__ = "0.1.0"
