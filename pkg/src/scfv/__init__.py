"""Compact subcell finite volume solver for 2D compressible flow.

Triangular main cells are split into four similar subcells whose averages
are evolved in a finite volume framework.  A shared cubic polynomial per
main cell is reconstructed from a compact face-neighbor stencil, fluxes
come from a time-integrated gas-kinetic (BGK) solver, and time stepping
uses a two-stage fourth-order scheme.
"""

from scfv.errors import (
    ConfigError,
    MeshError,
    MicroStateError,
    ReconstructionSetupError,
    SolverAbort,
    StateError,
)
from scfv.gas import GasModel
from scfv.mesh import TriMesh, generate_rect_triangulation, read_mesh, write_mesh

__all__ = [
    "ConfigError",
    "GasModel",
    "MeshError",
    "MicroStateError",
    "ReconstructionSetupError",
    "SolverAbort",
    "StateError",
    "TriMesh",
    "generate_rect_triangulation",
    "read_mesh",
    "write_mesh",
]

__version__ = "0.1.0"
