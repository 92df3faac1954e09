"""Boundary conditions: ghost-state transforms and patch specifications.

Every non-periodic boundary closes the compact stencil with a mirror ghost
cell: the owner cell reflected across the boundary edge, carrying a
transformed copy of the owner's state.  Periodic patches are paired with a
congruent partner patch by a rigid translation.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from scfv.errors import ConfigError
from scfv.gas import conserved_from_primitive

# Kind codes shared with the flux kernels.
BC_INTERIOR = 0
BC_SLIP = 1        # reflecting slip wall and symmetry plane
BC_NOSLIP = 2      # no-slip adiabatic wall
BC_DIRICHLET = 3   # prescribed far-field state

_KIND_NAMES = {
    "periodic": None,
    "slip": BC_SLIP,
    "symmetry": BC_SLIP,
    "noslip_adiabatic": BC_NOSLIP,
    "dirichlet": BC_DIRICHLET,
}


@dataclass(frozen=True)
class BoundaryCondition:
    kind: str                       # periodic | slip | symmetry | noslip_adiabatic | dirichlet
    partner: Optional[str] = None   # periodic partner patch tag
    state: Optional[np.ndarray] = None  # conserved Dirichlet state

    @property
    def code(self):
        return _KIND_NAMES[self.kind]


def parse_condition(text, gamma=1.4):
    """Parse 'periodic:<tag>' | 'slip' | 'noslip_adiabatic' |
    'dirichlet:rho,U,V,p' | 'symmetry'."""
    text = text.strip()
    head, _, rest = text.partition(":")
    head = head.strip()
    if head not in _KIND_NAMES:
        raise ConfigError(f"unknown boundary condition '{text}'")
    if head == "periodic":
        if not rest:
            raise ConfigError("periodic condition needs a partner tag")
        return BoundaryCondition(kind="periodic", partner=rest.strip())
    if head == "dirichlet":
        try:
            vals = [float(v) for v in rest.split(",")]
        except ValueError:
            vals = []
        if len(vals) != 4:
            raise ConfigError(f"dirichlet condition needs 'rho,U,V,p', got '{rest}'")
        if vals[0] <= 0.0 or vals[3] <= 0.0:
            raise ConfigError(f"dirichlet state must have rho, p > 0: {vals}")
        state = conserved_from_primitive(np.array(vals), gamma)
        return BoundaryCondition(kind="dirichlet", state=state)
    if rest:
        raise ConfigError(f"condition '{head}' takes no argument")
    return BoundaryCondition(kind=head)


class BoundarySpec(dict):
    """Patch tag -> BoundaryCondition, validated against a mesh."""

    @classmethod
    def from_strings(cls, mapping, gamma=1.4):
        spec = cls()
        for tag, text in mapping.items():
            spec[tag] = text if isinstance(text, BoundaryCondition) \
                else parse_condition(text, gamma)
        return spec

    def validate(self, mesh):
        for name in mesh.patch_names:
            if name not in self:
                raise ConfigError(f"patch '{name}' has no boundary condition")
        for tag, cond in self.items():
            if tag not in mesh.patch_names:
                raise ConfigError(f"condition for unknown patch '{tag}'")
            if cond.kind == "periodic":
                if cond.partner not in self:
                    raise ConfigError(f"periodic partner '{cond.partner}' of"
                                      f" '{tag}' is not a patch")
                back = self[cond.partner]
                if back.kind != "periodic" or back.partner != tag:
                    raise ConfigError(f"periodic patches '{tag}' and"
                                      f" '{cond.partner}' must reference each other")


def mirror_matrix(normal):
    """Conserved-state map for a slip/symmetry ghost: reflect momentum."""
    nx, ny = normal
    t = np.eye(4)
    t[1, 1] = 1.0 - 2.0 * nx * nx
    t[1, 2] = -2.0 * nx * ny
    t[2, 1] = -2.0 * nx * ny
    t[2, 2] = 1.0 - 2.0 * ny * ny
    return t


def negate_velocity_matrix():
    """Conserved-state map for a no-slip adiabatic ghost: reverse velocity."""
    t = np.eye(4)
    t[1, 1] = -1.0
    t[2, 2] = -1.0
    return t


def state_transform(cond, normal):
    """Ghost conserved state = T @ interior state (None for dirichlet)."""
    if cond.code == BC_SLIP:
        return mirror_matrix(normal)
    if cond.code == BC_NOSLIP:
        return negate_velocity_matrix()
    return None


def reflection_map(point_on_line, normal):
    """Affine reflection across the line through a point with unit normal.

    Returns (A, d) with image = A @ x + d.
    """
    n = np.asarray(normal, dtype=float)
    a = np.eye(2) - 2.0 * np.outer(n, n)
    d = 2.0 * np.dot(np.asarray(point_on_line, dtype=float), n) * n
    return a, d


# Packed polynomial coefficients follow the monomial order of scfv.mesh;
# entry k multiplies (dx^a dy^b - moment_k) about the cell centroid, so the
# derivative tensors at the centroid are factorial multiples of the entries.


def transform_poly_coeffs(coeffs, a_lin, t_state):
    """Packed coefficients of P'(x) = T P(A x + d) about the image centroid.

    `coeffs` has shape (10, nvar) about the source centroid; the affine map
    must send the destination centroid to the source centroid (true for
    mirror ghosts and periodic translates).  Only the linear part enters the
    derivatives; the mean is preserved for isometries, which is asserted by
    construction elsewhere.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    a = np.asarray(a_lin, dtype=float)
    out = np.zeros_like(coeffs)

    # Gradient: grad' = A^T grad.
    g = coeffs[[1, 2]]
    out[[1, 2]] = a.T @ g

    # Hessian from packed entries: H = [[2 c3, c4], [c4, 2 c5]].
    for v in range(coeffs.shape[1]):
        h = np.array([[2.0 * coeffs[3, v], coeffs[4, v]],
                      [coeffs[4, v], 2.0 * coeffs[5, v]]])
        hp = a.T @ h @ a
        out[3, v] = 0.5 * hp[0, 0]
        out[4, v] = hp[0, 1]
        out[5, v] = 0.5 * hp[1, 1]

        # Third-order symmetric tensor, packed as xxx, xxy, xyy, yyy with
        # packing factors 1/6, 1/2, 1/2, 1/6 relative to the derivatives.
        d = np.zeros((2, 2, 2))
        d[0, 0, 0] = 6.0 * coeffs[6, v]
        d[1, 1, 1] = 6.0 * coeffs[9, v]
        for perm in ((0, 0, 1), (0, 1, 0), (1, 0, 0)):
            d[perm] = 2.0 * coeffs[7, v]
        for perm in ((0, 1, 1), (1, 0, 1), (1, 1, 0)):
            d[perm] = 2.0 * coeffs[8, v]
        dp = np.einsum("pi,qj,rk,pqr->ijk", a, a, a, d)
        out[6, v] = dp[0, 0, 0] / 6.0
        out[7, v] = dp[0, 0, 1] / 2.0
        out[8, v] = dp[0, 1, 1] / 2.0
        out[9, v] = dp[1, 1, 1] / 6.0

    # Mean term: isometric region image keeps the mean.
    out[0] = coeffs[0]
    out = out @ np.asarray(t_state, dtype=float).T
    return out
