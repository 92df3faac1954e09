"""Troubled-cell detection and hierarchical minmod limiting.

A cell is flagged when the relative pressure and density jumps of its
corrected polynomial against the face-neighbor values, summed over the six
outer face quadrature points, exceed threshold * 6.  Flagged cells get a
top-down (third to first order) minmod rebuild of their derivative
coefficients from face-neighbor candidates; means and subcell averages are
never changed.

The detector and limiting procedure here are documented substitutes for the
externally published versions they stand in for; results close to the
flagging threshold should not be over-interpreted.
"""

from dataclasses import dataclass

import numpy as np

from scfv import kernels
from scfv.errors import StateError


@dataclass
class LimiterConfig:
    enabled: bool = True
    threshold: float = 0.2
    force_all: bool = False


@dataclass
class TroubledMask:
    flags: np.ndarray       # (N,) bool
    indicator: np.ndarray   # (N,) accumulated jump measure

    @property
    def count(self):
        return int(self.flags.sum())


def face_values(geom, coeffs, shifts, gamma):
    """(rho, p) of the corrected polynomials on both sides of every face."""
    qc_sub = subcell_centroid_values(geom, coeffs, shifts)
    rho_p = np.empty((geom.n_flux_faces, 2, 2, 2))
    kernels.face_eval_pass(coeffs, geom.mesh.cell_moments,
                           geom.mesh.cell_centroid, shifts, qc_sub,
                           geom.fa_left, geom.fa_right, geom.fa_bc,
                           geom.fa_normal, geom.fa_qp_l, geom.fa_qp_r,
                           geom.fa_state, gamma, rho_p)
    return rho_p


def subcell_centroid_values(geom, coeffs, shifts):
    """Corrected polynomial values at the subcell centroids, (4N, 4)."""
    n = geom.mesh.n_cells
    vals = coeffs[:, None, 0, :] + np.einsum(
        "cjk,ckv->cjv", geom.sub_eval, coeffs[:, 1:, :])
    return vals.reshape(4 * n, -1) + shifts


def detect_troubled(geom, qbar_sub, gamma, threshold=0.2, coeffs=None,
                    shifts=None):
    """Flag cells whose interface jumps exceed the threshold."""
    prim_ok = qbar_sub[:, 0] > 0.0
    if not np.all(prim_ok):
        raise StateError(f"non-positive density average in subcell"
                         f" {int(np.nonzero(~prim_ok)[0][0])}")
    if coeffs is None:
        coeffs, shifts = geom.reconstruct(qbar_sub)
    rho_p = face_values(geom, coeffs, shifts, gamma)
    indicator = np.empty(geom.mesh.n_cells)
    bad = np.empty(geom.mesh.n_cells, dtype=np.int8)
    kernels.detector_accumulate(rho_p, geom.fa_left, geom.fa_right,
                                geom.fa_bc, geom.mesh.n_cells, indicator, bad)
    flags = indicator > threshold * 6.0
    return TroubledMask(flags=flags, indicator=indicator)


def apply_hr_limiter(geom, coeffs, flags):
    """Limited copy of the coefficient array (flagged cells only)."""
    out = np.empty_like(coeffs)
    kernels.hr_limit_pass(coeffs, out, flags.astype(np.int8),
                          geom.mesh.cell_centroid, geom.mesh.cell_moments,
                          geom.lim_nb, geom.lim_nb_centroid, geom.lim_ghost,
                          geom.ghost_gmat, geom.ghost_t, geom.ghost_centroid,
                          geom.ghost_moments, geom.ghost_kind,
                          geom.ghost_dirichlet)
    return out


def hr_limit(geom, cell_id, coeffs):
    """Limited polynomial of a single cell (same mean, new derivatives)."""
    flags = np.zeros(geom.mesh.n_cells, dtype=bool)
    flags[cell_id] = True
    return apply_hr_limiter(geom, coeffs, flags)[cell_id]
