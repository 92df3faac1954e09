"""Compact weighted least-squares reconstruction on subcell stencils.

Each main cell carries one cubic polynomial shared by its four subcells.
The 9 non-constant coefficients are fit (weighted least squares) to the 15
stencil subcell averages: the cell's own three corner subcells plus all
four subcells of each face neighbor, with mirror/periodic ghosts closing
the stencil at boundaries.  A per-subcell constant shift then restores the
subcell averages exactly.

Packed coefficient order follows scfv.mesh.MONOMIAL_EXPONENTS: entry k
multiplies (dx^a dy^b - cell moment).  Entry 0 is the cell mean.
"""

from dataclasses import dataclass

import numpy as np

from scfv import boundary as bc
from scfv import mesh as meshmod
from scfv.errors import ConfigError, ReconstructionSetupError, StateError

#: column scale degrees for conditioning (h^degree per basis function)
_BASIS_DEGREE = np.array([1, 1, 2, 2, 2, 3, 3, 3, 3], dtype=float)

CONDITION_WARN = 1.0e12

# Stencil slot kinds.
SRC_IDENTITY = 0
SRC_TRANSFORM = 1
SRC_DIRICHLET = 2


@dataclass
class Stencil:
    """Reconstruction stencil of one cell (15 entries)."""

    subcells: np.ndarray     # source subcell ids (own under transforms)
    kinds: np.ndarray        # SRC_* per entry
    distances: np.ndarray    # region centroid to cell centroid
    weights: np.ndarray      # 1/distance
    basis_rows: np.ndarray   # (15, 9) zero-mean basis means over each region


class SolverGeometry:
    """Everything precomputed from (mesh, boundary spec): stencils, the
    per-cell least-squares solve operators, ghost transforms, the flux face
    table with periodic partners merged, and limiter adjacency.

    Immutable after construction; safe to share across threads.
    """

    def __init__(self, mesh, bspec):
        bspec.validate(mesh)
        self.mesh = mesh
        self.bspec = bspec
        self._pair_periodic()
        self._build_stencils()
        self._assemble_wls()
        self._build_face_table()
        self._build_limiter_adjacency()

    # -- periodic pairing --------------------------------------------------

    def _pair_periodic(self):
        mesh = self.mesh
        self.periodic_partner_cell = {}   # (cell, edge) -> (partner cell, shift)
        self.periodic_face_partner = {}   # face id -> (partner face id, shift)
        done = set()
        for tag, cond in self.bspec.items():
            if cond.kind != "periodic" or tag in done:
                continue
            partner = cond.partner
            done.add(tag)
            done.add(partner)
            pa = mesh.patch_names.index(tag)
            pb = mesh.patch_names.index(partner)
            fa = np.nonzero(mesh.faces.tag == pa)[0]
            fb = np.nonzero(mesh.faces.tag == pb)[0]
            if len(fa) != len(fb):
                raise ConfigError(f"periodic patches '{tag}'/'{partner}' have"
                                  f" {len(fa)} vs {len(fb)} faces")
            mida = mesh.faces.gauss[fa].mean(axis=1)
            midb = mesh.faces.gauss[fb].mean(axis=1)
            shift = midb.mean(axis=0) - mida.mean(axis=0)
            scale = max(1.0, np.abs(mesh.nodes).max())
            for i, f in enumerate(fa):
                d = np.linalg.norm(midb - (mida[i] + shift), axis=1)
                j = int(np.argmin(d))
                if d[j] > 1e-10 * scale:
                    raise ConfigError(
                        f"periodic patches '{tag}'/'{partner}' are not congruent"
                        f" (face mismatch {d[j]:.2e})")
                g = int(fb[j])
                self.periodic_face_partner[int(f)] = (g, shift)
                self.periodic_face_partner[g] = (int(f), -shift)
                ca = int(mesh.faces.left[f]) // 4
                cb = int(mesh.faces.left[g]) // 4
                ea = self._local_edge_of_face(int(f), ca)
                eb = self._local_edge_of_face(g, cb)
                self.periodic_partner_cell[(ca, ea)] = (cb, shift)
                self.periodic_partner_cell[(cb, eb)] = (ca, -shift)

    def _local_edge_of_face(self, face_id, cell):
        """Local main-cell edge (0..2) a boundary subcell face lies on."""
        mesh = self.mesh
        mid = mesh.faces.gauss[face_id].mean(axis=0)
        verts = mesh.nodes[mesh.cells[cell]]
        best, best_d = -1, np.inf
        for k in range(3):
            a, b = verts[k], verts[(k + 1) % 3]
            t = b - a
            s = np.clip(np.dot(mid - a, t) / np.dot(t, t), 0.0, 1.0)
            d = np.linalg.norm(mid - (a + s * t))
            if d < best_d:
                best, best_d = k, d
        return best

    # -- stencils ----------------------------------------------------------

    def _ghost_edge_geometry(self, cell, edge):
        """Reflection map across a boundary edge of a cell."""
        mesh = self.mesh
        a = mesh.nodes[mesh.cells[cell, edge]]
        b = mesh.nodes[mesh.cells[cell, (edge + 1) % 3]]
        t = b - a
        n = np.array([t[1], -t[0]]) / np.hypot(t[0], t[1])
        return bc.reflection_map(a, n), n

    def _build_stencils(self):
        mesh = self.mesh
        n = mesh.n_cells
        sten_src = np.empty((n, 15), dtype=np.int64)
        sten_region = np.empty((n, 15, 3, 2))   # geometry of each region
        specials = []                            # (cell, slot, kind, T or state)

        sub_tri_xy = mesh.points[mesh.sub_tris]
        for c in range(n):
            for j in range(3):
                sten_src[c, j] = 4 * c + j
                sten_region[c, j] = sub_tri_xy[4 * c + j]
            for k in range(3):
                base = 3 + 4 * k
                nb = mesh.neighbors[c, k]
                if nb >= 0:
                    for j in range(4):
                        sten_src[c, base + j] = 4 * nb + j
                        sten_region[c, base + j] = sub_tri_xy[4 * nb + j]
                    continue
                tag = mesh.patch_names[mesh.neighbor_tag[c, k]]
                cond = self.bspec[tag]
                if cond.kind == "periodic":
                    pc, shift = self.periodic_partner_cell[(c, k)]
                    for j in range(4):
                        sten_src[c, base + j] = 4 * pc + j
                        sten_region[c, base + j] = sub_tri_xy[4 * pc + j] - shift
                    continue
                (a_lin, d_aff), normal = self._ghost_edge_geometry(c, k)
                t_state = bc.state_transform(cond, normal)
                for j in range(4):
                    slot = base + j
                    sten_src[c, slot] = 4 * c + j
                    sten_region[c, slot] = sub_tri_xy[4 * c + j] @ a_lin.T + d_aff
                    if cond.kind == "dirichlet":
                        specials.append((c, slot, SRC_DIRICHLET, cond.state))
                    else:
                        specials.append((c, slot, SRC_TRANSFORM, t_state))

        # Basis rows and weights, vectorized over every (cell, slot) region.
        v0 = sten_region[:, :, 0].reshape(-1, 2)
        v1 = sten_region[:, :, 1].reshape(-1, 2)
        v2 = sten_region[:, :, 2].reshape(-1, 2)
        origins = np.repeat(mesh.cell_centroid, 15, axis=0)
        raw = meshmod.tri_monomial_means(v0, v1, v2, origins).reshape(n, 15, 10)
        self.sten_rows = raw[:, :, 1:] - mesh.cell_moments[:, None, 1:]
        centroids = (sten_region.mean(axis=2) - mesh.cell_centroid[:, None, :])
        self.sten_dist = np.hypot(centroids[..., 0], centroids[..., 1])
        if np.any(self.sten_dist <= 0.0):
            c = int(np.nonzero(self.sten_dist <= 0.0)[0][0])
            raise ReconstructionSetupError(c, "stencil region centroid collides"
                                              " with the cell centroid")
        self.sten_weight = 1.0 / self.sten_dist
        self.sten_src = sten_src

        self.sp_cell = np.array([s[0] for s in specials], dtype=np.int64)
        self.sp_slot = np.array([s[1] for s in specials], dtype=np.int64)
        self.sp_kind = np.array([s[2] for s in specials], dtype=np.int64)
        self.sp_mat = np.zeros((len(specials), 4, 4))
        self.sp_state = np.zeros((len(specials), 4))
        for i, (_, _, kind, payload) in enumerate(specials):
            if kind == SRC_TRANSFORM:
                self.sp_mat[i] = payload
            else:
                self.sp_state[i] = payload

        # Mean of the 9 basis functions over the cell's own subcells, used by
        # the conservation correction and the detector.
        own = sub_tri_xy.reshape(n, 4, 3, 2)
        raw_own = meshmod.tri_monomial_means(
            own[:, :, 0].reshape(-1, 2), own[:, :, 1].reshape(-1, 2),
            own[:, :, 2].reshape(-1, 2),
            np.repeat(mesh.cell_centroid, 4, axis=0)).reshape(n, 4, 10)
        self.own_sub_rows = raw_own[:, :, 1:] - mesh.cell_moments[:, None, 1:]
        self.sub_weight = (mesh.sub_area.reshape(n, 4)
                           / mesh.cell_area[:, None])

        # Basis function values at subcell centroids (corrected evaluation).
        d = (mesh.sub_centroid.reshape(n, 4, 2)
             - mesh.cell_centroid[:, None, :])
        dx, dy = d[..., 0], d[..., 1]
        mono = np.stack([dx, dy, dx * dx, dx * dy, dy * dy,
                         dx ** 3, dx * dx * dy, dx * dy * dy, dy ** 3],
                        axis=-1)
        self.sub_eval = mono - mesh.cell_moments[:, None, 1:]

    def _assemble_wls(self):
        """Precompute the 9 x 15 solve operator per cell (weighted QR)."""
        mesh = self.mesh
        n = mesh.n_cells
        sw = np.sqrt(self.sten_weight)
        col = mesh.h_cell[:, None] ** _BASIS_DEGREE[None, :]
        design = self.sten_rows * sw[:, :, None] / col[:, None, :]
        q, r = np.linalg.qr(design)
        rd = np.abs(np.diagonal(r, axis1=1, axis2=2))
        bad = rd.min(axis=1) <= 1e-13 * rd.max(axis=1)
        if np.any(bad):
            raise ReconstructionSetupError(int(np.nonzero(bad)[0][0]),
                                           "rank-deficient stencil geometry")
        self.wls_condition = rd.max(axis=1) / rd.min(axis=1)
        # S = col_scale^-1 R^-1 Q^T sqrt(W), applied to raw stencil averages.
        rinv_qt = np.linalg.solve(r, np.transpose(q, (0, 2, 1)))
        self.wls_op = (rinv_qt / col[:, :, None]) * sw[:, None, :]

    # -- flux face table ----------------------------------------------------

    def _build_face_table(self):
        mesh = self.mesh
        f = mesh.faces
        skip = np.zeros(len(f), dtype=bool)
        rows = []
        for i in range(len(f)):
            if skip[i]:
                continue
            left = int(f.left[i])
            gauss_l = f.gauss[i]
            if f.right[i] >= 0:
                rows.append((left, int(f.right[i]), bc.BC_INTERIOR, i,
                             gauss_l, gauss_l,
                             mesh.sub_centroid[int(f.right[i])], None))
                continue
            tag = mesh.patch_names[f.tag[i]]
            cond = self.bspec[tag]
            if cond.kind == "periodic":
                g, shift = self.periodic_face_partner[i]
                skip[g] = True
                right = int(f.left[g])
                rows.append((left, right, bc.BC_INTERIOR, i,
                             gauss_l, gauss_l + shift,
                             mesh.sub_centroid[right] - shift, None))
                continue
            cl = mesh.sub_centroid[left]
            normal = f.normal[i]
            mirrored = cl - 2.0 * np.dot(cl - f.gauss[i].mean(axis=0), normal) * normal
            state = cond.state if cond.kind == "dirichlet" else None
            rows.append((left, -1, cond.code, i, gauss_l, gauss_l, mirrored, state))

        m = len(rows)
        self.fa_left = np.array([r[0] for r in rows], dtype=np.int64)
        self.fa_right = np.array([r[1] for r in rows], dtype=np.int64)
        self.fa_bc = np.array([r[2] for r in rows], dtype=np.int64)
        mesh_ids = np.array([r[3] for r in rows], dtype=np.int64)
        self.fa_mesh_face = mesh_ids
        self.fa_normal = mesh.faces.normal[mesh_ids].copy()
        self.fa_length = mesh.faces.length[mesh_ids].copy()
        self.fa_qp_l = np.array([r[4] for r in rows])
        self.fa_qp_r = np.array([r[5] for r in rows])
        self.fa_cr = np.array([r[6] for r in rows])
        self.fa_cl = mesh.sub_centroid[self.fa_left].copy()
        self.fa_state = np.zeros((m, 4))
        for i, r in enumerate(rows):
            if r[7] is not None:
                self.fa_state[i] = r[7]
        self.n_flux_faces = m

    # -- limiter adjacency ---------------------------------------------------

    def _build_limiter_adjacency(self):
        mesh = self.mesh
        n = mesh.n_cells
        self.lim_nb = np.full((n, 3), -1, dtype=np.int64)
        self.lim_nb_centroid = np.zeros((n, 3, 2))
        self.lim_ghost = np.full((n, 3), -1, dtype=np.int64)  # index into ghost tables
        ghost_geo, ghost_state, ghost_centroid, ghost_moments = [], [], [], []
        ghost_dirichlet, ghost_kind = [], []
        for c in range(n):
            for k in range(3):
                nb = mesh.neighbors[c, k]
                if nb >= 0:
                    self.lim_nb[c, k] = nb
                    self.lim_nb_centroid[c, k] = mesh.cell_centroid[nb]
                    continue
                tag = mesh.patch_names[mesh.neighbor_tag[c, k]]
                cond = self.bspec[tag]
                if cond.kind == "periodic":
                    pc, shift = self.periodic_partner_cell[(c, k)]
                    self.lim_nb[c, k] = pc
                    self.lim_nb_centroid[c, k] = mesh.cell_centroid[pc] - shift
                    continue
                (a_lin, d_aff), normal = self._ghost_edge_geometry(c, k)
                verts = mesh.nodes[mesh.cells[c]] @ a_lin.T + d_aff
                gc = verts.mean(axis=0)
                gm = meshmod.tri_monomial_means(verts[0], verts[1], verts[2], gc)
                self.lim_ghost[c, k] = len(ghost_geo)
                self.lim_nb_centroid[c, k] = gc
                ghost_geo.append(a_lin)
                ghost_centroid.append(gc)
                ghost_moments.append(gm)
                if cond.kind == "dirichlet":
                    ghost_kind.append(1)
                    ghost_state.append(np.eye(4))
                    ghost_dirichlet.append(cond.state)
                else:
                    ghost_kind.append(0)
                    ghost_state.append(bc.state_transform(cond, normal))
                    ghost_dirichlet.append(np.zeros(4))
        self.ghost_a = np.array(ghost_geo).reshape(-1, 2, 2)
        self.ghost_t = np.array(ghost_state).reshape(-1, 4, 4)
        self.ghost_centroid = np.array(ghost_centroid).reshape(-1, 2)
        self.ghost_moments = np.array(ghost_moments).reshape(-1, 10)
        self.ghost_dirichlet = np.array(ghost_dirichlet).reshape(-1, 4)
        self.ghost_kind = np.array(ghost_kind, dtype=np.int64).reshape(-1)
        # Geometric coefficient transform per ghost: columns are the packed
        # coefficients of each unit basis polynomial composed with the mirror.
        n_ghost = len(self.ghost_a)
        self.ghost_gmat = np.zeros((n_ghost, 10, 10))
        eye4 = np.eye(4)
        for g in range(n_ghost):
            for k in range(10):
                unit = np.zeros((10, 1))
                unit[k, 0] = 1.0
                self.ghost_gmat[g, :, k] = bc.transform_poly_coeffs(
                    unit, self.ghost_a[g], np.eye(1))[:, 0]

    # -- state operations ----------------------------------------------------

    def cell_means(self, qbar_sub):
        n = self.mesh.n_cells
        return np.einsum("cjv,cj->cv", qbar_sub.reshape(n, 4, -1),
                         self.sub_weight)

    def reconstruct(self, qbar_sub):
        """Subcell averages -> packed coefficients (N, 10, nvar) and shifts.

        The returned shifts make the per-subcell polynomial match each
        subcell average exactly.
        """
        if not np.all(np.isfinite(qbar_sub)):
            raise StateError("non-finite subcell averages")
        n = self.mesh.n_cells
        nvar = qbar_sub.shape[-1]
        qmean = self.cell_means(qbar_sub)
        rhs = qbar_sub[self.sten_src]            # (N, 15, nvar)
        if len(self.sp_cell):
            src = self.sten_src[self.sp_cell, self.sp_slot]
            vals = np.einsum("sij,sj->si", self.sp_mat[:, :nvar, :nvar],
                             qbar_sub[src])
            dir_mask = self.sp_kind == SRC_DIRICHLET
            vals[dir_mask] = self.sp_state[dir_mask][:, :nvar]
            rhs[self.sp_cell, self.sp_slot] = vals
        rhs -= qmean[:, None, :]
        coeffs = np.empty((n, 10, nvar))
        coeffs[:, 0, :] = qmean
        coeffs[:, 1:, :] = self.wls_op @ rhs
        shifts = self.correct_subcells(coeffs, qbar_sub)
        return coeffs, shifts

    def correct_subcells(self, coeffs, qbar_sub):
        """Constant per-subcell shifts restoring the subcell averages."""
        n = self.mesh.n_cells
        pbar = coeffs[:, None, 0, :] + np.einsum(
            "cjk,ckv->cjv", self.own_sub_rows, coeffs[:, 1:, :])
        return (qbar_sub.reshape(n, 4, -1) - pbar).reshape(qbar_sub.shape)


def evaluate_poly(coeffs, moments, centroid, point, shift=None, derivative=0):
    """Evaluate one cell's polynomial (or its first derivatives) at a point.

    derivative 0 returns the corrected value when a subcell shift is given;
    derivatives 1 returns (d/dx, d/dy), which shifts do not affect.
    """
    dx = point[0] - centroid[0]
    dy = point[1] - centroid[1]
    c = coeffs
    if derivative == 0:
        mono = np.array([1.0, dx, dy, dx * dx, dx * dy, dy * dy,
                         dx ** 3, dx * dx * dy, dx * dy * dy, dy ** 3])
        val = c[0] + (c[1:].T @ (mono[1:] - moments[1:]))
        if shift is not None:
            val = val + shift
        return val
    if derivative == 1:
        ddx = (c[1] + 2 * c[3] * dx + c[4] * dy + 3 * c[6] * dx * dx
               + 2 * c[7] * dx * dy + c[8] * dy * dy)
        ddy = (c[2] + c[4] * dx + 2 * c[5] * dy + c[7] * dx * dx
               + 2 * c[8] * dx * dy + 3 * c[9] * dy * dy)
        return np.stack([ddx, ddy])
    raise ValueError(f"unsupported derivative order {derivative}")


def build_stencil(mesh, cell_id, bspec):
    """Stencil record of one cell (mainly for inspection and tests)."""
    geom = SolverGeometry(mesh, bspec)
    kinds = np.zeros(15, dtype=np.int64)
    for i in range(len(geom.sp_cell)):
        if geom.sp_cell[i] == cell_id:
            kinds[geom.sp_slot[i]] = geom.sp_kind[i]
    return Stencil(subcells=geom.sten_src[cell_id].copy(), kinds=kinds,
                   distances=geom.sten_dist[cell_id].copy(),
                   weights=geom.sten_weight[cell_id].copy(),
                   basis_rows=geom.sten_rows[cell_id].copy())
