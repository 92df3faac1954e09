"""Triangular meshes with four-way subcell subdivision.

A main cell is any triangle of the input mesh.  Each main cell is split at
its edge midpoints into four similar subcells (three corner subcells plus
the central medial triangle); the subcells are the control volumes of the
solver.  Faces are the subcell edges, each carrying a two-point Gauss rule.
All geometric moments used by the reconstruction are integrated in closed
form via the affine map to the reference triangle.
"""

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from scfv.errors import MeshError

# Monomial exponents (a, b) for x^a y^b up to total degree 3 in the order
# used throughout: mean, x, y, xx, xy, yy, xxx, xxy, xyy, yyy.
MONOMIAL_EXPONENTS = (
    (0, 0),
    (1, 0),
    (0, 1),
    (2, 0),
    (1, 1),
    (0, 2),
    (3, 0),
    (2, 1),
    (1, 2),
    (0, 3),
)

SQRT3 = np.sqrt(3.0)


def _reference_integral(p, q):
    """Integral of xi^p eta^q over the unit reference triangle."""
    return factorial(p) * factorial(q) / factorial(p + q + 2)


def _trinomial_terms(power):
    """Expansion terms of (c + s*xi + t*eta)**power as (coef, cpow, spow, tpow)."""
    terms = []
    for i in range(power + 1):
        for j in range(power + 1 - i):
            k = power - i - j
            coef = factorial(power) // (factorial(i) * factorial(j) * factorial(k))
            terms.append((coef, k, i, j))
    return terms


def _build_moment_table():
    """Closed-form tables: monomial mean = sum of products of affine-map data.

    Each entry is (coef, c1p, j11p, j12p, c2p, j21p, j22p) so that the mean of
    (x-ox)^a (y-oy)^b over a triangle equals
    sum coef * c1^c1p * J11^j11p * J12^j12p * c2^c2p * J21^j21p * J22^j22p
    with c = v0 - origin and J = [v1-v0 | v2-v0].
    """
    table = []
    for a, b in MONOMIAL_EXPONENTS:
        terms = []
        for cx, c1p, j11p, j12p in _trinomial_terms(a):
            for cy, c2p, j21p, j22p in _trinomial_terms(b):
                ref = _reference_integral(j11p + j21p, j12p + j22p)
                terms.append((2.0 * cx * cy * ref, c1p, j11p, j12p, c2p, j21p, j22p))
        table.append(terms)
    return table


_MOMENT_TABLE = _build_moment_table()


def tri_monomial_means(v0, v1, v2, origin):
    """Exact means of (x-ox)^a (y-oy)^b over triangles, all 10 monomials.

    Vectorized over leading dimensions; returns shape (..., 10).  Exact for
    any triangle orientation (mean is orientation-independent).
    """
    v0 = np.asarray(v0, dtype=float)
    c1 = v0[..., 0] - np.asarray(origin, dtype=float)[..., 0]
    c2 = v0[..., 1] - np.asarray(origin, dtype=float)[..., 1]
    j11 = np.asarray(v1, dtype=float)[..., 0] - v0[..., 0]
    j21 = np.asarray(v1, dtype=float)[..., 1] - v0[..., 1]
    j12 = np.asarray(v2, dtype=float)[..., 0] - v0[..., 0]
    j22 = np.asarray(v2, dtype=float)[..., 1] - v0[..., 1]

    # Powers 0..3 of each ingredient, computed once.
    def powers(x):
        return (np.ones_like(x), x, x * x, x * x * x)

    p_c1, p_j11, p_j12 = powers(c1), powers(j11), powers(j12)
    p_c2, p_j21, p_j22 = powers(c2), powers(j21), powers(j22)

    out = np.empty(c1.shape + (10,), dtype=float)
    for m, terms in enumerate(_MOMENT_TABLE):
        acc = np.zeros_like(c1)
        for coef, c1p, a11, a12, c2p, a21, a22 in terms:
            acc += coef * p_c1[c1p] * p_j11[a11] * p_j12[a12] \
                * p_c2[c2p] * p_j21[a21] * p_j22[a22]
        out[..., m] = acc
    return out


def tri_area(v0, v1, v2):
    """Signed area (positive for counter-clockwise vertices)."""
    v0 = np.asarray(v0, dtype=float)
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    return 0.5 * ((v1[..., 0] - v0[..., 0]) * (v2[..., 1] - v0[..., 1])
                  - (v2[..., 0] - v0[..., 0]) * (v1[..., 1] - v0[..., 1]))


def tri_quadrature():
    """Reference-triangle rule exact for total degree <= 7.

    Returns (points, weights) with points on the unit triangle and weights
    summing to 1 so that the rule computes means directly.  Built from a
    4x4 Gauss-Legendre product through the collapsed-square map.
    """
    xg, wg = np.polynomial.legendre.leggauss(4)
    s = 0.5 * (xg + 1.0)
    w = 0.5 * wg
    pts = []
    wts = []
    for i in range(4):
        for j in range(4):
            xi = s[i]
            eta = s[j] * (1.0 - s[i])
            pts.append((xi, eta))
            wts.append(w[i] * w[j] * (1.0 - s[i]))
    pts = np.array(pts)
    wts = np.array(wts)
    return pts, wts / wts.sum()


_QUAD_PTS, _QUAD_WTS = tri_quadrature()


def tri_average(func, v0, v1, v2):
    """Mean of func(x, y) over one triangle by the degree-7-exact rule."""
    v0 = np.asarray(v0, dtype=float)
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    x = v0[0] + _QUAD_PTS[:, 0] * (v1[0] - v0[0]) + _QUAD_PTS[:, 1] * (v2[0] - v0[0])
    y = v0[1] + _QUAD_PTS[:, 0] * (v1[1] - v0[1]) + _QUAD_PTS[:, 1] * (v2[1] - v0[1])
    return np.sum(_QUAD_WTS * func(x, y), axis=-1)


def subcell_average_points(mesh):
    """Quadrature nodes/weights for every subcell, for field initialization.

    Returns (x, y, w) of shape (4N, 16); averaging data over axis 1 with
    weights w gives the subcell mean, exactly for polynomials of degree <= 7.
    """
    tri = mesh.points[mesh.sub_tris]
    v0, v1, v2 = tri[:, 0], tri[:, 1], tri[:, 2]
    x = v0[:, None, 0] + np.outer(np.ones(len(v0)), _QUAD_PTS[:, 0]) * (v1[:, None, 0] - v0[:, None, 0]) \
        + np.outer(np.ones(len(v0)), _QUAD_PTS[:, 1]) * (v2[:, None, 0] - v0[:, None, 0])
    y = v0[:, None, 1] + np.outer(np.ones(len(v0)), _QUAD_PTS[:, 0]) * (v1[:, None, 1] - v0[:, None, 1]) \
        + np.outer(np.ones(len(v0)), _QUAD_PTS[:, 1]) * (v2[:, None, 1] - v0[:, None, 1])
    w = np.broadcast_to(_QUAD_WTS, x.shape)
    return x, y, w


def subdivide_cell(vertices):
    """Four-way medial split of one triangle.

    Returns the vertex coordinates of the four subcells: corner subcells at
    each parent vertex first, then the central medial triangle, all
    counter-clockwise when the parent is.
    """
    v = np.asarray(vertices, dtype=float)
    if abs(tri_area(v[0], v[1], v[2])) < 1e-300:
        raise MeshError("degenerate (collinear) triangle")
    m01 = 0.5 * (v[0] + v[1])
    m12 = 0.5 * (v[1] + v[2])
    m20 = 0.5 * (v[2] + v[0])
    return np.array([
        [v[0], m01, m20],
        [v[1], m12, m01],
        [v[2], m20, m12],
        [m01, m12, m20],
    ])


@dataclass
class FaceSet:
    """Flat arrays describing all subcell faces.

    Normals point from the left subcell into the right one; boundary faces
    have right == -1 and a patch tag index.  The two Gauss points sit at
    the midpoint +- (length/2)/sqrt(3) along the face.
    """

    nodes: np.ndarray      # (F, 2) point ids, traversal order of the left subcell
    left: np.ndarray       # (F,) subcell id
    right: np.ndarray      # (F,) subcell id or -1
    tag: np.ndarray        # (F,) patch index or -1
    normal: np.ndarray     # (F, 2) unit, left -> right
    length: np.ndarray     # (F,)
    gauss: np.ndarray      # (F, 2, 2) two points, xy

    def __len__(self):
        return len(self.left)


@dataclass
class TriMesh:
    """Immutable (after construction) triangular mesh with subcell data."""

    nodes: np.ndarray              # (n_nodes, 2) main mesh nodes
    cells: np.ndarray              # (N, 3) node ids, counter-clockwise
    patch_names: list              # patch tag strings
    patch_edges: list              # per patch: (E, 2) main-edge node pairs
    points: np.ndarray = field(init=False)       # nodes + edge midpoints
    sub_tris: np.ndarray = field(init=False)     # (4N, 3) into points
    cell_area: np.ndarray = field(init=False)
    cell_centroid: np.ndarray = field(init=False)
    cell_moments: np.ndarray = field(init=False)  # (N, 10) zero-mean monomial means
    sub_area: np.ndarray = field(init=False)
    sub_centroid: np.ndarray = field(init=False)
    neighbors: np.ndarray = field(init=False)     # (N, 3) cell id per local edge, -1 boundary
    neighbor_tag: np.ndarray = field(init=False)  # (N, 3) patch index or -1
    faces: FaceSet = field(init=False)
    h_cell: np.ndarray = field(init=False)        # per-cell size metric sqrt(2 |cell|)
    h_report: float = field(init=False)           # mesh size for reporting

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.cells = np.asarray(self.cells, dtype=np.int64)
        self._build()

    # -- construction -----------------------------------------------------

    def _build(self):
        n_cells = len(self.cells)
        if n_cells == 0:
            raise MeshError("mesh has no cells")
        v = self.nodes[self.cells]
        areas = tri_area(v[:, 0], v[:, 1], v[:, 2])
        if np.any(areas <= 0.0):
            bad = int(np.argmin(areas))
            raise MeshError(f"cell {bad} has non-positive area {areas[bad]:.3e}"
                            " (nodes must be counter-clockwise)")
        self.cell_area = areas
        self.cell_centroid = v.mean(axis=1)
        self.cell_moments = tri_monomial_means(
            v[:, 0], v[:, 1], v[:, 2], self.cell_centroid)
        self.h_cell = np.sqrt(2.0 * areas)
        self.h_report = float(np.sqrt(2.0 * areas.mean()))

        # Edge midpoints become additional points.
        edge_mid = {}
        mids = []
        next_pid = len(self.nodes)
        for tri in self.cells:
            for k in range(3):
                a, b = int(tri[k]), int(tri[(k + 1) % 3])
                key = (a, b) if a < b else (b, a)
                if key not in edge_mid:
                    edge_mid[key] = next_pid
                    mids.append(0.5 * (self.nodes[a] + self.nodes[b]))
                    next_pid += 1
        self.points = np.vstack([self.nodes, np.array(mids).reshape(-1, 2)])
        self._edge_mid = edge_mid

        # Subcell connectivity: corners at local vertices 0,1,2 then central.
        sub = np.empty((4 * n_cells, 3), dtype=np.int64)
        for c, tri in enumerate(self.cells):
            a, b, d = int(tri[0]), int(tri[1]), int(tri[2])
            mab = edge_mid[(a, b) if a < b else (b, a)]
            mbd = edge_mid[(b, d) if b < d else (d, b)]
            mda = edge_mid[(d, a) if d < a else (a, d)]
            sub[4 * c + 0] = (a, mab, mda)
            sub[4 * c + 1] = (b, mbd, mab)
            sub[4 * c + 2] = (d, mda, mbd)
            sub[4 * c + 3] = (mab, mbd, mda)
        self.sub_tris = sub
        sv = self.points[sub]
        self.sub_area = tri_area(sv[:, 0], sv[:, 1], sv[:, 2])
        self.sub_centroid = sv.mean(axis=1)

        self._build_topology()
        self._build_faces()

    def _build_topology(self):
        edge_cells = {}
        for c, tri in enumerate(self.cells):
            for k in range(3):
                a, b = int(tri[k]), int(tri[(k + 1) % 3])
                key = (a, b) if a < b else (b, a)
                edge_cells.setdefault(key, []).append((c, k))
        for key, owners in edge_cells.items():
            if len(owners) > 2:
                raise MeshError(f"edge {key} shared by {len(owners)} cells")
        self._edge_cells = edge_cells

        patch_of_edge = {}
        for p, edges in enumerate(self.patch_edges):
            for a, b in np.asarray(edges, dtype=np.int64):
                key = (int(a), int(b)) if a < b else (int(b), int(a))
                if key in patch_of_edge:
                    raise MeshError(f"boundary edge {key} tagged twice")
                if key not in edge_cells or len(edge_cells[key]) != 1:
                    raise MeshError(f"patch '{self.patch_names[p]}' edge {key}"
                                    " is not a boundary edge")
                patch_of_edge[key] = p
        self._patch_of_edge = patch_of_edge

        n_cells = len(self.cells)
        self.neighbors = np.full((n_cells, 3), -1, dtype=np.int64)
        self.neighbor_tag = np.full((n_cells, 3), -1, dtype=np.int64)
        for key, owners in edge_cells.items():
            if len(owners) == 2:
                (c0, k0), (c1, k1) = owners
                self.neighbors[c0, k0] = c1
                self.neighbors[c1, k1] = c0
            else:
                (c0, k0), = owners
                if key not in patch_of_edge:
                    raise MeshError(f"boundary edge {key} has no patch tag")
                self.neighbor_tag[c0, k0] = patch_of_edge[key]

    def _face_from_directed_edge(self, p0, p1, left, right, tag):
        return (p0, p1, left, right, tag)

    def _build_faces(self):
        records = []
        mid = self._edge_mid
        # Faces between corner subcells and the central one, per cell.
        for c, tri in enumerate(self.cells):
            a, b, d = int(tri[0]), int(tri[1]), int(tri[2])
            mab = mid[(a, b) if a < b else (b, a)]
            mbd = mid[(b, d) if b < d else (d, b)]
            mda = mid[(d, a) if d < a else (a, d)]
            central = 4 * c + 3
            records.append((mab, mda, 4 * c + 0, central, -1))
            records.append((mbd, mab, 4 * c + 1, central, -1))
            records.append((mda, mbd, 4 * c + 2, central, -1))
        # Faces along main-cell edges: two halves each.
        for key, owners in self._edge_cells.items():
            a, b = key
            m = mid[key]
            (c0, k0) = owners[0]
            # Local traversal of cell c0 along this edge.
            ea = int(self.cells[c0, k0])
            eb = int(self.cells[c0, (k0 + 1) % 3])
            sub_at = {int(self.cells[c0, j]): 4 * c0 + j for j in range(3)}
            left_a = sub_at[ea]
            left_b = sub_at[eb]
            if len(owners) == 2:
                c1 = owners[1][0]
                nsub_at = {int(self.cells[c1, j]): 4 * c1 + j for j in range(3)}
                records.append((ea, m, left_a, nsub_at[ea], -1))
                records.append((m, eb, left_b, nsub_at[eb], -1))
            else:
                tag = self._patch_of_edge[key]
                records.append((ea, m, left_a, -1, tag))
                records.append((m, eb, left_b, -1, tag))

        nodes = np.array([(r[0], r[1]) for r in records], dtype=np.int64)
        left = np.array([r[2] for r in records], dtype=np.int64)
        right = np.array([r[3] for r in records], dtype=np.int64)
        tag = np.array([r[4] for r in records], dtype=np.int64)
        p0 = self.points[nodes[:, 0]]
        p1 = self.points[nodes[:, 1]]
        dxy = p1 - p0
        length = np.hypot(dxy[:, 0], dxy[:, 1])
        if np.any(length <= 0.0):
            raise MeshError("zero-length subcell face")
        normal = np.column_stack([dxy[:, 1], -dxy[:, 0]]) / length[:, None]
        midp = 0.5 * (p0 + p1)
        offset = dxy / (2.0 * SQRT3)
        gauss = np.stack([midp - offset, midp + offset], axis=1)
        self.faces = FaceSet(nodes=nodes, left=left, right=right, tag=tag,
                             normal=normal, length=length, gauss=gauss)

    # -- queries -----------------------------------------------------------

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def n_subcells(self):
        return 4 * len(self.cells)

    def boundary_faces(self, tag_name):
        p = self.patch_names.index(tag_name)
        return np.nonzero(self.faces.tag == p)[0]

    def cell_vertices(self, cell_id):
        return self.nodes[self.cells[cell_id]]

    def subcell_vertices(self, sub_id):
        return self.points[self.sub_tris[sub_id]]

    def refine(self):
        """Split every main cell into its four subcells, forming a new mesh."""
        new_patches = []
        for edges in self.patch_edges:
            out = []
            for a, b in np.asarray(edges, dtype=np.int64):
                key = (int(a), int(b)) if a < b else (int(b), int(a))
                m = self._edge_mid[key]
                out.append((int(a), m))
                out.append((m, int(b)))
            new_patches.append(np.array(out, dtype=np.int64))
        return TriMesh(nodes=self.points.copy(), cells=self.sub_tris.copy(),
                       patch_names=list(self.patch_names), patch_edges=new_patches)


@dataclass
class CellBasis:
    """Per-cell reconstruction geometry.

    moments are the means of (x-xc)^a (y-yc)^b over the main cell in the
    standard monomial order; subtracting them from the raw monomials gives
    the zero-mean basis whose constant coefficient is the cell mean.
    """

    centroid: np.ndarray
    moments: np.ndarray            # (10,)
    own_subcell_means: np.ndarray  # (4, 9) zero-mean basis means over own subcells


def compute_cell_basis(mesh, cell_id):
    """Exact basis moments of one cell and basis means over its subcells."""
    centroid = mesh.cell_centroid[cell_id]
    moments = mesh.cell_moments[cell_id]
    sub = mesh.points[mesh.sub_tris[4 * cell_id:4 * cell_id + 4]]
    raw = tri_monomial_means(sub[:, 0], sub[:, 1], sub[:, 2],
                             np.broadcast_to(centroid, (4, 2)))
    own = raw[:, 1:] - moments[1:]
    return CellBasis(centroid=centroid, moments=moments, own_subcell_means=own)


def generate_rect_triangulation(nx, ny, domain=(0.0, 1.0, 0.0, 1.0)):
    """Uniform triangulation of a rectangle: nx-by-ny boxes, each split
    along the (lower-left, upper-right) diagonal.

    Patches are named left, right, bottom, top.
    """
    nx, ny = int(nx), int(ny)
    x0, x1, y0, y1 = map(float, domain)
    if nx < 1 or ny < 1:
        raise MeshError(f"cell counts must be positive, got nx={nx} ny={ny}")
    if not (x1 > x0 and y1 > y0):
        raise MeshError(f"degenerate rectangle {domain}")
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    nodes = np.column_stack([xx.ravel(), yy.ravel()])

    def nid(i, j):
        return i * (ny + 1) + j

    cells = []
    for i in range(nx):
        for j in range(ny):
            n00, n10 = nid(i, j), nid(i + 1, j)
            n01, n11 = nid(i, j + 1), nid(i + 1, j + 1)
            cells.append((n00, n10, n11))
            cells.append((n00, n11, n01))
    left = [(nid(0, j + 1), nid(0, j)) for j in range(ny)]
    right = [(nid(nx, j), nid(nx, j + 1)) for j in range(ny)]
    bottom = [(nid(i, 0), nid(i + 1, 0)) for i in range(nx)]
    top = [(nid(i + 1, ny), nid(i, ny)) for i in range(nx)]
    mesh = TriMesh(nodes=nodes, cells=np.array(cells, dtype=np.int64),
                   patch_names=["left", "right", "bottom", "top"],
                   patch_edges=[np.array(p, dtype=np.int64) for p in
                                (left, right, bottom, top)])
    mesh.h_report = (x1 - x0) / nx
    return mesh


def generate_wedge_triangulation(nx, ny, x0, x1, height, wedge_start=0.0,
                                 wedge_angle_deg=30.0):
    """Transfinite triangulation of a channel with an inclined ramp floor.

    The floor is y=0 for x <= wedge_start and rises at the given angle
    beyond it; the lid is flat at the given height.  Column spacing is
    uniform in x; each column spans floor..lid with ny intervals.  Patches:
    left, right, top, bottom (floor left of the ramp), wedge (the ramp).
    """
    nx, ny = int(nx), int(ny)
    if nx < 1 or ny < 1:
        raise MeshError(f"cell counts must be positive, got nx={nx} ny={ny}")
    tan_w = np.tan(np.deg2rad(wedge_angle_deg))
    xs = np.linspace(x0, x1, nx + 1)
    floor = np.maximum(0.0, (xs - wedge_start) * tan_w)
    if np.any(floor >= height):
        raise MeshError("ramp reaches the lid; increase height")
    nodes = np.empty(((nx + 1) * (ny + 1), 2))
    for i, x in enumerate(xs):
        yy = np.linspace(floor[i], height, ny + 1)
        nodes[i * (ny + 1):(i + 1) * (ny + 1), 0] = x
        nodes[i * (ny + 1):(i + 1) * (ny + 1), 1] = yy

    def nid(i, j):
        return i * (ny + 1) + j

    cells = []
    for i in range(nx):
        for j in range(ny):
            n00, n10 = nid(i, j), nid(i + 1, j)
            n01, n11 = nid(i, j + 1), nid(i + 1, j + 1)
            cells.append((n00, n10, n11))
            cells.append((n00, n11, n01))
    eps = 1e-12
    bottom, wedge = [], []
    for i in range(nx):
        xm = 0.5 * (xs[i] + xs[i + 1])
        (bottom if xm <= wedge_start + eps else wedge).append((nid(i, 0), nid(i + 1, 0)))
    left = [(nid(0, j + 1), nid(0, j)) for j in range(ny)]
    right = [(nid(nx, j), nid(nx, j + 1)) for j in range(ny)]
    top = [(nid(i + 1, ny), nid(i, ny)) for i in range(nx)]
    names, groups = [], []
    for name, grp in (("left", left), ("right", right), ("top", top),
                      ("bottom", bottom), ("wedge", wedge)):
        if grp:
            names.append(name)
            groups.append(np.array(grp, dtype=np.int64))
    mesh = TriMesh(nodes=nodes, cells=np.array(cells, dtype=np.int64),
                   patch_names=names, patch_edges=groups)
    mesh.h_report = (x1 - x0) / nx
    return mesh


# -- mesh file format ------------------------------------------------------
#
# line 1: "npoints ncells npatches"
# npoints lines "x y", then ncells lines "i j k" (0-based node ids, CCW),
# then per patch a header "tag nfaces" followed by nfaces "i j" lines of
# boundary edge node ids.  Floats printed with 17 significant digits so a
# write/read cycle is bit-identical.


def write_mesh(mesh, path):
    with open(path, "w") as f:
        f.write(f"{len(mesh.nodes)} {len(mesh.cells)} {len(mesh.patch_names)}\n")
        for x, y in mesh.nodes:
            f.write(f"{x:.17g} {y:.17g}\n")
        for a, b, c in mesh.cells:
            f.write(f"{a} {b} {c}\n")
        for name, edges in zip(mesh.patch_names, mesh.patch_edges):
            f.write(f"{name} {len(edges)}\n")
            for a, b in edges:
                f.write(f"{a} {b}\n")


def read_mesh(path):
    with open(path) as f:
        tokens = f.read().split()
    it = iter(tokens)
    try:
        n_pts, n_cells, n_patches = int(next(it)), int(next(it)), int(next(it))
        nodes = np.array([[float(next(it)), float(next(it))]
                          for _ in range(n_pts)])
        cells = np.array([[int(next(it)), int(next(it)), int(next(it))]
                          for _ in range(n_cells)], dtype=np.int64)
        names, groups = [], []
        for _ in range(n_patches):
            names.append(str(next(it)))
            n_edges = int(next(it))
            groups.append(np.array([[int(next(it)), int(next(it))]
                                    for _ in range(n_edges)], dtype=np.int64))
    except StopIteration:
        raise MeshError(f"truncated mesh file {path}")
    return TriMesh(nodes=nodes, cells=cells, patch_names=names,
                   patch_edges=groups)
