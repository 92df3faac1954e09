"""Benchmark case definitions, initialization, and measurements.

Each case carries its domain, boundary map, end time, and gas constants;
initialization projects the pointwise initial state onto subcell averages
with a quadrature rule exact beyond the scheme's design order.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from scfv import mesh as meshmod
from scfv.errors import ConfigError
from scfv.gas import conserved_from_primitive, primitive_from_conserved

VORTEX_STRENGTH = 5.0
DMR_POST_SHOCK = (8.0, 8.25, 0.0, 116.5)
DMR_PRE_SHOCK = (1.4, 0.0, 0.0, 1.0)
DMR_WEDGE_ANGLE = 30.0
DMR_SHOCK_SPEED = 10.0        # normal shock speed of the Ma = 10 wave
VST_MU = 0.005
VST_PRANDTL = 0.73


@dataclass
class CaseSpec:
    name: str
    domain: tuple                 # (x0, x1, y0, y1) bounding box
    end_time: float
    gamma: float
    boundaries: dict              # patch tag -> condition string
    init: Callable                # (x, y) arrays -> primitive arrays (..., 4)
    mu: float = 0.0
    prandtl: float = 1.0
    exact: Optional[Callable] = None   # (x, y, t) -> primitives
    default_h: float = 0.1
    aspect_ny: Optional[int] = None    # ny per nx unit, None = square cells

    def make_mesh(self, h=None, nx=None):
        """Uniform triangulation at main-cell size h (or explicit nx)."""
        x0, x1, y0, y1 = self.domain
        if nx is None:
            h = h if h is not None else self.default_h
            nx = int(round((x1 - x0) / h))
        ny = max(1, int(round(nx * (y1 - y0) / (x1 - x0))))
        return meshmod.generate_rect_triangulation(nx, ny, self.domain)


# -- isentropic vortex -------------------------------------------------------

def vortex_primitive(x, y, t=0.0, gamma=1.4):
    """Mean flow (1, 1, 1, 1) plus an isentropic vortex, advected by (1, 1)
    on the 10-periodic box.  Offsets to the center use the shortest periodic
    image."""
    dx = np.mod(np.asarray(x, dtype=float) - (5.0 + t) + 5.0, 10.0) - 5.0
    dy = np.mod(np.asarray(y, dtype=float) - (5.0 + t) + 5.0, 10.0) - 5.0
    r2 = dx * dx + dy * dy
    eps = VORTEX_STRENGTH
    du = eps / (2.0 * np.pi) * np.exp(0.5 * (1.0 - r2)) * (-dy)
    dv = eps / (2.0 * np.pi) * np.exp(0.5 * (1.0 - r2)) * dx
    dtemp = -(gamma - 1.0) * eps * eps / (8.0 * gamma * np.pi * np.pi) \
        * np.exp(1.0 - r2)
    temp = 1.0 + dtemp
    rho = temp ** (1.0 / (gamma - 1.0))
    p = temp ** (gamma / (gamma - 1.0))
    out = np.empty(np.shape(dx) + (4,))
    out[..., 0] = rho
    out[..., 1] = 1.0 + du
    out[..., 2] = 1.0 + dv
    out[..., 3] = p
    return out


# -- 1D-type cases on strips --------------------------------------------------

def titarev_toro_primitive(x, y):
    x = np.asarray(x, dtype=float)
    out = np.empty(np.shape(x) + (4,))
    left = x <= 0.5
    out[..., 0] = np.where(left, 1.515695, 1.0 + 0.1 * np.sin(20.0 * np.pi * x))
    out[..., 1] = np.where(left, 0.523346, 0.0)
    out[..., 2] = 0.0
    out[..., 3] = np.where(left, 1.805, 1.0)
    return out


def blast_primitive(x, y):
    x = np.asarray(x, dtype=float)
    out = np.zeros(np.shape(x) + (4,))
    out[..., 0] = 1.0
    out[..., 3] = np.where(x <= 1.0, 1000.0, np.where(x <= 9.0, 0.01, 100.0))
    return out


def viscous_shock_tube_primitive(x, y, gamma=1.4):
    x = np.asarray(x, dtype=float)
    out = np.zeros(np.shape(x) + (4,))
    left = x <= 0.5
    out[..., 0] = np.where(left, 120.0, 1.2)
    out[..., 3] = np.where(left, 120.0 / gamma, 1.2 / gamma)
    return out


# -- double Mach reflection ----------------------------------------------------

def dmr_primitive(x, y):
    """Right-moving Ma = 10 shock initially at x = 0: post-shock gas on the
    left, quiescent gas on the right.  (The published piecewise listing pairs
    the states the other way around; a right-moving shock requires the
    post-shock state on the left.)"""
    x = np.asarray(x, dtype=float)
    out = np.empty(np.shape(x) + (4,))
    post = x <= 0.0
    for k in range(4):
        out[..., k] = np.where(post, DMR_POST_SHOCK[k], DMR_PRE_SHOCK[k])
    return out


def make_dmr_mesh(h=1.0 / 40.0, x0=-0.2, x1=2.5, height=2.2):
    nx = int(round((x1 - x0) / h))
    ny = int(round(height / h))
    return meshmod.generate_wedge_triangulation(
        nx, ny, x0, x1, height, wedge_start=0.0,
        wedge_angle_deg=DMR_WEDGE_ANGLE)


# -- registry -------------------------------------------------------------------

def _dirichlet(primitive):
    return "dirichlet:" + ",".join(repr(v) for v in primitive)


def case_registry():
    gamma = 1.4
    return {
        "vortex": CaseSpec(
            name="vortex", domain=(0.0, 10.0, 0.0, 10.0), end_time=10.0,
            gamma=gamma, default_h=0.25,
            boundaries={"left": "periodic:right", "right": "periodic:left",
                        "bottom": "periodic:top", "top": "periodic:bottom"},
            init=lambda x, y: vortex_primitive(x, y, 0.0, gamma),
            exact=lambda x, y, t: vortex_primitive(x, y, t, gamma)),
        "titarev_toro": CaseSpec(
            name="titarev_toro", domain=(0.0, 10.0, 0.0, 0.1), end_time=5.0,
            gamma=gamma, default_h=1.0 / 50.0,
            boundaries={"left": _dirichlet((1.515695, 0.523346, 0.0, 1.805)),
                        "right": _dirichlet((1.0, 0.0, 0.0, 1.0)),
                        "bottom": "periodic:top", "top": "periodic:bottom"},
            init=lambda x, y: titarev_toro_primitive(x, y)),
        "blast": CaseSpec(
            name="blast", domain=(0.0, 10.0, 0.0, 1.0), end_time=0.38,
            gamma=gamma, default_h=1.0 / 30.0,
            boundaries={"left": "slip", "right": "slip",
                        "bottom": "periodic:top", "top": "periodic:bottom"},
            init=lambda x, y: blast_primitive(x, y)),
        "dmr": CaseSpec(
            name="dmr", domain=(-0.2, 2.5, 0.0, 2.2), end_time=0.2,
            gamma=gamma, default_h=1.0 / 40.0,
            boundaries={"left": _dirichlet(DMR_POST_SHOCK),
                        "right": _dirichlet(DMR_PRE_SHOCK),
                        "bottom": _dirichlet(DMR_POST_SHOCK),
                        "wedge": "slip", "top": "slip"},
            init=lambda x, y: dmr_primitive(x, y)),
        "viscous_shock_tube": CaseSpec(
            name="viscous_shock_tube", domain=(0.0, 1.0, 0.0, 0.5),
            end_time=1.0, gamma=gamma, mu=VST_MU, prandtl=VST_PRANDTL,
            default_h=1.0 / 60.0,
            boundaries={"left": "noslip_adiabatic", "right": "noslip_adiabatic",
                        "bottom": "noslip_adiabatic", "top": "symmetry"},
            init=lambda x, y: viscous_shock_tube_primitive(x, y, gamma)),
    }


def get_case(name):
    reg = case_registry()
    if name not in reg:
        raise ConfigError(f"unknown case '{name}'; available:"
                          f" {', '.join(sorted(reg))}")
    case = reg[name]
    if case.name == "dmr":
        case.make_mesh = lambda h=None, nx=None: make_dmr_mesh(
            h if h is not None else case.default_h)
    return case


# -- initialization and measurements -------------------------------------------

def init_subcell_averages(mesh, primitive_fn, gamma):
    """Conserved subcell averages of a pointwise initial state (quadrature
    exact for polynomials of total degree <= 7)."""
    x, y, w = meshmod.subcell_average_points(mesh)
    prim = primitive_fn(x, y)
    cons = conserved_from_primitive(prim, gamma)
    return np.einsum("sq,sqv->sv", w, cons)


def error_norms(qbar, exact_avgs):
    """(L1, L2) of the density averages over all subcells, unweighted."""
    diff = np.abs(qbar[:, 0] - exact_avgs[:, 0])
    n = len(diff)
    return float(diff.sum() / n), float(np.sqrt((diff ** 2).sum() / n))


def centerline_profile(mesh, qbar, axis_y, n_samples, gamma=1.4):
    """(x, rho) table sampled from the nearest subcell along a y = const line."""
    x0, x1 = mesh.points[:, 0].min(), mesh.points[:, 0].max()
    xs = np.linspace(x0, x1, n_samples)
    cx = mesh.sub_centroid[:, 0]
    cy = mesh.sub_centroid[:, 1]
    rho = np.empty(n_samples)
    band = np.abs(cy - axis_y)
    keep = band <= band.min() + 0.75 * mesh.h_report
    idx_keep = np.nonzero(keep)[0]
    order = np.argsort(cx[idx_keep])
    sorted_cx = cx[idx_keep][order]
    sorted_ids = idx_keep[order]
    pos = np.clip(np.searchsorted(sorted_cx, xs), 1, len(sorted_cx) - 1)
    left_closer = np.abs(xs - sorted_cx[pos - 1]) <= np.abs(sorted_cx[pos] - xs)
    chosen = np.where(left_closer, sorted_ids[pos - 1], sorted_ids[pos])
    rho = qbar[chosen, 0]
    return np.column_stack([xs, rho])


def primary_vortex_height(mesh, qbar, gamma=1.4, x_window=(0.25, 0.95),
                          y_max=0.35, n_grid=320):
    """Height of the primary recirculation center near the bottom wall.

    The subcell-averaged velocity is resampled onto a uniform grid, a
    streamfunction is accumulated wall-up per column, and the height is the
    y-coordinate of the streamfunction extremum inside the search window
    behind the lambda shock.
    """
    from scipy.interpolate import griddata

    prim = primitive_from_conserved(qbar, gamma)
    xs = np.linspace(x_window[0], x_window[1], n_grid)
    ys = np.linspace(0.0, y_max, n_grid)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    u = griddata(mesh.sub_centroid, prim[:, 1], (gx, gy), method="linear")
    u = np.nan_to_num(u, nan=0.0)
    dy = ys[1] - ys[0]
    psi = np.cumsum(0.5 * (u[:, 1:] + u[:, :-1]) * dy, axis=1)
    psi = np.concatenate([np.zeros((n_grid, 1)), psi], axis=1)
    i, j = np.unravel_index(np.argmin(psi), psi.shape)
    return float(ys[j])
