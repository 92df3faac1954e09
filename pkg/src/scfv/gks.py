"""Gas-kinetic flux: Maxwellian moments and the time-integrated BGK flux.

The numerical flux at a face quadrature point is built from a second-order
time-dependent BGK distribution in a face-local frame (normal = x).  The
equilibrium part relaxes toward a half-moment blend of the two reconstructed
states; the initial part upwinds the left state over u > 0 and the right
state over u < 0.  All velocity-space integrals reduce to closed-form
Maxwellian moments; time integration over a sub-interval is analytic.

This module is the readable scalar implementation that defines the flux;
scfv.kernels carries the fused per-face version used in mesh sweeps and is
tested against this one.
"""

from dataclasses import dataclass
from math import erfc, exp, expm1, pi, sqrt

import numpy as np

from scfv.errors import MicroStateError, StateError

N_MOMENTS = 7  # u^0 .. u^6


@dataclass
class MomentTable:
    """Maxwellian velocity moments for one state, per unit density."""

    full_u: np.ndarray    # <u^n>, n = 0..6
    plus_u: np.ndarray    # <u^n>_{u>0}
    minus_u: np.ndarray   # <u^n>_{u<0}
    full_v: np.ndarray    # <v^n>, n = 0..6
    xi2: float            # <xi^2>
    xi4: float            # <xi^4>


@dataclass
class MicroState:
    """Maxwellian parameters and optional expansion coefficient sets."""

    rho: float
    u: float
    v: float
    lam: float
    a_x: np.ndarray = None
    a_y: np.ndarray = None
    a_t: np.ndarray = None

    @property
    def pressure(self):
        return self.rho / (2.0 * self.lam)


def micro_from_primitive(w):
    """(rho, U, V, p) -> MicroState with lam = rho/(2 p)."""
    rho, u, v, p = float(w[0]), float(w[1]), float(w[2]), float(w[3])
    if not (rho > 0.0 and p > 0.0) or not np.isfinite(rho + u + v + p):
        raise MicroStateError(f"non-physical state rho={rho}, p={p}")
    return MicroState(rho=rho, u=u, v=v, lam=rho / (2.0 * p))


def moment_table(lam, u_normal, u_tangential, K):
    """Full and half velocity moments by the standard recursion.

    <u^0> = 1, <u^1> = U, <u^{n+1}> = U <u^n> + n/(2 lam) <u^{n-1}>;
    half moments are seeded with the complementary error function and the
    Gaussian boundary term and follow the same recursion.
    """
    if not lam > 0.0:
        raise MicroStateError(f"lambda={lam} must be positive")
    full = np.empty(N_MOMENTS)
    plus = np.empty(N_MOMENTS)
    minus = np.empty(N_MOMENTS)
    u = float(u_normal)
    sl = sqrt(lam)
    g = 0.5 * exp(-lam * u * u) / sqrt(pi * lam)
    full[0] = 1.0
    full[1] = u
    plus[0] = 0.5 * erfc(-sl * u)
    minus[0] = 0.5 * erfc(sl * u)
    plus[1] = u * plus[0] + g
    minus[1] = u * minus[0] - g
    for n in range(1, N_MOMENTS - 1):
        c = 0.5 * n / lam
        full[n + 1] = u * full[n] + c * full[n - 1]
        plus[n + 1] = u * plus[n] + c * plus[n - 1]
        minus[n + 1] = u * minus[n] + c * minus[n - 1]
    fv = np.empty(N_MOMENTS)
    fv[0] = 1.0
    fv[1] = float(u_tangential)
    for n in range(1, N_MOMENTS - 1):
        fv[n + 1] = u_tangential * fv[n] + 0.5 * n / lam * fv[n - 1]
    xi2 = 0.5 * K / lam
    xi4 = 0.25 * K * (K + 2.0) / (lam * lam)
    return MomentTable(full_u=full, plus_u=plus, minus_u=minus, full_v=fv,
                       xi2=xi2, xi4=xi4)


# -- a tiny polynomial-in-(u, v, xi^2) algebra ------------------------------
# Functions of the particle velocity are dicts {(i, j, m): coef} standing for
# u^i v^j xi^(2m); expectations against the Maxwellian factorize through the
# moment tables.  Clear rather than fast; the hot path lives in scfv.kernels.

PSI = (
    {(0, 0, 0): 1.0},
    {(1, 0, 0): 1.0},
    {(0, 1, 0): 1.0},
    {(2, 0, 0): 0.5, (0, 2, 0): 0.5, (0, 0, 1): 0.5},
)


def poly_mul(p, q):
    out = {}
    for (i1, j1, m1), c1 in p.items():
        for (i2, j2, m2), c2 in q.items():
            key = (i1 + i2, j1 + j2, m1 + m2)
            out[key] = out.get(key, 0.0) + c1 * c2
    return out


def poly_comb(vec):
    """vec . psi as a velocity polynomial."""
    out = {}
    for comp, c in zip(PSI, vec):
        for key, val in comp.items():
            out[key] = out.get(key, 0.0) + c * val
    return out


def expect(p, table, part="full"):
    """Expectation of a velocity polynomial, per unit density."""
    mu = {"full": table.full_u, "plus": table.plus_u,
          "minus": table.minus_u}[part]
    xi = (1.0, table.xi2, table.xi4)
    total = 0.0
    for (i, j, m), c in p.items():
        total += c * mu[i] * table.full_v[j] * xi[m]
    return total


def psi_matrix(table):
    """M = <psi psi^T> per unit density."""
    m = np.empty((4, 4))
    for i in range(4):
        for j in range(4):
            m[i, j] = expect(poly_mul(PSI[i], PSI[j]), table)
    return m


def moments_of(vec, weight, table, part="full"):
    """4-vector <weight * (vec . psi) * psi_k>, per unit density."""
    prod = poly_mul(weight, poly_comb(vec))
    return np.array([expect(poly_mul(prod, PSI[k]), table, part)
                     for k in range(4)])


_U = {(1, 0, 0): 1.0}
_V = {(0, 1, 0): 1.0}
_ONE = {(0, 0, 0): 1.0}


def micro_slopes(state, dq, K, table=None):
    """Expansion coefficients a with integral a (psi) g psi = dq.

    dq holds the four conservative-variable gradients in one direction.
    """
    if table is None:
        table = moment_table(state.lam, state.u, state.v, K)
    m = psi_matrix(table)
    try:
        return np.linalg.solve(m, np.asarray(dq, dtype=float) / state.rho)
    except np.linalg.LinAlgError:
        raise MicroStateError("singular micro-state moment system")


def temporal_coeff_a(state, a_x, a_y, K, table=None):
    """Compatibility closure: integral (a_x psi u + a_y psi v + A psi) g psi = 0."""
    if table is None:
        table = moment_table(state.lam, state.u, state.v, K)
    rhs = moments_of(a_x, _U, table) + moments_of(a_y, _V, table)
    m = psi_matrix(table)
    try:
        return np.linalg.solve(m, -rhs)
    except np.linalg.LinAlgError:
        raise MicroStateError("singular micro-state moment system")


def conserved_of_state(state, K):
    e = 0.5 * (state.u ** 2 + state.v ** 2 + 0.5 * (K + 2.0) / state.lam)
    return np.array([state.rho, state.rho * state.u, state.rho * state.v,
                     state.rho * e])


def micro_from_conserved(q, K):
    rho = q[0]
    if not rho > 0.0:
        raise MicroStateError(f"non-positive blended density {rho}")
    u = q[1] / rho
    v = q[2] / rho
    internal = q[3] - 0.5 * rho * (u * u + v * v)
    lam = 0.25 * (K + 2.0) * rho / internal if internal > 0.0 else -1.0
    if not lam > 0.0:
        raise MicroStateError("non-positive internal energy in blended state")
    return MicroState(rho=rho, u=u, v=v, lam=lam)


def interface_equilibrium(left, right, K, tl=None, tr=None):
    """Equilibrium state from the half-moment blend of two Maxwellians."""
    tl = tl or moment_table(left.lam, left.u, left.v, K)
    tr = tr or moment_table(right.lam, right.u, right.v, K)
    q0 = np.array([left.rho * expect(PSI[k], tl, "plus")
                   + right.rho * expect(PSI[k], tr, "minus")
                   for k in range(4)])
    return micro_from_conserved(q0, K)


def collision_time(p_left, p_right, dt, model):
    """(tau, tau_exp) per the artificial-relaxation recipe.

    Inviscid runs use a vanishing base relaxation in algebraic occurrences
    of tau and a full time-step relaxation inside the exponential decay;
    viscous runs use mu/p for both.  A pressure-jump term adds shock
    robustness in either mode.
    """
    if not (p_left > 0.0 and p_right > 0.0):
        raise StateError(f"non-positive pressure at interface:"
                         f" {p_left}, {p_right}")
    jump = model.eps2 * abs(p_left - p_right) / (p_left + p_right) * dt
    if model.viscous:
        base = model.mu / (0.5 * (p_left + p_right))
        return base + jump, base + jump
    return model.eps1 * dt + jump, model.eps1_exp * dt + jump


def collision_time_viscous(p_interface, p_left, p_right, dt, model):
    """Viscous variant with the interface pressure from the blended state."""
    jump = model.eps2 * abs(p_left - p_right) / (p_left + p_right) * dt
    base = model.mu / p_interface
    return base + jump, base + jump


def time_integrals(delta, tau, tau_exp):
    """Closed-form integrals over [0, delta] of the five kernels
    {1 - E, (t + tau) E - tau, t - tau + tau E, E, t E}, E = exp(-t/tau_exp)."""
    r = delta / tau_exp
    one_me = -expm1(-r)                     # 1 - exp(-r), accurately
    i_e = tau_exp * one_me                  # int E
    i_te = tau_exp * tau_exp * one_me - tau_exp * delta * exp(-r)  # int t E
    t0 = delta - i_e
    t1 = i_te + tau * i_e - tau * delta
    t2 = 0.5 * delta * delta - tau * delta + tau * i_e
    return t0, t1, t2, i_e, i_te


def prandtl_fix(flux, interface_velocity, prandtl):
    """Heat-flux correction of the energy flux for non-unit Prandtl number."""
    if prandtl == 1.0:
        return flux
    un, ut = interface_velocity
    q = flux[3] - un * flux[1] - ut * flux[2] \
        + 0.5 * (un * un + ut * ut) * flux[0]
    out = flux.copy()
    out[3] += (1.0 / prandtl - 1.0) * q
    return out


@dataclass
class FluxIntegral:
    delta: float
    flux: np.ndarray   # time-integrated, face-local frame


def flux_time_integral_states(w_l, dqn_l, dqt_l, w_r, dqn_r, dqt_r,
                              q_lc, q_rc, d_l, d_r,
                              delta, tau, tau_exp, K, prandtl=1.0):
    """Time-integrated kinetic flux in the face-local frame.

    w_* are primitive states (rho, Un, Ut, p) at the quadrature point;
    dqn_*/dqt_* are normal/tangential gradients of the conserved variables;
    q_lc/q_rc are conserved values at the adjacent subcell centroids with
    normal-projected distances d_l/d_r, used to difference the equilibrium
    slopes against the blended interface state.
    """
    left = micro_from_primitive(w_l)
    right = micro_from_primitive(w_r)
    tl = moment_table(left.lam, left.u, left.v, K)
    tr = moment_table(right.lam, right.u, right.v, K)

    a_l = micro_slopes(left, dqn_l, K, tl)
    b_l = micro_slopes(left, dqt_l, K, tl)
    cap_l = temporal_coeff_a(left, a_l, b_l, K, tl)
    a_r = micro_slopes(right, dqn_r, K, tr)
    b_r = micro_slopes(right, dqt_r, K, tr)
    cap_r = temporal_coeff_a(right, a_r, b_r, K, tr)

    mid = interface_equilibrium(left, right, K, tl, tr)
    t0tab = moment_table(mid.lam, mid.u, mid.v, K)
    q0 = conserved_of_state(mid, K)
    wl_ = d_r / (d_l + d_r)
    wr_ = d_l / (d_l + d_r)
    s_n = wl_ * (q0 - np.asarray(q_lc)) / d_l + wr_ * (np.asarray(q_rc) - q0) / d_r
    s_t = 0.5 * (np.asarray(dqt_l) + np.asarray(dqt_r))
    a_0 = micro_slopes(mid, s_n, K, t0tab)
    b_0 = micro_slopes(mid, s_t, K, t0tab)
    cap_0 = temporal_coeff_a(mid, a_0, b_0, K, t0tab)

    t0, t1, t2, i_e, i_te = time_integrals(delta, tau, tau_exp)

    u_psik = [poly_mul(_U, PSI[k]) for k in range(4)]
    flux = np.zeros(4)
    for k in range(4):
        eq = (t0 * expect(u_psik[k], t0tab)
              + t1 * (expect(poly_mul(u_psik[k], poly_mul(_U, poly_comb(a_0))), t0tab)
                      + expect(poly_mul(u_psik[k], poly_mul(_V, poly_comb(b_0))), t0tab))
              + t2 * expect(poly_mul(u_psik[k], poly_comb(cap_0)), t0tab))
        lpart = (i_e * expect(u_psik[k], tl, "plus")
                 - (tau * i_e + i_te)
                 * (expect(poly_mul(u_psik[k], poly_mul(_U, poly_comb(a_l))), tl, "plus")
                    + expect(poly_mul(u_psik[k], poly_mul(_V, poly_comb(b_l))), tl, "plus"))
                 - tau * i_e * expect(poly_mul(u_psik[k], poly_comb(cap_l)), tl, "plus"))
        rpart = (i_e * expect(u_psik[k], tr, "minus")
                 - (tau * i_e + i_te)
                 * (expect(poly_mul(u_psik[k], poly_mul(_U, poly_comb(a_r))), tr, "minus")
                    + expect(poly_mul(u_psik[k], poly_mul(_V, poly_comb(b_r))), tr, "minus"))
                 - tau * i_e * expect(poly_mul(u_psik[k], poly_comb(cap_r)), tr, "minus"))
        flux[k] = mid.rho * eq + left.rho * lpart + right.rho * rpart
    flux = prandtl_fix(flux, (mid.u, mid.v), prandtl)
    return FluxIntegral(delta=delta, flux=flux)
