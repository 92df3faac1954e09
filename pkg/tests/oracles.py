"""Independent brute-force oracles used by the test suite.

Everything here recomputes kinetic-flux quantities from their definitions by
numerical quadrature over velocity space (Gauss-Legendre, split at u = 0)
and Simpson's rule in time, avoiding the closed-form moment recursions of
the library.  Internal degrees of freedom are reduced with the Gaussian
moments <xi^2> = K/(2 lam), <xi^4> = K(K+2)/(4 lam^2).
"""

import numpy as np


def gauss_segment(a, b, n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


class QuadState:
    """One Maxwellian state on a shared velocity grid."""

    def __init__(self, w_prim, K, grid):
        rho, u0, v0, p = map(float, w_prim)
        self.rho, self.u0, self.v0, self.p = rho, u0, v0, p
        self.lam = rho / (2.0 * p)
        self.K = K
        self.xi2 = 0.5 * K / self.lam
        self.xi4 = 0.25 * K * (K + 2.0) / self.lam ** 2
        u, wu, v, wv = grid
        self.u = u[:, None]
        self.v = v[None, :]
        self.w2 = wu[:, None] * wv[None, :]
        self.g = (self.lam / np.pi) * np.exp(
            -self.lam * ((self.u - u0) ** 2 + (self.v - v0) ** 2))
        self.s = 0.5 * (self.u ** 2 + self.v ** 2)
        self.masks = {
            "full": 1.0,
            "plus": (self.u > 0.0).astype(float),
            "minus": (self.u < 0.0).astype(float),
        }

    def pair_of(self, vec):
        """vec . psi as (alpha(u, v), beta) meaning alpha + beta xi^2."""
        a1, a2, a3, a4 = vec
        return a1 + a2 * self.u + a3 * self.v + a4 * self.s, 0.5 * a4

    def moments(self, pair, weight=1.0, part="full"):
        """<weight * (alpha + beta xi^2) * psi_k>, per unit density."""
        alpha, beta = pair
        base = self.w2 * self.g * self.masks[part] * weight
        out = np.empty(4)
        for k, psi in enumerate((1.0, self.u, self.v)):
            out[k] = np.sum(base * psi * (alpha + beta * self.xi2))
        out[3] = np.sum(base * (self.s * alpha
                                + self.xi2 * (0.5 * alpha + self.s * beta)
                                + 0.5 * self.xi4 * beta))
        return out

    def psi_metric(self):
        m = np.empty((4, 4))
        for k in range(4):
            vec = np.zeros(4)
            vec[k] = 1.0
            m[:, k] = self.moments(self.pair_of(vec))
        return m

    def slopes(self, dq):
        return np.linalg.solve(self.psi_metric(), np.asarray(dq) / self.rho)

    def temporal(self, a_x, a_y):
        rhs = self.moments(self.pair_of(a_x), weight=self.u) \
            + self.moments(self.pair_of(a_y), weight=self.v)
        return np.linalg.solve(self.psi_metric(), -rhs)


def velocity_grid(prims, n=160, span=10.0):
    lams = [p[0] / (2.0 * p[3]) for p in prims]
    sig = [1.0 / np.sqrt(2.0 * l) for l in lams]
    lo_u = min(p[1] - span * s for p, s in zip(prims, sig))
    hi_u = max(p[1] + span * s for p, s in zip(prims, sig))
    lo_v = min(p[2] - span * s for p, s in zip(prims, sig))
    hi_v = max(p[2] + span * s for p, s in zip(prims, sig))
    un, wn = gauss_segment(min(lo_u, -1e-6), 0.0, n)
    up, wp = gauss_segment(0.0, max(hi_u, 1e-6), n)
    return (np.concatenate([un, up]), np.concatenate([wn, wp]),
            *gauss_segment(lo_v, hi_v, n))


def flux_time_integral_oracle(w_l, dqn_l, dqt_l, w_r, dqn_r, dqt_r,
                              q_lc, q_rc, d_l, d_r,
                              delta, tau, tau_exp, K, prandtl=1.0,
                              n_vel=160, n_time=200):
    """Brute-force time-integrated kinetic flux in the face-local frame.

    Mirrors the construction of scfv.gks.flux_time_integral_states but
    computes every velocity integral by quadrature and the time integral by
    Simpson's rule with n_time intervals.
    """
    grid = velocity_grid([w_l, w_r], n=n_vel)
    left = QuadState(w_l, K, grid)
    right = QuadState(w_r, K, grid)

    a_l, b_l = left.slopes(dqn_l), left.slopes(dqt_l)
    cap_l = left.temporal(a_l, b_l)
    a_r, b_r = right.slopes(dqn_r), right.slopes(dqt_r)
    cap_r = right.temporal(a_r, b_r)

    e0 = [1.0, 0.0, 0.0, 0.0]
    q0 = left.rho * left.moments(left.pair_of(e0), part="plus") \
        + right.rho * right.moments(right.pair_of(e0), part="minus")
    rho0 = q0[0]
    u0, v0 = q0[1] / rho0, q0[2] / rho0
    internal = q0[3] - 0.5 * rho0 * (u0 * u0 + v0 * v0)
    lam0 = 0.25 * (K + 2.0) * rho0 / internal
    p0 = rho0 / (2.0 * lam0)
    mid = QuadState((rho0, u0, v0, p0), K, grid)

    wl_ = d_r / (d_l + d_r)
    wr_ = d_l / (d_l + d_r)
    s_n = wl_ * (q0 - np.asarray(q_lc)) / d_l \
        + wr_ * (np.asarray(q_rc) - q0) / d_r
    s_t = 0.5 * (np.asarray(dqt_l) + np.asarray(dqt_r))
    a_0, b_0 = mid.slopes(s_n), mid.slopes(s_t)
    cap_0 = mid.temporal(a_0, b_0)

    def contribution(state, a, b, cap, c0, c_s, c_a, mask):
        total = c0 * state.moments(state.pair_of(e0),
                                   weight=state.u, part=mask)
        total += c_s * (state.moments(state.pair_of(a),
                                      weight=state.u * state.u, part=mask)
                        + state.moments(state.pair_of(b),
                                        weight=state.u * state.v, part=mask))
        total += c_a * state.moments(state.pair_of(cap),
                                     weight=state.u, part=mask)
        return state.rho * total

    def flux_at(t):
        e = np.exp(-t / tau_exp)
        f = contribution(mid, a_0, b_0, cap_0,
                         1.0 - e, (t + tau) * e - tau, t - tau + tau * e,
                         "full")
        f += contribution(left, a_l, b_l, cap_l,
                          e, -(tau + t) * e, -tau * e, "plus")
        f += contribution(right, a_r, b_r, cap_r,
                          e, -(tau + t) * e, -tau * e, "minus")
        return f

    ts = np.linspace(0.0, delta, n_time + 1)
    wt = np.ones(n_time + 1)
    wt[1:-1:2] = 4.0
    wt[2:-1:2] = 2.0
    wt *= (delta / n_time) / 3.0
    flux = np.zeros(4)
    for t, w in zip(ts, wt):
        flux += w * flux_at(t)

    if prandtl != 1.0:
        q = flux[3] - u0 * flux[1] - v0 * flux[2] \
            + 0.5 * (u0 * u0 + v0 * v0) * flux[0]
        flux[3] += (1.0 / prandtl - 1.0) * q
    return flux


def ns_flux_local(w, grad_n, grad_t, mu, K, gamma, prandtl=1.0):
    """Analytic Navier-Stokes flux through a face with normal +x.

    grad_n/grad_t are primitive-variable gradients (rho, U, V, p) along the
    normal and tangent.  The kinetic model's stress carries a divergence
    coefficient 2/(K+2) in place of the monatomic 2/3.
    """
    rho, u, v, p = w
    drho_n, du_n, dv_n, dp_n = grad_n
    drho_t, du_t, dv_t, dp_t = grad_t
    div = du_n + dv_t
    sxx = mu * (2.0 * du_n - 2.0 / (K + 2.0) * div)
    sxy = mu * (du_t + dv_n)
    t_n = (dp_n - p / rho * drho_n) / rho      # d(p/rho)/dn
    cp = gamma / (gamma - 1.0)
    qx = -cp * mu / prandtl * t_n
    rho_e = p / (gamma - 1.0) + 0.5 * rho * (u * u + v * v)
    return np.array([
        rho * u,
        rho * u * u + p - sxx,
        rho * u * v - sxy,
        (rho_e + p) * u - sxx * u - sxy * v + qx,
    ])
