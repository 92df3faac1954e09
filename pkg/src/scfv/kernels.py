"""Fused numba kernels for mesh sweeps: flux, evaluation, limiter, residual.

These mirror the scalar reference implementations (scfv.gks, scfv.limiter)
and are tested against them.  Parallel loops only ever write to slots owned
by the loop index, so results are bitwise independent of the thread count;
reductions (residual accumulation) run serially in fixed face order.

The per-point flux routine works out of a caller-provided workspace to keep
heap allocation out of the face loop.
"""

import math

import numpy as np
from numba import njit, prange

_JIT = dict(cache=True, fastmath={'reassoc', 'contract', 'arcp'})

# Workspace layout for qp_flux (rows of a (52, 8) array).
WS_ROWS = 52


def make_workspace():
    return np.empty((WS_ROWS, 8))


# -- polynomial evaluation ---------------------------------------------------

@njit(inline="always", **_JIT)
def _eval_poly(coeffs, moments, dx, dy, w, wx, wy):
    """Value and first derivatives of the (uncorrected) cell polynomial."""
    dx2 = dx * dx
    dy2 = dy * dy
    dxy = dx * dy
    b1 = dx - moments[1]
    b2 = dy - moments[2]
    b3 = dx2 - moments[3]
    b4 = dxy - moments[4]
    b5 = dy2 - moments[5]
    b6 = dx2 * dx - moments[6]
    b7 = dx2 * dy - moments[7]
    b8 = dx * dy2 - moments[8]
    b9 = dy2 * dy - moments[9]
    for v in range(4):
        c0 = coeffs[0, v]
        c1 = coeffs[1, v]
        c2 = coeffs[2, v]
        c3 = coeffs[3, v]
        c4 = coeffs[4, v]
        c5 = coeffs[5, v]
        c6 = coeffs[6, v]
        c7 = coeffs[7, v]
        c8 = coeffs[8, v]
        c9 = coeffs[9, v]
        w[v] = (c0 + c1 * b1 + c2 * b2 + c3 * b3 + c4 * b4
                + c5 * b5 + c6 * b6 + c7 * b7 + c8 * b8 + c9 * b9)
        wx[v] = (c1 + 2.0 * c3 * dx + c4 * dy + 3.0 * c6 * dx2
                 + 2.0 * c7 * dxy + c8 * dy2)
        wy[v] = (c2 + c4 * dx + 2.0 * c5 * dy + c7 * dx2
                 + 2.0 * c8 * dxy + 3.0 * c9 * dy2)


# -- kinetic moment machinery -------------------------------------------------

@njit(inline="always", **_JIT)
def _fill_uv_full(lam, u, v, mu_full, mv):
    il = 0.5 / lam
    mu_full[0] = 1.0
    mu_full[1] = u
    mv[0] = 1.0
    mv[1] = v
    for n in range(1, 6):
        c = n * il
        mu_full[n + 1] = u * mu_full[n] + c * mu_full[n - 1]
        mv[n + 1] = v * mv[n] + c * mv[n - 1]


@njit(inline="always", **_JIT)
def _fill_half(lam, u, sign, mu_half):
    """Half moments over sign*u > 0."""
    sl = math.sqrt(lam)
    g = 0.5 * math.exp(-lam * u * u) / math.sqrt(math.pi * lam)
    il = 0.5 / lam
    mu_half[0] = 0.5 * math.erfc(-sign * sl * u)
    mu_half[1] = u * mu_half[0] + sign * g
    for n in range(1, 6):
        mu_half[n + 1] = u * mu_half[n] + n * il * mu_half[n - 1]


@njit(inline="always", **_JIT)
def _slopes(rho, u, v, lam, K, b1, b2, b3, b4, out):
    """Closed-form solve of the Maxwellian expansion system."""
    ir = 1.0 / rho
    r1 = b1 * ir
    r2 = b2 * ir
    r3 = b3 * ir
    r4 = b4 * ir
    e = u * u + v * v + 0.5 * (K + 2.0) / lam
    t4 = 2.0 * r4 - e * r1
    t2 = r2 - u * r1
    t3 = r3 - v * r1
    a4 = 4.0 * lam * lam / (K + 2.0) * (t4 - 2.0 * u * t2 - 2.0 * v * t3)
    a2 = 2.0 * lam * t2 - u * a4
    a3 = 2.0 * lam * t3 - v * a4
    out[0] = r1 - u * a2 - v * a3 - 0.5 * a4 * e
    out[1] = a2
    out[2] = a3
    out[3] = a4


@njit(inline="always", **_JIT)
def _mom_psi(mu, mv, xi2, i, j, out):
    """out_k = <u^i v^j psi_k> with the given u-moment table."""
    out[0] = mu[i] * mv[j]
    out[1] = mu[i + 1] * mv[j]
    out[2] = mu[i] * mv[j + 1]
    out[3] = 0.5 * (mu[i + 2] * mv[j] + mu[i] * mv[j + 2] + mu[i] * mv[j] * xi2)


@njit(inline="always", **_JIT)
def _mom_a_psi(mu, mv, xi2, xi4, a, i, j, out):
    """out_k = <u^i v^j (a . psi) psi_k> with the given u-moment table."""
    a1 = a[0]
    a2 = a[1]
    a3 = a[2]
    a4 = a[3]
    m_i_j = mu[i] * mv[j]
    m_i1_j = mu[i + 1] * mv[j]
    m_i2_j = mu[i + 2] * mv[j]
    m_i3_j = mu[i + 3] * mv[j]
    m_i_j1 = mu[i] * mv[j + 1]
    m_i_j2 = mu[i] * mv[j + 2]
    m_i_j3 = mu[i] * mv[j + 3]
    m_i1_j1 = mu[i + 1] * mv[j + 1]
    m_i1_j2 = mu[i + 1] * mv[j + 2]
    m_i2_j1 = mu[i + 2] * mv[j + 1]
    m_i2_j2 = mu[i + 2] * mv[j + 2]
    s_i_j = 0.5 * (m_i2_j + m_i_j2 + m_i_j * xi2)
    s_i1_j = 0.5 * (m_i3_j + m_i1_j2 + m_i1_j * xi2)
    s_i_j1 = 0.5 * (m_i2_j1 + m_i_j3 + m_i_j1 * xi2)
    ss_i_j = 0.25 * (mu[i + 4] * mv[j] + mu[i] * mv[j + 4] + m_i_j * xi4
                     + 2.0 * m_i2_j2 + 2.0 * m_i2_j * xi2 + 2.0 * m_i_j2 * xi2)
    out[0] = a1 * m_i_j + a2 * m_i1_j + a3 * m_i_j1 + a4 * s_i_j
    out[1] = a1 * m_i1_j + a2 * m_i2_j + a3 * m_i1_j1 + a4 * s_i1_j
    out[2] = a1 * m_i_j1 + a2 * m_i1_j1 + a3 * m_i_j2 + a4 * s_i_j1
    out[3] = a1 * s_i_j + a2 * s_i1_j + a3 * s_i_j1 + a4 * ss_i_j


@njit(inline="always", **_JIT)
def _temporal(rho, u, v, lam, K, mu, mv, xi2, xi4, a_n, a_t, out, scratch):
    """Compatibility closure A for one state (full moments)."""
    _mom_a_psi(mu, mv, xi2, xi4, a_n, 1, 0, out)
    _mom_a_psi(mu, mv, xi2, xi4, a_t, 0, 1, scratch)
    b1 = -(out[0] + scratch[0]) * rho
    b2 = -(out[1] + scratch[1]) * rho
    b3 = -(out[2] + scratch[2]) * rho
    b4 = -(out[3] + scratch[3]) * rho
    _slopes(rho, u, v, lam, K, b1, b2, b3, b4, out)


@njit(inline="always", **_JIT)
def qp_flux(w_l, dqn_l, dqt_l, w_r, dqn_r, dqt_r, q_lc, q_rc, d_l, d_r,
            delta1, delta2, dt, K, prandtl,
            viscous, mu_dyn, eps1, eps1_exp, eps2, out, ws):
    """Time-integrated kinetic flux, face-local frame, two sub-intervals.

    w_* primitive (rho, un, ut, p); out has shape (2, 4); ws is a
    make_workspace() scratch array.  The relaxation time is built here: a
    pressure-jump term plus either the inviscid epsilon terms or mu over
    the blended interface pressure.  Returns 0 on success, 1 on a
    non-physical micro state.
    """
    rho_l = w_l[0]
    u_l = w_l[1]
    v_l = w_l[2]
    p_l = w_l[3]
    rho_r = w_r[0]
    u_r = w_r[1]
    v_r = w_r[2]
    p_r = w_r[3]
    if not (rho_l > 0.0 and p_l > 0.0 and rho_r > 0.0 and p_r > 0.0):
        return 1
    lam_l = 0.5 * rho_l / p_l
    lam_r = 0.5 * rho_r / p_r

    mu_f_l = ws[0]
    mu_p_l = ws[1]
    mv_l = ws[3]
    mu_f_r = ws[4]
    mu_m_r = ws[6]
    mv_r = ws[7]
    mu_f_0 = ws[8]
    mv_0 = ws[11]
    a_l = ws[12]
    b_l = ws[13]
    cap_l = ws[14]
    a_r = ws[15]
    b_r = ws[16]
    cap_r = ws[17]
    a_0 = ws[18]
    b_0 = ws[19]
    cap_0 = ws[20]
    scratch = ws[21]
    tmp_l = ws[22]
    tmp_r = ws[23]
    q0 = ws[24]
    s_n = ws[25]
    s_t = ws[26]
    f0_e = ws[27]
    f0_s = ws[28]
    f0_a = ws[29]
    fl_e = ws[30]
    fl_s = ws[31]
    fl_a = ws[32]
    fr_e = ws[33]
    fr_s = ws[34]
    fr_a = ws[35]

    _fill_uv_full(lam_l, u_l, v_l, mu_f_l, mv_l)
    _fill_half(lam_l, u_l, 1.0, mu_p_l)
    xi2_l = 0.5 * K / lam_l
    xi4_l = 0.25 * K * (K + 2.0) / (lam_l * lam_l)
    _fill_uv_full(lam_r, u_r, v_r, mu_f_r, mv_r)
    _fill_half(lam_r, u_r, -1.0, mu_m_r)
    xi2_r = 0.5 * K / lam_r
    xi4_r = 0.25 * K * (K + 2.0) / (lam_r * lam_r)

    _slopes(rho_l, u_l, v_l, lam_l, K, dqn_l[0], dqn_l[1], dqn_l[2], dqn_l[3], a_l)
    _slopes(rho_l, u_l, v_l, lam_l, K, dqt_l[0], dqt_l[1], dqt_l[2], dqt_l[3], b_l)
    _temporal(rho_l, u_l, v_l, lam_l, K, mu_f_l, mv_l, xi2_l, xi4_l,
              a_l, b_l, cap_l, scratch)
    _slopes(rho_r, u_r, v_r, lam_r, K, dqn_r[0], dqn_r[1], dqn_r[2], dqn_r[3], a_r)
    _slopes(rho_r, u_r, v_r, lam_r, K, dqt_r[0], dqt_r[1], dqt_r[2], dqt_r[3], b_r)
    _temporal(rho_r, u_r, v_r, lam_r, K, mu_f_r, mv_r, xi2_r, xi4_r,
              a_r, b_r, cap_r, scratch)

    # Half-moment blend for the interface equilibrium.
    _mom_psi(mu_p_l, mv_l, xi2_l, 0, 0, tmp_l)
    _mom_psi(mu_m_r, mv_r, xi2_r, 0, 0, tmp_r)
    for k in range(4):
        q0[k] = rho_l * tmp_l[k] + rho_r * tmp_r[k]
    rho_0 = q0[0]
    if not rho_0 > 0.0:
        return 1
    u_0 = q0[1] / rho_0
    v_0 = q0[2] / rho_0
    internal = q0[3] - 0.5 * rho_0 * (u_0 * u_0 + v_0 * v_0)
    if not internal > 0.0:
        return 1
    lam_0 = 0.25 * (K + 2.0) * rho_0 / internal
    p_0 = 0.5 * rho_0 / lam_0

    _fill_uv_full(lam_0, u_0, v_0, mu_f_0, mv_0)
    xi2_0 = 0.5 * K / lam_0
    xi4_0 = 0.25 * K * (K + 2.0) / (lam_0 * lam_0)

    # Equilibrium slopes: blended state differenced against the two subcell
    # centroid values; tangential slopes averaged.
    wl_ = d_r / (d_l + d_r)
    wr_ = d_l / (d_l + d_r)
    for k in range(4):
        s_n[k] = wl_ * (q0[k] - q_lc[k]) / d_l + wr_ * (q_rc[k] - q0[k]) / d_r
        s_t[k] = 0.5 * (dqt_l[k] + dqt_r[k])
    _slopes(rho_0, u_0, v_0, lam_0, K, s_n[0], s_n[1], s_n[2], s_n[3], a_0)
    _slopes(rho_0, u_0, v_0, lam_0, K, s_t[0], s_t[1], s_t[2], s_t[3], b_0)
    _temporal(rho_0, u_0, v_0, lam_0, K, mu_f_0, mv_0, xi2_0, xi4_0,
              a_0, b_0, cap_0, scratch)

    jump = eps2 * abs(p_l - p_r) / (p_l + p_r) * dt
    if viscous:
        tau = mu_dyn / p_0 + jump
        tau_exp = tau
    else:
        tau = eps1 * dt + jump
        tau_exp = eps1_exp * dt + jump

    # Velocity moments shared by both sub-intervals.
    _mom_psi(mu_f_0, mv_0, xi2_0, 1, 0, f0_e)
    _mom_a_psi(mu_f_0, mv_0, xi2_0, xi4_0, a_0, 2, 0, f0_s)
    _mom_a_psi(mu_f_0, mv_0, xi2_0, xi4_0, b_0, 1, 1, tmp_l)
    for k in range(4):
        f0_s[k] += tmp_l[k]
    _mom_a_psi(mu_f_0, mv_0, xi2_0, xi4_0, cap_0, 1, 0, f0_a)

    _mom_psi(mu_p_l, mv_l, xi2_l, 1, 0, fl_e)
    _mom_a_psi(mu_p_l, mv_l, xi2_l, xi4_l, a_l, 2, 0, fl_s)
    _mom_a_psi(mu_p_l, mv_l, xi2_l, xi4_l, b_l, 1, 1, tmp_l)
    for k in range(4):
        fl_s[k] += tmp_l[k]
    _mom_a_psi(mu_p_l, mv_l, xi2_l, xi4_l, cap_l, 1, 0, fl_a)

    _mom_psi(mu_m_r, mv_r, xi2_r, 1, 0, fr_e)
    _mom_a_psi(mu_m_r, mv_r, xi2_r, xi4_r, a_r, 2, 0, fr_s)
    _mom_a_psi(mu_m_r, mv_r, xi2_r, xi4_r, b_r, 1, 1, tmp_r)
    for k in range(4):
        fr_s[k] += tmp_r[k]
    _mom_a_psi(mu_m_r, mv_r, xi2_r, xi4_r, cap_r, 1, 0, fr_a)

    for d in range(2):
        delta = delta1 if d == 0 else delta2
        r = delta / tau_exp
        one_me = -math.expm1(-r)
        e_d = math.exp(-r)
        i_e = tau_exp * one_me
        i_te = tau_exp * tau_exp * one_me - tau_exp * delta * e_d
        t0 = delta - i_e
        t1 = i_te + tau * i_e - tau * delta
        t2 = 0.5 * delta * delta - tau * delta + tau * i_e
        c_s = tau * i_e + i_te
        for k in range(4):
            out[d, k] = (rho_0 * (t0 * f0_e[k] + t1 * f0_s[k] + t2 * f0_a[k])
                         + rho_l * (i_e * fl_e[k] - c_s * fl_s[k]
                                    - tau * i_e * fl_a[k])
                         + rho_r * (i_e * fr_e[k] - c_s * fr_s[k]
                                    - tau * i_e * fr_a[k]))
        if prandtl != 1.0:
            q = (out[d, 3] - u_0 * out[d, 1] - v_0 * out[d, 2]
                 + 0.5 * (u_0 * u_0 + v_0 * v_0) * out[d, 0])
            out[d, 3] += (1.0 / prandtl - 1.0) * q
    return 0


@njit(parallel=True, **_JIT)
def flux_pass(coeffs, moments, centroid, shifts, qc_sub,
              fa_left, fa_right, fa_bc, fa_normal, fa_length,
              fa_qp_l, fa_qp_r, fa_cl, fa_cr, fa_state,
              gamma, K, dt, delta1, delta2,
              viscous, mu_dyn, eps1, eps1_exp, eps2, prandtl,
              face_flux, err):
    """Time-integrated fluxes for both sub-intervals on every face.

    face_flux[f, d, :] accumulates sum_l w_l * Fhat(qp_l, delta_d) * length
    in the global frame, oriented left -> right.  err[f] flags non-physical
    states (0 = ok).
    """
    n_faces = fa_left.shape[0]
    gm1 = gamma - 1.0
    block = 256
    n_blocks = (n_faces + block - 1) // block
    for b in prange(n_blocks):
        ws = np.empty((WS_ROWS, 8))
        w = ws[36]
        wx = ws[37]
        wy = ws[38]
        wr = ws[39]
        wrx = ws[40]
        wry = ws[41]
        w_l = ws[42]
        w_r = ws[43]
        dqn_l = ws[44]
        dqt_l = ws[45]
        dqn_r = ws[46]
        dqt_r = ws[47]
        q_lc = ws[48]
        q_rc = ws[49]
        fhat = ws[50:52, 0:4]
        f_end = min((b + 1) * block, n_faces)
        for f in range(b * block, f_end):
            _flux_one_face(
                coeffs, moments, centroid, shifts, qc_sub,
                fa_left, fa_right, fa_bc, fa_normal, fa_length,
                fa_qp_l, fa_qp_r, fa_cl, fa_cr, fa_state,
                gm1, K, dt, delta1, delta2,
                viscous, mu_dyn, eps1, eps1_exp, eps2, prandtl,
                face_flux, err, f,
                ws, w, wx, wy, wr, wrx, wry, w_l, w_r,
                dqn_l, dqt_l, dqn_r, dqt_r, q_lc, q_rc, fhat)


@njit(**_JIT)
def _flux_one_face(coeffs, moments, centroid, shifts, qc_sub,
                   fa_left, fa_right, fa_bc, fa_normal, fa_length,
                   fa_qp_l, fa_qp_r, fa_cl, fa_cr, fa_state,
                   gm1, K, dt, delta1, delta2,
                   viscous, mu_dyn, eps1, eps1_exp, eps2, prandtl,
                   face_flux, err, f,
                   ws, w, wx, wy, wr, wrx, wry, w_l, w_r,
                   dqn_l, dqt_l, dqn_r, dqt_r, q_lc, q_rc, fhat):
    nx = fa_normal[f, 0]
    ny = fa_normal[f, 1]
    tx = -ny
    ty = nx
    left_sub = fa_left[f]
    left_cell = left_sub // 4
    right_sub = fa_right[f]
    bc = fa_bc[f]
    fail = 0
    for d in range(2):
        for k in range(4):
            face_flux[f, d, k] = 0.0

    # Values at the adjacent subcell centroids (shared by both points).
    m_n = qc_sub[left_sub, 1] * nx + qc_sub[left_sub, 2] * ny
    m_t = qc_sub[left_sub, 1] * tx + qc_sub[left_sub, 2] * ty
    q_lc[0] = qc_sub[left_sub, 0]
    q_lc[1] = m_n
    q_lc[2] = m_t
    q_lc[3] = qc_sub[left_sub, 3]
    if bc == 0:
        m_n = qc_sub[right_sub, 1] * nx + qc_sub[right_sub, 2] * ny
        m_t = qc_sub[right_sub, 1] * tx + qc_sub[right_sub, 2] * ty
        q_rc[0] = qc_sub[right_sub, 0]
        q_rc[1] = m_n
        q_rc[2] = m_t
        q_rc[3] = qc_sub[right_sub, 3]
    elif bc == 1:   # slip mirror
        q_rc[0] = q_lc[0]
        q_rc[1] = -q_lc[1]
        q_rc[2] = q_lc[2]
        q_rc[3] = q_lc[3]
    elif bc == 2:   # no-slip mirror
        q_rc[0] = q_lc[0]
        q_rc[1] = -q_lc[1]
        q_rc[2] = -q_lc[2]
        q_rc[3] = q_lc[3]
    else:           # dirichlet
        q_rc[0] = fa_state[f, 0]
        q_rc[1] = fa_state[f, 1] * nx + fa_state[f, 2] * ny
        q_rc[2] = fa_state[f, 1] * tx + fa_state[f, 2] * ty
        q_rc[3] = fa_state[f, 3]

    for g in range(2):
        x = fa_qp_l[f, g, 0]
        y = fa_qp_l[f, g, 1]
        _eval_poly(coeffs[left_cell], moments[left_cell],
                   x - centroid[left_cell, 0], y - centroid[left_cell, 1],
                   w, wx, wy)
        for k in range(4):
            w[k] += shifts[left_sub, k]
        rho = w[0]
        m_n = w[1] * nx + w[2] * ny
        m_t = w[1] * tx + w[2] * ty
        e_tot = w[3]
        g_rho_n = wx[0] * nx + wy[0] * ny
        g_rho_t = wx[0] * tx + wy[0] * ty
        g_mx_n = wx[1] * nx + wy[1] * ny
        g_mx_t = wx[1] * tx + wy[1] * ty
        g_my_n = wx[2] * nx + wy[2] * ny
        g_my_t = wx[2] * tx + wy[2] * ty
        g_e_n = wx[3] * nx + wy[3] * ny
        g_e_t = wx[3] * tx + wy[3] * ty
        dqn_l[0] = g_rho_n
        dqn_l[1] = g_mx_n * nx + g_my_n * ny
        dqn_l[2] = g_mx_n * tx + g_my_n * ty
        dqn_l[3] = g_e_n
        dqt_l[0] = g_rho_t
        dqt_l[1] = g_mx_t * nx + g_my_t * ny
        dqt_l[2] = g_mx_t * tx + g_my_t * ty
        dqt_l[3] = g_e_t
        p_l = gm1 * (e_tot - 0.5 * (m_n * m_n + m_t * m_t) / rho)
        w_l[0] = rho
        w_l[1] = m_n / rho
        w_l[2] = m_t / rho
        w_l[3] = p_l

        if bc == 0:
            right_cell = right_sub // 4
            xr = fa_qp_r[f, g, 0]
            yr = fa_qp_r[f, g, 1]
            _eval_poly(coeffs[right_cell], moments[right_cell],
                       xr - centroid[right_cell, 0],
                       yr - centroid[right_cell, 1], wr, wrx, wry)
            for k in range(4):
                wr[k] += shifts[right_sub, k]
            rho_r = wr[0]
            mr_n = wr[1] * nx + wr[2] * ny
            mr_t = wr[1] * tx + wr[2] * ty
            er = wr[3]
            gr_rho_n = wrx[0] * nx + wry[0] * ny
            gr_rho_t = wrx[0] * tx + wry[0] * ty
            gr_mx_n = wrx[1] * nx + wry[1] * ny
            gr_mx_t = wrx[1] * tx + wry[1] * ty
            gr_my_n = wrx[2] * nx + wry[2] * ny
            gr_my_t = wrx[2] * tx + wry[2] * ty
            gr_e_n = wrx[3] * nx + wry[3] * ny
            gr_e_t = wrx[3] * tx + wry[3] * ty
            dqn_r[0] = gr_rho_n
            dqn_r[1] = gr_mx_n * nx + gr_my_n * ny
            dqn_r[2] = gr_mx_n * tx + gr_my_n * ty
            dqn_r[3] = gr_e_n
            dqt_r[0] = gr_rho_t
            dqt_r[1] = gr_mx_t * nx + gr_my_t * ny
            dqt_r[2] = gr_mx_t * tx + gr_my_t * ty
            dqt_r[3] = gr_e_t
            p_r = gm1 * (er - 0.5 * (mr_n * mr_n + mr_t * mr_t) / rho_r)
            w_r[0] = rho_r
            w_r[1] = mr_n / rho_r
            w_r[2] = mr_t / rho_r
            w_r[3] = p_r
        elif bc == 1:
            w_r[0] = w_l[0]
            w_r[1] = -w_l[1]
            w_r[2] = w_l[2]
            w_r[3] = w_l[3]
            dqn_r[0] = -dqn_l[0]
            dqn_r[1] = dqn_l[1]
            dqn_r[2] = -dqn_l[2]
            dqn_r[3] = -dqn_l[3]
            dqt_r[0] = dqt_l[0]
            dqt_r[1] = -dqt_l[1]
            dqt_r[2] = dqt_l[2]
            dqt_r[3] = dqt_l[3]
        elif bc == 2:
            w_r[0] = w_l[0]
            w_r[1] = -w_l[1]
            w_r[2] = -w_l[2]
            w_r[3] = w_l[3]
            dqn_r[0] = -dqn_l[0]
            dqn_r[1] = dqn_l[1]
            dqn_r[2] = dqn_l[2]
            dqn_r[3] = -dqn_l[3]
            dqt_r[0] = dqt_l[0]
            dqt_r[1] = -dqt_l[1]
            dqt_r[2] = -dqt_l[2]
            dqt_r[3] = dqt_l[3]
        else:
            rho_r = fa_state[f, 0]
            mr_n = fa_state[f, 1] * nx + fa_state[f, 2] * ny
            mr_t = fa_state[f, 1] * tx + fa_state[f, 2] * ty
            er = fa_state[f, 3]
            p_r = gm1 * (er - 0.5 * (mr_n * mr_n + mr_t * mr_t) / rho_r)
            w_r[0] = rho_r
            w_r[1] = mr_n / rho_r
            w_r[2] = mr_t / rho_r
            w_r[3] = p_r
            for k in range(4):
                dqn_r[k] = 0.0
                dqt_r[k] = 0.0

        if not (w_l[0] > 0.0 and w_l[3] > 0.0
                and w_r[0] > 0.0 and w_r[3] > 0.0):
            fail = 1
            break

        d_l = abs((fa_cl[f, 0] - x) * nx + (fa_cl[f, 1] - y) * ny)
        d_r = abs((fa_cr[f, 0] - x) * nx + (fa_cr[f, 1] - y) * ny)

        rc = qp_flux(w_l, dqn_l, dqt_l, w_r, dqn_r, dqt_r, q_lc, q_rc,
                     d_l, d_r, delta1, delta2, dt, K, prandtl,
                     viscous, mu_dyn, eps1, eps1_exp, eps2, fhat, ws)
        if rc != 0:
            fail = 1
            break
        half_len = 0.5 * fa_length[f]
        for d in range(2):
            f_mn = fhat[d, 1]
            f_mt = fhat[d, 2]
            face_flux[f, d, 0] += half_len * fhat[d, 0]
            face_flux[f, d, 1] += half_len * (f_mn * nx + f_mt * tx)
            face_flux[f, d, 2] += half_len * (f_mn * ny + f_mt * ty)
            face_flux[f, d, 3] += half_len * fhat[d, 3]
    err[f] = fail


@njit(parallel=True, **_JIT)
def face_eval_pass(coeffs, moments, centroid, shifts, qc_sub,
                   fa_left, fa_right, fa_bc, fa_normal,
                   fa_qp_l, fa_qp_r, fa_state, gamma, rho_p):
    """Density and pressure on both sides of every face at both points.

    rho_p[f, g, side, 0] = rho, rho_p[f, g, side, 1] = p; ghost sides carry
    the transformed interior state (identical rho, p for walls).
    """
    n_faces = fa_left.shape[0]
    gm1 = gamma - 1.0
    for f in prange(n_faces):
        buf = np.empty((3, 4))
        w = buf[0]
        wx = buf[1]
        wy = buf[2]
        left_sub = fa_left[f]
        left_cell = left_sub // 4
        right_sub = fa_right[f]
        bc = fa_bc[f]
        for g in range(2):
            x = fa_qp_l[f, g, 0]
            y = fa_qp_l[f, g, 1]
            _eval_poly(coeffs[left_cell], moments[left_cell],
                       x - centroid[left_cell, 0], y - centroid[left_cell, 1],
                       w, wx, wy)
            rho = w[0] + shifts[left_sub, 0]
            m1 = w[1] + shifts[left_sub, 1]
            m2 = w[2] + shifts[left_sub, 2]
            et = w[3] + shifts[left_sub, 3]
            p = gm1 * (et - 0.5 * (m1 * m1 + m2 * m2) / rho)
            rho_p[f, g, 0, 0] = rho
            rho_p[f, g, 0, 1] = p
            if bc == 0:
                right_cell = right_sub // 4
                _eval_poly(coeffs[right_cell], moments[right_cell],
                           fa_qp_r[f, g, 0] - centroid[right_cell, 0],
                           fa_qp_r[f, g, 1] - centroid[right_cell, 1],
                           w, wx, wy)
                rho = w[0] + shifts[right_sub, 0]
                m1 = w[1] + shifts[right_sub, 1]
                m2 = w[2] + shifts[right_sub, 2]
                et = w[3] + shifts[right_sub, 3]
                p = gm1 * (et - 0.5 * (m1 * m1 + m2 * m2) / rho)
                rho_p[f, g, 1, 0] = rho
                rho_p[f, g, 1, 1] = p
            elif bc == 3:
                rho = fa_state[f, 0]
                p = gm1 * (fa_state[f, 3] - 0.5 * (fa_state[f, 1] ** 2
                                                   + fa_state[f, 2] ** 2) / rho)
                rho_p[f, g, 1, 0] = rho
                rho_p[f, g, 1, 1] = p
            else:
                rho_p[f, g, 1, 0] = rho_p[f, g, 0, 0]
                rho_p[f, g, 1, 1] = rho_p[f, g, 0, 1]


@njit(**_JIT)
def detector_accumulate(rho_p, fa_left, fa_right, fa_bc, n_cells, indicator,
                        bad_cell):
    """Pressure/density jump indicator per main cell; positivity flags."""
    for c in range(n_cells):
        indicator[c] = 0.0
        bad_cell[c] = 0
    n_faces = fa_left.shape[0]
    for f in range(n_faces):
        lc = fa_left[f] // 4
        rc = fa_right[f] // 4 if fa_right[f] >= 0 else -1
        for g in range(2):
            rho_l = rho_p[f, g, 0, 0]
            p_l = rho_p[f, g, 0, 1]
            rho_r = rho_p[f, g, 1, 0]
            p_r = rho_p[f, g, 1, 1]
            ok_l = rho_l > 0.0 and p_l > 0.0 and np.isfinite(rho_l + p_l)
            ok_r = rho_r > 0.0 and p_r > 0.0 and np.isfinite(rho_r + p_r)
            if not ok_l:
                bad_cell[lc] = 1
            if not ok_r and rc >= 0:
                bad_cell[rc] = 1
            if lc == rc:
                continue
            if ok_l and ok_r:
                jp = abs(p_l - p_r) / min(p_l, p_r)
                jr = abs(rho_l - rho_r) / min(rho_l, rho_r)
                indicator[lc] += jp + jr
                if rc >= 0:
                    indicator[rc] += jp + jr
            else:
                indicator[lc] += 1.0e3
                if rc >= 0:
                    indicator[rc] += 1.0e3


@njit(**_JIT)
def accumulate_residual(face_flux, fa_left, fa_right, sub_area, out):
    """Residual per subcell from per-face flux integrals, fixed face order."""
    n_sub = sub_area.shape[0]
    for s in range(n_sub):
        for k in range(4):
            out[s, k] = 0.0
    n_faces = fa_left.shape[0]
    for f in range(n_faces):
        ls = fa_left[f]
        rs = fa_right[f]
        for k in range(4):
            v = face_flux[f, k]
            out[ls, k] -= v
            if rs >= 0:
                out[rs, k] += v
    for s in range(n_sub):
        inv = 1.0 / sub_area[s]
        for k in range(4):
            out[s, k] *= inv


@njit(inline="always", **_JIT)
def _minmod_write(vals, n):
    pos = True
    neg = True
    m = np.inf
    for i in range(n):
        v = vals[i]
        if v < 0.0:
            pos = False
        if v > 0.0:
            neg = False
        a = abs(v)
        if a < m:
            m = a
    if pos:
        return m
    if neg:
        return -m
    return 0.0


@njit(parallel=True, **_JIT)
def hr_limit_pass(coeffs_in, coeffs_out, flags, cell_centroid, cell_moments,
                  lim_nb, lim_nb_centroid, lim_ghost,
                  ghost_g, ghost_t, ghost_centroid, ghost_moments,
                  ghost_kind, ghost_dirichlet):
    """Hierarchical top-down minmod limiting of flagged cells.

    Candidates at order m are the cell's own coefficient and, per face
    neighbor, the neighbor-mean of the m-th derivative minus the mean of the
    cell's own (already limited) higher-order terms over the neighbor:
    polynomial fields shared by the whole patch are exact fixed points.
    """
    n_cells = coeffs_in.shape[0]
    for c in prange(n_cells):
        if flags[c] == 0:
            for k in range(10):
                for v in range(4):
                    coeffs_out[c, k, v] = coeffs_in[c, k, v]
            continue
        work = np.empty((10, 4))
        for k in range(10):
            for v in range(4):
                work[k, v] = coeffs_in[c, k, v]
        nbc = np.empty((3, 10, 4))
        nb_cen = np.empty((3, 2))
        nb_mom = np.empty((3, 10))
        n_nb = 0
        for e in range(3):
            g = lim_ghost[c, e]
            if g < 0:
                nb = lim_nb[c, e]
                for k in range(10):
                    for v in range(4):
                        nbc[n_nb, k, v] = coeffs_in[nb, k, v]
                    nb_mom[n_nb, k] = cell_moments[nb, k]
                nb_cen[n_nb, 0] = lim_nb_centroid[c, e, 0]
                nb_cen[n_nb, 1] = lim_nb_centroid[c, e, 1]
            elif ghost_kind[g] == 1:
                for k in range(10):
                    for v in range(4):
                        nbc[n_nb, k, v] = 0.0
                    nb_mom[n_nb, k] = ghost_moments[g, k]
                for v in range(4):
                    nbc[n_nb, 0, v] = ghost_dirichlet[g, v]
                nb_cen[n_nb, 0] = ghost_centroid[g, 0]
                nb_cen[n_nb, 1] = ghost_centroid[g, 1]
            else:
                # ghost polynomial = geometric transform of own coefficients
                # combined with the conserved-state map
                for k in range(10):
                    for v in range(4):
                        acc = 0.0
                        for kk in range(10):
                            inner = 0.0
                            for vv in range(4):
                                inner += ghost_t[g, v, vv] * coeffs_in[c, kk, vv]
                            acc += ghost_g[g, k, kk] * inner
                        nbc[n_nb, k, v] = acc
                    nb_mom[n_nb, k] = ghost_moments[g, k]
                nb_cen[n_nb, 0] = ghost_centroid[g, 0]
                nb_cen[n_nb, 1] = ghost_centroid[g, 1]
            n_nb += 1

        cands = np.empty(4)
        cx = cell_centroid[c, 0]
        cy = cell_centroid[c, 1]
        # order 3: neighbor means of third derivatives are their coefficients
        for idx in range(6, 10):
            for v in range(4):
                cands[0] = work[idx, v]
                for j in range(n_nb):
                    cands[1 + j] = nbc[j, idx, v]
                work[idx, v] = _minmod_write(cands, 1 + n_nb)
        # order 2
        for v in range(4):
            for which in range(3):
                idx = 3 + which
                cands[0] = work[idx, v]
                for j in range(n_nb):
                    dx = nb_cen[j, 0] - cx
                    dy = nb_cen[j, 1] - cy
                    if which == 0:
                        sub = 3.0 * work[6, v] * dx + work[7, v] * dy
                    elif which == 1:
                        sub = 2.0 * work[7, v] * dx + 2.0 * work[8, v] * dy
                    else:
                        sub = work[8, v] * dx + 3.0 * work[9, v] * dy
                    cands[1 + j] = nbc[j, idx, v] - sub
                work[idx, v] = _minmod_write(cands, 1 + n_nb)
        # order 1
        for v in range(4):
            for which in range(2):
                idx = 1 + which
                cands[0] = work[idx, v]
                for j in range(n_nb):
                    dx = nb_cen[j, 0] - cx
                    dy = nb_cen[j, 1] - cy
                    m20 = dx * dx + nb_mom[j, 3]
                    m11 = dx * dy + nb_mom[j, 4]
                    m02 = dy * dy + nb_mom[j, 5]
                    if which == 0:
                        nb_mean = (nbc[j, 1, v] + 3.0 * nbc[j, 6, v] * nb_mom[j, 3]
                                   + 2.0 * nbc[j, 7, v] * nb_mom[j, 4]
                                   + nbc[j, 8, v] * nb_mom[j, 5])
                        sub = (2.0 * work[3, v] * dx + work[4, v] * dy
                               + 3.0 * work[6, v] * m20 + 2.0 * work[7, v] * m11
                               + work[8, v] * m02)
                    else:
                        nb_mean = (nbc[j, 2, v] + nbc[j, 7, v] * nb_mom[j, 3]
                                   + 2.0 * nbc[j, 8, v] * nb_mom[j, 4]
                                   + 3.0 * nbc[j, 9, v] * nb_mom[j, 5])
                        sub = (work[4, v] * dx + 2.0 * work[5, v] * dy
                               + work[7, v] * m20 + 2.0 * work[8, v] * m11
                               + 3.0 * work[9, v] * m02)
                    cands[1 + j] = nb_mean - sub
                work[idx, v] = _minmod_write(cands, 1 + n_nb)
        for k in range(10):
            for v in range(4):
                coeffs_out[c, k, v] = work[k, v]
