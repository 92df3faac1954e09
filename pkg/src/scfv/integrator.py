"""Two-stage fourth-order time integration of the subcell averages.

Each stage rebuilds the reconstruction, the troubled-cell mask, and the
time-integrated fluxes; the second stage combines the flux integrals of
both stages so the update carries the flux and its time derivative at the
step start and midpoint.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from scfv import kernels
from scfv import limiter as limmod
from scfv.errors import SolverAbort, StateError
from scfv.gas import primitive_from_conserved

# Second-stage combination of the four flux time integrals
# (dt/2 and dt at the step start; dt/2 and dt at the midpoint state).
STAGE2_WEIGHTS = (8.0 / 3.0, -1.0 / 3.0, -8.0 / 3.0, 4.0 / 3.0)


@dataclass
class StateField:
    """Subcell conserved averages plus clock and step counter."""

    qbar: np.ndarray       # (4N, 4)
    t: float = 0.0
    step: int = 0

    def copy(self):
        return StateField(qbar=self.qbar.copy(), t=self.t, step=self.step)


@dataclass
class StepStats:
    dt: float
    troubled: int = 0
    fallback_cells: int = 0


def compute_dt(geom, qbar, model, cfl):
    """Stable step: cfl * min over main cells of h / (|u| + c + 2 nu / h)."""
    prim = primitive_from_conserved(qbar, model.gamma)
    if np.any(prim[:, 0] <= 0.0) or np.any(prim[:, 3] <= 0.0):
        bad = int(np.nonzero((prim[:, 0] <= 0.0) | (prim[:, 3] <= 0.0))[0][0])
        raise SolverAbort("non-physical state in time-step control",
                          cell_id=bad // 4)
    speed = (np.hypot(prim[:, 1], prim[:, 2])
             + np.sqrt(model.gamma * prim[:, 3] / prim[:, 0]))
    n = geom.mesh.n_cells
    cell_speed = speed.reshape(n, 4).max(axis=1)
    if model.viscous:
        nu = (model.mu / prim[:, 0]).reshape(n, 4).max(axis=1)
        cell_speed = cell_speed + 2.0 * nu / geom.mesh.h_cell
    return cfl * float(np.min(geom.mesh.h_cell / cell_speed))


def accumulate_residual(geom, face_flux):
    """Surface sums divided by subcell areas; input is one flux integral
    per face (global frame, already length- and weight-summed)."""
    out = np.empty((geom.mesh.n_subcells, 4))
    kernels.accumulate_residual(face_flux, geom.fa_left, geom.fa_right,
                                geom.mesh.sub_area, out)
    return out


class Integrator:
    """Couples reconstruction, limiting, fluxes, and the two-stage update."""

    def __init__(self, geom, model, limiter=None):
        self.geom = geom
        self.model = model
        self.limiter = limiter or limmod.LimiterConfig(enabled=False)
        self._scratch_flux = np.empty((geom.n_flux_faces, 2, 4))
        self._scratch_err = np.empty(geom.n_flux_faces, dtype=np.int8)

    # -- per-stage pipeline -------------------------------------------------

    def _prepare(self, qbar, stage, t):
        """Reconstruct, detect/limit, and apply the positivity fallback."""
        geom = self.geom
        coeffs, shifts = geom.reconstruct(qbar)
        troubled = 0
        if self.limiter.enabled:
            if self.limiter.force_all:
                flags = np.ones(geom.mesh.n_cells, dtype=bool)
            else:
                mask = limmod.detect_troubled(
                    geom, qbar, self.model.gamma, self.limiter.threshold,
                    coeffs=coeffs, shifts=shifts)
                flags = mask.flags
            troubled = int(flags.sum())
            if troubled:
                coeffs = limmod.apply_hr_limiter(geom, coeffs, flags)
                shifts = geom.correct_subcells(coeffs, qbar)
        rho_p = limmod.face_values(geom, coeffs, shifts, self.model.gamma)
        indicator = np.empty(geom.mesh.n_cells)
        bad = np.empty(geom.mesh.n_cells, dtype=np.int8)
        kernels.detector_accumulate(rho_p, geom.fa_left, geom.fa_right,
                                    geom.fa_bc, geom.mesh.n_cells,
                                    indicator, bad)
        n_bad = int(bad.sum())
        if n_bad:
            mask = bad.astype(bool)
            coeffs = coeffs.copy()
            coeffs[mask, 1:, :] = 0.0
            shifts = geom.correct_subcells(coeffs, qbar)
        qc_sub = limmod.subcell_centroid_values(geom, coeffs, shifts)
        return coeffs, shifts, qc_sub, troubled, n_bad

    def _stage_fluxes(self, qbar, dt, stage, t):
        geom = self.geom
        model = self.model
        coeffs, shifts, qc_sub, troubled, n_bad = self._prepare(qbar, stage, t)
        kernels.flux_pass(coeffs, geom.mesh.cell_moments,
                          geom.mesh.cell_centroid, shifts, qc_sub,
                          geom.fa_left, geom.fa_right, geom.fa_bc,
                          geom.fa_normal, geom.fa_length,
                          geom.fa_qp_l, geom.fa_qp_r, geom.fa_cl, geom.fa_cr,
                          geom.fa_state,
                          model.gamma, model.K, dt, 0.5 * dt, dt,
                          model.viscous, model.mu, model.eps1,
                          model.eps1_exp, model.eps2, model.prandtl,
                          self._scratch_flux, self._scratch_err)
        if self._scratch_err.any():
            f = int(np.nonzero(self._scratch_err)[0][0])
            raise SolverAbort("non-physical state at face quadrature point",
                              cell_id=int(geom.fa_left[f]) // 4, stage=stage,
                              time=t)
        return self._scratch_flux.copy(), troubled, n_bad

    def _check_positivity(self, qbar, stage, t):
        prim = primitive_from_conserved(qbar, self.model.gamma)
        bad = (prim[:, 0] <= 0.0) | (prim[:, 3] <= 0.0) \
            | ~np.isfinite(prim).all(axis=1)
        if np.any(bad):
            raise SolverAbort("positivity violation after update",
                              cell_id=int(np.nonzero(bad)[0][0]) // 4,
                              stage=stage, time=t)

    def advance_step(self, state, dt):
        """One two-stage step; returns the new state and step statistics."""
        geom = self.geom
        q_n = state.qbar
        flux_n, troubled1, bad1 = self._stage_fluxes(q_n, dt, 1, state.t)
        r_half = accumulate_residual(geom, flux_n[:, 0])
        q_star = q_n + r_half
        self._check_positivity(q_star, 1, state.t)

        flux_s, troubled2, bad2 = self._stage_fluxes(q_star, dt, 2, state.t)
        w = STAGE2_WEIGHTS
        combined = (w[0] * flux_n[:, 0] + w[1] * flux_n[:, 1]
                    + w[2] * flux_s[:, 0] + w[3] * flux_s[:, 1])
        q_new = q_n + accumulate_residual(geom, combined)
        self._check_positivity(q_new, 2, state.t)
        stats = StepStats(dt=dt, troubled=max(troubled1, troubled2),
                          fallback_cells=bad1 + bad2)
        return StateField(qbar=q_new, t=state.t + dt, step=state.step + 1), stats


@dataclass
class RunDiagnostics:
    steps: int = 0
    wall_time: float = 0.0
    conservation_drift: np.ndarray = None
    troubled_last: int = 0
    log: list = field(default_factory=list)


def totals(geom, qbar):
    return qbar.T @ geom.mesh.sub_area


def run(integrator, state, end_time, cfl, log_every=0, on_output=None,
        output_interval=0.0, printer=print):
    """March to the end time with exact final-step clamping.

    on_output(state) fires after every output_interval of simulated time
    (and at the end); log lines go through printer at log_every steps.
    """
    geom = integrator.geom
    model = integrator.model
    t_start = time.perf_counter()
    total0 = totals(geom, state.qbar)
    diag = RunDiagnostics()
    next_output = state.t + output_interval if output_interval > 0 else np.inf
    while state.t < end_time - 1e-14 * max(1.0, end_time):
        dt = compute_dt(geom, state.qbar, model, cfl)
        if state.t + dt > end_time:
            dt = end_time - state.t
        state, stats = integrator.advance_step(state, dt)
        diag.steps += 1
        diag.troubled_last = stats.troubled
        if log_every and state.step % log_every == 0:
            printer(f"step={state.step} t={state.t:.6g} dt={stats.dt:.6g}"
                    f" troubled={stats.troubled}")
        if state.t >= next_output - 1e-14:
            if on_output is not None:
                on_output(state)
            next_output += output_interval
    if on_output is not None:
        on_output(state)
    total1 = totals(geom, state.qbar)
    scale = np.maximum(np.abs(total0), 1e-300)
    diag.conservation_drift = np.abs(total1 - total0) / scale
    diag.wall_time = time.perf_counter() - t_start
    return state, diag


def ode_surrogate_step(q, kappa, dt):
    """The same two-stage combination on the scalar ODE q' = kappa q, with
    the flux time integral stubbed by its exact second-order model."""

    def fhat(qq, d):
        return kappa * qq * d + 0.5 * kappa * kappa * qq * d * d

    q_star = q + fhat(q, 0.5 * dt)
    w = STAGE2_WEIGHTS
    return q + (w[0] * fhat(q, 0.5 * dt) + w[1] * fhat(q, dt)
                + w[2] * fhat(q_star, 0.5 * dt) + w[3] * fhat(q_star, dt))
