"""Coupled time loop, initial presets, decay runs and the delta study."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from ..allen_cahn import ACMode, ac_step, check_mode
from ..diagnostics import (DecayFit, decay_fit, decay_quantity, dissipation, energy,
                           smallness, step_dissipation)
from ..energetics import TRACE_TOL
from ..navier_stokes import ns_step, project
from ..state import SimState, SolverError
from .config import RunConfig
from .io import read_snapshot, write_snapshot, write_timeseries

log = logging.getLogger(__name__)

PHI_SQ_BOUNDS = (2.0 / 3.0, 4.0)


class BoundViolation(SolverError):
    """phi left the small-data region 2/3 <= phi^2 <= 4 during a decay run."""


@dataclass
class RunReport:
    state: SimState
    rows: list[dict]
    summary: dict
    snapshot_path: Path | None = None
    diagnostics_path: Path | None = None
    decay_times: list[float] = field(default_factory=list)
    decay_values: list[float] = field(default_factory=list)


# ------------------------------------------------------------------ presets

def _solenoidal_velocity(grid, amplitude: float, k: int) -> np.ndarray:
    """u from the stream function sin(k x) (1 - z^2)^2, projected discretely."""
    mesh = grid.mesh()
    x, z = mesh[0], mesh[-1]
    kx = 2 * np.pi / grid.period_lengths[0] * max(k, 1)
    u = np.zeros((grid.dim,) + grid.shape)
    u[0] = amplitude * np.sin(kx * x) * (-4 * z * (1 - z ** 2))
    u[-1] = -amplitude * kx * np.cos(kx * x) * (1 - z ** 2) ** 2
    u[-1][..., 0] = 0.0
    u[-1][..., -1] = 0.0
    u, _ = project(grid, u, 1.0)
    return u


def _noise(grid, amplitude: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    mesh = grid.mesh()
    z = mesh[-1]
    out = np.zeros(grid.shape)
    for d in range(grid.dim - 1):
        x = mesh[d]
        kbase = 2 * np.pi / grid.period_lengths[d]
        for k in (1, 2, 3):
            a, b = rng.standard_normal(2)
            out += (a * np.cos(k * kbase * x) + b * np.sin(k * kbase * x)) / k ** 2
    return amplitude * out * np.cos(0.5 * np.pi * z)


def _band_profile(cfg: RunConfig, grid) -> np.ndarray:
    """1D equilibrium across z, relaxed from tanh(z / sqrt 2) with the AC step.

    The interface width is fixed at order one and the channel height is 2, so
    no odd kink survives: with neutral walls the profile relaxes to a
    constant, with wetting walls to symmetric wall boundary layers.
    """
    params = cfg.params
    mode = check_mode(cfg.mode, params)
    z = grid.mesh()[-1]
    phi = cfg.init_sign * np.tanh(z / math.sqrt(2.0))
    state = SimState.from_phi(grid, phi)
    dt = 0.05
    for _ in range(20000):
        step = ac_step(state, params, mode, dt)
        change = float(np.max(np.abs(step.phi - state.phi)))
        state.phi, state.psi = step.phi, step.psi
        if change < 1e-12:
            break
    return state.phi


def initial_state(cfg: RunConfig) -> SimState:
    """Build the t = 0 state; psi is always set to the trace of phi."""
    if cfg.init == "snapshot":
        snap = read_snapshot(cfg.init_path)
        grid = cfg.grid()
        if snap.grid.shape != grid.shape:
            raise ValueError(f"snapshot grid {snap.grid.shape} does not match config {grid.shape}")
        return SimState.from_phi(grid, snap.phi, u=snap.u, p=snap.p)
    grid = cfg.grid()
    if cfg.init == "stationary":
        return SimState.from_phi(grid, np.full(grid.shape, cfg.init_sign))
    if cfg.init == "band":
        return SimState.from_phi(grid, _band_profile(cfg, grid))

    mesh = grid.mesh()
    x, z = mesh[0], mesh[-1]
    kx = 2 * np.pi / grid.period_lengths[0] * cfg.init_wavenumber
    pert = np.cos(kx * x) * np.cos(0.5 * np.pi * z)
    if cfg.init_noise:
        pert = pert + _noise(grid, cfg.init_noise / max(cfg.init_amplitude, 1e-300), cfg.seed)
    vel = (_solenoidal_velocity(grid, 1.0, cfg.init_wavenumber)
           if cfg.init_velocity else np.zeros((grid.dim,) + grid.shape))

    def build(scale: float) -> SimState:
        phi = cfg.init_mean + scale * cfg.init_amplitude * pert
        return SimState.from_phi(grid, phi, u=scale * cfg.init_velocity * vel)

    state = build(1.0)
    if cfg.rescale_to_eps0:
        budget = cfg.params.eps0
        if smallness(state, cfg.params) > budget:
            lo, hi = 0.0, 1.0
            if smallness(build(0.0), cfg.params) > budget:
                raise ValueError("initial data cannot meet the eps0 budget by rescaling "
                                 "the perturbation (|nu cos theta_s| or the mean is too large)")
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if smallness(build(mid), cfg.params) > budget:
                    hi = mid
                else:
                    lo = mid
            state = build(lo)
    return state


# --------------------------------------------------------------- time loop

def _row(state: SimState, e, d, residual: float) -> dict:
    g = state.grid
    return {"t": state.t, "e_kin": e.e_kin, "e_bulk": e.e_bulk, "e_surf": e.e_surf,
            "e_total": e.e_total, "d_visc": d.d_visc, "d_chem": d.d_chem,
            "d_slip": d.d_slip, "d_wall": d.d_wall, "mass": g.volume_integral(state.phi),
            "residual": residual, "max_abs_phi": float(np.max(np.abs(state.phi)))}


def coupled_step(state: SimState, cfg: RunConfig, mode: ACMode, dt: float):
    """AC step with frozen u, then NS step with the new phi, psi; Picard repeats."""
    params = cfg.params
    u_frozen = state.u
    for _ in range(cfg.picard_iters):
        ac = ac_step(state, params, mode, dt, u=u_frozen)
        mid = SimState(state.grid, state.u, state.p, ac.phi, ac.psi, state.t)
        new = ns_step(mid, params, dt, surface_diffusion=mode.surface_diffusion(params))
        u_frozen = new.u
    return new, ac


def run_simulation(cfg: RunConfig, write: bool = True, track_decay: bool = False,
                   output_dir=None, state: SimState | None = None) -> RunReport:
    """Advance from t = 0 to ``t_end`` and write diagnostics and the final snapshot.

    Raises:
        SolverError: with the failing step index (CFL violations included).
    """
    params = cfg.params
    mode = check_mode(cfg.mode, params)
    dt = cfg.dt
    state = initial_state(cfg) if state is None else state
    out = Path(output_dir if output_dir is not None else cfg.output_dir)

    e_prev = energy(state, params, mode)
    rows = [_row(state, e_prev, dissipation(state, params, mode), float("nan"))]
    report = RunReport(state, rows, {})
    max_res = 0.0
    phi_sq = [float(np.min(state.phi ** 2)), float(np.max(state.phi ** 2))]

    def record_decay(s):
        report.decay_times.append(s.t)
        report.decay_values.append(decay_quantity(s, params))

    if track_decay:
        record_decay(state)

    n_steps = cfg.n_steps
    for n in range(n_steps):
        try:
            new, ac = coupled_step(state, cfg, mode, dt)
        except SolverError as exc:
            raise type(exc)(f"step {n} (t={state.t:.6g}): {exc}") from exc
        new.t = (n + 1) * dt
        tm = new.trace_mismatch()
        if tm > TRACE_TOL:
            raise SolverError(f"step {n}: trace(phi) and psi differ by {tm:.3e}")
        e = energy(new, params, mode)
        d = step_dissipation(new.grid, params, new.u, ac.rate, new.t)
        res = (e.e_total - e_prev.e_total) / dt + d.total
        max_res = max(max_res, abs(res))
        e_prev = e
        state = new
        phi_sq[0] = min(phi_sq[0], float(np.min(state.phi ** 2)))
        phi_sq[1] = max(phi_sq[1], float(np.max(state.phi ** 2)))
        if (n + 1) % cfg.output_every == 0 or n == n_steps - 1:
            rows.append(_row(state, e, d, res))
            if track_decay:
                record_decay(state)

    log.info("%d steps to t=%.6g, max energy residual %.3e", n_steps, state.t, max_res)
    report.state = state
    report.summary = {
        "mode": mode.value, "steps": n_steps, "t_end": state.t,
        "mass_drift": rows[-1]["mass"] - rows[0]["mass"],
        "max_energy_residual": max_res,
        "energy_initial": rows[0]["e_total"], "energy_final": rows[-1]["e_total"],
        "min_phi_sq": phi_sq[0], "max_phi_sq": phi_sq[1],
    }
    if write:
        report.diagnostics_path = write_timeseries(rows, out / "diagnostics.csv")
        report.snapshot_path = write_snapshot(state, out / "final")
        (out / "summary.json").write_text(json.dumps(report.summary, indent=2) + "\n")
    return report


def run_decay(cfg: RunConfig, write: bool = True, output_dir=None) -> RunReport:
    """Run, fit ``||u||^2 + ||L(psi)||^2 + ||mu - mubar||^2`` over ``[decay_t0, t_end]``.

    Raises:
        BoundViolation: if 2/3 <= phi^2 <= 4 fails at any step.
    """
    report = run_simulation(cfg, write=False, track_decay=True)
    lo, hi = PHI_SQ_BOUNDS
    s = report.summary
    s["phi_sq_bounds_hold"] = bool(s["min_phi_sq"] >= lo and s["max_phi_sq"] <= hi)
    t = np.array(report.decay_times)
    v = np.array(report.decay_values)
    sel = t >= cfg.decay_t0 - 1e-12
    fit: DecayFit = decay_fit(t[sel], v[sel])
    s["decay"] = {"alpha": fit.alpha, "c0": fit.c0, "r2": fit.r2,
                  "t0": cfg.decay_t0, "t1": float(t[-1]), "samples": int(sel.sum())}
    s["smallness_initial"] = smallness(initial_state(cfg), cfg.params)
    s["eps0"] = cfg.params.eps0
    if write:
        out = Path(output_dir if output_dir is not None else cfg.output_dir)
        report.diagnostics_path = write_timeseries(report.rows, out / "diagnostics.csv")
        report.snapshot_path = write_snapshot(report.state, out / "final")
        (out / "summary.json").write_text(json.dumps(s, indent=2) + "\n")
    if not s["phi_sq_bounds_hold"]:
        raise BoundViolation(
            f"phi^2 left [{lo:.4g}, {hi:.4g}]: min {s['min_phi_sq']:.4g}, max {s['max_phi_sq']:.4g}")
    return report


@dataclass
class DeltaStudy:
    deltas: list[float]
    psi_vs_relax: list[float]
    phi_vs_relax: list[float]
    psi_successive: list[float]
    phi_successive: list[float]

    def table(self) -> str:
        lines = ["delta, |psi_d - psi_relax|inf, |phi_d - phi_relax|inf, "
                 "|psi_d - psi_prev|inf, |phi_d - phi_prev|inf"]
        for i, d in enumerate(self.deltas):
            succ_psi = self.psi_successive[i - 1] if i else float("nan")
            succ_phi = self.phi_successive[i - 1] if i else float("nan")
            lines.append(f"{d:.6g}, {self.psi_vs_relax[i]:.6e}, {self.phi_vs_relax[i]:.6e}, "
                         f"{succ_psi:.6e}, {succ_phi:.6e}")
        return "\n".join(lines)


def run_delta_study(cfg: RunConfig, deltas: Sequence[float]) -> DeltaStudy:
    """delta-approximate runs against the relaxation run at ``t_end``."""
    deltas = [float(d) for d in deltas]
    if not deltas:
        raise ValueError("delta list is empty")
    if any(not (0 < d <= 1) for d in deltas):
        raise ValueError("deltas must lie in (0, 1]")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("deltas must be strictly decreasing")
    relax_cfg = replace(cfg, mode="relaxation", params=replace(cfg.params, gamma=0.0, delta=0.0))
    relax = run_simulation(relax_cfg, write=False).state
    psi, phi = [], []
    for d in deltas:
        dcfg = replace(cfg, mode="delta_approx", params=replace(cfg.params, gamma=0.0, delta=d))
        st = run_simulation(dcfg, write=False).state
        psi.append(st.psi)
        phi.append(st.phi)
    inf = lambda a: float(np.max(np.abs(a)))
    return DeltaStudy(
        deltas,
        [inf(p - relax.psi) for p in psi],
        [inf(p - relax.phi) for p in phi],
        [inf(b - a) for a, b in zip(psi, psi[1:])],
        [inf(b - a) for a, b in zip(phi, phi[1:])],
    )
