"""Energies, dissipation rates, energy-law residuals, norms and decay fits."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .allen_cahn import ACMode, chemical_potential, mean_mu
from .channel import BOTTOM, TOP, ChannelGrid
from .energetics import PhysParams, bulk_potential, viscous_stress, wall_energy
from .navier_stokes import young_coefficient
from .state import SimState


@dataclass
class EnergyReport:
    e_kin: float
    e_bulk: float
    e_surf: float
    e_total: float
    t: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class DissipationReport:
    d_visc: float
    d_chem: float
    d_slip: float
    d_wall: float
    t: float = 0.0

    @property
    def total(self) -> float:
        return self.d_visc + self.d_chem + self.d_slip + self.d_wall

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class DecayFit:
    alpha: float
    c0: float
    r2: float


@dataclass
class ResidualSeries:
    values: np.ndarray
    max: float
    mean: float


def energy(state: SimState, params: PhysParams, mode=ACMode.DYNAMIC) -> EnergyReport:
    """Kinetic, bulk free and surface free energy of a state.

    The gradient part of the bulk energy uses the summation-by-parts form
    (``ChannelGrid.dirichlet_norm_sq``) that the Allen-Cahn step dissipates.
    """
    mode = ACMode(mode)
    g = state.grid
    e_kin = 0.5 * g.volume_integral(np.sum(state.u ** 2, axis=0))
    e_bulk = 0.5 * g.dirichlet_norm_sq(state.phi) + g.volume_integral(bulk_potential(state.phi))
    gamma = mode.surface_diffusion(params)
    e_surf = 0.0
    for w in (BOTTOM, TOP):
        psi = state.psi[w]
        e_surf += g.surface_integral(wall_energy(psi, params))
        if gamma:
            e_surf += 0.5 * gamma * g.tangential_norm_sq(psi)
    return EnergyReport(e_kin, e_bulk, e_surf, e_kin + e_bulk + e_surf, state.t)


def dissipation(state: SimState, params: PhysParams, mode=ACMode.DYNAMIC) -> DissipationReport:
    """Instantaneous dissipation functionals evaluated from the state alone.

    ``d_visc = int |S(u)|^2 / (2 eta)``, ``d_chem = int |mu - mubar|^2``,
    ``d_slip = beta int_Gamma |u_tau|^2`` and ``d_wall = int_Gamma |Y|^2`` with
    ``Y`` the boundary operator of the mode.
    """
    mode = ACMode(mode)
    g = state.grid
    S = viscous_stress(g, state.u, params.eta)
    d_visc = g.volume_integral(np.sum(S ** 2, axis=(0, 1))) / (2.0 * params.eta)
    mu = chemical_potential(g, state.phi)
    d_chem = g.volume_integral((mu - mean_mu(g, mu)) ** 2)
    gamma = mode.surface_diffusion(params)
    d_slip = 0.0
    d_wall = 0.0
    for w in (BOTTOM, TOP):
        ut2 = sum(g.trace(state.u[d], w) ** 2 for d in range(g.dim - 1))
        d_slip += params.beta * g.surface_integral(ut2)
        Y = young_coefficient(g, state.phi, state.psi[w], w, params, gamma)
        d_wall += g.surface_integral(Y ** 2)
    return DissipationReport(d_visc, d_chem, d_slip, d_wall, state.t)


def step_dissipation(grid: ChannelGrid, params: PhysParams, u, rate, t: float = 0.0
                     ) -> DissipationReport:
    """Dissipation of one coupled step at the step-consistent levels.

    ``u`` is the new velocity and ``rate`` the Allen-Cahn step rate
    (``ACStep.rate``).  These are the quantities the discrete scheme actually
    dissipates, so ``(E^{n+1} - E^n)/dt + D`` measures splitting error only.
    """
    d_visc = params.eta * sum(grid.dirichlet_norm_sq(u[i]) for i in range(grid.dim))
    d_chem = grid.volume_integral(rate ** 2)
    d_slip = 0.0
    d_wall = 0.0
    for w, j in ((BOTTOM, 0), (TOP, -1)):
        ut2 = sum(grid.trace(u[d], w) ** 2 for d in range(grid.dim - 1))
        d_slip += params.beta * grid.surface_integral(ut2)
        d_wall += grid.surface_integral(rate[..., j] ** 2)
    return DissipationReport(d_visc, d_chem, d_slip, d_wall, t)


def energy_residual(history: Sequence[tuple[EnergyReport, DissipationReport]], dt: float,
                    rtol: float = 1e-9) -> ResidualSeries:
    """Per-step ``(E^{n+1} - E^n)/dt + D^{n+1/2}``.

    ``history[n+1][1]`` must hold the dissipation of the step from n to n+1.

    Raises:
        ValueError: fewer than two reports or non-uniform time spacing.
    """
    if len(history) < 2:
        raise ValueError("need at least two consecutive reports")
    times = np.array([e.t for e, _ in history])
    steps = np.diff(times)
    if np.any(np.abs(steps - dt) > rtol * max(dt, abs(times[-1]))):
        raise ValueError("reports are not spaced uniformly by dt")
    E = np.array([e.e_total for e, _ in history])
    D = np.array([d.total for _, d in history[1:]])
    res = np.diff(E) / dt + D
    return ResidualSeries(res, float(np.max(np.abs(res))), float(np.mean(res)))


def mass(state: SimState) -> float:
    return state.grid.volume_integral(state.phi)


def _derivatives(grid: ChannelGrid, f, order: int) -> list[np.ndarray]:
    out = [f]
    if order >= 1:
        first = list(grid.gradient(f))
        out += first
    if order >= 2:
        for i in range(grid.dim):
            for j in range(i, grid.dim):
                if i == grid.dim - 1 and j == grid.dim - 1:
                    dij = grid.d2_z(f)
                elif j == grid.dim - 1:
                    dij = grid.d_periodic(first[j], i)
                else:
                    dij = grid.d_periodic(first[i], j)
                # mixed partials appear twice in |D^2 f|^2
                out += [dij] if i == j else [dij, dij]
    return out


def sobolev_norm(grid: ChannelGrid, field, order: int) -> float:
    """Integer-order H^k norm (k = 0, 1, 2) of a scalar or vector bulk field."""
    if order not in (0, 1, 2):
        raise ValueError(f"unsupported Sobolev order {order}; use 0, 1 or 2")
    field = np.asarray(field, dtype=float)
    comps = [field] if field.shape == grid.shape else list(field)
    total = 0.0
    for c in comps:
        for d in _derivatives(grid, c, order):
            total += grid.volume_integral(d * d)
    return math.sqrt(total)


def surface_sobolev_norm(grid: ChannelGrid, s, order: int) -> float:
    """H^0 or H^1 norm of a wall field."""
    if order not in (0, 1):
        raise ValueError(f"unsupported surface Sobolev order {order}; use 0 or 1")
    s = np.asarray(s, dtype=float)
    total = grid.surface_integral(s * s)
    if order == 1:
        total += grid.tangential_norm_sq(s)
    return math.sqrt(total)


def decay_quantity(state: SimState, params: PhysParams) -> float:
    """||u||^2 + ||L(psi)||^2_Gamma + ||mu - mubar||^2."""
    g = state.grid
    mu = chemical_potential(g, state.phi)
    val = g.volume_integral(np.sum(state.u ** 2, axis=0))
    val += g.volume_integral((mu - mean_mu(g, mu)) ** 2)
    for w in (BOTTOM, TOP):
        L = young_coefficient(g, state.phi, state.psi[w], w, params, 0.0)
        val += g.surface_integral(L ** 2)
    return float(val)


def smallness(state: SimState, params: PhysParams) -> float:
    """Integer-order budget of the small-data condition on initial data.

    ``||u||_{H2}^2 + ||grad phi||_{H2}^2 + ||mu - mubar||_{H1}^2
    + ||phi^2 - 1||^2 + |nu cos theta_s|``.
    """
    g = state.grid
    mu = chemical_potential(g, state.phi)
    val = sobolev_norm(g, state.u, 2) ** 2
    val += sobolev_norm(g, g.gradient(state.phi), 2) ** 2
    val += sobolev_norm(g, mu - mean_mu(g, mu), 1) ** 2
    val += sobolev_norm(g, state.phi ** 2 - 1.0, 0) ** 2
    val += abs(params.nu * math.cos(params.theta_s))
    return float(val)


def decay_fit(times, values) -> DecayFit:
    """Least-squares fit ``log(values) = log(c0) - alpha t``.

    Raises:
        ValueError: on fewer than 10 samples or nonpositive values.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.shape != y.shape or t.size < 10:
        raise ValueError("decay_fit needs at least 10 (time, value) samples")
    if np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise ValueError("decay_fit needs strictly positive finite values")
    ly = np.log(y)
    slope, intercept = np.polyfit(t, ly, 1)
    pred = intercept + slope * t
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    if ss_tot <= 1e-300:
        r2 = 1.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return DecayFit(float(-slope), float(math.exp(intercept)), r2)
