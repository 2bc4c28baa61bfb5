"""Manufactured-solution and eigenmode refinement studies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..allen_cahn import ACMode, ac_step
from ..channel import build_grid
from ..elliptic_bs import BulkSurfaceProblem, solve_bulk_surface
from ..energetics import bulk_force, wall_force
from ..navier_stokes import ns_step
from ..state import SimState
from .config import RunConfig

MMS_CASES = ("elliptic", "ac-bulk", "ac-dynamic", "ac-stationary", "stokes-slip")
N_LEVELS = 4


@dataclass
class MMSTable:
    case: str
    nz: list[int]
    dz: list[float]
    errors: list[float]
    orders: list[float] = field(default_factory=list)
    periodic_error: float = float("nan")
    reference: float = float("nan")

    def format(self) -> str:
        lines = [f"case {self.case}", "nz, dz, error, order"]
        for i, (n, h, e) in enumerate(zip(self.nz, self.dz, self.errors)):
            order = self.orders[i - 1] if i else float("nan")
            lines.append(f"{n}, {h:.6g}, {e:.6e}, {order:.4f}")
        if not math.isnan(self.periodic_error):
            lines.append(f"periodic-direction error: {self.periodic_error:.3e}")
        if not math.isnan(self.reference):
            lines.append(f"reference value: {self.reference:.12g}")
        return "\n".join(lines)


def observed_orders(dz, errors) -> list[float]:
    out = []
    for (h0, e0), (h1, e1) in zip(zip(dz, errors), zip(dz[1:], errors[1:])):
        if e0 > 0 and e1 > 0:
            out.append(math.log(e0 / e1) / math.log(h0 / h1))
        else:
            out.append(float("nan"))
    return out


def slip_eigenvalue(eta: float, beta: float, tol: float = 1e-12) -> float:
    """Smallest positive root of ``tan(lam) = beta / (eta lam)`` by bisection."""
    if eta <= 0 or beta <= 0:
        raise ValueError("eta and beta must be positive")
    g = lambda lam: lam * math.sin(lam) * eta - beta * math.cos(lam)
    lo, hi = 0.0, 0.5 * math.pi
    # g(0) = -beta < 0, g(pi/2) = eta pi/2 > 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _levels(cfg: RunConfig, n_levels: int):
    for k in range(n_levels):
        nz = (cfg.nz - 1) * 2 ** k + 1
        if cfg.dim == 2:
            grid = build_grid(2, [cfg.nx], nz, [cfg.lx])
        else:
            grid = build_grid(3, [cfg.nx, cfg.ny], nz, [cfg.lx, cfg.ly])
        yield k, grid


def _elliptic(cfg: RunConfig, n_levels: int, closure: str) -> MMSTable:
    a, gamma, c = 1.0, 0.5, 0.7
    nz, dzs, errs = [], [], []
    for _, grid in _levels(cfg, n_levels):
        mesh = grid.mesh()
        x, z = mesh[0], mesh[-1]
        cx = np.cos(x)
        exact = cx * np.exp(c * z) + np.exp(-c * z)
        H = cx * np.exp(c * z) * (a + 1 - c * c) + np.exp(-c * z) * (a - c * c)
        xs = grid.surface_mesh()[0]
        csx = np.cos(xs)
        dz_top = c * csx * math.exp(c) - c * math.exp(-c)
        dz_bot = c * csx * math.exp(-c) - c * math.exp(c)
        psi_top = csx * math.exp(c) + math.exp(-c)
        psi_bot = csx * math.exp(-c) + math.exp(c)
        h = np.stack([gamma * csx * math.exp(-c) + a * psi_bot - dz_bot,
                      gamma * csx * math.exp(c) + a * psi_top + dz_top])
        phi, _ = solve_bulk_surface(grid, BulkSurfaceProblem(a, a, gamma, H, h, closure=closure))
        nz.append(grid.n_wall)
        dzs.append(grid.dz)
        errs.append(float(np.max(np.abs(phi - exact))))
    table = MMSTable("elliptic", nz, dzs, errs, observed_orders(dzs, errs))

    # quadratic z-profile: the z-discretization is exact, only the periodic one errs
    grid = next(_levels(cfg, 1))[1]
    mesh = grid.mesh()
    x, z = mesh[0], mesh[-1]
    ex = np.exp(np.sin(x))
    q = 1 + 0.3 * z + 0.2 * z * z
    exact = ex * q
    lap_x = (np.cos(x) ** 2 - np.sin(x)) * ex
    H = a * exact - lap_x * q - ex * 0.4
    xs = grid.surface_mesh()[0]
    exs = np.exp(np.sin(xs))
    lap_s = (np.cos(xs) ** 2 - np.sin(xs)) * exs
    q_bot, q_top = 0.9, 1.5
    dq_bot, dq_top = 0.3 - 0.4, 0.3 + 0.4
    h = np.stack([-gamma * lap_s * q_bot + a * exs * q_bot - exs * dq_bot,
                  -gamma * lap_s * q_top + a * exs * q_top + exs * dq_top])
    phi, _ = solve_bulk_surface(grid, BulkSurfaceProblem(a, a, gamma, H, h, closure=closure))
    table.periodic_error = float(np.max(np.abs(phi - exact)))
    return table


def _ac_case(cfg: RunConfig, n_levels: int, mode: ACMode) -> MMSTable:
    params = cfg.params
    gamma = mode.surface_diffusion(params)
    m, A, c = 0.6, 0.3, 0.5
    T = cfg.t_end
    nz, dzs, errs = [], [], []
    for k, grid in _levels(cfg, n_levels):
        dt = cfg.dt / 4 ** k
        steps = max(1, int(round(T / dt)))
        mesh = grid.mesh()
        x, z = mesh[0], mesh[-1]
        shape_b = np.cos(x) * np.exp(c * z)
        xs = grid.surface_mesh()[0]
        shape_w = np.stack([np.cos(xs) * math.exp(-c), np.cos(xs) * math.exp(c)])
        sign = np.array([-1.0, 1.0]).reshape((2,) + (1,) * (grid.dim - 1))

        def exact(t):
            return m + A * math.exp(-t) * shape_b

        def sources(t):
            amp = A * math.exp(-t)
            phi = m + amp * shape_b
            mu = amp * shape_b * (1 - c * c) + bulk_force(phi)
            sb = -amp * shape_b + mu
            psi = m + amp * shape_w
            dn = sign * c * amp * shape_w
            Lw = dn + wall_force(psi, params) + gamma * amp * shape_w
            sw = -amp * shape_w + Lw
            return sb, sw

        state = SimState.from_phi(grid, exact(0.0))
        for n in range(steps):
            sb, sw = sources((n + 1) * dt)
            step = ac_step(state, params, mode, dt, bulk_source=sb, wall_source=sw)
            state = SimState(grid, state.u, state.p, step.phi, step.psi, (n + 1) * dt)
        nz.append(grid.n_wall)
        dzs.append(grid.dz)
        errs.append(float(np.max(np.abs(state.phi - exact(steps * dt)))))
    name = "ac-dynamic" if mode is ACMode.DYNAMIC else "ac-bulk"
    return MMSTable(name, nz, dzs, errs, observed_orders(dzs, errs))


def _ac_stationary(cfg: RunConfig, n_levels: int) -> MMSTable:
    params = replace(cfg.params, theta_s=0.5 * math.pi)
    nz, dzs, errs = [], [], []
    for k, grid in _levels(cfg, n_levels):
        state = SimState.from_phi(grid, np.ones(grid.shape))
        for _ in range(10):
            step = ac_step(state, params, cfg.mode, cfg.dt / 4 ** k)
            state = SimState(grid, state.u, state.p, step.phi, step.psi, state.t)
        nz.append(grid.n_wall)
        dzs.append(grid.dz)
        errs.append(float(np.max(np.abs(state.phi - 1.0))))
    return MMSTable("ac-stationary", nz, dzs, errs, observed_orders(dzs, errs))


def slip_decay_rate(grid, params, dt: float, t_end: float) -> tuple[float, float]:
    """Fitted decay rate of ``||u||^2`` for the slip eigenmode, and the oracle ``2 eta lam^2``."""
    lam = slip_eigenvalue(params.eta, params.beta)
    params = replace(params, theta_s=0.5 * math.pi)
    z = grid.mesh()[-1]
    u = np.zeros((grid.dim,) + grid.shape)
    u[0] = np.cos(lam * z)
    state = SimState.from_phi(grid, np.ones(grid.shape), u=u)
    steps = max(1, int(round(t_end / dt)))
    times, ek = [0.0], [grid.volume_integral(np.sum(u ** 2, axis=0))]
    for n in range(steps):
        state = ns_step(state, params, dt, surface_diffusion=0.0)
        times.append((n + 1) * dt)
        ek.append(grid.volume_integral(np.sum(state.u ** 2, axis=0)))
    slope = np.polyfit(np.array(times), np.log(np.array(ek)), 1)[0]
    return float(-slope), 2.0 * params.eta * lam * lam


def _stokes_slip(cfg: RunConfig, n_levels: int) -> MMSTable:
    nz, dzs, errs = [], [], []
    ref = float("nan")
    for _, grid in _levels(cfg, n_levels):
        rate, ref = slip_decay_rate(grid, cfg.params, cfg.dt, cfg.t_end)
        nz.append(grid.n_wall)
        dzs.append(grid.dz)
        errs.append(abs(rate - ref) / ref)
    table = MMSTable("stokes-slip", nz, dzs, errs, observed_orders(dzs, errs))
    table.reference = ref
    return table


def run_mms(cfg: RunConfig, case: str, n_levels: int = N_LEVELS,
            closure: str = "flux") -> MMSTable:
    """Refinement study in the wall-normal direction for one case.

    Grid ``k`` uses ``(nz - 1) 2^k + 1`` wall-normal nodes; time-dependent
    Allen-Cahn cases scale ``dt`` with ``dz^2`` so the table shows the
    spatial order.

    Raises:
        ValueError: unknown case or fewer than three levels.
    """
    if case not in MMS_CASES:
        raise ValueError(f"unknown MMS case {case!r}; expected one of {MMS_CASES}")
    if n_levels < 3:
        raise ValueError("need at least three resolutions")
    if case == "elliptic":
        return _elliptic(cfg, n_levels, closure)
    if case == "ac-dynamic":
        p = cfg.params if cfg.params.gamma > 0 else replace(cfg.params, gamma=0.1)
        return _ac_case(replace(cfg, params=replace(p, delta=0.0)), n_levels, ACMode.DYNAMIC)
    if case == "ac-bulk":
        p = replace(cfg.params, gamma=0.0, delta=0.0)
        return _ac_case(replace(cfg, params=p), n_levels, ACMode.RELAXATION)
    if case == "ac-stationary":
        return _ac_stationary(cfg, n_levels)
    return _stokes_slip(cfg, n_levels)
