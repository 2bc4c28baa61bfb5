"""Mass-conserving Allen-Cahn step with dynamic, delta-approximate or relaxation walls.

The step is first-order IMEX: Laplacians implicit, ``f(phi)`` and
``gamma_fs'(psi)`` explicit with a stabilisation shift ``S (phi^{n+1} - phi^n)``,
advection explicit with the frozen velocity.  Bulk and wall updates are one
coupled linear solve (``elliptic_bs`` with the ``flux`` closure).  The wall
row is the half-cell balance

    (dz/2 + 1) (psi^{n+1} - psi^n)/dt = -dz/2 * (bulk residual at the wall)
                                        - (wall residual) + dz/2 * mubar

so the discrete free energy ``E_bulk + E_surf`` (see ``diagnostics.energy``)
has an exact semi-discrete dissipation law.  ``mubar`` is chosen each step
so that ``volume_integral(phi)`` is unchanged to rounding.

Relaxation mode is the same row with no surface diffusion: the bulk
equation restricted to the wall (weight dz/2) and the relaxation law
(weight 1) are merged, and ``psi`` is the wall value of ``phi``.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .channel import BOTTOM, TOP, ChannelGrid
from .elliptic_bs import modal_solver
from .energetics import L_operator, PhysParams, bulk_force, wall_force
from .state import SimState, SolverError


class ACMode(str, enum.Enum):
    DYNAMIC = "dynamic"
    DELTA_APPROX = "delta_approx"
    RELAXATION = "relaxation"

    def surface_diffusion(self, params: PhysParams) -> float:
        if self is ACMode.DYNAMIC:
            return params.gamma
        if self is ACMode.DELTA_APPROX:
            return params.delta
        return 0.0

    def bulk_tangential(self, params: PhysParams) -> float:
        return params.delta if self is ACMode.DELTA_APPROX else 0.0


class ModeError(ValueError):
    """Mode and coefficients are inconsistent."""


def check_mode(mode, params: PhysParams) -> ACMode:
    """Coerce ``mode`` and check it against the coefficients."""
    try:
        mode = ACMode(mode)
    except ValueError:
        raise ModeError(f"unknown mode {mode!r}; expected one of "
                        f"{[m.value for m in ACMode]}") from None
    if mode is ACMode.DYNAMIC:
        if not params.gamma > 0:
            raise ModeError("mode=dynamic requires gamma > 0")
        if params.delta != 0:
            raise ModeError("mode=dynamic requires delta = 0")
    elif mode is ACMode.DELTA_APPROX:
        if not params.delta > 0:
            raise ModeError("mode=delta_approx requires delta > 0")
        if params.gamma != 0:
            raise ModeError("mode=delta_approx requires gamma = 0")
    else:
        if params.gamma != 0 or params.delta != 0:
            raise ModeError("mode=relaxation requires gamma = 0 and delta = 0")
    return mode


def chemical_potential(grid: ChannelGrid, phi) -> np.ndarray:
    """mu = -lap(phi) + f(phi)."""
    phi = grid.check_scalar(phi, "phi")
    return -grid.laplacian(phi) + bulk_force(phi)


def mean_mu(grid: ChannelGrid, mu) -> float:
    return grid.volume_mean(mu)


def surface_advection(grid: ChannelGrid, u, psi_wall, wall: int) -> np.ndarray:
    """u_tau . grad_tau psi on one wall."""
    gt = grid.tangential_gradient(psi_wall)
    ut = [grid.trace(u[d], wall) for d in range(grid.dim - 1)]
    return sum(ut[d] * gt[d] for d in range(grid.dim - 1))


@dataclass
class ACStep:
    """Result of one Allen-Cahn step.

    ``rate`` is the discrete rate ``(phi^{n+1}-phi^n)/dt + advection`` at all
    nodes; at the wall nodes it is the merged wall rate.  ``mubar`` is the
    mass multiplier that was applied.
    """

    phi: np.ndarray
    psi: np.ndarray
    mubar: float
    rate: np.ndarray

    def __iter__(self):
        yield self.phi
        yield self.psi


def ac_step(state: SimState, params: PhysParams, mode, dt: float, u=None,
            bulk_source=None, wall_source=None) -> ACStep:
    """Advance ``(phi, psi)`` by one IMEX step with frozen velocity.

    Args:
        state: current state; ``state.u`` is used unless ``u`` is given.
        params: model coefficients (``stab`` is the shift S).
        mode: ``ACMode`` or its string value.
        dt: time step.
        u: frozen advecting velocity (Picard sub-iterations pass the latest one).
        bulk_source, wall_source: optional forcing added to the right-hand
            sides (used for manufactured solutions); ``wall_source`` has shape
            ``(2, *surface_shape)``.
    """
    mode = check_mode(mode, params)
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    grid = state.grid
    phi = state.phi
    psi = state.psi
    u = state.u if u is None else u
    a = 1.0 / dt + params.stab
    w0 = 0.5 * grid.dz

    adv = grid.divergence(u * phi)
    H = a * phi - bulk_force(phi) - adv
    if bulk_source is not None:
        H = H + bulk_source
    h = np.empty((2,) + grid.surface_shape)
    sadv = np.empty_like(h)
    for w in (BOTTOM, TOP):
        sadv[w] = surface_advection(grid, u, psi[w], w)
        h[w] = a * psi[w] - wall_force(psi[w], params) - sadv[w]
    if wall_source is not None:
        h = h + wall_source

    solver = modal_solver(grid, a, a, mode.surface_diffusion(params),
                          mode.bulk_tangential(params), "flux")
    phi_new = solver.solve(H, h)
    response = solver.zero_mode_response()
    mubar = (grid.volume_integral(phi) - grid.volume_integral(phi_new)) / (
        grid.volume_integral(np.broadcast_to(response, grid.shape)))
    phi_new = phi_new + mubar * response
    if not np.all(np.isfinite(phi_new)):
        raise SolverError("Allen-Cahn solve produced non-finite values")

    psi_new = np.stack([grid.trace(phi_new, BOTTOM), grid.trace(phi_new, TOP)])
    rate = (phi_new - phi) / dt + adv
    for w, j in ((BOTTOM, 0), (TOP, -1)):
        rate[..., j] = ((psi_new[w] - psi[w]) / dt
                        + (w0 * adv[..., j] + sadv[w]) / (w0 + 1.0))
    return ACStep(phi_new, psi_new, float(mubar), rate)


def bb1_residual(state: SimState, params: PhysParams, mode=ACMode.RELAXATION) -> float:
    """max over walls of |(mubar - mu) + L(psi)|, the relaxation boundary identity.

    The identity only holds for relaxation (and approximately for small
    delta); for dynamic mode the value is still returned but a warning is
    issued because it is not expected to vanish.
    """
    mode = ACMode(mode)
    if mode is ACMode.DYNAMIC:
        warnings.warn("bb1 residual is not expected to vanish in dynamic mode",
                      stacklevel=2)
    grid = state.grid
    mu = chemical_potential(grid, state.phi)
    mb = mean_mu(grid, mu)
    res = 0.0
    for w in (BOTTOM, TOP):
        L = L_operator(grid, state.phi, state.psi[w], w, params)
        res = max(res, float(np.max(np.abs(mb - grid.trace(mu, w) + L))))
    return res
