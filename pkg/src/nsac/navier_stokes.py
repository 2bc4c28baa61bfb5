"""Momentum step with generalized Navier walls and pressure projection.

In the channel, ``(S(u) n)_tau = eta dn u_tau`` on the walls because
``u_z = 0`` there, so the GNBC becomes a Robin condition per tangential
component,

    eta dn u_tau + beta u_tau = Y grad_tau psi,

with ``Y`` the Young-stress coefficient (``Lcal(psi)`` for dynamic walls,
``L(psi)`` otherwise).  It is imposed with the same half-cell ``flux``
closure as the Allen-Cahn wall row.  ``u_z`` is held at zero on the walls.

The projection removes the divergence measured by ``ChannelGrid.divergence``
exactly: per wavenumber it solves ``D G' q = D u* / dt`` where ``G'`` is the
gradient with its wall rows in z suppressed, so wall velocities stay put.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .channel import BOTTOM, TOP, ChannelGrid
from .elliptic_bs import modal_solver
from .energetics import L_operator, Lcal_operator, PhysParams, capillary_force
from .state import DIV_TOL, CFLError, SimState, SolverError

__all__ = ["SimState", "momentum_step", "project", "ns_step", "advection",
           "young_coefficient", "cfl_limit"]


def advection(grid: ChannelGrid, u) -> np.ndarray:
    """Skew-symmetric form 0.5 [(u . grad) u + div(u (x) u)]."""
    out = np.empty_like(u)
    for i in range(grid.dim):
        g = grid.gradient(u[i])
        conv = np.sum(u * g, axis=0)
        div = grid.divergence(u * u[i])
        out[i] = 0.5 * (conv + div)
    return out


def young_coefficient(grid: ChannelGrid, phi, psi_wall, wall: int, params: PhysParams,
                      surface_diffusion: float) -> np.ndarray:
    if surface_diffusion > 0:
        return Lcal_operator(grid, phi, psi_wall, wall, params, gamma=surface_diffusion)
    return L_operator(grid, phi, psi_wall, wall, params)


def cfl_limit(grid: ChannelGrid, u) -> float:
    umax = float(np.max(np.abs(u)))
    if umax == 0.0:
        return np.inf
    return 0.5 * min(min(grid.dx), grid.dz) / umax


def momentum_step(state: SimState, params: PhysParams, dt: float,
                  surface_diffusion: float | None = None, young_stress: bool = True,
                  check_cfl: bool = True) -> np.ndarray:
    """Pre-projection velocity ``u*`` from the implicit viscous/slip solve.

    Args:
        surface_diffusion: coefficient of ``-lap_tau psi`` in the Young stress;
            ``None`` means ``params.gamma``.  Pass 0 for relaxation walls.
        young_stress: set False to drop the wall forcing (plain Navier slip).
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    grid = state.grid
    u = state.u
    if check_cfl:
        lim = cfl_limit(grid, u)
        if dt > lim:
            raise CFLError(f"dt={dt:g} exceeds the CFL limit; use dt <= {lim:.3e}")
    gamma = params.gamma if surface_diffusion is None else surface_diffusion
    eta = params.eta

    rhs = u / dt - advection(grid, u) - capillary_force(grid, state.phi) - grid.gradient(state.p)

    tangential = grid.dim - 1
    h = np.zeros((tangential, 2) + grid.surface_shape)
    if young_stress:
        for w in (BOTTOM, TOP):
            Y = young_coefficient(grid, state.phi, state.psi[w], w, params, gamma)
            gt = grid.tangential_gradient(state.psi[w])
            for d in range(tangential):
                h[d, w] = Y * gt[d]

    robin = modal_solver(grid, 1.0 / (eta * dt), params.beta / eta, 0.0, 0.0, "flux")
    normal = modal_solver(grid, 1.0 / (eta * dt), 0.0, 0.0, 0.0, "dirichlet")
    u_star = np.empty_like(u)
    for d in range(tangential):
        u_star[d] = robin.solve(rhs[d] / eta, h[d] / eta)
    u_star[-1] = normal.solve(rhs[-1] / eta, np.zeros((2,) + grid.surface_shape))
    if not np.all(np.isfinite(u_star)):
        raise SolverError("momentum solve produced non-finite values")
    return u_star


@lru_cache(maxsize=16)
def _projection_operators(grid: ChannelGrid) -> np.ndarray:
    """Pseudo-inverses of ``D G'`` per wavenumber (flattened rfftn order)."""
    M = grid.n_wall
    h = grid.dz
    Dz = np.zeros((M, M))
    j = np.arange(1, M - 1)
    Dz[j, j + 1] = 1 / (2 * h)
    Dz[j, j - 1] = -1 / (2 * h)
    Dz[0, :3] = np.array([-3, 4, -1]) / (2 * h)
    Dz[-1, -3:] = np.array([1, -4, 3]) / (2 * h)
    Dz_int = Dz.copy()
    Dz_int[0] = 0.0
    Dz_int[-1] = 0.0
    DzDz = Dz @ Dz_int
    # (ik)(ik) with Nyquist removed, per direction
    ik2 = np.zeros(grid.spectral_surface_shape)
    for ik in grid._ik:
        ik2 = ik2 + (ik * ik).real
    ik2 = ik2.ravel()
    ops = DzDz[None, :, :] + ik2[:, None, None] * np.eye(M)[None]
    return np.linalg.pinv(ops, rcond=1e-12), Dz_int


def project(grid: ChannelGrid, u_star, dt: float, p=None):
    """Remove the discrete divergence of ``u_star``.

    Returns ``(u, p_new)`` where ``p_new = p + q`` re-gauged to zero mean
    (``p`` defaults to zero, in which case ``p_new`` is the increment ``q``).
    """
    u_star = grid.check_vector(u_star, "u_star")
    wall_un = max(np.max(np.abs(u_star[-1][..., 0])), np.max(np.abs(u_star[-1][..., -1])))
    if wall_un > DIV_TOL:
        raise SolverError(f"u_star has wall-normal velocity {wall_un:.3e} on a wall")
    pinv, Dz_int = _projection_operators(grid)
    M = grid.n_wall
    div_hat = grid.fft(grid.divergence(u_star)) / dt
    shape = div_hat.shape
    q_hat = np.einsum("mij,mj->mi", pinv, div_hat.reshape(-1, M)).reshape(shape)
    q = grid.ifft(q_hat)

    u = u_star.copy()
    for d in range(grid.dim - 1):
        u[d] -= dt * grid.d_periodic(q, d)
    u[-1] -= dt * np.einsum("ij,...j->...i", Dz_int, q)
    u[-1][..., 0] = 0.0
    u[-1][..., -1] = 0.0

    div = float(np.max(np.abs(grid.divergence(u))))
    scale = max(1.0, float(np.max(np.abs(u))))
    if div > DIV_TOL * scale:
        raise SolverError(f"projection left divergence {div:.3e}")
    p_new = q if p is None else p + q
    p_new = p_new - grid.volume_mean(p_new)
    return u, p_new


def ns_step(state: SimState, params: PhysParams, dt: float,
            surface_diffusion: float | None = None, young_stress: bool = True,
            check_cfl: bool = True) -> SimState:
    """Momentum step + projection; ``phi`` and ``psi`` are carried unchanged."""
    u_star = momentum_step(state, params, dt, surface_diffusion, young_stress, check_cfl)
    u, p = project(state.grid, u_star, dt, state.p)
    return SimState(state.grid, u, p, state.phi.copy(), state.psi.copy(), state.t + dt)
