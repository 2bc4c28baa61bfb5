"""Coupled bulk-surface linear elliptic solver.

Solves, on the channel grid,

    a_bulk phi - lap phi - c_tau lap_tau phi = H           in the bulk
    -gamma_surf lap_tau psi + a_surf psi + dn phi = h      on each wall
    phi|_wall = psi

The wall values of ``phi`` are the unknowns ``psi`` (shared nodes), so the
trace condition holds by construction.  After a Fourier transform along the
walls every wavenumber gives an independent banded system in z.

Two closures of ``dn phi`` are offered:

``one_sided``
    second-order one-sided difference (same as ``ChannelGrid.normal_derivative``).
``flux``
    half-cell balance ``(phi_0 - phi_1)/dz + dz/2 (a_bulk phi_0 - lap_tau phi_0 - H_0)``
    (bottom wall shown).  Also second order, and its matrix is symmetric with
    respect to the trapezoid weights, which is what the time steppers rely on
    for their discrete energy identities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .channel import BOTTOM, TOP, ChannelGrid

CLOSURES = ("one_sided", "flux", "dirichlet")


class SingularSystemError(ValueError):
    """The bulk-surface problem has no unique solution."""


@dataclass
class BulkSurfaceProblem:
    a_bulk: float
    a_surf: float
    gamma_surf: float
    H: np.ndarray
    h: np.ndarray
    bulk_tangential: float = 0.0
    closure: str = "one_sided"

    def well_posed(self) -> bool:
        if self.closure == "dirichlet":
            return self.a_bulk >= 0
        return self.a_surf > 0 or self.a_bulk > 0


@dataclass
class ModalSolver:
    """Per-wavenumber inverses of the z-systems, reusable across right-hand sides."""

    grid: ChannelGrid
    a_bulk: float
    a_surf: float
    gamma_surf: float
    bulk_tangential: float
    closure: str
    inverses: np.ndarray = field(repr=False)

    def solve_hat(self, H_hat: np.ndarray, h_hat: np.ndarray) -> np.ndarray:
        """Solve with transformed data. ``h_hat`` has shape ``(2, *spectral_surface)``."""
        rhs = modal_rhs(self.grid, H_hat, h_hat, self.closure)
        M = self.grid.n_wall
        flat = rhs.reshape(-1, M)
        sol = np.einsum("mij,mj->mi", self.inverses, flat)
        return sol.reshape(rhs.shape)

    def solve(self, H: np.ndarray, h: np.ndarray) -> np.ndarray:
        grid = self.grid
        H_hat = grid.fft(H)
        h_hat = np.stack([grid.fft(h[BOTTOM]), grid.fft(h[TOP])])
        return grid.ifft(self.solve_hat(H_hat, h_hat))

    def zero_mode_response(self) -> np.ndarray:
        """z-profile of the wavenumber-zero solution for H = 1, h = 0."""
        M = self.grid.n_wall
        H_hat = np.ones(M)
        rhs = modal_rhs_single(self.grid, H_hat, np.zeros(2), self.closure)
        return self.inverses[0] @ rhs


def modal_rhs_single(grid: ChannelGrid, H_col, h_pair, closure: str) -> np.ndarray:
    rhs = np.array(H_col, dtype=complex if np.iscomplexobj(H_col) else float)
    w0 = 0.5 * grid.dz
    if closure == "flux":
        rhs[0] = w0 * rhs[0] + h_pair[0]
        rhs[-1] = w0 * rhs[-1] + h_pair[1]
    else:
        rhs[0] = h_pair[0]
        rhs[-1] = h_pair[1]
    return rhs


def modal_rhs(grid: ChannelGrid, H_hat, h_hat, closure: str) -> np.ndarray:
    rhs = np.array(H_hat, dtype=complex)
    w0 = 0.5 * grid.dz
    if closure == "flux":
        rhs[..., 0] = w0 * rhs[..., 0] + h_hat[BOTTOM]
        rhs[..., -1] = w0 * rhs[..., -1] + h_hat[TOP]
    else:
        rhs[..., 0] = h_hat[BOTTOM]
        rhs[..., -1] = h_hat[TOP]
    return rhs


def modal_matrices(grid: ChannelGrid, a_bulk: float, a_surf: float, gamma_surf: float,
                   bulk_tangential: float, closure: str) -> np.ndarray:
    """Stack of z-matrices, one per wavenumber in rfftn order (flattened)."""
    if closure not in CLOSURES:
        raise ValueError(f"unknown closure {closure!r}; expected one of {CLOSURES}")
    M = grid.n_wall
    h = grid.dz
    kk = grid.k2.ravel()
    n = kk.size
    A = np.zeros((n, M, M))
    diag = a_bulk + (1.0 + bulk_tangential) * kk + 2.0 / h ** 2
    idx = np.arange(1, M - 1)
    A[:, idx, idx] = diag[:, None]
    A[:, idx, idx - 1] = -1.0 / h ** 2
    A[:, idx, idx + 1] = -1.0 / h ** 2
    surf = a_surf + gamma_surf * kk
    if closure == "one_sided":
        A[:, 0, 0] = surf + 3.0 / (2 * h)
        A[:, 0, 1] = -4.0 / (2 * h)
        A[:, 0, 2] = 1.0 / (2 * h)
        A[:, -1, -1] = surf + 3.0 / (2 * h)
        A[:, -1, -2] = -4.0 / (2 * h)
        A[:, -1, -3] = 1.0 / (2 * h)
    elif closure == "flux":
        w0 = 0.5 * h
        wall_diag = w0 * (a_bulk + (1.0 + bulk_tangential) * kk) + 1.0 / h + surf
        A[:, 0, 0] = wall_diag
        A[:, 0, 1] = -1.0 / h
        A[:, -1, -1] = wall_diag
        A[:, -1, -2] = -1.0 / h
    else:
        A[:, 0, 0] = 1.0
        A[:, -1, -1] = 1.0
    return A


@lru_cache(maxsize=64)
def modal_solver(grid: ChannelGrid, a_bulk: float, a_surf: float, gamma_surf: float,
                 bulk_tangential: float = 0.0, closure: str = "one_sided") -> ModalSolver:
    """Factor (invert) the per-wavenumber systems once; cached by coefficients."""
    A = modal_matrices(grid, a_bulk, a_surf, gamma_surf, bulk_tangential, closure)
    cond = np.linalg.cond(A[0])
    if not np.isfinite(cond) or cond > 1e13:
        raise SingularSystemError(
            f"zero-wavenumber system is singular (cond={cond:.2e}); "
            f"a_bulk={a_bulk}, a_surf={a_surf}")
    inverses = np.linalg.inv(A)
    return ModalSolver(grid, a_bulk, a_surf, gamma_surf, bulk_tangential, closure, inverses)


def solve_bulk_surface(grid: ChannelGrid, problem: BulkSurfaceProblem):
    """Solve the coupled problem; returns ``(phi, psi)`` with ``psi`` of shape ``(2, ...)``."""
    if not problem.well_posed():
        raise SingularSystemError(
            "bulk-surface problem is not well posed: need a_surf > 0 or a_bulk > 0")
    if problem.a_bulk < 0 or problem.a_surf < 0 or problem.gamma_surf < 0:
        raise SingularSystemError("coefficients must be nonnegative")
    H = grid.check_scalar(problem.H, "H")
    h = np.asarray(problem.h, dtype=float)
    if h.shape != (2,) + grid.surface_shape:
        raise ValueError(f"h has shape {h.shape}, expected {(2,) + grid.surface_shape}")
    solver = modal_solver(grid, float(problem.a_bulk), float(problem.a_surf),
                          float(problem.gamma_surf), float(problem.bulk_tangential),
                          problem.closure)
    phi = solver.solve(H, h)
    psi = np.stack([grid.trace(phi, BOTTOM), grid.trace(phi, TOP)])
    return phi, psi


def flux_normal_derivative(grid: ChannelGrid, phi, wall: int, a_bulk: float, H,
                           bulk_tangential: float = 0.0) -> np.ndarray:
    """Half-cell normal derivative used by the ``flux`` closure."""
    h = grid.dz
    lap_t = (1.0 + bulk_tangential) * grid.laplacian_periodic(phi)
    if wall == BOTTOM:
        j, jn = 0, 1
    else:
        j, jn = -1, -2
    return ((phi[..., j] - phi[..., jn]) / h
            + 0.5 * h * (a_bulk * phi[..., j] - lap_t[..., j] - H[..., j]))


def residuals(grid: ChannelGrid, problem: BulkSurfaceProblem, phi) -> tuple[float, float]:
    """Max-norm residuals of the bulk rows and of the wall rows."""
    H = np.asarray(problem.H, dtype=float)
    bulk = (problem.a_bulk * phi - grid.laplacian(phi)
            - problem.bulk_tangential * grid.laplacian_periodic(phi) - H)
    bulk_res = float(np.max(np.abs(bulk[..., 1:-1])))
    surf_res = 0.0
    for wall in (BOTTOM, TOP):
        psi = grid.trace(phi, wall)
        if problem.closure == "dirichlet":
            r = psi - problem.h[wall]
        else:
            if problem.closure == "flux":
                dn = flux_normal_derivative(grid, phi, wall, problem.a_bulk, H,
                                            problem.bulk_tangential)
            else:
                dn = grid.normal_derivative(phi, wall)
            r = (-problem.gamma_surf * grid.tangential_laplacian(psi)
                 + problem.a_surf * psi + dn - problem.h[wall])
        surf_res = max(surf_res, float(np.max(np.abs(r))))
    return bulk_res, surf_res
