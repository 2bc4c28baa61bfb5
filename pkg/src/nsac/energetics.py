"""Constitutive quantities: potentials, wall energy, boundary operators, stresses."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .channel import ChannelGrid, Wall

TRACE_TOL = 1e-8


class TraceMismatchError(ValueError):
    """The wall field is not the trace of the bulk field."""


@dataclass(frozen=True)
class PhysParams:
    """Model coefficients.

    ``eps0`` is the smallness budget used when rescaling small initial data;
    it is a reference value for diagnostics, not a hard constraint.
    """

    eta: float = 1.0
    beta: float = 1.0
    gamma: float = 0.1
    delta: float = 0.0
    nu: float = 1.0
    theta_s: float = math.pi / 2
    stab: float = 2.0
    eps0: float = 0.1

    def __post_init__(self):
        for name in ("eta", "beta", "nu"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be > 0, got {v}")
        for name in ("gamma", "delta", "stab", "eps0"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be >= 0, got {v}")
        if self.delta > 1:
            raise ValueError(f"delta must lie in [0, 1], got {self.delta}")
        if not (0 < self.theta_s < math.pi):
            raise ValueError(f"theta_s must lie in (0, pi), got {self.theta_s}")

    def to_dict(self) -> dict:
        return asdict(self)


def bulk_potential(s):
    """Double-well F(s) = (s^2 - 1)^2 / 4."""
    s = np.asarray(s, dtype=float)
    return 0.25 * (s * s - 1.0) ** 2


def bulk_force(s):
    """f(s) = F'(s) = s^3 - s."""
    s = np.asarray(s, dtype=float)
    return s * s * s - s


def wall_energy(psi, params: PhysParams):
    """Fluid-solid surface energy -(nu/2) cos(theta_s) sin(pi psi / 2)."""
    psi = np.asarray(psi, dtype=float)
    return -0.5 * params.nu * math.cos(params.theta_s) * np.sin(0.5 * np.pi * psi)


def wall_force(psi, params: PhysParams):
    """Derivative of :func:`wall_energy` with respect to psi."""
    psi = np.asarray(psi, dtype=float)
    return -0.25 * np.pi * params.nu * math.cos(params.theta_s) * np.cos(0.5 * np.pi * psi)


def wall_force_slope_bound(params: PhysParams) -> float:
    """sup |d^2 gamma_fs / d psi^2|."""
    return np.pi ** 2 / 8 * params.nu * abs(math.cos(params.theta_s))


def _check_trace(grid: ChannelGrid, phi, psi, wall: Wall):
    mismatch = np.max(np.abs(grid.trace(phi, wall) - psi))
    if mismatch > TRACE_TOL:
        raise TraceMismatchError(
            f"trace of phi differs from psi on wall {wall!r} by {mismatch:.3e}")


def L_operator(grid: ChannelGrid, phi, psi, wall: Wall, params: PhysParams) -> np.ndarray:
    """Uncompensated Young stress coefficient dn(phi) + gamma_fs'(psi) on one wall."""
    phi = grid.check_scalar(phi, "phi")
    psi = grid.check_surface(psi, "psi")
    _check_trace(grid, phi, psi, wall)
    return grid.normal_derivative(phi, wall) + wall_force(psi, params)


def Lcal_operator(grid: ChannelGrid, phi, psi, wall: Wall, params: PhysParams,
                  gamma: float | None = None) -> np.ndarray:
    """Boundary operator with surface diffusion: -gamma lap_tau psi + L(psi)."""
    gamma = params.gamma if gamma is None else gamma
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    out = L_operator(grid, phi, psi, wall, params)
    if gamma:
        out = out - gamma * grid.tangential_laplacian(psi)
    return out


def viscous_stress(grid: ChannelGrid, u, eta: float) -> np.ndarray:
    """S(u) = eta (grad u + grad u^T), shape ``(dim, dim, *grid.shape)``.

    ``S[i, j] = eta (d_i u_j + d_j u_i)``.
    """
    u = grid.check_vector(u, "u")
    # G[i, j] = d_i u_j
    G = np.stack([grid.gradient(u[j]) for j in range(grid.dim)], axis=1)
    return eta * (G + np.swapaxes(G, 0, 1))


def capillary_force(grid: ChannelGrid, phi) -> np.ndarray:
    """div(grad phi (x) grad phi) = lap(phi) grad(phi) + grad(|grad phi|^2) / 2."""
    phi = grid.check_scalar(phi, "phi")
    g = grid.gradient(phi)
    return grid.laplacian(phi) * g + 0.5 * grid.gradient(np.sum(g * g, axis=0))
