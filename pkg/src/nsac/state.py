"""Time-step state shared by the Allen-Cahn and Navier-Stokes steppers."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .channel import BOTTOM, TOP, ChannelGrid

DIV_TOL = 1e-10
GAUGE_TOL = 1e-12


class SolverError(RuntimeError):
    """A linear solve failed or produced non-finite values."""


class CFLError(SolverError):
    """Time step exceeds the advective stability limit."""


@dataclass
class SimState:
    """``(u, p, phi, psi, t)``; ``psi`` stacks the bottom and top wall traces."""

    grid: ChannelGrid
    u: np.ndarray
    p: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    t: float = 0.0

    @classmethod
    def from_phi(cls, grid: ChannelGrid, phi, u=None, p=None, t: float = 0.0) -> "SimState":
        """Build a state whose wall traces are taken from ``phi``."""
        phi = grid.check_scalar(phi, "phi").copy()
        u = np.zeros((grid.dim,) + grid.shape) if u is None else grid.check_vector(u).copy()
        p = np.zeros(grid.shape) if p is None else grid.check_scalar(p, "p").copy()
        psi = np.stack([grid.trace(phi, BOTTOM), grid.trace(phi, TOP)])
        return cls(grid, u, p, phi, psi, float(t))

    def copy(self) -> "SimState":
        return replace(self, u=self.u.copy(), p=self.p.copy(), phi=self.phi.copy(),
                       psi=self.psi.copy())

    def trace_mismatch(self) -> float:
        g = self.grid
        return max(float(np.max(np.abs(g.trace(self.phi, w) - self.psi[w])))
                   for w in (BOTTOM, TOP))

    def violations(self, trace_tol: float = 1e-8) -> list[str]:
        """Human-readable list of broken state invariants (empty when valid)."""
        g = self.grid
        out = []
        for name, arr in (("u", self.u), ("p", self.p), ("phi", self.phi), ("psi", self.psi)):
            if not np.all(np.isfinite(arr)):
                out.append(f"{name} has non-finite entries")
        if out:
            return out
        div = float(np.max(np.abs(g.divergence(self.u))))
        if div > DIV_TOL:
            out.append(f"divergence(u) = {div:.3e} > {DIV_TOL}")
        wall_un = float(max(np.max(np.abs(self.u[-1][..., 0])), np.max(np.abs(self.u[-1][..., -1]))))
        if wall_un != 0.0:
            out.append(f"wall-normal velocity {wall_un:.3e} on a wall")
        pm = abs(g.volume_mean(self.p))
        if pm > GAUGE_TOL:
            out.append(f"mean pressure {pm:.3e} is not zero")
        tm = self.trace_mismatch()
        if tm > trace_tol:
            out.append(f"trace(phi) differs from psi by {tm:.3e}")
        return out
