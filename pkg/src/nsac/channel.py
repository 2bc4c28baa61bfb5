"""Channel geometry T^{N-1} x (-1, 1) and its discrete operators.

Fields are plain numpy arrays with the periodic axes first and the
wall-normal axis ``z`` last:

* scalar field  ``(nx, [ny,] nz)``
* vector field  ``(dim, nx, [ny,] nz)``, components ordered x, [y,] z
* surface field ``(nx, [ny])``, one per wall

Periodic directions use Fourier collocation; ``z`` uses second-order
finite differences on a uniform node set that contains both walls.
"""

from __future__ import annotations

from functools import cached_property
from typing import Sequence, Union

import numpy as np

BOTTOM = 0
TOP = 1
WALLS = (BOTTOM, TOP)
_WALL_NAMES = {"bottom": BOTTOM, "top": TOP, BOTTOM: BOTTOM, TOP: TOP}

Wall = Union[int, str]


class GridError(ValueError):
    """Invalid grid size or field shape."""


def wall_index(wall: Wall) -> int:
    try:
        return _WALL_NAMES[wall]
    except (KeyError, TypeError):
        raise GridError(f"unknown wall {wall!r}; use 'bottom', 'top', 0 or 1") from None


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


class ChannelGrid:
    """Uniform channel grid with spectral periodic and FD wall-normal operators.

    Use :func:`build_grid` to construct one with validation.
    """

    def __init__(self, dim: int, n_periodic: Sequence[int], n_wall: int,
                 period_lengths: Sequence[float]):
        self.dim = int(dim)
        self.n_periodic = tuple(int(n) for n in n_periodic)
        self.n_wall = int(n_wall)
        self.period_lengths = tuple(float(length) for length in period_lengths)
        self.dz = 2.0 / (self.n_wall - 1)
        self.dx = tuple(L / n for L, n in zip(self.period_lengths, self.n_periodic))
        self.z = np.linspace(-1.0, 1.0, self.n_wall)
        self.shape = self.n_periodic + (self.n_wall,)
        self.surface_shape = self.n_periodic
        self._paxes = tuple(range(self.dim - 1))
        # kappa: boundary curvature, identically zero for flat walls
        self.curvature = 0.0

    def __repr__(self) -> str:
        return (f"ChannelGrid(dim={self.dim}, n_periodic={list(self.n_periodic)}, "
                f"n_wall={self.n_wall}, period_lengths={list(self.period_lengths)})")

    def __eq__(self, other) -> bool:
        if not isinstance(other, ChannelGrid):
            return NotImplemented
        return (self.dim, self.n_periodic, self.n_wall, self.period_lengths) == (
            other.dim, other.n_periodic, other.n_wall, other.period_lengths)

    def __hash__(self) -> int:
        return hash((self.dim, self.n_periodic, self.n_wall, self.period_lengths))

    # ------------------------------------------------------------------ layout

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Node coordinates per axis (periodic axes start at 0)."""
        per = tuple(np.arange(n) * d for n, d in zip(self.n_periodic, self.dx))
        return per + (self.z,)

    def mesh(self) -> tuple[np.ndarray, ...]:
        """Broadcast coordinate arrays ``(x, [y,] z)`` of full bulk shape."""
        return tuple(np.meshgrid(*self.coords, indexing="ij"))

    def surface_mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.coords[:-1], indexing="ij"))

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Angular wavenumbers per periodic direction in standard FFT order."""
        return tuple(2.0 * np.pi / L * np.fft.fftfreq(n, d=1.0 / n)
                     for L, n in zip(self.period_lengths, self.n_periodic))

    @cached_property
    def spectral_surface_shape(self) -> tuple[int, ...]:
        s = list(self.n_periodic)
        s[-1] = s[-1] // 2 + 1
        return tuple(s)

    @cached_property
    def _kvec(self) -> tuple[np.ndarray, ...]:
        # wavenumbers in rfftn layout, each broadcastable to the spectral surface shape
        out = []
        nd = self.dim - 1
        for d, (L, n) in enumerate(zip(self.period_lengths, self.n_periodic)):
            if d == nd - 1:
                k = 2.0 * np.pi / L * np.arange(n // 2 + 1)
            else:
                k = self.wavenumbers[d]
            shape = [1] * nd
            shape[d] = k.size
            out.append(k.reshape(shape))
        return tuple(out)

    @cached_property
    def _ik(self) -> tuple[np.ndarray, ...]:
        # first-derivative multipliers with the Nyquist mode removed
        out = []
        for d, k in enumerate(self._kvec):
            n = self.n_periodic[d]
            ik = 1j * k.copy()
            nyq = np.isclose(np.abs(k), np.pi * n / self.period_lengths[d])
            ik[nyq] = 0.0
            out.append(ik)
        return tuple(out)

    @cached_property
    def k2(self) -> np.ndarray:
        """|k|^2 on the spectral surface shape."""
        k2 = np.zeros(self.spectral_surface_shape)
        for k in self._kvec:
            k2 = k2 + k ** 2
        return k2

    @cached_property
    def quad_weights(self) -> np.ndarray:
        """Trapezoid in z times uniform cell area in the periodic directions."""
        wz = np.full(self.n_wall, self.dz)
        wz[0] = wz[-1] = 0.5 * self.dz
        return np.broadcast_to(self.cell_area * wz, self.shape).copy()

    @cached_property
    def z_weights(self) -> np.ndarray:
        wz = np.full(self.n_wall, self.dz)
        wz[0] = wz[-1] = 0.5 * self.dz
        return wz

    @property
    def cell_area(self) -> float:
        return float(np.prod(self.dx))

    @property
    def area(self) -> float:
        """Area of one wall."""
        return float(np.prod(self.period_lengths))

    @property
    def volume(self) -> float:
        return 2.0 * self.area

    # ------------------------------------------------------------ validation

    def check_scalar(self, f: np.ndarray, name: str = "field") -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != self.shape:
            raise GridError(f"{name} has shape {f.shape}, expected {self.shape}")
        if not np.all(np.isfinite(f)):
            raise GridError(f"{name} has non-finite entries")
        return f

    def check_vector(self, v: np.ndarray, name: str = "vector field") -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,) + self.shape:
            raise GridError(f"{name} has shape {v.shape}, expected {(self.dim,) + self.shape}")
        if not np.all(np.isfinite(v)):
            raise GridError(f"{name} has non-finite entries")
        return v

    def check_surface(self, s: np.ndarray, name: str = "surface field") -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if s.shape != self.surface_shape:
            raise GridError(f"{name} has shape {s.shape}, expected {self.surface_shape}")
        if not np.all(np.isfinite(s)):
            raise GridError(f"{name} has non-finite entries")
        return s

    # ------------------------------------------------------- periodic spectra

    def fft(self, f: np.ndarray) -> np.ndarray:
        """Forward real transform over the periodic axes (bulk or surface)."""
        return np.fft.rfftn(f, axes=self._paxes)

    def ifft(self, fh: np.ndarray) -> np.ndarray:
        return np.fft.irfftn(fh, s=self.n_periodic, axes=self._paxes)

    def _bcast(self, a: np.ndarray, ndim: int) -> np.ndarray:
        # append trailing z axis to a spectral-surface multiplier when needed
        return a if ndim == self.dim - 1 else a[..., None]

    def d_periodic(self, f: np.ndarray, d: int) -> np.ndarray:
        """Spectral first derivative along periodic direction ``d``."""
        f = np.asarray(f, dtype=float)
        return self.ifft(self._bcast(self._ik[d], f.ndim) * self.fft(f))

    def laplacian_periodic(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        return self.ifft(-self._bcast(self.k2, f.ndim) * self.fft(f))

    # -------------------------------------------------------- wall-normal FD

    def d_z(self, f: np.ndarray) -> np.ndarray:
        """Centered differences inside, one-sided second order at the walls."""
        f = np.asarray(f, dtype=float)
        h = self.dz
        out = np.empty_like(f)
        out[..., 1:-1] = (f[..., 2:] - f[..., :-2]) / (2 * h)
        out[..., 0] = (-3 * f[..., 0] + 4 * f[..., 1] - f[..., 2]) / (2 * h)
        out[..., -1] = (3 * f[..., -1] - 4 * f[..., -2] + f[..., -3]) / (2 * h)
        return out

    def d2_z(self, f: np.ndarray) -> np.ndarray:
        """Three-point second difference inside, four-point one-sided at walls."""
        f = np.asarray(f, dtype=float)
        h2 = self.dz ** 2
        out = np.empty_like(f)
        out[..., 1:-1] = (f[..., 2:] - 2 * f[..., 1:-1] + f[..., :-2]) / h2
        out[..., 0] = (2 * f[..., 0] - 5 * f[..., 1] + 4 * f[..., 2] - f[..., 3]) / h2
        out[..., -1] = (2 * f[..., -1] - 5 * f[..., -2] + 4 * f[..., -3] - f[..., -4]) / h2
        return out

    # -------------------------------------------------------- bulk operators

    def gradient(self, f: np.ndarray) -> np.ndarray:
        f = self.check_scalar(f)
        comps = [self.d_periodic(f, d) for d in range(self.dim - 1)]
        comps.append(self.d_z(f))
        return np.stack(comps)

    def divergence(self, v: np.ndarray) -> np.ndarray:
        v = self.check_vector(v)
        out = self.d_z(v[-1])
        for d in range(self.dim - 1):
            out = out + self.d_periodic(v[d], d)
        return out

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        f = self.check_scalar(f)
        return self.laplacian_periodic(f) + self.d2_z(f)

    # ----------------------------------------------------- surface operators

    def tangential_gradient(self, s: np.ndarray) -> np.ndarray:
        s = self.check_surface(s)
        return np.stack([self.d_periodic(s, d) for d in range(self.dim - 1)])

    def tangential_laplacian(self, s: np.ndarray) -> np.ndarray:
        s = self.check_surface(s)
        return self.laplacian_periodic(s)

    def trace(self, f: np.ndarray, wall: Wall) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        return f[..., 0].copy() if wall_index(wall) == BOTTOM else f[..., -1].copy()

    def normal_derivative(self, f: np.ndarray, wall: Wall) -> np.ndarray:
        """Outward normal derivative, n = -e_z at z=-1 and n = +e_z at z=+1."""
        f = self.check_scalar(f)
        h = self.dz
        if wall_index(wall) == BOTTOM:
            return -(-3 * f[..., 0] + 4 * f[..., 1] - f[..., 2]) / (2 * h)
        return (3 * f[..., -1] - 4 * f[..., -2] + f[..., -3]) / (2 * h)

    # ------------------------------------------------------------ quadrature

    def volume_integral(self, f: np.ndarray) -> float:
        f = np.asarray(f, dtype=float)
        return float(np.sum(f * self.quad_weights))

    def volume_mean(self, f: np.ndarray) -> float:
        return self.volume_integral(f) / self.volume

    def surface_integral(self, s: np.ndarray) -> float:
        return float(np.sum(np.asarray(s, dtype=float)) * self.cell_area)

    # ------------------------------------- summation-by-parts Dirichlet forms

    def dirichlet_norm_sq(self, f: np.ndarray) -> float:
        """Discrete ``int |grad f|^2`` whose variation is the flux-form Laplacian.

        Periodic part uses the spectral Laplacian (Parseval), the z part uses
        cell differences ``(f[j+1]-f[j])/dz`` weighted by ``dz``.
        """
        f = np.asarray(f, dtype=float)
        per = -np.sum(f * self.laplacian_periodic(f) * self.quad_weights)
        dfz = np.diff(f, axis=-1) / self.dz
        zpart = np.sum(dfz ** 2) * self.dz * self.cell_area
        return float(per + zpart)

    def tangential_norm_sq(self, s: np.ndarray) -> float:
        """Discrete ``int_Gamma |grad_tau s|^2`` (Parseval form)."""
        s = np.asarray(s, dtype=float)
        return float(-np.sum(s * self.laplacian_periodic(s)) * self.cell_area)


def build_grid(dim: int, n_periodic: Sequence[int], n_wall: int,
               period_lengths: Sequence[float] | None = None) -> ChannelGrid:
    """Validate sizes and build a :class:`ChannelGrid`.

    Args:
        dim: 2 or 3.
        n_periodic: sizes of the ``dim - 1`` periodic directions, powers of two >= 8.
        n_wall: number of z nodes including both walls, odd and >= 5.
        period_lengths: periods per periodic direction; defaults to 2*pi.

    Raises:
        GridError: naming the offending dimension.
    """
    if dim not in (2, 3):
        raise GridError(f"dim must be 2 or 3, got {dim}")
    n_periodic = list(n_periodic)
    if len(n_periodic) != dim - 1:
        raise GridError(f"need {dim - 1} periodic sizes for dim={dim}, got {len(n_periodic)}")
    names = ("x", "y")
    for name, n in zip(names, n_periodic):
        if int(n) != n or not _is_pow2(int(n)) or n < 8:
            raise GridError(f"invalid size for periodic dimension {name}: {n} "
                            "(must be a power of two >= 8)")
    if int(n_wall) != n_wall or n_wall < 5 or n_wall % 2 == 0:
        raise GridError(f"invalid size for wall-normal dimension z: {n_wall} (must be odd >= 5)")
    if period_lengths is None:
        period_lengths = [2 * np.pi] * (dim - 1)
    period_lengths = list(period_lengths)
    if len(period_lengths) != dim - 1:
        raise GridError(f"need {dim - 1} period lengths, got {len(period_lengths)}")
    for name, L in zip(names, period_lengths):
        if not np.isfinite(L) or L <= 0:
            raise GridError(f"invalid period for dimension {name}: {L}")
    return ChannelGrid(dim, n_periodic, n_wall, period_lengths)
