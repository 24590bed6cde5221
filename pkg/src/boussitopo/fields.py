"""Periodic grids and the spectral calculus used throughout the package.

Fields are plain numpy arrays sampled on a :class:`Grid`. A scalar field has
shape ``grid.shape``; a vector field has shape ``(d,) + grid.shape``. All
fields live in physical space and are transformed on demand.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid in ``d`` dimensions.

    Parameters
    ----------
    d : int
        Number of horizontal dimensions (1 or 2).
    n : int
        Points per dimension, a power of two with ``n >= 8``.
    length : float
        Period in every dimension.
    """

    d: int = 1
    n: int = 64
    length: float = 2 * np.pi

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError(f"d must be 1 or 2, got {self.d}")
        if self.n < 8 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 8, got {self.n}")
        if not self.length > 0:
            raise ValueError(f"length must be positive, got {self.length}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def cell_volume(self) -> float:
        return self.dx**self.d

    @cached_property
    def x(self) -> np.ndarray:
        """Node coordinates, shape ``(d,) + shape``."""
        x1 = np.arange(self.n) * self.dx
        return np.array(np.meshgrid(*([x1] * self.d), indexing="ij"))

    @cached_property
    def _k1(self) -> np.ndarray:
        return 2 * np.pi / self.length * np.fft.fftfreq(self.n, 1.0 / self.n)

    @cached_property
    def _k1_half(self) -> np.ndarray:
        return 2 * np.pi / self.length * np.fft.rfftfreq(self.n, 1.0 / self.n)

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Broadcastable wavenumber arrays on the real-FFT layout (last axis halved)."""
        ks = [self._k1] * (self.d - 1) + [self._k1_half]
        return tuple(np.array(np.meshgrid(*ks, indexing="ij")))

    @cached_property
    def _deriv_wavenumbers(self) -> tuple[np.ndarray, ...]:
        # odd derivatives of the Nyquist mode are dropped so the result stays real
        out = []
        for k in self.wavenumbers:
            k = k.copy()
            k[np.isclose(np.abs(k), np.pi * self.n / self.length)] = 0.0
            out.append(k)
        return tuple(out)

    @cached_property
    def k2(self) -> np.ndarray:
        return sum(k**2 for k in self.wavenumbers)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        kmax = 2 * np.pi / self.length * (self.n // 3)
        mask = np.ones(self.wavenumbers[0].shape, dtype=bool)
        for k in self.wavenumbers:
            mask &= np.abs(k) <= kmax + 1e-12
        return mask

    def fft(self, f: np.ndarray) -> np.ndarray:
        return np.fft.rfftn(f, axes=tuple(range(-self.d, 0)))

    def ifft(self, fh: np.ndarray) -> np.ndarray:
        return np.fft.irfftn(fh, s=self.shape, axes=tuple(range(-self.d, 0)))

    def check_scalar(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != self.shape:
            raise ValueError(f"scalar field shape {f.shape} does not match grid {self.shape}")
        if not np.all(np.isfinite(f)):
            raise ValueError("scalar field has non-finite values")
        return f

    def check_vector(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.d,) + self.shape:
            raise ValueError(f"vector field shape {v.shape} does not match grid {(self.d,) + self.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("vector field has non-finite values")
        return v

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def zeros_vector(self) -> np.ndarray:
        return np.zeros((self.d,) + self.shape)

    def norm(self, f: np.ndarray) -> float:
        """Discrete L2 norm over one period (sums vector components)."""
        return float(np.sqrt(np.sum(np.asarray(f) ** 2) * self.cell_volume))

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        return float(np.sum(f * g) * self.cell_volume)

    def spectral_norm(self, f: np.ndarray) -> float:
        """L2 norm evaluated from the Fourier coefficients (Parseval)."""
        fh = self.fft(f)
        # the halved axis stores modes 1..n/2-1 once; they count twice
        weight = np.full(fh.shape[-1], 2.0)
        weight[0] = 1.0
        if self.n % 2 == 0:
            weight[-1] = 1.0
        total = np.sum(np.abs(fh) ** 2 * weight)
        return float(np.sqrt(total * self.cell_volume / self.n**self.d))


@dataclass(frozen=True)
class StripGrid:
    """Periodic grid extended by a uniform vertical coordinate on [-1, 0]."""

    grid: Grid
    nz: int = 64

    def __post_init__(self):
        if self.nz < 8:
            raise ValueError(f"nz must be >= 8, got {self.nz}")

    @cached_property
    def z(self) -> np.ndarray:
        return np.linspace(-1.0, 0.0, self.nz)

    @property
    def dz(self) -> float:
        return 1.0 / (self.nz - 1)


def fourier_grad(grid: Grid, f: np.ndarray) -> np.ndarray:
    fh = grid.fft(f)
    return np.array([grid.ifft(1j * k * fh) for k in grid._deriv_wavenumbers])


def fourier_div(grid: Grid, v: np.ndarray) -> np.ndarray:
    acc = 0
    for k, vi in zip(grid._deriv_wavenumbers, v):
        acc = acc + 1j * k * grid.fft(vi)
    return grid.ifft(acc)


def fourier_laplacian(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Laplacian of a scalar, or component-wise of a vector field."""
    f = np.asarray(f)
    if f.shape == grid.shape:
        return grid.ifft(-grid.k2 * grid.fft(f))
    return np.array([grid.ifft(-grid.k2 * grid.fft(fi)) for fi in f])


def helmholtz_inverse(grid: Grid, f: np.ndarray, c: float) -> np.ndarray:
    """Solve ``(1 - c Lap) u = f`` mode by mode (component-wise for vectors)."""
    if c < 0:
        raise ValueError(f"helmholtz coefficient must be >= 0, got {c}")
    if c == 0:
        return np.array(f, dtype=float, copy=True)
    symbol = 1.0 + c * grid.k2
    f = np.asarray(f)
    if f.shape == grid.shape:
        return grid.ifft(grid.fft(f) / symbol)
    return np.array([grid.ifft(grid.fft(fi) / symbol) for fi in f])


def dealias(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Zero the upper third of the spectrum (2/3 rule)."""
    f = np.asarray(f)
    if f.shape == grid.shape:
        return grid.ifft(grid.fft(f) * grid.dealias_mask)
    return np.array([grid.ifft(grid.fft(fi) * grid.dealias_mask) for fi in f])


def dot(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Pointwise Euclidean product of two vector fields."""
    return np.sum(v * w, axis=0)
