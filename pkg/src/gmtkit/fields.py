"""Uniform-grid scalar and vector fields with quadrature support.

A level-L field samples values at the centers of the 2^(N*L) dyadic
leaf cells of its root box (midpoint rule).  Vector fields carry a
leading component axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .dyadic import Box


def unit_sphere_area(dim: int) -> float:
    """sigma_{N-1} = 2 pi^(N/2) / Gamma(N/2): 2, 2pi, 4pi for N = 1, 2, 3."""
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


@dataclass
class GridField:
    box: Box
    level: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        n = 2**self.level
        dim = self.box.dim
        scalar_shape = (n,) * dim
        vector_shape = (dim,) + scalar_shape
        if self.values.shape == scalar_shape:
            self.rank = "scalar"
        elif self.values.shape == vector_shape:
            self.rank = "vector"
        else:
            raise ValueError(
                f"values shape {self.values.shape} matches neither scalar {scalar_shape} "
                f"nor vector {vector_shape}"
            )

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def spacing(self) -> float:
        return self.box.spacing(self.level)

    def axis_centers(self) -> list:
        """Per-axis arrays of cell-center coordinates."""
        n = 2**self.level
        h = self.spacing
        return [o + h * (np.arange(n) + 0.5) for o in self.box.origin]

    def meshgrid(self) -> list:
        return np.meshgrid(*self.axis_centers(), indexing="ij")

    def quadrature(self) -> float:
        """Midpoint-rule integral of the (scalar) field."""
        if self.rank != "scalar":
            raise ValueError("quadrature of a vector field is ambiguous; integrate components")
        return float(self.values.sum() * self.spacing**self.dim)

    def abs_quadrature(self) -> float:
        """Midpoint-rule integral of |field| (L1 norm; euclidean norm for vectors)."""
        if self.rank == "scalar":
            mag = np.abs(self.values)
        else:
            mag = np.sqrt((self.values**2).sum(axis=0))
        return float(mag.sum() * self.spacing**self.dim)

    def sup_norm(self) -> float:
        if self.rank == "scalar":
            return float(np.abs(self.values).max(initial=0.0))
        return float(np.sqrt((self.values**2).sum(axis=0)).max(initial=0.0))

    def interpolate(self, points: np.ndarray) -> np.ndarray:
        """Multilinear interpolation at arbitrary points (scalar fields).

        Cell centers are the interpolation nodes; the outermost half-cell
        band clamps to the boundary value.
        """
        if self.rank != "scalar":
            raise ValueError("interpolate supports scalar fields")
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        n = 2**self.level
        h = self.spacing
        rel = (pts - np.asarray(self.box.origin)) / h - 0.5
        i0 = np.clip(np.floor(rel).astype(int), 0, n - 2)
        frac = np.clip(rel - i0, 0.0, 1.0)
        out = np.zeros(pts.shape[0])
        for corner in range(2**self.dim):
            bits = [(corner >> k) & 1 for k in range(self.dim)]
            idx = tuple(i0[:, k] + bits[k] for k in range(self.dim))
            w = np.ones(pts.shape[0])
            for k in range(self.dim):
                w *= frac[:, k] if bits[k] else 1.0 - frac[:, k]
            out += w * self.values[idx]
        return out


def scalar_field(box: Box, level: int, fn=None) -> GridField:
    """Sample fn(points) at cell centers; zeros when fn is None."""
    n = 2**level
    shape = (n,) * box.dim
    if fn is None:
        return GridField(box, level, np.zeros(shape))
    grid = np.meshgrid(*[o + box.spacing(level) * (np.arange(n) + 0.5) for o in box.origin], indexing="ij")
    pts = np.stack([g.ravel() for g in grid], axis=-1)
    vals = np.asarray(fn(pts), dtype=float).reshape(shape)
    return GridField(box, level, vals)


def vector_field(box: Box, level: int) -> GridField:
    n = 2**level
    return GridField(box, level, np.zeros((box.dim,) + (n,) * box.dim))


class UnderResolvedKernelError(ValueError):
    """Mollifier scale below two grid spacings."""


@lru_cache(maxsize=None)
def _bump_radial_integral(dim: int) -> float:
    """integral over the unit ball of exp(1/(|x|^2 - 1)), via the radial profile."""
    val, _ = integrate.quad(
        lambda r: r ** (dim - 1) * math.exp(1.0 / (r * r - 1.0)), 0.0, 1.0, epsabs=1e-14, epsrel=1e-13
    )
    return unit_sphere_area(dim) * val


@lru_cache(maxsize=None)
def _bump_enclosed_mass_table(dim: int, samples: int = 2048):
    """Cumulative mass fraction M(rho) of the unit bump within radius rho."""
    rho = np.linspace(0.0, 1.0, samples)
    integrand = np.where(
        rho < 1.0, rho ** (dim - 1) * np.exp(1.0 / np.clip(rho * rho - 1.0, -1.0, -1e-12)), 0.0
    )
    cum = integrate.cumulative_trapezoid(integrand, rho, initial=0.0)
    cum *= unit_sphere_area(dim) / _bump_radial_integral(dim)
    cum[-1] = 1.0
    return rho, cum


@dataclass(frozen=True)
class MollifierSpec:
    """Standard bump C * exp(1/(|x|^2 - 1)) on |x| < 1, scaled to radius `scale`.

    C normalizes the unit-scale profile to integral one; the scaled kernel
    rho_delta(x) = delta^-N rho(x/delta) then has unit integral too.
    """

    dim: int
    scale: float

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("mollifier scale must be positive")

    @property
    def normalization(self) -> float:
        return 1.0 / _bump_radial_integral(self.dim)

    def profile(self, points: np.ndarray) -> np.ndarray:
        """rho_delta evaluated at points (shape (..., dim))."""
        pts = np.asarray(points, dtype=float)
        r2 = (pts / self.scale) ** 2
        r2 = r2.sum(axis=-1)
        out = np.zeros_like(r2)
        inside = r2 < 1.0
        out[inside] = np.exp(1.0 / (r2[inside] - 1.0))
        return out * (self.normalization / self.scale**self.dim)

    def enclosed_mass(self, radius) -> np.ndarray:
        """Fraction of the kernel's mass within `radius` of its center."""
        rho, cum = _bump_enclosed_mass_table(self.dim)
        r = np.clip(np.asarray(radius, dtype=float) / self.scale, 0.0, 1.0)
        return np.interp(r, rho, cum)

    def stencil(self, spacing: float) -> np.ndarray:
        """Kernel sampled on an odd grid stencil, renormalized so the
        midpoint-rule integral is exactly one (discrete mass preservation)."""
        if self.scale < 2.0 * spacing:
            raise UnderResolvedKernelError(
                f"mollifier scale {self.scale} under-resolved at spacing {spacing}"
            )
        half = int(math.ceil(self.scale / spacing)) + 1
        axes = [spacing * np.arange(-half, half + 1)] * self.dim
        grid = np.meshgrid(*axes, indexing="ij")
        pts = np.stack(grid, axis=-1)
        vals = self.profile(pts)
        total = vals.sum() * spacing**self.dim
        return vals / total
