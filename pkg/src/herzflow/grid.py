"""Periodic grids, immutable sampled fields and Fourier-multiplier plumbing.

The whole-space setting is replaced by a torus of side ``L`` whose grid
points are ``x_i = -L/2 + i*h``, so the origin is a grid point (index N/2
along every axis).  Spectral coefficients returned by :func:`to_spectral`
are normalized so that ``u(x) = sum_k c_k exp(i k.x)`` with physical
wavevectors ``k * 2*pi/L``.

Internally every multiplier is applied on the half lattice of ``rfftn``.
"""
from __future__ import annotations

import os
import threading
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.fft as sfft

from .errors import DivergenceError, FieldValueError, GridError

__all__ = [
    "Grid", "make_grid", "Field", "DensityState", "to_spectral",
    "from_spectral", "apply_multiplier", "derivative", "gradient",
    "divergence", "divergence_error", "check_divergence_free", "jacobian", "advect", "inverse_laplacian", "leray_project",
    "gradient_part", "truncate", "random_field", "set_threads", "get_threads",
    "grid_lp_norm", "l2_norm",
]

_THREADS = [None]


def set_threads(n: Optional[int]) -> None:
    """Set the worker count used by every FFT (None = environment default)."""
    _THREADS[0] = None if n is None else max(1, int(n))


def get_threads() -> int:
    if _THREADS[0] is not None:
        return _THREADS[0]
    env = os.environ.get("HERZFLOW_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _is_pow2(N: int) -> bool:
    return N > 0 and (N & (N - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [-L/2, L/2)^n."""

    n: int
    N: int
    L: float

    def __post_init__(self):
        if self.n not in (2, 3):
            raise GridError(f"dimension must be 2 or 3, got {self.n}")
        if not isinstance(self.N, (int, np.integer)) or not _is_pow2(int(self.N)):
            raise GridError(f"N must be a power of two, got {self.N}")
        if self.N < 32:
            raise GridError(f"N must be at least 32, got {self.N}")
        if not (np.isfinite(self.L) and self.L > 0):
            raise GridError(f"L must be positive, got {self.L}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "L", float(self.L))

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.n

    @property
    def cell_volume(self) -> float:
        return self.h ** self.n

    @property
    def k0(self) -> float:
        """Fundamental physical wavenumber 2*pi/L."""
        return 2.0 * np.pi / self.L

    @property
    def nyquist(self) -> float:
        """Largest physical wavenumber along one axis, pi*N/L."""
        return np.pi * self.N / self.L

    @cached_property
    def x1d(self) -> np.ndarray:
        x = -0.5 * self.L + self.h * np.arange(self.N)
        x.flags.writeable = False
        return x

    @cached_property
    def coords(self) -> tuple:
        """Broadcastable coordinate arrays, one per axis."""
        out = []
        for ax in range(self.n):
            shp = [1] * self.n
            shp[ax] = self.N
            a = self.x1d.reshape(shp)
            out.append(a)
        return tuple(out)

    @cached_property
    def mesh(self) -> np.ndarray:
        """Full coordinate array of shape (n, N, ..., N)."""
        m = np.stack(np.meshgrid(*([self.x1d] * self.n), indexing="ij"))
        m.flags.writeable = False
        return m

    @cached_property
    def radius(self) -> np.ndarray:
        r = np.sqrt(sum(c ** 2 for c in self.coords))
        r = np.broadcast_to(r, self.shape).copy()
        r.flags.writeable = False
        return r

    # -- lattices ---------------------------------------------------------
    @cached_property
    def int_wavenumbers(self) -> tuple:
        """Integer wavenumbers on the full lattice, broadcastable per axis."""
        k = np.fft.fftfreq(self.N, 1.0 / self.N)
        out = []
        for ax in range(self.n):
            shp = [1] * self.n
            shp[ax] = self.N
            out.append(k.reshape(shp))
        return tuple(out)

    @cached_property
    def rxi(self) -> tuple:
        """Physical wavevector components on the rfft half lattice."""
        k = np.fft.fftfreq(self.N, 1.0 / self.N)
        kr = np.fft.rfftfreq(self.N, 1.0 / self.N)
        out = []
        for ax in range(self.n):
            shp = [1] * self.n
            kk = kr if ax == self.n - 1 else k
            shp[ax] = kk.size
            out.append(self.k0 * kk.reshape(shp))
        return tuple(out)

    @cached_property
    def rxi_odd(self) -> tuple:
        """As :attr:`rxi` but with the Nyquist plane zeroed (odd multipliers)."""
        out = []
        half = self.k0 * self.N / 2
        for xi in self.rxi:
            x = xi.copy()
            x[np.abs(np.abs(x) - half) < 1e-9 * half] = 0.0
            out.append(x)
        return tuple(out)

    @cached_property
    def rkmag(self) -> np.ndarray:
        """|xi| on the half lattice (full array)."""
        return np.sqrt(sum(np.broadcast_to(x, self.rshape) ** 2 for x in self.rxi))

    @cached_property
    def rkmag_odd(self) -> np.ndarray:
        return np.sqrt(sum(np.broadcast_to(x, self.rshape) ** 2 for x in self.rxi_odd))

    @property
    def rshape(self) -> tuple:
        return (self.N,) * (self.n - 1) + (self.N // 2 + 1,)

    @cached_property
    def kmag(self) -> np.ndarray:
        """|xi| on the full lattice."""
        return self.k0 * np.sqrt(sum(np.broadcast_to(k, self.shape) ** 2
                                     for k in self.int_wavenumbers))

    def radial_multiplier(self, func: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """Evaluate a radial profile m(|xi|) on the half lattice."""
        return np.asarray(func(self.rkmag), dtype=float)

    def describe(self) -> dict:
        return {"n": self.n, "N": self.N, "L": self.L}


def make_grid(n: int, N: int, L: float) -> Grid:
    """Build a periodic grid.

    Args:
        n: spatial dimension, 2 or 3.
        N: points per axis, a power of two no smaller than 32.
        L: side length of the torus.
    """
    return Grid(n, N, L)


# -- fields -----------------------------------------------------------------
class Field:
    """Immutable sampled field with ``c`` components on a grid.

    ``values`` has shape ``(c, N, ..., N)``.  The half-lattice spectrum is
    computed lazily, at most once, under a lock.
    """

    __slots__ = ("grid", "values", "_rspec", "_lock", "__weakref__")

    def __init__(self, grid: Grid, values, check: bool = True, _rspec=None):
        v = np.array(values, dtype=np.float64, copy=True, order="C")
        if v.shape == grid.shape:
            v = v[None]
        if v.ndim != grid.n + 1 or v.shape[1:] != grid.shape:
            raise FieldValueError(
                f"values of shape {v.shape} do not match grid {grid.shape}")
        if v.shape[0] not in (1, grid.n):
            raise FieldValueError(f"component count must be 1 or {grid.n}")
        if check and not np.all(np.isfinite(v)):
            raise FieldValueError("field contains NaN or Inf")
        v.flags.writeable = False
        self.grid = grid
        self.values = v
        self._rspec = _rspec
        self._lock = threading.Lock()

    @classmethod
    def _wrap(cls, grid, values, rspec=None):
        # trusted internal constructor: no copy, no finiteness scan
        obj = cls.__new__(cls)
        v = np.ascontiguousarray(values, dtype=np.float64)
        if v.ndim == grid.n:
            v = v[None]
        v.flags.writeable = False
        obj.grid = grid
        obj.values = v
        obj._rspec = rspec
        obj._lock = threading.Lock()
        return obj

    @classmethod
    def zeros(cls, grid: Grid, components: int = 1) -> "Field":
        return cls._wrap(grid, np.zeros((components,) + grid.shape))

    @classmethod
    def from_function(cls, grid: Grid, func) -> "Field":
        """Sample ``func(*coords)``; a tuple/list return gives a vector field."""
        out = func(*grid.mesh)
        if isinstance(out, (tuple, list)):
            out = np.stack([np.broadcast_to(o, grid.shape) for o in out])
        else:
            out = np.broadcast_to(out, grid.shape)
        return cls(grid, out)

    @property
    def components(self) -> int:
        return self.values.shape[0]

    @property
    def is_vector(self) -> bool:
        return self.components > 1

    def rspec(self) -> np.ndarray:
        """Unnormalized rfftn over the spatial axes (cached, read-only)."""
        s = self._rspec
        if s is None:
            with self._lock:
                s = self._rspec
                if s is None:
                    s = sfft.rfftn(self.values, axes=_axes(self.grid),
                                   workers=get_threads())
                    s.flags.writeable = False
                    self._rspec = s
        return s

    def component(self, i: int) -> "Field":
        rs = None if self._rspec is None else self._rspec[i:i + 1]
        return Field._wrap(self.grid, self.values[i:i + 1], rs)

    def magnitude(self) -> np.ndarray:
        """Pointwise Euclidean magnitude, shape grid.shape."""
        if self.components == 1:
            return np.abs(self.values[0])
        return np.sqrt(np.sum(self.values ** 2, axis=0))

    def mean(self) -> np.ndarray:
        return self.values.reshape(self.components, -1).mean(axis=1)

    def sup(self) -> float:
        return float(self.magnitude().max())

    # arithmetic returns new fields; spectra combine linearly when cached
    def _coerce(self, other):
        if isinstance(other, Field):
            if other.grid != self.grid:
                raise GridError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return Field._wrap(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Field._wrap(self.grid, self.values - self._coerce(other))

    def __rsub__(self, other):
        return Field._wrap(self.grid, self._coerce(other) - self.values)

    def __mul__(self, other):
        return Field._wrap(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return Field._wrap(self.grid, self.values / self._coerce(other))

    def __neg__(self):
        return Field._wrap(self.grid, -self.values)

    def __repr__(self):
        return f"Field(c={self.components}, grid={self.grid.describe()})"


def _axes(grid: Grid) -> tuple:
    return tuple(range(1, grid.n + 1))


def stack(fields: Sequence[Field]) -> Field:
    """Stack scalar fields into one vector field."""
    g = fields[0].grid
    return Field._wrap(g, np.concatenate([f.values for f in fields], axis=0))


def _from_rspec(grid: Grid, spec: np.ndarray) -> Field:
    vals = sfft.irfftn(spec, s=grid.shape, axes=_axes(grid), workers=get_threads())
    return Field._wrap(grid, vals)


# -- public spectral contract ----------------------------------------------
def _phase(grid: Grid) -> np.ndarray:
    ks = grid.int_wavenumbers
    total = sum(np.broadcast_to(k, grid.shape) for k in ks).astype(np.int64)
    return np.where(total % 2 == 0, 1.0, -1.0)


def to_spectral(u: Field) -> np.ndarray:
    """Normalized complex coefficients on the full lattice.

    Output has shape (c, N, ..., N) in numpy FFT ordering; entry ``k``
    multiplies ``exp(i k.x)`` with physical frequency ``k*2*pi/L``.
    """
    if not np.all(np.isfinite(u.values)):
        raise FieldValueError("field contains NaN or Inf")
    g = u.grid
    c = sfft.fftn(u.values, axes=_axes(g), workers=get_threads())
    return c * (_phase(g) / g.N ** g.n)


def from_spectral(grid: Grid, coeffs: np.ndarray) -> Field:
    """Inverse of :func:`to_spectral`; the imaginary residue is discarded."""
    coeffs = np.asarray(coeffs)
    if coeffs.ndim == grid.n:
        coeffs = coeffs[None]
    if not np.all(np.isfinite(coeffs)):
        raise FieldValueError("coefficients contain NaN or Inf")
    vals = sfft.ifftn(coeffs * (_phase(grid) * grid.N ** grid.n),
                      axes=_axes(grid), workers=get_threads())
    return Field(grid, vals.real)


def l2_norm(u: Field) -> float:
    """Grid-weighted L2 norm, (h^n sum |u|^2)^(1/2)."""
    return float(np.sqrt(u.grid.cell_volume * np.sum(u.values ** 2)))


def grid_lp_norm(u: Field, p: float, mask=None) -> float:
    """Midpoint-quadrature L^p norm of the pointwise magnitude."""
    m = u.magnitude()
    if mask is not None:
        m = m[mask]
    if np.isinf(p):
        return float(m.max()) if m.size else 0.0
    return float((u.grid.cell_volume * np.sum(m ** p)) ** (1.0 / p))


# -- multipliers ------------------------------------------------------------
def apply_multiplier(u: Field, mult: np.ndarray) -> Field:
    """Return F^{-1}[mult * F u] with ``mult`` given on the half lattice."""
    return _from_rspec(u.grid, u.rspec() * mult)


def derivative(u: Field, axis: int, order: int = 1) -> Field:
    """Spectral partial derivative along ``axis``, Nyquist handled per parity."""
    g = u.grid
    xi = g.rxi_odd[axis] if order % 2 else g.rxi[axis]
    return apply_multiplier(u, (1j * xi) ** order)


def gradient(u: Field) -> Field:
    """Gradient of a scalar field (n components)."""
    if u.components != 1:
        raise FieldValueError("gradient expects a scalar field")
    s = u.rspec()[0]
    spec = np.stack([1j * xi * s for xi in u.grid.rxi_odd])
    return _from_rspec(u.grid, spec)


def jacobian(u: Field) -> np.ndarray:
    """Array J[i, k] = d_k u_i of shape (c, n, N, ..., N)."""
    g = u.grid
    s = u.rspec()
    spec = np.stack([1j * xi * s for xi in g.rxi_odd], axis=1)
    return sfft.irfftn(spec, s=g.shape, axes=tuple(range(2, g.n + 2)),
                       workers=get_threads())


def divergence(u: Field) -> Field:
    g = u.grid
    if u.components != g.n:
        raise FieldValueError("divergence expects a vector field")
    s = u.rspec()
    spec = sum(1j * g.rxi_odd[i] * s[i] for i in range(g.n))
    return _from_rspec(g, spec[None])


def divergence_error(v: Field) -> float:
    """sup |div v| relative to the natural scale sup|v| * Nyquist."""
    scale = max(v.sup() * v.grid.nyquist, 1e-300)
    return divergence(v).sup() / scale


def check_divergence_free(v: Field, tol: float = 1e-10) -> None:
    """Raise DivergenceError unless ``v`` is solenoidal to relative ``tol``."""
    err = divergence_error(v)
    if err > tol:
        raise DivergenceError(f"relative divergence {err:.3e} exceeds {tol:.1e}")


def advect(v: Field, u: Field) -> Field:
    """Pointwise (v . grad) u for scalar or vector u."""
    J = jacobian(u)
    out = np.einsum("k...,ik...->i...", v.values, J)
    return Field._wrap(u.grid, out)


def inverse_laplacian(u: Field) -> Field:
    """Mean-zero solution of Lap w = u (k = 0 mode dropped)."""
    g = u.grid
    k2 = g.rkmag ** 2
    inv = np.zeros_like(k2)
    nz = k2 > 0
    inv[nz] = -1.0 / k2[nz]
    return apply_multiplier(u, inv)


def _projection_parts(u: Field):
    g = u.grid
    if u.components != g.n:
        raise FieldValueError("projection expects a vector field")
    s = u.rspec()
    xi = [np.broadcast_to(x, g.rshape) for x in g.rxi_odd]
    k2 = g.rkmag_odd ** 2
    inv = np.zeros_like(k2)
    nz = k2 > 0
    inv[nz] = 1.0 / k2[nz]
    dot = sum(xi[i] * s[i] for i in range(g.n)) * inv
    grad = np.stack([xi[i] * dot for i in range(g.n)])
    return s, grad


def leray_project(u: Field) -> Field:
    """Spectral projection onto divergence-free fields."""
    s, grad = _projection_parts(u)
    return _from_rspec(u.grid, s - grad)


def gradient_part(u: Field) -> Field:
    """Complementary projection grad Lap^{-1} div u."""
    _, grad = _projection_parts(u)
    return _from_rspec(u.grid, grad)


def truncate(u: Field, kmax: float) -> Field:
    """Sharp spectral cut keeping |xi| <= kmax."""
    return apply_multiplier(u, (u.grid.rkmag <= kmax).astype(float))


# -- random smooth data -----------------------------------------------------
def random_field(grid: Grid, rng: np.random.Generator, components: int = 1,
                 sigma: float = 3.0, kmax: Optional[float] = None,
                 solenoidal: bool = False, mean_zero: bool = False,
                 envelope: Optional[float] = None, amplitude: float = 1.0) -> Field:
    """Seeded random smooth field with |u_hat(k)| ~ (1+|k|)^(-sigma).

    Args:
        kmax: sharp spectral cutoff (physical units); default 0.28*Nyquist.
        solenoidal: Leray-project a vector field.
        envelope: optional Gaussian width multiplying the field in space to
            localize it near the origin (applied before the final cutoff).
        amplitude: rescale so the sup norm equals this value.
    """
    if kmax is None:
        kmax = 0.28 * grid.nyquist
    shp = (components,) + grid.rshape
    spec = rng.standard_normal(shp) + 1j * rng.standard_normal(shp)
    kk = grid.rkmag
    spec *= (1.0 + kk) ** (-sigma) * (kk <= kmax)
    f = _from_rspec(grid, spec)
    if envelope is not None:
        f = Field._wrap(grid, f.values * np.exp(-(grid.radius / envelope) ** 2))
        f = truncate(f, kmax)
    if solenoidal:
        f = leray_project(f)
    if mean_zero:
        f = f - f.mean().reshape((-1,) + (1,) * grid.n)
    m = f.sup()
    if m > 0:
        f = f * (amplitude / m)
    return f


# -- density --------------------------------------------------------------
@dataclass(frozen=True)
class DensityState:
    """Density perturbation a = 1/rho - 1 with declared positive bounds."""

    a: Field
    bounds: tuple

    def __post_init__(self):
        lo, hi, ref = (float(b) for b in self.bounds)
        if not (lo > 0 and hi >= lo and ref > 0):
            raise FieldValueError(f"density bounds must be positive and ordered: {self.bounds}")
        one_plus = 1.0 + self.a.values[0]
        if np.any(one_plus <= 0):
            raise FieldValueError("1 + a must be positive everywhere")
        rho = 1.0 / one_plus
        if rho.min() < lo * (1 - 1e-12) or rho.max() > hi * (1 + 1e-12):
            raise FieldValueError(
                f"density range [{rho.min():.6g}, {rho.max():.6g}] outside bounds [{lo}, {hi}]")

    @property
    def rho(self) -> np.ndarray:
        return 1.0 / (1.0 + self.a.values[0])

    @classmethod
    def from_density(cls, rho: Field, rho_tilde: float = 1.0) -> "DensityState":
        r = rho.values[0]
        if np.any(r <= 0):
            raise FieldValueError("density must be positive")
        a = Field._wrap(rho.grid, 1.0 / r - 1.0)
        return cls(a, (float(r.min()), float(r.max()), rho_tilde))
