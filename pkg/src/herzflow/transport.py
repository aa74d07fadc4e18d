"""Particle flows, composition with volume-preserving maps, and transport.

Flows are integrated with classical RK4; off-grid velocities come from
six-point Lagrange interpolation.  The transport solver is
semi-Lagrangian: it keeps the periodic displacement of the backward map
``X^-1(x, t) - x`` and composes it interval by interval, so the initial
datum is interpolated exactly once per output time.
"""
from __future__ import annotations

import bisect
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfc

from ._interp import PeriodicInterpolator
from .besov import besov_herz_norm
from .errors import CFLError, JacobianError, ParameterError, TrajectoryError
from .grid import Field, Grid, check_divergence_free, grid_lp_norm, leray_project
from .herz import EstimateReport, NormParams, herz_norm

log = logging.getLogger(__name__)

__all__ = ["TimeSeries", "FlowMap", "integrate_flow", "compose", "check_composition_norm",
           "composition_ceiling", "solve_transport", "check_transport_estimate",
           "rotation_velocity", "rotation_core", "lp_conservation", "cfl_limit",
           "jacobian_determinant"]


class TimeSeries:
    """Fields sampled at increasing times, piecewise cubic in between."""

    def __init__(self, times: Sequence[float], fields: Sequence[Field]):
        times = np.asarray(times, dtype=float)
        if len(times) != len(fields) or len(times) == 0:
            raise ValueError("times and fields must be nonempty and of equal length")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        self.times = times
        self.fields = list(fields)
        self.grid = fields[0].grid

    @classmethod
    def constant(cls, u: Field, t0: float = 0.0, t1: float = 1.0) -> "TimeSeries":
        return cls([t0, t1], [u, u])

    def __len__(self):
        return len(self.times)

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t1(self) -> float:
        return float(self.times[-1])

    def is_stationary(self) -> bool:
        f0 = self.fields[0]
        return all(f is f0 or np.array_equal(f.values, f0.values) for f in self.fields[1:])

    def values_at(self, t: float) -> np.ndarray:
        ts = self.times
        span = max(ts[-1] - ts[0], 1.0)
        if t < ts[0] - 1e-9 * span or t > ts[-1] + 1e-9 * span:
            raise ValueError(f"time {t} outside sampled range [{ts[0]}, {ts[-1]}]")
        m = len(ts)
        if m == 1:
            return self.fields[0].values
        i = min(max(bisect.bisect_right(ts, t) - 1, 0), m - 2)
        if t == ts[i]:
            return self.fields[i].values
        lo = min(max(i - 1, 0), max(m - 4, 0))
        nodes = list(range(lo, min(lo + 4, m)))
        out = 0.0
        for a in nodes:
            w = 1.0
            for b in nodes:
                if b != a:
                    w *= (t - ts[b]) / (ts[a] - ts[b])
            out = out + w * self.fields[a].values
        return out

    def at(self, t: float) -> Field:
        return Field._wrap(self.grid, self.values_at(t))

    def map(self, func) -> "TimeSeries":
        return TimeSeries(self.times, [func(f) for f in self.fields])

    def sup_norm(self) -> float:
        return max(f.sup() for f in self.fields)


def _as_series(v) -> TimeSeries:
    if isinstance(v, TimeSeries):
        return v
    if isinstance(v, Field):
        return TimeSeries([0.0], [v])
    raise TypeError("velocity must be a Field or TimeSeries")


class _Velocity:
    """Off-grid velocity evaluation with a small cache of padded slices."""

    def __init__(self, series: TimeSeries):
        self.series = series
        self.L = series.grid.L
        self.stationary = len(series) == 1 or series.is_stationary()
        self._cache = {}

    def __call__(self, pts: np.ndarray, t: float) -> np.ndarray:
        key = 0.0 if self.stationary else float(t)
        it = self._cache.get(key)
        if it is None:
            vals = self.series.fields[0].values if self.stationary else self.series.values_at(t)
            it = PeriodicInterpolator(vals, self.L)
            if len(self._cache) > 4:
                self._cache.pop(next(iter(self._cache)))
            self._cache[key] = it
        return it(pts)


def cfl_limit(grid: Grid, vmax: float) -> float:
    """Largest admissible step h / (4 max|v|)."""
    return math.inf if vmax == 0 else grid.h / (4.0 * vmax)


def _check_velocity(series: TimeSeries, dt: float, div_tol: float = 1e-10):
    vmax = 0.0
    for f in series.fields:
        if f.components != f.grid.n:
            raise ParameterError("velocity must be a vector field")
        check_divergence_free(f, div_tol)
        vmax = max(vmax, f.sup())
    lim = cfl_limit(series.grid, vmax)
    if dt > lim * (1 + 1e-12):
        raise CFLError(f"dt = {dt:.4g} exceeds the stability bound {lim:.4g}")
    return vmax


def _rk4(vel: _Velocity, pts: np.ndarray, t0: float, t1: float, dt: float) -> np.ndarray:
    """Integrate dX/dt = v(X, t) for an (n, M) array of points from t0 to t1."""
    if t1 == t0:
        return pts.copy()
    steps = max(1, int(math.ceil(abs(t1 - t0) / dt - 1e-9)))
    k = (t1 - t0) / steps
    x = pts.copy()
    t = t0
    for _ in range(steps):
        k1 = vel(x, t)
        k2 = vel(x + 0.5 * k * k1, t + 0.5 * k)
        k3 = vel(x + 0.5 * k * k2, t + 0.5 * k)
        k4 = vel(x + k * k3, t + k)
        x = x + (k / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = t + k
        if not np.all(np.isfinite(x)):
            raise TrajectoryError(f"non-finite particle position at t = {t:.4g}")
    return x


@dataclass
class FlowMap:
    """Forward and inverse displacement of the flow between t0 and t1."""

    grid: Grid
    t0: float
    t1: float
    forward: np.ndarray    # X(y, t1) - y, shape (n, N, ..., N)
    inverse: np.ndarray    # X^-1(x, t1) - x

    @property
    def time(self) -> float:
        return self.t1

    @property
    def positions(self) -> np.ndarray:
        return self.grid.mesh + self.forward

    @property
    def inverse_positions(self) -> np.ndarray:
        return self.grid.mesh + self.inverse

    @property
    def displacement(self) -> float:
        f = np.sqrt(np.sum(self.forward ** 2, axis=0)).max()
        b = np.sqrt(np.sum(self.inverse ** 2, axis=0)).max()
        return float(max(f, b))

    def composition_error(self) -> float:
        """max |X^-1(X(y)) - y| over the grid."""
        n = self.grid.n
        fx = self.positions.reshape(n, -1)
        back = fx + PeriodicInterpolator(self.inverse, self.grid.L)(fx)
        return float(np.abs(back - self.grid.mesh.reshape(n, -1)).max())

    def jacobian_deviation(self, which: str = "forward") -> float:
        d = self.forward if which == "forward" else self.inverse
        return float(np.abs(jacobian_determinant(d, self.grid.h) - 1.0).max())

    @classmethod
    def identity(cls, grid: Grid, t: float = 0.0) -> "FlowMap":
        z = np.zeros((grid.n,) + grid.shape)
        return cls(grid, t, t, z, z.copy())


def _fd4(f: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(f, 2, axis) - 8 * np.roll(f, 1, axis)
            + 8 * np.roll(f, -1, axis) - np.roll(f, -2, axis)) / (12.0 * h)


def jacobian_determinant(disp: np.ndarray, h: float) -> np.ndarray:
    """det(I + grad D) with fourth-order periodic differences."""
    n = disp.shape[0]
    M = np.empty((n, n) + disp.shape[1:])
    for i in range(n):
        for k in range(n):
            M[i, k] = _fd4(disp[i], k, h) + (1.0 if i == k else 0.0)
    return np.linalg.det(np.moveaxis(M, (0, 1), (-2, -1)))


def integrate_flow(v, t0: float, t1: float, dt: float) -> FlowMap:
    """Flow map of ``v`` from t0 to t1 for every grid point, both directions."""
    series = _as_series(v)
    _check_velocity(series, dt)
    g = series.grid
    vel = _Velocity(series)
    y = g.mesh.reshape(g.n, -1)
    fwd = _rk4(vel, y, t0, t1, dt) - y
    inv = _rk4(vel, y, t1, t0, dt) - y
    shp = (g.n,) + g.shape
    return FlowMap(g, t0, t1, fwd.reshape(shp), inv.reshape(shp))


def compose(u: Field, X: FlowMap, inverse: bool = False) -> Field:
    """u o X (or u o X^-1) by interpolation."""
    g = u.grid
    pos = (X.inverse_positions if inverse else X.positions).reshape(g.n, -1)
    vals = PeriodicInterpolator(u.values, g.L)(pos)
    return Field._wrap(g, vals.reshape(u.values.shape))


def composition_ceiling(params: NormParams, n: int, gamma: float) -> float:
    """Ring-shift bound 2^((|alpha| + n/p) m + 2), m = max(1, ceil(log2(1 + gamma)))."""
    m = max(1, math.ceil(math.log2(1.0 + gamma)))
    inv_p = 0.0 if np.isinf(params.p) else 1.0 / params.p
    return 2.0 ** ((abs(params.alpha) + n * inv_p) * m + 2)


def check_composition_norm(u: Field, X: FlowMap, params: NormParams,
                           ceiling: Optional[float] = None,
                           jacobian_tol: float = 1e-4) -> EstimateReport:
    """Two-sided comparison of the Herz norms of u o X and u."""
    dev = X.jacobian_deviation("forward")
    if dev > jacobian_tol:
        raise JacobianError(f"flow map Jacobian deviates from 1 by {dev:.2e}")
    gamma = X.displacement
    if ceiling is None:
        ceiling = composition_ceiling(params, u.grid.n, gamma)
    comp = compose(u, X)
    lhs = herz_norm(comp, params)
    rhs = herz_norm(u, params)
    lower = rhs / lhs if lhs > 0 else (0.0 if rhs == 0 else math.inf)
    return EstimateReport(lhs, rhs, ceiling, witness="composition", lower=lower,
                          extra={"gamma": gamma, "jacobian_deviation": dev})


def _output_times(t0: float, T: float, dt: float, out_times) -> np.ndarray:
    if out_times is None:
        steps = max(1, int(math.ceil(T / dt - 1e-9)))
        return t0 + T * np.arange(steps + 1) / steps
    ts = np.asarray(sorted(set(float(t) for t in out_times) | {t0}))
    if ts[0] < t0 or ts[-1] > t0 + T * (1 + 1e-12):
        raise ValueError("output times must lie in [t0, t0 + T]")
    return ts


def solve_transport(a0: Field, u, T: float, dt: float, out_times=None,
                    t0: float = 0.0, check: bool = True) -> TimeSeries:
    """Semi-Lagrangian solution a(x, t) = a0(X^-1(x, t)) of da/dt + u.grad a = 0.

    Args:
        a0: initial datum.
        u: velocity Field (stationary) or TimeSeries.
        T: horizon; dt: RK4 step for the characteristics.
        out_times: times at which to store a (default every step).
    """
    series = _as_series(u)
    if check:
        _check_velocity(series, dt)
    g = a0.grid
    vel = _Velocity(series)
    ts = _output_times(t0, T, dt, out_times)
    x = g.mesh.reshape(g.n, -1)
    a_interp = PeriodicInterpolator(a0.values, g.L)
    disp = np.zeros_like(x)
    out = [a0]
    for k in range(1, len(ts)):
        feet = _rk4(vel, x, ts[k], ts[k - 1], dt)
        if k > 1:
            prev = PeriodicInterpolator(disp.reshape((g.n,) + g.shape), g.L)
            disp = (feet - x) + prev(feet)
        else:
            disp = feet - x
        vals = a_interp(x + disp)
        out.append(Field._wrap(g, vals.reshape(a0.values.shape)))
    return TimeSeries(ts, out)


def check_transport_estimate(a: TimeSeries, u, params: NormParams,
                             ceiling: float = 64.0) -> EstimateReport:
    """Fit C in ||a(t)|| <= C exp(C t U) ||a0|| with U = sup_t ||u(t)||.

    Norms are nonhomogeneous Besov-Herz norms at ``params``.  The fitted C
    is the smallest constant covering every stored time (at least 1).
    """
    useries = _as_series(u)
    an = np.array([besov_herz_norm(f, params)[0] for f in a.fields])
    un = np.array([besov_herz_norm(useries.at(min(max(t, useries.t0), useries.t1))
                                   if len(useries) > 1 else useries.fields[0], params)[0]
                   for t in a.times])
    t = a.times - a.times[0]
    U = float(un.max())
    a0 = an[0]
    ratios = an / a0 if a0 > 0 else np.ones_like(an)
    C = 1.0
    # compare in log space: C t U easily exceeds the float exp range for long runs
    for ti, R in zip(t, ratios):
        if R <= 0 or math.log(R) <= math.log(C) + C * ti * U:
            continue
        f = lambda c: math.log(c) + c * ti * U - math.log(R)
        hi = max(2.0 * C, R)
        while f(hi) < 0:
            hi *= 2.0
        C = brentq(f, C, hi, xtol=1e-14, rtol=1e-12)
    T = float(t[-1])
    with np.errstate(over="ignore"):
        envelope = a0 * C * np.exp(C * t * U)
    # integral form: ||a(t)|| <= C (||a0|| + int ||a|| ||u||)
    integ = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (an[1:] * un[1:] + an[:-1] * un[:-1]))])
    c_int = float(np.max(an / (a0 + integ))) if a0 > 0 else 0.0
    lhs = float(an.max())
    rhs = float(a0 * _safe_exp(C * T * U))
    return EstimateReport(lhs, rhs, ceiling, witness="transport_estimate",
                          extra={"C": C, "U": U, "T": T, "C_integral": c_int,
                                 "norms": an.tolist(), "envelope": envelope.tolist(),
                                 "envelope_monotone": bool(np.all(envelope[1:] >= envelope[:-1]))})


def _safe_exp(x: float) -> float:
    return math.exp(x) if x < 709.0 else math.inf


def rotation_velocity(grid: Grid, radius: float = 2.5, width: float = 0.25) -> Field:
    """Rigid rotation (-x2, x1) inside |x| < radius, smoothly cut off by erfc.

    In 2-D the field rotates the plane; in 3-D it rotates about the x3 axis
    with a cutoff in the full radius.  The result is Leray-projected so its
    discrete divergence vanishes to roundoff.
    """
    r = grid.radius
    chi = 0.5 * erfc((r - radius) / width)
    x = grid.mesh
    comps = [-chi * x[1], chi * x[0]]
    if grid.n == 3:
        comps.append(np.zeros(grid.shape))
    return leray_project(Field(grid, np.stack(comps)))


def rotation_core(radius: float = 2.5, width: float = 0.25) -> float:
    """Radius inside which :func:`rotation_velocity` is rigid to ~1e-12."""
    return radius - 5.0 * width


def lp_conservation(a: TimeSeries, p: float) -> float:
    """Largest relative change of the grid L^p norm along a series."""
    n0 = grid_lp_norm(a.fields[0], p)
    return max(abs(grid_lp_norm(f, p) - n0) / n0 for f in a.fields)
