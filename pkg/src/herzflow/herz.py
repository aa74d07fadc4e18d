"""Herz norms over dyadic spatial rings and the basic Herz inequalities.

Rings are ``A_-1 = {|x| < 1/2}`` and ``A_k = {2^(k-1) <= |x| < 2^k}`` for
``0 <= k <= k_max`` with ``2^k_max <= L/2``.  Torus corners beyond
``2^k_max`` are folded into the last ring so that no mass is dropped.
Integrals use midpoint quadrature with weight ``h^n``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Any, Optional

import numpy as np
import scipy.fft as sfft

from .errors import BandLimitError, FieldValueError, GridError, ParameterError
from .grid import Field, Grid, apply_multiplier, get_threads

__all__ = ["RingPartition", "ring_partition", "NormParams", "EstimateReport",
           "herz_norm", "ring_norms", "check_holder", "check_young",
           "young_mass", "bernstein_ratio", "aggregate"]


@dataclass(frozen=True)
class RingPartition:
    grid: Grid
    k_max: int
    labels: np.ndarray   # ring index + 1 for every grid point

    @property
    def ring_indices(self) -> np.ndarray:
        return np.arange(-1, self.k_max + 1)

    def mask(self, k: int) -> np.ndarray:
        return self.labels == k + 1

    def counts(self) -> np.ndarray:
        return np.bincount(self.labels.ravel(), minlength=self.k_max + 2)

    def ring_of(self, x) -> int:
        """Ring index of an arbitrary point (same rule as the grid labels)."""
        return int(_ring_label(np.atleast_1d(np.linalg.norm(x)), self.k_max)[0]) - 1


def _ring_label(r: np.ndarray, k_max: int) -> np.ndarray:
    lab = np.zeros(r.shape, dtype=np.int64)
    pos = r >= 0.5
    # 2^(k-1) <= r < 2^k  <=>  k = floor(log2 r) + 1
    lab[pos] = np.floor(np.log2(r[pos])).astype(np.int64) + 2
    return np.clip(lab, 0, k_max + 1)


@lru_cache(maxsize=16)
def ring_partition(grid: Grid) -> RingPartition:
    """Label each grid point with its Herz ring."""
    k_max = int(math.floor(math.log2(grid.L / 2.0) + 1e-12))
    if k_max < 3:
        raise GridError(f"L = {grid.L} hosts only rings up to k = {k_max}; need L >= 16")
    lab = _ring_label(grid.radius, k_max)
    lab.flags.writeable = False
    return RingPartition(grid, k_max, lab)


@dataclass(frozen=True)
class NormParams:
    """Index tuple (alpha, p, q, r, s) selecting a Herz-type norm."""

    alpha: float = 0.5
    p: float = 2.0
    q: float = 2.0
    r: float = 1.0
    s: float = 2.0

    def __post_init__(self):
        for name in ("p", "q", "r"):
            v = float(getattr(self, name))
            if not v >= 1.0:
                raise ParameterError(f"{name} must lie in [1, inf], got {v}")
        for name in ("alpha", "s"):
            if not np.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")

    def replace(self, **kw) -> "NormParams":
        d = asdict(self)
        d.update(kw)
        return NormParams(**d)

    def check_theorem_regime(self, n: int) -> None:
        """Raise unless 1 < p < inf and 0 <= alpha < n(1 - 1/p)."""
        if not 1.0 < self.p < np.inf:
            raise ParameterError(f"need 1 < p < inf, got p = {self.p}")
        if not 0.0 <= self.alpha < n * (1.0 - 1.0 / self.p):
            raise ParameterError(
                f"need 0 <= alpha < n(1-1/p) = {n * (1 - 1 / self.p):.4g}, got {self.alpha}")

    def as_dict(self) -> dict:
        return {k: (None if np.isinf(v) else float(v)) for k, v in asdict(self).items()}


@dataclass
class EstimateReport:
    """Outcome of one inequality check: lhs <= ceiling * rhs."""

    lhs: float
    rhs: float
    ceiling: float
    witness: Any = ""
    extra: dict = field(default_factory=dict)
    lower: Optional[float] = None   # reverse fitted constant for two-sided checks

    def __post_init__(self):
        self.lhs = float(self.lhs)
        self.rhs = float(self.rhs)
        self.ceiling = float(self.ceiling)
        if self.lhs < 0 or self.rhs < 0:
            raise ValueError("estimate sides must be nonnegative")

    @property
    def fitted_constant(self) -> float:
        if self.rhs > 0:
            return self.lhs / self.rhs
        return 0.0 if self.lhs == 0 else math.inf

    @property
    def passed(self) -> bool:
        ok = self.lhs <= self.ceiling * self.rhs
        if self.lower is not None:
            ok = ok and self.lower <= self.ceiling
        return bool(ok)

    def to_dict(self) -> dict:
        def clean(x):
            if isinstance(x, dict):
                return {k: clean(v) for k, v in x.items()}
            if isinstance(x, (list, tuple)):
                return [clean(v) for v in x]
            if isinstance(x, (np.floating, float)):
                x = float(x)
                return x if math.isfinite(x) else str(x)
            if isinstance(x, np.integer):
                return int(x)
            if isinstance(x, np.bool_):
                return bool(x)
            return x
        return clean({"lhs": self.lhs, "rhs": self.rhs,
                      "fitted_constant": self.fitted_constant,
                      "ceiling": self.ceiling, "lower": self.lower,
                      "pass": self.passed,
                      "witness": self.witness, "extra": self.extra})


def aggregate(seq, r: float) -> float:
    """l^r norm of a nonnegative sequence (max for r = inf)."""
    seq = np.asarray(seq, dtype=float)
    if seq.size == 0:
        return 0.0
    if np.isinf(r):
        return float(seq.max())
    m = seq.max()
    if m == 0:
        return 0.0
    return float(m * np.sum((seq / m) ** r) ** (1.0 / r))


def _magnitude(u) -> np.ndarray:
    if isinstance(u, Field):
        return u.magnitude()
    return np.abs(np.asarray(u, dtype=float))


def ring_norms(u, p: float, rings: RingPartition) -> np.ndarray:
    """L^p norm of |u| on each ring A_-1 .. A_k_max."""
    m = _magnitude(u)
    if m.ndim == rings.labels.ndim + 1:
        m = np.sqrt(np.sum(m ** 2, axis=0))
    if not np.all(np.isfinite(m)):
        raise FieldValueError("field contains NaN or Inf")
    lab = rings.labels.ravel()
    nb = rings.k_max + 2
    if np.isinf(p):
        out = np.zeros(nb)
        np.maximum.at(out, lab, m.ravel())
        return out
    mx = m.max()
    if mx == 0:
        return np.zeros(nb)
    w = (m.ravel() / mx) ** p
    sums = np.bincount(lab, weights=w, minlength=nb) * rings.grid.cell_volume
    return mx * sums ** (1.0 / p)


def herz_norm(u, params: NormParams, rings: Optional[RingPartition] = None,
              grid: Optional[Grid] = None) -> float:
    """Herz norm (sum_k (2^(alpha k) ||u||_Lp(A_k))^q)^(1/q).

    ``u`` may be a Field or a raw array on ``grid``.
    """
    if rings is None:
        rings = ring_partition(u.grid if isinstance(u, Field) else grid)
    per = ring_norms(u, params.p, rings)
    weights = 2.0 ** (params.alpha * rings.ring_indices)
    return aggregate(per * weights, params.q)


def _combine(p1, p2):
    inv = (0.0 if np.isinf(p1) else 1.0 / p1) + (0.0 if np.isinf(p2) else 1.0 / p2)
    return np.inf if inv == 0 else 1.0 / inv


def check_holder(u: Field, v: Field, params1: NormParams, params2: NormParams,
                 ceiling: float = 1.0 + 1e-9) -> EstimateReport:
    """||uv||_K(alpha,p,q) against ||u||_K(alpha1,p1,q1) ||v||_K(alpha2,p2,q2).

    The target indices are derived: 1/p = 1/p1 + 1/p2, 1/q = 1/q1 + 1/q2,
    alpha = alpha1 + alpha2.
    """
    if u.grid != v.grid:
        raise GridError("fields live on different grids")
    p = _combine(params1.p, params2.p)
    q = _combine(params1.q, params2.q)
    if p < 1 or q < 1:
        raise ParameterError(f"combined exponents p = {p}, q = {q} fall below 1")
    target = NormParams(alpha=params1.alpha + params2.alpha, p=p, q=q)
    prod = u.magnitude() * v.magnitude()
    rings = ring_partition(u.grid)
    lhs = herz_norm(prod, target, rings)
    rhs = herz_norm(u, params1, rings) * herz_norm(v, params2, rings)
    return EstimateReport(lhs, rhs, ceiling, witness="holder",
                          extra={"p": p, "q": q, "alpha": target.alpha})


def young_mass(phi: Field, params: NormParams, beta: float = 1.0) -> float:
    """Weighted mass M_phi: max of ||phi||_1 and two radial moments."""
    g = phi.grid
    m = phi.magnitude()
    r = g.radius
    dv = g.cell_volume
    ap = params.alpha * params.p if np.isfinite(params.p) else 0.0
    if params.alpha >= 0:
        e1, e2 = beta, 2 * beta + ap
    else:
        e1, e2 = beta - ap, 2 * beta
    vals = [np.sum(m) * dv, np.sum(r ** e1 * m) * dv, np.sum(r ** e2 * m) * dv]
    M = float(max(vals))
    if not math.isfinite(M):
        raise FieldValueError("weighted mass of the kernel is not finite")
    return M


def convolve(phi: Field, u: Field) -> Field:
    """Periodic convolution (phi * u)(x) = sum_y phi(x - y) u(y) h^n.

    ``phi`` is sampled on the origin-centered grid.
    """
    g = u.grid
    kern = np.fft.ifftshift(phi.values[0])   # origin -> index 0
    kh = sfft.rfftn(kern, workers=get_threads())
    return apply_multiplier(u, kh * g.cell_volume)


def check_young(phi: Field, u: Field, params: NormParams, beta: float = 1.0,
                ceiling: float = 64.0) -> EstimateReport:
    if phi.grid != u.grid:
        raise GridError("fields live on different grids")
    if phi.components != 1:
        raise FieldValueError("kernel must be scalar")
    M = young_mass(phi, params, beta)
    rings = ring_partition(u.grid)
    lhs = herz_norm(convolve(phi, u), params, rings)
    un = herz_norm(u, params, rings)
    return EstimateReport(lhs, M * un, ceiling, witness="young",
                          extra={"M_phi": M, "beta": beta, "u_norm": un})


def _partials(u: Field, beta) -> Field:
    g = u.grid
    mult = np.ones(g.rshape, dtype=complex)
    for ax, b in enumerate(beta):
        if b:
            xi = g.rxi_odd[ax] if b % 2 else g.rxi[ax]
            mult = mult * (1j * xi) ** b
    return apply_multiplier(u, mult)


def _multi_indices(n: int, order: int):
    if n == 1:
        yield (order,)
        return
    for b in range(order, -1, -1):
        for rest in _multi_indices(n - 1, order - b):
            yield (b,) + rest


def bernstein_ratio(u: Field, j: int, beta, params: NormParams,
                    support: str = "ring", ceiling: float = 16.0,
                    tol: float = 1e-10) -> EstimateReport:
    """Derivative and sup-norm Bernstein ratios for a frequency-localized u.

    ``support`` is ``"ring"`` (|xi| in [3/4, 2]*2^j) or ``"ball"``
    (|xi| <= 2*2^j).  The report's lhs/rhs is the forward ratio
    ``||d^beta u||_K / (2^(j|beta|) ||u||_K)``; ``extra`` also holds the
    reverse ratio (ring case, using the largest derivative of order |beta|)
    and the L-infinity ratio ``||u||_inf / (2^(jn/p) ||u||_K)``.
    """
    g = u.grid
    beta = tuple(int(b) for b in beta)
    if len(beta) != g.n or min(beta) < 0:
        raise ParameterError(f"multi-index {beta} does not match n = {g.n}")
    k = g.rkmag
    hi = 2.0 ** (j + 1)
    lo = 0.75 * 2.0 ** j if support == "ring" else 0.0
    outside = (k > hi * (1 + 1e-12)) | (k < lo * (1 - 1e-12))
    s = u.rspec()
    w = np.full(s.shape[-1], 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    en = np.abs(s) ** 2 * w
    tot = en.sum()
    if tot > 0 and en[..., outside].sum() > tol * tot:
        raise BandLimitError(f"field is not localized to the {support} at scale 2^{j}")
    order = sum(beta)
    rings = ring_partition(g)
    un = herz_norm(u, params, rings)
    dn = herz_norm(_partials(u, beta), params, rings)
    scale = 2.0 ** (j * order)
    extra = {"j": j, "beta": list(beta), "forward": dn / (scale * un) if un else 0.0}
    if support == "ring" and un > 0:
        best = max(herz_norm(_partials(u, b), params, rings)
                   for b in _multi_indices(g.n, order))
        extra["reverse"] = scale * un / best if best > 0 else math.inf
    if np.isfinite(params.p):
        extra["linf"] = u.sup() / (2.0 ** (j * g.n / params.p) * un) if un else 0.0
    return EstimateReport(dn, scale * un, ceiling, witness="bernstein", extra=extra)
