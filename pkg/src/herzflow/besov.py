"""Besov-Herz and Sobolev-Herz norms, their equivalences and embeddings.

Block weights use the shifted index ``jp = j - j_min - 1`` so the base
block carries weight ``2^(-s)`` and norms do not depend on where the
lattice puts its lowest scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .dyadic import HOMOGENEOUS, NONHOMOGENEOUS, DyadicFilterBank, default_bank
from .errors import FieldValueError, ParameterError
from .grid import Field, apply_multiplier, grid_lp_norm
from .herz import (EstimateReport, NormParams, _multi_indices, _partials,
                   aggregate, herz_norm, ring_partition)

__all__ = ["BesovBreakdown", "besov_herz_norm", "block_knorms", "sobolev_herz_norm",
           "riesz_potential", "check_norm_equivalence", "check_linfty_embedding",
           "check_sobolev_bernstein", "classical_besov_norm"]


@dataclass
class BesovBreakdown:
    """Per-block contributions to a Besov-Herz norm."""

    j: List[int]             # shifted indices, lowest block at -1
    block_knorm: List[float]
    weighted: List[float]
    r: float
    mode: str

    @property
    def norm(self) -> float:
        return aggregate(self.weighted, self.r)

    def to_json(self) -> list:
        return [{"j": int(j), "block_knorm": float(b), "weighted": float(w)}
                for j, b, w in zip(self.j, self.block_knorm, self.weighted)]

    def reweighted(self, s: float, r: Optional[float] = None) -> "BesovBreakdown":
        """Same block norms, different regularity/outer index."""
        w = [2.0 ** (s * j) * b for j, b in zip(self.j, self.block_knorm)]
        return BesovBreakdown(self.j, self.block_knorm, w, self.r if r is None else r, self.mode)


def block_knorms(u: Field, params: NormParams, mode: str = NONHOMOGENEOUS,
                 bank: Optional[DyadicFilterBank] = None, norm=None):
    """(shifted indices, block norms) for every bank block of u."""
    bank = bank or default_bank(u.grid)
    rings = ring_partition(u.grid)
    if norm is None:
        def norm(f):
            return herz_norm(f, params, rings)
    js, vals = [], []
    for j in bank.indices(mode):
        js.append(bank.shifted_index(j))
        vals.append(norm(bank.block(u, j, mode)))
    return js, vals


def besov_herz_norm(u: Field, params: NormParams, mode: str = NONHOMOGENEOUS,
                    bank: Optional[DyadicFilterBank] = None):
    """Besov-Herz norm and its per-block breakdown."""
    if not np.all(np.isfinite(u.values)):
        raise FieldValueError("field contains NaN or Inf")
    js, vals = block_knorms(u, params, mode, bank)
    bd = BesovBreakdown(js, vals, [2.0 ** (params.s * j) * v for j, v in zip(js, vals)],
                        params.r, mode)
    return bd.norm, bd


def riesz_potential(u: Field, s: float) -> Field:
    """I^s u = F^-1[|xi|^s F u] with the mean mode dropped."""
    k = u.grid.rkmag
    m = np.zeros_like(k)
    nz = k > 0
    m[nz] = k[nz] ** s
    return apply_multiplier(u, m)


def sobolev_herz_norm(u: Field, params: NormParams) -> float:
    """||I^s u|| in the Herz norm K(alpha, p, q)."""
    if not np.all(np.isfinite(u.values)):
        raise FieldValueError("field contains NaN or Inf")
    return herz_norm(riesz_potential(u, params.s), params)


def check_norm_equivalence(u: Field, params: NormParams, ceiling: float = 16.0,
                           bank: Optional[DyadicFilterBank] = None) -> EstimateReport:
    """Compare the nonhomogeneous norm with homogeneous norm + Herz norm."""
    if params.s <= 0:
        raise ParameterError(f"norm equivalence needs s > 0, got {params.s}")
    nh, _ = besov_herz_norm(u, params, NONHOMOGENEOUS, bank)
    hom, _ = besov_herz_norm(u, params, HOMOGENEOUS, bank)
    kn = herz_norm(u, params)
    rhs = hom + kn
    lower = rhs / nh if nh > 0 else (0.0 if rhs == 0 else math.inf)
    return EstimateReport(nh, rhs, ceiling, witness="norm_equivalence",
                          extra={"homogeneous": hom, "herz": kn}, lower=lower)


def check_linfty_embedding(u: Field, params: NormParams, ceiling: float = 64.0,
                           bank: Optional[DyadicFilterBank] = None) -> EstimateReport:
    """sup|u| against the nonhomogeneous Besov-Herz norm."""
    n = u.grid.n
    crit = n / params.p
    ok = params.s > crit + 1e-12 or (abs(params.s - crit) <= 1e-12 and params.r == 1)
    if not ok:
        raise ParameterError(
            f"embedding into L-infinity needs s > n/p, or s = n/p with r = 1 "
            f"(got s = {params.s}, n/p = {crit}, r = {params.r})")
    if params.alpha < 0:
        raise ParameterError("embedding into L-infinity needs alpha >= 0")
    norm, _ = besov_herz_norm(u, params, NONHOMOGENEOUS, bank)
    return EstimateReport(u.sup(), norm, ceiling, witness="linfty_embedding")


def check_sobolev_bernstein(u: Field, params: NormParams, order: int = 1,
                            ceiling: float = 8.0) -> EstimateReport:
    """Two-sided comparison of sup_|beta|=k ||d^beta u|| at s with ||u|| at s + k."""
    g = u.grid
    best = max(sobolev_herz_norm(_partials(u, b), params)
               for b in _multi_indices(g.n, order))
    top = sobolev_herz_norm(u, params.replace(s=params.s + order))
    lower = top / best if best > 0 else (0.0 if top == 0 else math.inf)
    return EstimateReport(best, top, ceiling, witness="sobolev_bernstein", lower=lower)


def classical_besov_norm(u: Field, params: NormParams, mode: str = NONHOMOGENEOUS,
                         bank: Optional[DyadicFilterBank] = None) -> float:
    """Besov norm with plain L^p block norms, same weights as the Herz version."""
    js, vals = block_knorms(u, params, mode, bank,
                            norm=lambda f: grid_lp_norm(f, params.p))
    return aggregate([2.0 ** (params.s * j) * v for j, v in zip(js, vals)], params.r)
