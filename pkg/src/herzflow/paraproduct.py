"""Bony paraproducts, product estimates and the two commutator decompositions.

With blocks ``D_j`` and low-pass ``S_j`` of the filter bank:

* ``T_u v  = sum_j S_{j-1}u D_j v``
* ``Rem(u, v) = sum_j D_j u (D_{j-1} + D_j + D_{j+1}) v``
* ``R(u, v) = sum_j D_j u S_{j+2} v = T_v u + Rem(u, v)``

so that ``uv = T_u v + R(u, v)`` exactly whenever both factors are
represented by the bank.  All sums run over the bank's finite index range.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .besov import besov_herz_norm
from .dyadic import NONHOMOGENEOUS, DyadicFilterBank, default_bank
from .errors import BandLimitError, GridError, ParameterError
from .grid import Field, _from_rspec, check_divergence_free, divergence, jacobian, l2_norm
from .herz import EstimateReport, NormParams, aggregate, herz_norm, ring_partition

__all__ = ["LPDecomposition", "bony_parts", "paraproduct", "remainder", "bony_remainder",
           "CommutatorBreakdown", "commutator_transport", "commutator_pressure",
           "check_product_estimate", "check_commutator_transport",
           "check_commutator_pressure", "div_advection_identity"]

LEAKAGE_TOL = 1e-8


class LPDecomposition:
    """Physical-space blocks of one field with their prefix sums."""

    def __init__(self, u, bank: DyadicFilterBank):
        vals = u.values if isinstance(u, Field) else np.asarray(u)
        if isinstance(u, Field):
            spec = u.rspec()
        else:
            spec = Field._wrap(bank.grid, vals).rspec()
        self.bank = bank
        self.nb = bank.j_max - bank.j_min + 1
        self.blocks = np.stack([
            _from_rspec(bank.grid, spec * bank.block_multiplier(j)).values
            for j in range(bank.j_min, bank.j_max + 1)])
        pre = np.zeros((self.nb + 1,) + self.blocks.shape[1:])
        np.cumsum(self.blocks, axis=0, out=pre[1:])
        self.prefix = pre

    def block(self, i: int):
        if 0 <= i < self.nb:
            return self.blocks[i]
        return 0.0

    def low(self, m: int):
        """Sum of the first m blocks (S_{j_min + m})."""
        return self.prefix[min(max(m, 0), self.nb)]


def _as_decomp(u, bank):
    return u if isinstance(u, LPDecomposition) else LPDecomposition(u, bank)


def _bank_for(*fields) -> DyadicFilterBank:
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridError("fields live on different grids")
    return default_bank(g)


def paraproduct(u, v, bank: DyadicFilterBank) -> np.ndarray:
    """T_u v as a raw array."""
    du, dv = _as_decomp(u, bank), _as_decomp(v, bank)
    out = 0.0
    for i in range(du.nb):
        out = out + du.low(i - 1) * dv.blocks[i]
    return out


def bony_remainder(u, v, bank: DyadicFilterBank) -> np.ndarray:
    """Symmetric remainder Rem(u, v) as a raw array."""
    du, dv = _as_decomp(u, bank), _as_decomp(v, bank)
    out = 0.0
    for i in range(du.nb):
        out = out + du.blocks[i] * (dv.block(i - 1) + dv.blocks[i] + dv.block(i + 1))
    return out


def remainder(u, v, bank: DyadicFilterBank) -> np.ndarray:
    """R(u, v) = sum_j D_j u S_{j+2} v as a raw array."""
    du, dv = _as_decomp(u, bank), _as_decomp(v, bank)
    out = 0.0
    for i in range(du.nb):
        out = out + du.blocks[i] * dv.low(i + 2)
    return out


def bony_parts(u: Field, v: Field, bank: Optional[DyadicFilterBank] = None):
    """(T_u v, T_v u, Rem(u, v), R(u, v)) as Fields."""
    bank = bank or _bank_for(u, v)
    du, dv = LPDecomposition(u, bank), LPDecomposition(v, bank)
    g = u.grid
    tuv = paraproduct(du, dv, bank)
    tvu = paraproduct(dv, du, bank)
    rem = bony_remainder(du, dv, bank)
    big = remainder(du, dv, bank)
    return tuple(Field._wrap(g, x) for x in (tuv, tvu, rem, big))


def _block_array(arr: np.ndarray, j: int, bank: DyadicFilterBank) -> np.ndarray:
    return bank.block(Field._wrap(bank.grid, arr), j).values


@dataclass
class CommutatorBreakdown:
    j: int
    terms: Dict[str, Field] = field(default_factory=dict)

    @property
    def total(self) -> Field:
        it = iter(self.terms.values())
        acc = next(it).values
        for t in it:
            acc = acc + t.values
        return Field._wrap(next(iter(self.terms.values())).grid, acc)


_check_div_free = check_divergence_free


class _TransportContext:
    """Precomputed decompositions shared by all j for one (v, u) pair."""

    def __init__(self, v: Field, u: Field, bank: DyadicFilterBank):
        g = u.grid
        self.bank, self.g = bank, g
        self.v, self.u = v, u
        self.J = jacobian(u)                          # (c, n, ...)
        self.dv = [LPDecomposition(v.values[i:i + 1], bank) for i in range(g.n)]
        self.du = [LPDecomposition(self.J[:, i], bank) for i in range(g.n)]
        adv = np.einsum("k...,ik...->i...", v.values, self.J)
        self.adv = Field._wrap(g, adv)
        # sum_i Rem(v_i, d_i u) and sum_i T_{d_i u} v_i, then sum_i T_{v_i} d_i u
        self.rem = sum(bony_remainder(self.dv[i], self.du[i], bank) for i in range(g.n))
        self.t_du_v = sum(paraproduct(self.du[i], self.dv[i], bank) for i in range(g.n))
        self.t_v_du = sum(paraproduct(self.dv[i], self.du[i], bank) for i in range(g.n))

    def direct(self, j: int) -> np.ndarray:
        bank = self.bank
        a = bank.block(self.adv, j).values
        Ju = jacobian(bank.block(self.u, j))
        b = np.einsum("k...,ik...->i...", self.v.values, Ju)
        return a - b

    def breakdown(self, j: int) -> CommutatorBreakdown:
        bank, g = self.bank, self.g
        r1 = _block_array(self.rem, j, bank)
        r2 = _block_array(self.t_du_v, j, bank)
        Jj = jacobian(bank.block(self.u, j))           # D_j d_i u
        r3 = 0.0
        t_v_dj = 0.0
        for i in range(g.n):
            dji = LPDecomposition(Jj[:, i], bank)
            r3 = r3 - remainder(self.dv[i], dji, bank)
            t_v_dj = t_v_dj + paraproduct(self.dv[i], dji, bank)
        r4 = _block_array(self.t_v_du, j, bank) - t_v_dj
        terms = {name: Field._wrap(g, np.broadcast_to(t, self.u.values.shape))
                 for name, t in (("R1", r1), ("R2", r2), ("R3", r3), ("R4", r4))}
        return CommutatorBreakdown(j, terms)


def commutator_transport(v: Field, u: Field, j: int,
                         bank: Optional[DyadicFilterBank] = None, check_div: bool = True):
    """[D_j, v.grad]u computed directly plus its four-term Bony breakdown."""
    bank = bank or _bank_for(v, u)
    if v.components != v.grid.n:
        raise ParameterError("advecting field must be a vector field")
    if check_div:
        _check_div_free(v)
    ctx = _TransportContext(v, u, bank)
    return Field._wrap(u.grid, ctx.direct(j)), ctx.breakdown(j)


class _PressureContext:
    def __init__(self, a: Field, g_: Field, bank: DyadicFilterBank):
        self.bank = bank
        self.a, self.gp = a, g_
        self.da = LPDecomposition(a, bank)
        self.dg = LPDecomposition(g_, bank)
        self.t_a_g = paraproduct(self.da, self.dg, bank)
        self.r_a_g = remainder(self.da, self.dg, bank)
        self.prod = Field._wrap(a.grid, a.values * g_.values)

    def direct(self, j: int) -> np.ndarray:
        return (self.bank.block(self.prod, j).values
                - self.a.values * self.bank.block(self.gp, j).values)

    def breakdown(self, j: int) -> CommutatorBreakdown:
        bank, g = self.bank, self.a.grid
        gj = LPDecomposition(bank.block(self.gp, j), bank)
        a1 = _block_array(self.t_a_g, j, bank) - paraproduct(self.da, gj, bank)
        a2 = _block_array(self.r_a_g, j, bank)
        a3 = -remainder(self.da, gj, bank)
        shp = self.gp.values.shape
        return CommutatorBreakdown(j, {k: Field._wrap(g, np.broadcast_to(t, shp))
                                       for k, t in (("A1", a1), ("A2", a2), ("A3", a3))})


def commutator_pressure(a: Field, gpi: Field, j: int,
                        bank: Optional[DyadicFilterBank] = None):
    """[D_j, a] grad(pi) computed directly plus its three-term breakdown."""
    bank = bank or _bank_for(a, gpi)
    if a.components != 1:
        raise ParameterError("density perturbation must be scalar")
    ctx = _PressureContext(a, gpi, bank)
    return Field._wrap(a.grid, ctx.direct(j)), ctx.breakdown(j)


# -- inequality checks --------------------------------------------------------
def _admit(bank: DyadicFilterBank, *fields):
    for f in fields:
        lk = bank.leakage(f)
        if lk > LEAKAGE_TOL:
            raise BandLimitError(f"input leaks {lk:.2e} of its energy outside the filter bank")


def _bk(u: Field, params: NormParams, s: float, bank) -> float:
    return besov_herz_norm(u, params.replace(s=s), NONHOMOGENEOUS, bank)[0]


def _critical_ok(params: NormParams, n: int, shift: float) -> bool:
    crit = n / params.p + shift
    return params.s > crit + 1e-12 or (abs(params.s - crit) <= 1e-12 and params.r == 1)


def div_advection_identity(u: Field, v: Field) -> Field:
    """div(u.grad v) = sum_{j,k} d_k u_j d_j v_k, valid for div v = 0."""
    Ju, Jv = jacobian(u), jacobian(v)
    return Field._wrap(u.grid, np.einsum("jk...,kj...->...", Ju, Jv)[None])


def check_product_estimate(u: Field, v: Field, params: NormParams, variant: str = "i",
                           ceiling: float = 64.0,
                           bank: Optional[DyadicFilterBank] = None) -> EstimateReport:
    """Product estimates in Besov-Herz norms.

    Variants: ``i`` (product of two fields), ``ii_grad`` (u.grad v at
    regularity s-1) and ``ii_div`` (div(u.grad v) with div v = 0).
    """
    bank = bank or _bank_for(u, v)
    n = u.grid.n
    _admit(bank, u, v)
    s = params.s
    extra = {"variant": variant}
    if variant == "i":
        if s <= 0:
            raise ParameterError("product estimate (i) needs s > 0")
        if u.components == v.components and u.components > 1:
            prod = Field._wrap(u.grid, np.sum(u.values * v.values, axis=0))
        else:
            prod = Field._wrap(u.grid, u.values * v.values)
        lhs = _bk(prod, params, s, bank)
        rhs = u.sup() * _bk(v, params, s, bank) + v.sup() * _bk(u, params, s, bank)
    elif variant in ("ii_grad", "ii_div"):
        if not np.isfinite(params.p) or params.alpha < 0:
            raise ParameterError("product estimate (ii) needs p < inf and alpha >= 0")
        if not _critical_ok(params, n, 1.0):
            raise ParameterError("product estimate (ii) needs s >= n/p + 1, with r = 1 at equality")
        if u.components != n or v.components != n:
            raise ParameterError("variant ii takes two vector fields")
        if variant == "ii_grad":
            adv = Field._wrap(u.grid, np.einsum("k...,ik...->i...", u.values, jacobian(v)))
            lhs = _bk(adv, params, s - 1, bank)
            rhs = _bk(u, params, s - 1, bank) * _bk(v, params, s, bank)
        else:
            _check_div_free(v)
            ident = div_advection_identity(u, v)
            adv = Field._wrap(u.grid, np.einsum("k...,ik...->i...", u.values, jacobian(v)))
            direct = divergence(adv)
            scale = max(l2_norm(direct), 1e-300)
            extra["identity_error"] = l2_norm(ident - direct) / scale
            lhs = _bk(ident, params, s - 1, bank)
            rhs = _bk(u, params, s, bank) * _bk(v, params, s, bank)
    else:
        raise ParameterError(f"unknown product variant {variant!r}")
    return EstimateReport(lhs, rhs, ceiling, witness="product", extra=extra)


def _lhs_sum(vals_by_j, js, weight_s, r) -> float:
    return aggregate([2.0 ** (weight_s * j) * v for j, v in zip(js, vals_by_j)], r)


def check_commutator_transport(v: Field, u: Field, params: NormParams, variant: str = "i",
                               ceiling: float = 64.0,
                               bank: Optional[DyadicFilterBank] = None) -> EstimateReport:
    """l^r sum of weighted commutator norms against the matching right side.

    Variants: ``i`` (s > 0, gradient sup norms), ``ii`` (s >= n/p + 1,
    product of Besov-Herz norms; alias ``s``) and ``s_minus_1``.
    """
    bank = bank or _bank_for(v, u)
    n = u.grid.n
    variant = {"s": "ii"}.get(variant, variant)
    if params.alpha < 0 or not np.isfinite(params.p):
        raise ParameterError("commutator estimates need alpha >= 0 and p < inf")
    s = params.s
    if variant == "i":
        if s <= 0:
            raise ParameterError("commutator estimate (i) needs s > 0")
    elif variant in ("ii", "s_minus_1"):
        if not _critical_ok(params, n, 1.0):
            raise ParameterError("commutator estimate (ii) needs s >= n/p + 1, with r = 1 at equality")
    else:
        raise ParameterError(f"unknown commutator variant {variant!r}")
    _check_div_free(v)
    _admit(bank, v, u)
    ctx = _TransportContext(v, u, bank)
    rings = ring_partition(u.grid)
    js = [bank.shifted_index(j) for j in bank.indices()]
    norms = [herz_norm(ctx.direct(j), params, rings) for j in bank.indices()]
    if variant == "i":
        gu = float(np.sqrt(np.sum(jacobian(u) ** 2, axis=(0, 1))).max())
        gv = float(np.sqrt(np.sum(jacobian(v) ** 2, axis=(0, 1))).max())
        lhs = _lhs_sum(norms, js, s, params.r)
        rhs = gu * _bk(v, params, s, bank) + gv * _bk(u, params, s, bank)
    elif variant == "ii":
        lhs = _lhs_sum(norms, js, s, params.r)
        rhs = _bk(u, params, s, bank) * _bk(v, params, s, bank)
    else:
        lhs = _lhs_sum(norms, js, s - 1, params.r)
        rhs = _bk(u, params, s - 1, bank) * _bk(v, params, s, bank)
    return EstimateReport(lhs, rhs, ceiling, witness="commutator_transport",
                          extra={"variant": variant, "block_norms": norms})


def check_commutator_pressure(a: Field, gpi: Field, params: NormParams, variant: str = "i",
                              ceiling: float = 64.0,
                              bank: Optional[DyadicFilterBank] = None) -> EstimateReport:
    """Pressure commutator estimates, variants ``i``, ``ii`` and ``iii``."""
    bank = bank or _bank_for(a, gpi)
    n = a.grid.n
    s = params.s
    if variant == "i":
        if s <= 0:
            raise ParameterError("pressure commutator (i) needs s > 0")
    elif variant == "ii":
        if params.alpha < 0 or not _critical_ok(params, n, 0.0):
            raise ParameterError("pressure commutator (ii) needs alpha >= 0 and s >= n/p, r = 1 at equality")
    elif variant == "iii":
        if params.alpha < 0 or not _critical_ok(params, n, 1.0):
            raise ParameterError("pressure commutator (iii) needs alpha >= 0 and s >= n/p + 1, r = 1 at equality")
    else:
        raise ParameterError(f"unknown pressure variant {variant!r}")
    _admit(bank, a, gpi)
    ctx = _PressureContext(a, gpi, bank)
    rings = ring_partition(a.grid)
    js = [bank.shifted_index(j) for j in bank.indices()]
    norms = [herz_norm(ctx.direct(j), params, rings) for j in bank.indices()]
    if variant == "i":
        lhs = _lhs_sum(norms, js, s, params.r)
        rhs = gpi.sup() * _bk(a, params, s, bank) + a.sup() * _bk(gpi, params, s, bank)
    elif variant == "ii":
        lhs = _lhs_sum(norms, js, s, params.r)
        rhs = _bk(a, params, s, bank) * _bk(gpi, params, s, bank)
    else:
        lhs = _lhs_sum(norms, js, s - 1, params.r)
        rhs = _bk(a, params, s, bank) * _bk(gpi, params, s - 1, bank)
    return EstimateReport(lhs, rhs, ceiling, witness="commutator_pressure",
                          extra={"variant": variant, "block_norms": norms})
