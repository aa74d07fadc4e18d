"""Iterative scheme for the density-dependent incompressible Euler system.

With ``a = 1/rho - 1`` the unknowns are ``(a, u, grad pi)``.  Starting
from ``(a^0, u^0, grad pi^0) = (a0, u0, 0)``, each iteration

1. transports the mollified density ``S_{m+1} a0`` along ``u^m``;
2. solves the linearized momentum equation
   ``du/dt + u^m.grad u + (1 + a^{m+1}) grad pi = f`` from ``S_{m+1} u0``.

The pressure gradient at every RK4 stage is the fixed point of
``G <- Q(f - v.grad u - a G)`` with ``Q = grad Lap^-1 div``.  All state
fields are truncated to the filter bank's coverage radius, which also
removes aliasing from the quadratic terms.
"""
from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .besov import besov_herz_norm
from .dyadic import DyadicFilterBank, default_bank
from .errors import ContractionError, ParameterError
from .grid import (Field, check_divergence_free, divergence, gradient_part, l2_norm,
                   leray_project, truncate)
from .herz import NormParams
from .transport import TimeSeries, _as_series, cfl_limit, solve_transport

log = logging.getLogger(__name__)

__all__ = ["SchemeConfig", "IterationTrace", "IterationRecord", "leray_project",
           "solve_pressure", "PressureResult", "linearized_euler_solve", "iterate_scheme",
           "mollify", "series_norms", "f_norm", "uniqueness_probe",
           "continuous_dependence_probe", "check_euler_estimate", "envelope_fit"]


@dataclass(frozen=True)
class SchemeConfig:
    """Parameters of the iterative scheme (all thresholds overridable)."""

    params: NormParams = field(default_factory=NormParams)
    T: float = 0.25
    dt: float = 0.25 / 16
    m_max: int = 10
    a0_ceiling: float = 4.0
    pressure_tol: float = 1e-12
    pressure_iter_max: int = 200
    delta_stop: float = 1e-10
    bound_factor: float = 10.0
    cauchy_ratio: float = 0.75
    contraction_ratio: float = 0.6
    a_sup_max: float = 0.5

    def validate(self, n: int) -> None:
        p = self.params
        p.check_theorem_regime(n)
        crit = n / p.p + 1.0
        if p.s < crit - 1e-12:
            raise ParameterError(f"need s >= n/p + 1 = {crit:g}, got s = {p.s:g}")
        if abs(p.s - crit) <= 1e-12 and p.r != 1:
            raise ParameterError(
                f"s = n/p + 1 = {crit:g} requires r = 1 when s = n/p + 1 (got r = {p.r:g})")
        if not (self.T > 0 and self.dt > 0 and self.dt <= self.T):
            raise ParameterError("need 0 < dt <= T")
        if self.m_max < 1:
            raise ParameterError("m_max must be at least 1")
        if self.pressure_tol <= 0 or self.pressure_iter_max < 1:
            raise ParameterError("pressure tolerance and iteration cap must be positive")

    def replace(self, **kw) -> "SchemeConfig":
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d.update(kw)
        return SchemeConfig(**d)

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["params"] = self.params.as_dict()
        return d


# -- pressure ---------------------------------------------------------------------
@dataclass
class PressureResult:
    gpi: Field
    iterations: int
    residuals: List[float]

    @property
    def ratios(self) -> List[float]:
        r = self.residuals
        return [r[i + 1] / r[i] for i in range(len(r) - 1) if r[i] > 0]


def _kc(bank: DyadicFilterBank) -> float:
    return bank.coverage_radius


def _advection(v: Field, u: Field) -> Field:
    from .grid import advect
    return advect(v, u)


def solve_pressure(a: Field, v: Field, u: Field, f: Optional[Field], cfg: SchemeConfig,
                   bank: Optional[DyadicFilterBank] = None, enforce_smallness: bool = True,
                   initial: Optional[Field] = None) -> PressureResult:
    """Fixed point for grad pi in div(grad pi) = div(f - a grad pi - v.grad u).

    The residual is measured relative to ``||div(f - v.grad u)||_2``.
    """
    bank = bank or default_bank(u.grid)
    kc = _kc(bank)
    if enforce_smallness and a.sup() > cfg.a_sup_max:
        raise ParameterError(
            f"sup|a| = {a.sup():.3g} exceeds {cfg.a_sup_max:g}; the fixed point may not contract")
    g = truncate(_advection(v, u), kc) * -1.0
    if f is not None:
        g = g + f
    dg = l2_norm(divergence(g))
    scale = dg if dg > 0 else 1.0
    av = a.values

    def residual(G):
        r = divergence(G) - divergence(g - truncate(Field._wrap(G.grid, av * G.values), kc))
        return l2_norm(r) / scale

    if not np.any(av):
        G = gradient_part(g)
        return PressureResult(G, 1, [residual(G)])
    G = gradient_part(g) if initial is None else initial
    residuals = [residual(G)]
    floor = 1e-14
    it = 0
    while residuals[-1] > cfg.pressure_tol:
        if it >= cfg.pressure_iter_max:
            raise ContractionError(
                f"pressure fixed point hit {cfg.pressure_iter_max} iterations "
                f"(residual {residuals[-1]:.3e})")
        aG = truncate(Field._wrap(G.grid, av * G.values), kc)
        G = gradient_part(g - aG)
        it += 1
        residuals.append(residual(G))
        r = residuals
        if len(r) >= 4 and r[-1] > floor and r[-1] > r[-2] > r[-3] > r[-4]:
            raise ContractionError(
                f"pressure residual increased over 3 successive iterates ({r[-4]:.3e} -> {r[-1]:.3e})")
        if not math.isfinite(r[-1]):
            raise ContractionError("pressure residual is not finite")
    return PressureResult(G, max(it, 1), residuals)


# -- linearized momentum solve ----------------------------------------------------
def _series_or_zero(x, grid, components):
    if x is None:
        return None
    return _as_series(x)


def _at(series: Optional[TimeSeries], t: float) -> Optional[Field]:
    if series is None:
        return None
    if len(series) == 1:
        return series.fields[0]
    return series.at(t)


def _time_grid(cfg: SchemeConfig) -> np.ndarray:
    steps = max(1, int(math.ceil(cfg.T / cfg.dt - 1e-9)))
    return cfg.T * np.arange(steps + 1) / steps


def linearized_euler_solve(u0: Field, v, a, f, cfg: SchemeConfig,
                           bank: Optional[DyadicFilterBank] = None, check: bool = True):
    """RK4 for du/dt = f - v.grad u - (1 + a) grad pi with stagewise pressure.

    Returns ``(u_series, gpi_series, pressure_iters)`` sampled every step.
    """
    g = u0.grid
    bank = bank or default_bank(g)
    kc = _kc(bank)
    vs, as_, fs = _as_series(v), _as_series(a), _series_or_zero(f, g, g.n)
    if check:
        check_divergence_free(u0)
        for fld in vs.fields:
            check_divergence_free(fld)
        lim = cfl_limit(g, vs.sup_norm())
        if cfg.dt > lim * (1 + 1e-12):
            from .errors import CFLError
            raise CFLError(f"dt = {cfg.dt:.4g} exceeds the stability bound {lim:.4g}")
    ts = _time_grid(cfg)
    iters = []
    prev_G = [None]

    def rhs(u: Field, t: float, store: Optional[list] = None):
        at, vt, ft = _at(as_, t), _at(vs, t), _at(fs, t)
        pr = solve_pressure(at, vt, u, ft, cfg, bank, initial=prev_G[0])
        prev_G[0] = pr.gpi
        iters.append(pr.iterations)
        G = pr.gpi
        adv = truncate(_advection(vt, u), kc)
        aG = truncate(Field._wrap(g, at.values * G.values), kc)
        out = adv * -1.0 - G - aG
        if ft is not None:
            out = out + ft
        if store is not None:
            store.append(G)
        return out

    u = truncate(leray_project(u0), kc)
    us, gs = [u], []
    step_iters = []
    for k in range(len(ts) - 1):
        t, h = ts[k], ts[k + 1] - ts[k]
        n0 = len(iters)
        k1 = rhs(u, t, gs)
        k2 = rhs(u + k1 * (0.5 * h), t + 0.5 * h)
        k3 = rhs(u + k2 * (0.5 * h), t + 0.5 * h)
        k4 = rhs(u + k3 * h, t + h)
        u = u + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
        u = truncate(leray_project(u), kc)
        us.append(u)
        step_iters.append(max(iters[n0:]))
    n0 = len(iters)
    rhs(u, ts[-1], gs)
    step_iters.append(max(iters[n0:]))
    return TimeSeries(ts, us), TimeSeries(ts, gs), step_iters


# -- norms ----------------------------------------------------------------------
def _bk_pair(fld: Field, params: NormParams, bank) -> tuple:
    """(BK^s, BK^{s-1}) norms from one block decomposition."""
    _, bd = besov_herz_norm(fld, params, bank=bank)
    return bd.norm, bd.reweighted(params.s - 1.0).norm


def series_norms(series: TimeSeries, params: NormParams, bank=None) -> np.ndarray:
    """Array of shape (len, 2): BK^s and BK^{s-1} norms at every stored time."""
    return np.array([_bk_pair(f, params, bank) for f in series.fields])


def _l1_time(times, vals) -> float:
    return float(np.trapezoid(vals, times)) if len(times) > 1 else 0.0


def f_norm(a: TimeSeries, u: TimeSeries, gpi: TimeSeries, params: NormParams,
           shift: float = 0.0, bank=None) -> dict:
    """Mixed norms: L-inf in time for a and u, L1 in time for grad pi."""
    col = 0 if shift == 0 else 1
    na = series_norms(a, params, bank)[:, col]
    nu = series_norms(u, params, bank)[:, col]
    ng = series_norms(gpi, params, bank)[:, col]
    return {"a": float(na.max()), "u": float(nu.max()),
            "gpi": _l1_time(gpi.times, ng), "a_t": na, "u_t": nu, "gpi_t": ng}


def _diff(s1: TimeSeries, s2: TimeSeries) -> TimeSeries:
    return TimeSeries(s1.times, [x - y for x, y in zip(s1.fields, s2.fields)])


def mollify(u: Field, m: int, bank: DyadicFilterBank) -> Field:
    """S_{m+1} u with the shifted index: bank low-pass at j_min + m + 2."""
    jb = bank.j_min + m + 2
    if jb > bank.j_max + 1:
        return truncate(u, _kc(bank))
    return bank.low_pass(u, jb)


# -- iteration --------------------------------------------------------------------
@dataclass
class IterationRecord:
    m: int
    norm_a_bk: float
    norm_u_bk: float
    norm_gpi_bk_l1: float
    delta_f_norm_sm1: Optional[float]
    pressure_iters: int
    wall_ms: float
    per_time: list = field(default_factory=list)

    @property
    def trace_norm(self) -> float:
        return self.norm_a_bk + self.norm_u_bk + self.norm_gpi_bk_l1


@dataclass
class IterationTrace:
    config: SchemeConfig
    records: List[IterationRecord] = field(default_factory=list)
    aborted: bool = False
    abort_reason: str = ""
    converged: bool = False
    final: Optional[tuple] = None          # (a, u, gpi) series of the last iterate
    history: list = field(default_factory=list)   # optional list of all iterates

    def append(self, rec: IterationRecord):
        if self.records and rec.m <= self.records[-1].m:
            raise ValueError("records must be appended in increasing m")
        self.records.append(rec)

    @property
    def deltas(self) -> np.ndarray:
        return np.array([r.delta_f_norm_sm1 for r in self.records
                         if r.delta_f_norm_sm1 is not None])

    @property
    def delta_ms(self) -> np.ndarray:
        return np.array([r.m for r in self.records if r.delta_f_norm_sm1 is not None])

    def cauchy_ratios(self) -> dict:
        d = {r.m: r.delta_f_norm_sm1 for r in self.records if r.delta_f_norm_sm1 is not None}
        return {m: d[m] / d[m - 1] for m in sorted(d) if m - 1 in d and d[m - 1] > 0}

    def to_jsonl(self, deterministic: bool = True) -> str:
        """JSON lines: one record per m, then one per (m, t)."""
        lines = []
        for r in self.records:
            lines.append(json.dumps({
                "m": r.m, "t": None, "norm_a_bk": r.norm_a_bk, "norm_u_bk": r.norm_u_bk,
                "norm_gpi_bk_l1": r.norm_gpi_bk_l1, "delta_f_norm_sm1": r.delta_f_norm_sm1,
                "pressure_iters": r.pressure_iters,
                "wall_ms": None if deterministic else r.wall_ms}))
            for row in r.per_time:
                lines.append(json.dumps({
                    "m": r.m, "t": row["t"], "norm_a_bk": row["norm_a_bk"],
                    "norm_u_bk": row["norm_u_bk"], "norm_gpi_bk_l1": row["norm_gpi_bk_l1"],
                    "delta_f_norm_sm1": None, "pressure_iters": row["pressure_iters"],
                    "wall_ms": None}))
        return "\n".join(lines) + "\n"

    def timing_log(self) -> str:
        return "\n".join(json.dumps({"m": r.m, "wall_ms": r.wall_ms}) for r in self.records) + "\n"


def envelope_fit(ms: Sequence[int], deltas: Sequence[float]) -> dict:
    """Fit delta^{m+1} <= C (m+1)/2^m; ``ms`` are the m+1 labels of each delta.

    Returns the covering constant (max ratio) and a least-squares estimate
    in log space.
    """
    ms = np.asarray(ms, dtype=float)
    d = np.asarray(deltas, dtype=float)
    keep = d > 0
    ms, d = ms[keep], d[keep]
    if d.size == 0:
        return {"C_bar": 0.0, "C_lsq": 0.0, "finite": True, "points": 0}
    m = ms - 1.0
    env = (m + 1.0) / 2.0 ** m
    cover = float(np.max(d / env))
    lsq = float(np.exp(np.mean(np.log(d) - np.log(env))))
    return {"C_bar": cover, "C_lsq": lsq, "finite": bool(np.isfinite(cover)),
            "points": int(d.size)}


def _constant_series(u: Field, ts) -> TimeSeries:
    return TimeSeries(ts, [u] * len(ts))


def iterate_scheme(a0: Field, u0: Field, f, cfg: SchemeConfig,
                   bank: Optional[DyadicFilterBank] = None,
                   keep_history: bool = False) -> IterationTrace:
    """Run the iteration until delta <= cfg.delta_stop or m = cfg.m_max."""
    g = u0.grid
    cfg.validate(g.n)
    bank = bank or default_bank(g)
    params = cfg.params
    check_divergence_free(u0)
    a0n = besov_herz_norm(a0, params, bank=bank)[0]
    if a0n > cfg.a0_ceiling:
        raise ParameterError(
            f"initial density norm {a0n:.4g} exceeds the smallness ceiling {cfg.a0_ceiling:g}")
    ts = _time_grid(cfg)
    trace = IterationTrace(cfg)
    a_m = _constant_series(a0, ts)
    u_m = _constant_series(u0, ts)
    gp_m = _constant_series(Field.zeros(g, g.n), ts)
    base_norm = None
    for m in range(cfg.m_max):
        t_start = time.perf_counter()
        a_init = mollify(a0, m, bank)
        u_init = mollify(u0, m, bank)
        a_new = solve_transport(a_init, u_m, cfg.T, cfg.dt, out_times=ts, check=True)
        a_new = a_new.map(lambda fl: truncate(fl, _kc(bank)))
        u_new, gp_new, iters = linearized_euler_solve(u_init, u_m, a_new, f, cfg, bank)
        na = series_norms(a_new, params, bank)
        nu = series_norms(u_new, params, bank)
        ng = series_norms(gp_new, params, bank)
        dn = f_norm(_diff(a_new, a_m), _diff(u_new, u_m), _diff(gp_new, gp_m), params,
                    shift=1.0, bank=bank)
        delta = dn["a"] + dn["u"] + dn["gpi"]
        l1 = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(ts) * (ng[1:, 0] + ng[:-1, 0]))])
        per_time = [{"t": float(t), "norm_a_bk": float(na[i, 0]), "norm_u_bk": float(nu[i, 0]),
                     "norm_gpi_bk_l1": float(l1[i]), "pressure_iters": int(iters[i])}
                    for i, t in enumerate(ts)]
        rec = IterationRecord(m + 1, float(na[:, 0].max()), float(nu[:, 0].max()),
                              float(l1[-1]), float(delta), int(max(iters)),
                              1e3 * (time.perf_counter() - t_start), per_time)
        trace.append(rec)
        log.info("iteration %d: delta=%.3e norms a=%.4g u=%.4g gpi=%.4g", m + 1, delta,
                 rec.norm_a_bk, rec.norm_u_bk, rec.norm_gpi_bk_l1)
        if keep_history:
            trace.history.append((a_new, u_new, gp_new))
        a_m, u_m, gp_m = a_new, u_new, gp_new
        trace.final = (a_m, u_m, gp_m)
        if base_norm is None:
            base_norm = rec.trace_norm
        elif base_norm > 0 and rec.trace_norm > cfg.bound_factor * base_norm:
            trace.aborted = True
            trace.abort_reason = (f"trace norm {rec.trace_norm:.4g} exceeds "
                                  f"{cfg.bound_factor:g} x its first value {base_norm:.4g}")
            log.warning(trace.abort_reason)
            break
        if delta <= cfg.delta_stop:
            trace.converged = True
            break
    return trace


# -- probes -----------------------------------------------------------------------
def _gap(tr1: IterationTrace, tr2: IterationTrace, params: NormParams, bank=None) -> float:
    a1, u1, g1 = tr1.final
    a2, u2, g2 = tr2.final
    dn = f_norm(_diff(a1, a2), _diff(u1, u2), _diff(g1, g2), params, shift=1.0, bank=bank)
    return dn["a"] + dn["u"] + dn["gpi"]


def _subsample(s: TimeSeries, times) -> TimeSeries:
    idx = [int(np.argmin(np.abs(s.times - t))) for t in times]
    return TimeSeries(times, [s.fields[i] for i in idx])


def uniqueness_probe(cfg: SchemeConfig, a0: Field, u0: Field, f=None,
                     m_pair=(8, 12), dt_study: bool = True) -> dict:
    """Determinism, iteration-count independence and step refinement of the limit."""
    r1 = iterate_scheme(a0, u0, f, cfg)
    r2 = iterate_scheme(a0, u0, f, cfg)
    identical = r1.to_jsonl() == r2.to_jsonl()
    lo = iterate_scheme(a0, u0, f, cfg.replace(m_max=m_pair[0]))
    hi = iterate_scheme(a0, u0, f, cfg.replace(m_max=m_pair[1]))
    gap = _gap(lo, hi, cfg.params)
    d_lo = float(lo.deltas[-1])
    out = {"identical": identical, "m_pair": list(m_pair), "limit_gap": gap,
           "delta_at_m_min": d_lo, "gap_ok": bool(gap <= 10.0 * max(d_lo, cfg.delta_stop))}
    if dt_study:
        gaps = []
        runs = [hi]
        for k in (1, 2):
            runs.append(iterate_scheme(a0, u0, f, cfg.replace(dt=cfg.dt / 2 ** k, m_max=m_pair[1])))
        for c, fine in zip(runs[:-1], runs[1:]):
            ts = c.final[0].times
            sub = IterationTrace(cfg, final=tuple(_subsample(s, ts) for s in fine.final))
            gaps.append(_gap(c, sub, cfg.params))
        order = math.log2(gaps[0] / gaps[1]) if gaps[1] > 0 and gaps[0] > 0 else math.inf
        out.update({"dt_gaps": gaps, "dt_order": order})
    return out


def continuous_dependence_probe(cfg: SchemeConfig, a0: Field, u0: Field, da: Field,
                                du: Field, f=None, eps=(1e-2, 1e-3, 1e-4)) -> dict:
    """Solution differences against perturbation size, with a log-log slope fit."""
    du = leray_project(du)
    base = iterate_scheme(a0, u0, f, cfg)
    a_b, u_b, _ = base.final
    diffs = []
    for e in eps:
        if e == 0:
            diffs.append(0.0)
            continue
        run = iterate_scheme(a0 + da * e, u0 + du * e, f, cfg)
        a_p, u_p, _ = run.final
        na = series_norms(_diff(a_p, a_b), cfg.params)[:, 1].max()
        nu = series_norms(_diff(u_p, u_b), cfg.params)[:, 1].max()
        diffs.append(float(na + nu))
    e_arr = np.asarray(eps, dtype=float)
    d_arr = np.asarray(diffs)
    keep = (e_arr > 0) & (d_arr > 0)
    slope = float(np.polyfit(np.log(e_arr[keep]), np.log(d_arr[keep]), 1)[0]) if keep.sum() >= 2 else math.nan
    lip = float(np.max(d_arr[keep] / e_arr[keep])) if keep.any() else 0.0
    return {"eps": list(map(float, eps)), "differences": diffs, "slope": slope,
            "lipschitz_C": lip}


def check_euler_estimate(u: TimeSeries, gpi: TimeSeries, v, a, f, params: NormParams,
                         ceiling: float = 64.0, bank=None):
    """Fit C in ||u||_Linf + ||grad pi||_L1 <= C exp(C int||v||) (||u0|| + ||f||_L1 + ||a|| ||grad pi||_L1)."""
    from scipy.optimize import brentq
    from .herz import EstimateReport
    ts = u.times
    nu = series_norms(u, params, bank)[:, 0]
    ng = series_norms(gpi, params, bank)[:, 0]
    vs = _as_series(v)
    nv = np.array([_bk_pair(_at(vs, t) if len(vs) > 1 else vs.fields[0], params, bank)[0] for t in ts])
    as_ = _as_series(a)
    na = np.array([_bk_pair(_at(as_, t) if len(as_) > 1 else as_.fields[0], params, bank)[0] for t in ts])
    if f is None:
        f_l1 = 0.0
    else:
        fs = _as_series(f)
        nf = np.array([_bk_pair(_at(fs, t) if len(fs) > 1 else fs.fields[0], params, bank)[0] for t in ts])
        f_l1 = _l1_time(ts, nf)
    lhs = float(nu.max() + _l1_time(ts, ng))
    base = float(nu[0] + f_l1 + na.max() * _l1_time(ts, ng))
    V = _l1_time(ts, nv)
    C = 1.0
    if base > 0 and lhs > base * math.exp(V):
        fn = lambda c: math.log(c) + c * V - math.log(lhs / base)
        hi = 2.0
        while fn(hi) < 0:
            hi *= 2
        C = brentq(fn, 1.0, hi)
    return EstimateReport(lhs, base * math.exp(C * V), ceiling, witness="euler_estimate",
                          extra={"C": C, "V": V})
