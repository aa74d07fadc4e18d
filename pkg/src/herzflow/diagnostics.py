"""Blow-up criterion functionals and the vorticity form of the velocity gradient.

The criterion integrand is the homogeneous ``B^0_{inf,r}`` seminorm of the
vorticity, ``sup_j`` (r = inf) or ``sum_j`` (r = 1) of ``||Delta_j w||_inf``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .besov import besov_herz_norm
from .dyadic import HOMOGENEOUS, DyadicFilterBank, default_bank
from .errors import FieldValueError, ParameterError
from .grid import Field, _from_rspec, check_divergence_free, derivative, jacobian
from .herz import EstimateReport, NormParams
from .transport import TimeSeries

__all__ = ["vorticity", "besov_infty_seminorm", "BlowupTrace", "bkm_functional",
           "criterion_outer_index", "check_log_inequality", "log_inequality_rhs",
           "gradient_from_vorticity", "check_grad_decomposition", "lacunary_field"]


def vorticity(u: Field, check: bool = True) -> Field:
    """Spectral curl: scalar in 2-D, vector in 3-D."""
    g = u.grid
    if u.components != g.n:
        raise FieldValueError("vorticity needs a vector field")
    if check:
        check_divergence_free(u)
    d = lambda i, k: derivative(u.component(i), k).values[0]
    if g.n == 2:
        return Field._wrap(g, (d(1, 0) - d(0, 1))[None])
    return Field._wrap(g, np.stack([d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)]))


def besov_infty_seminorm(w: Field, r_outer: float = math.inf,
                         bank: Optional[DyadicFilterBank] = None) -> float:
    """Homogeneous B^0_{inf, r} seminorm for r in {1, inf}."""
    if r_outer not in (1, math.inf):
        raise ParameterError("outer index must be 1 or inf")
    bank = bank or default_bank(w.grid)
    vals = [bank.block(w, j, HOMOGENEOUS).sup() for j in bank.indices(HOMOGENEOUS)]
    return float(sum(vals) if r_outer == 1 else max(vals))


def criterion_outer_index(params: NormParams, n: int) -> float:
    """r = 1 in the critical case s = n/p + 1, r = inf otherwise."""
    return 1 if abs(params.s - (n / params.p + 1.0)) <= 1e-12 and params.r == 1 else math.inf


@dataclass
class BlowupTrace:
    times: np.ndarray
    integrand: np.ndarray
    cumulative: np.ndarray
    r_outer: float

    @property
    def total(self) -> float:
        return float(self.cumulative[-1])

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.cumulative)))

    @property
    def nondecreasing(self) -> bool:
        return bool(np.all(np.diff(self.cumulative) >= 0))

    def to_jsonl(self) -> str:
        return "".join(json.dumps({"t": float(t), "integrand": float(i), "cumulative": float(c)}) + "\n"
                       for t, i, c in zip(self.times, self.integrand, self.cumulative))


def bkm_functional(u: TimeSeries, r_outer: float = math.inf,
                   bank: Optional[DyadicFilterBank] = None) -> BlowupTrace:
    """Cumulative trapezoid integral of the vorticity seminorm along a trace."""
    bank = bank or default_bank(u.fields[0].grid)
    vals = np.array([besov_infty_seminorm(vorticity(f, check=False), r_outer, bank)
                     for f in u.fields])
    ts = np.asarray(u.times, dtype=float)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(ts) * (vals[1:] + vals[:-1]))])
    return BlowupTrace(ts, vals, cum, r_outer)


def log_inequality_rhs(u: Field, params: NormParams, s_prime: float,
                       bank: Optional[DyadicFilterBank] = None) -> tuple:
    """(1 + B (log+ ||u||_{BK^{s'}} + 1), B, ||u||_{BK^{s'}}) with B the B^0_{inf,inf} seminorm."""
    bank = bank or default_bank(u.grid)
    B = besov_infty_seminorm(u, math.inf, bank)
    K = besov_herz_norm(u, params.replace(s=s_prime), bank=bank)[0]
    logp = max(math.log(K), 0.0) if K > 0 else 0.0
    return 1.0 + B * (logp + 1.0), B, K


def check_log_inequality(u, params: NormParams, s_prime: float,
                         amplitudes: Sequence[float] = (1.0,), ceiling: float = 16.0,
                         bank=None) -> EstimateReport:
    """One constant for ||u||_inf <= C (1 + B(log+||u||_{BK^{s'}} + 1)) over a family.

    ``u`` is a Field or a list of Fields; every member is swept over
    ``amplitudes``.  The report carries the worst ratio; ``extra`` lists them all.
    """
    fields = [u] if isinstance(u, Field) else list(u)
    n = fields[0].grid.n
    if s_prime <= n / params.p:
        raise ParameterError(f"need s' > n/p = {n / params.p:g}, got {s_prime:g}")
    ratios, rows = [], []
    worst = (0.0, 1.0)
    for k, f in enumerate(fields):
        for lam in amplitudes:
            fl = f * float(lam)
            lhs = fl.sup()
            rhs, B, K = log_inequality_rhs(fl, params, s_prime, bank)
            ratio = lhs / rhs
            ratios.append(ratio)
            rows.append({"member": k, "amplitude": float(lam), "lhs": lhs, "rhs": rhs,
                         "seminorm": B, "bk_norm": K})
            if ratio >= worst[0] / worst[1]:
                worst = (lhs, rhs)
    ratios = np.asarray(ratios)
    pos = ratios[ratios > 0]
    spread = float(pos.max() / pos.min()) if pos.size else 1.0
    return EstimateReport(worst[0], worst[1], ceiling, witness="log_inequality",
                          extra={"ratios": ratios.tolist(), "spread": spread, "rows": rows,
                                 "s_prime": s_prime})


def lacunary_field(grid, octaves: Sequence[float], amplitude: float = 1.0,
                   envelope: float = 2.0) -> Field:
    """Sum of equal-amplitude localized waves at the given frequencies (scalar)."""
    x = grid.mesh[0]
    env = np.exp(-(grid.radius / envelope) ** 2)
    vals = sum(np.cos(k * x) for k in octaves) * env
    return Field(grid, (amplitude * vals)[None])


def _gradient_multiplier(grid, w: Field) -> np.ndarray:
    """Spectral reconstruction of grad u (shape (n, n, N...)) from w = curl u."""
    n = grid.n
    xi = grid.rxi_odd
    k2 = sum(x ** 2 for x in xi)
    inv = np.zeros_like(k2)
    np.divide(1.0, k2, out=inv, where=k2 > 0)
    wh = w.rspec()
    if n == 2:
        # u = (d2 psi, -d1 psi), -Lap psi = w
        psi = wh[0] * inv
        uh = [1j * xi[1] * psi, -1j * xi[0] * psi]
    else:
        psi = wh * inv
        uh = [1j * (xi[1] * psi[2] - xi[2] * psi[1]),
              1j * (xi[2] * psi[0] - xi[0] * psi[2]),
              1j * (xi[0] * psi[1] - xi[1] * psi[0])]
    out = np.empty((n, n) + grid.shape)
    for i in range(n):
        for k in range(n):
            out[i, k] = _from_rspec(grid, (1j * xi[k] * uh[i])[None]).values[0]
    return out


def gradient_from_vorticity(w: Field, n: Optional[int] = None) -> tuple:
    """Split grad u = S + Omega recovered from w.

    Returns (grad_u, symmetric part, rotation part).  The rotation part is a
    fixed linear map of w (pointwise), the symmetric part a zero-order
    singular integral of w.
    """
    g = w.grid
    G = _gradient_multiplier(g, w)
    sym = 0.5 * (G + np.swapaxes(G, 0, 1))
    rot = np.zeros_like(G)
    if g.n == 2:
        rot[1, 0] = 0.5 * w.values[0]
        rot[0, 1] = -0.5 * w.values[0]
    else:
        w1, w2, w3 = w.values
        rot[1, 0], rot[0, 1] = 0.5 * w3, -0.5 * w3
        rot[0, 2], rot[2, 0] = 0.5 * w2, -0.5 * w2
        rot[2, 1], rot[1, 2] = 0.5 * w1, -0.5 * w1
    return sym + rot, sym, rot


def check_grad_decomposition(u: Field, tol: float = 1e-10) -> EstimateReport:
    """Relative agreement of grad u rebuilt from its vorticity with the direct gradient."""
    check_divergence_free(u)
    scale = max(u.sup(), 1e-300)
    if np.max(np.abs(u.mean())) > 1e-12 * scale:
        raise FieldValueError("velocity must be mean-zero to be recovered from its vorticity")
    w = vorticity(u, check=False)
    G, sym, rot = gradient_from_vorticity(w)
    J = jacobian(u)
    ref = float(np.sqrt(np.sum(J ** 2)))
    err = float(np.sqrt(np.sum((G - J) ** 2)))
    rel = err / ref if ref > 0 else err
    # the rotation part must be the antisymmetric part of the direct gradient
    anti = 0.5 * (J - np.swapaxes(J, 0, 1))
    rot_err = float(np.sqrt(np.sum((rot - anti) ** 2))) / ref if ref > 0 else 0.0
    return EstimateReport(rel, 1.0, tol, witness="grad_decomposition",
                          extra={"rotation_part_error": rot_err})
