import json
import math

import numpy as np
import pytest

from herzflow.data import vortex_pair
from herzflow.diagnostics import (besov_infty_seminorm, bkm_functional, check_grad_decomposition,
                                  check_log_inequality, criterion_outer_index,
                                  gradient_from_vorticity, lacunary_field, vorticity)
from herzflow.errors import DivergenceError, FieldValueError, ParameterError
from herzflow.grid import Field, make_grid, random_field
from herzflow.herz import NormParams
from herzflow.transport import TimeSeries

import oracles


def _tg(g, amp=1.0, mode=1):
    k = 2 * np.pi * mode / g.L
    x, y = g.mesh
    return Field(g, amp * np.stack([np.sin(k * x) * np.cos(k * y), -np.cos(k * x) * np.sin(k * y)])), k


def test_taylor_green_vorticity(g64):
    u, k = _tg(g64, mode=2)
    x, y = g64.mesh
    w = vorticity(u)
    assert np.max(np.abs(w.values[0] - 2 * k * np.sin(k * x) * np.sin(k * y))) < 1e-12


def test_vorticity_against_fd4():
    # the fourth-order difference curl converges to the spectral one at rate h^4
    errs = []
    for N in (64, 128):
        g = make_grid(2, N, 16.0)
        u = vortex_pair(g, width=1.5)
        fd = (oracles.fd4_derivative(u.values[1], 0, g.h)
              - oracles.fd4_derivative(u.values[0], 1, g.h))
        errs.append(np.max(np.abs(vorticity(u).values[0] - fd)))
    assert errs[0] / errs[1] > 10
    assert errs[1] < 1e-3


def test_vorticity_3d_and_guards(rng):
    g = make_grid(3, 32, 8.0)
    u = random_field(g, rng, 3, kmax=4.0, solenoidal=True)
    w = vorticity(u)
    assert w.components == 3
    # the curl of anything is solenoidal
    from herzflow.grid import divergence
    assert divergence(w).sup() < 1e-10 * max(w.sup(), 1.0)
    with pytest.raises(FieldValueError):
        vorticity(Field.zeros(g))
    with pytest.raises(DivergenceError):
        vorticity(random_field(g, rng, 3))


def test_single_mode_seminorm(g128, bank128):
    # a lattice mode touches at most two blocks whose multipliers sum to 1
    x = g128.mesh[0]
    w = Field(g128, 3.0 * np.cos(np.pi * x)[None])
    b_inf = besov_infty_seminorm(w, math.inf, bank128)
    b_one = besov_infty_seminorm(w, 1, bank128)
    assert abs(b_one - 3.0) < 1e-12
    assert 1.5 <= b_inf <= 3.0 + 1e-12


def test_seminorm_r_ordering(g128, bank128):
    rng = np.random.default_rng(101)
    for _ in range(20):
        w = random_field(g128, rng, sigma=1.0)
        assert besov_infty_seminorm(w, 1, bank128) >= besov_infty_seminorm(w, math.inf, bank128)
    assert besov_infty_seminorm(Field(g128, np.ones((1,) + g128.shape)), 1, bank128) < 1e-14
    with pytest.raises(ParameterError):
        besov_infty_seminorm(w, 2, bank128)


def test_outer_index():
    assert criterion_outer_index(NormParams(s=2.0, r=1), 2) == 1
    assert criterion_outer_index(NormParams(s=2.5, r=1), 2) == math.inf


def test_bkm_constant_and_additive(g64):
    u, _ = _tg(g64)
    ts = np.linspace(0.0, 1.0, 9)
    const = bkm_functional(TimeSeries(ts, [u] * len(ts)))
    assert abs(const.total - const.integrand[0]) < 1e-12
    assert const.finite and const.nondecreasing
    grow = TimeSeries(ts, [u * (1 + t) for t in ts])
    full = bkm_functional(grow)
    first = bkm_functional(TimeSeries(ts[:5], grow.fields[:5]))
    second = bkm_functional(TimeSeries(ts[4:], grow.fields[4:]))
    assert abs(full.total - first.total - second.total) < 1e-12
    rows = [json.loads(x) for x in full.to_jsonl().splitlines()]
    assert len(rows) == 9 and set(rows[0]) == {"t", "integrand", "cumulative"}
    # the integrand is linear in time here, so the trapezoid rule is exact
    assert abs(full.total - 1.5 * full.integrand[0]) < 1e-12


def test_grad_reconstruction_many(g64):
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(100):
        u = random_field(g64, rng, 2, sigma=rng.uniform(1, 4), kmax=10.0, solenoidal=True,
                         mean_zero=True)
        rep = check_grad_decomposition(u)
        assert rep.passed and rep.extra["rotation_part_error"] < 1e-10
        worst = max(worst, rep.lhs)
    assert worst <= 1e-10


def test_grad_reconstruction_3d(rng):
    g = make_grid(3, 32, 8.0)
    u = random_field(g, rng, 3, kmax=5.0, solenoidal=True, mean_zero=True)
    rep = check_grad_decomposition(u)
    assert rep.lhs <= 1e-10


def test_grad_split_structure(g64):
    u, k = _tg(g64)
    G, sym, rot = gradient_from_vorticity(vorticity(u))
    assert np.max(np.abs(sym - np.swapaxes(sym, 0, 1))) < 1e-15
    assert np.max(np.abs(rot + np.swapaxes(rot, 0, 1))) < 1e-15
    assert abs(np.trace(sym).max()) < 1e-12          # incompressible


def test_grad_reconstruction_needs_mean_zero(g64):
    shift = Field(g64, np.stack([np.full(g64.shape, 0.5), np.zeros(g64.shape)]))
    u, _ = _tg(g64)
    with pytest.raises(FieldValueError):
        check_grad_decomposition(u + shift)


def test_log_inequality_sweep(g128, bank128):
    P = NormParams(alpha=0.5, p=2, q=2, r=1, s=2.0)
    fams = [lacunary_field(g128, [1.0, 2.0, 4.0, 8.0]), lacunary_field(g128, [2.0]),
            random_field(g128, np.random.default_rng(103), sigma=1.0)]
    amps = 10.0 ** np.arange(-3, 4)
    rep = check_log_inequality(fams, P, 1.5, amps, bank=bank128)
    assert rep.passed
    assert len(rep.extra["ratios"]) == len(fams) * len(amps)
    assert rep.fitted_constant == max(rep.extra["ratios"])


def test_log_inequality_guard(g128):
    with pytest.raises(ParameterError):
        check_log_inequality(lacunary_field(g128, [2.0]), NormParams(p=2), 1.0)


def test_lacunary_field_shape(g128):
    f = lacunary_field(g128, [2.0, 4.0], amplitude=0.5)
    assert f.components == 1 and abs(f.values[0, g128.N // 2, g128.N // 2] - 1.0) < 1e-14
