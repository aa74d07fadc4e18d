import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from herzflow.besov import (besov_herz_norm, check_linfty_embedding, check_norm_equivalence,
                            check_sobolev_bernstein, classical_besov_norm, riesz_potential,
                            sobolev_herz_norm)
from herzflow.dyadic import HOMOGENEOUS
from herzflow.errors import FieldValueError, ParameterError
from herzflow.grid import Field, make_grid, random_field
from herzflow.herz import NormParams, aggregate, herz_norm

P = NormParams(alpha=0.5, p=2, q=1, r=1, s=2)


def _mode(g, kint, vector=False):
    k = 2 * np.pi / g.L * np.asarray(kint, float)
    x, y = g.mesh
    ph = k[0] * x + k[1] * y
    if vector:
        return Field(g, np.stack([np.cos(ph), np.sin(ph)])), k
    return Field(g, np.cos(ph)[None]), k


def test_zero_field(g128):
    norm, bd = besov_herz_norm(Field.zeros(g128), P)
    assert norm == 0.0 and all(b == 0 for b in bd.block_knorm)


def test_nan_rejected(g128):
    vals = np.zeros((1,) + g128.shape)
    vals[0, 0, 0] = np.nan
    with pytest.raises(FieldValueError):
        besov_herz_norm(Field._wrap(g128, vals), P)


def test_breakdown_aggregates_and_serializes(g128, rng):
    u = random_field(g128, rng)
    norm, bd = besov_herz_norm(u, P)
    assert abs(aggregate(bd.weighted, P.r) - norm) <= 1e-12 * norm
    assert bd.j[0] == -1 and bd.j == sorted(bd.j)
    js = bd.to_json()
    assert set(js[0]) == {"j", "block_knorm", "weighted"}
    for row in js:
        assert abs(row["weighted"] - 2.0 ** (P.s * row["j"]) * row["block_knorm"]) <= 1e-12 * max(norm, 1)


def test_single_mode_occupies_two_blocks(g128, bank128):
    u, k = _mode(g128, (7, 0))
    norm, bd = besov_herz_norm(u, P)
    active = [i for i, b in enumerate(bd.block_knorm) if b > 1e-12 * max(bd.block_knorm)]
    assert 1 <= len(active) <= 2
    j0 = int(np.floor(np.log2(np.linalg.norm(k))))
    jp = bank128.shifted_index(j0)
    assert jp in [bd.j[i] for i in active]


def test_inclusion_from_one_breakdown(g128):
    rng = np.random.default_rng(31)
    for _ in range(20):
        u = random_field(g128, rng, sigma=1.0)
        _, bd = besov_herz_norm(u, P)
        n2 = bd.reweighted(2.0).norm
        n1 = bd.reweighted(1.0).norm
        # the only block with negative index is j = -1, where the weights compare by 2^(s1 - s2)
        assert n1 <= 2.0 ** (2.0 - 1.0) * n2 * (1 + 1e-12)


def test_r_monotonicity(g128, rng):
    u = random_field(g128, rng, sigma=1.0)
    _, bd = besov_herz_norm(u, P)
    n1, n2, ninf = (bd.reweighted(P.s, r).norm for r in (1, 2, math.inf))
    assert n1 >= n2 * (1 - 1e-12) and n2 >= ninf * (1 - 1e-12)


@given(st.integers(0, 10 ** 6), st.floats(-4, 4).filter(lambda x: abs(x) > 1e-3))
def test_norm_homogeneity_and_triangle(seed, lam):
    g = make_grid(2, 64, 16.0)
    rng = np.random.default_rng(seed)
    u, v = random_field(g, rng), random_field(g, rng)
    nu = besov_herz_norm(u, P)[0]
    assert abs(besov_herz_norm(u * lam, P)[0] - abs(lam) * nu) <= 1e-12 * abs(lam) * nu
    assert besov_herz_norm(u + v, P)[0] <= (nu + besov_herz_norm(v, P)[0]) * (1 + 1e-12)


def test_classical_besov_dominates(g128, rng):
    Q = NormParams(alpha=0.0, p=2, q=math.inf, r=1, s=1.0)
    for _ in range(10):
        u = random_field(g128, rng)
        assert besov_herz_norm(u, Q)[0] <= classical_besov_norm(u, Q) * (1 + 1e-12)


# -- Sobolev-Herz -----------------------------------------------------------------
def test_sobolev_s0_is_herz(g128, rng):
    u = random_field(g128, rng, mean_zero=True)
    Q = P.replace(s=0.0)
    assert abs(sobolev_herz_norm(u, Q) - herz_norm(u, Q)) <= 1e-12 * herz_norm(u, Q)


def test_sobolev_single_mode(g128):
    u, k = _mode(g128, (5, 3), vector=True)
    ratio = sobolev_herz_norm(u, P.replace(s=1.0)) / sobolev_herz_norm(u, P.replace(s=0.0))
    assert abs(ratio - np.linalg.norm(k)) <= 1e-12 * ratio


def test_riesz_drops_mean(g128):
    c = Field(g128, np.full((1,) + g128.shape, 3.0))
    assert riesz_potential(c, 0.0).sup() == 0.0


def test_sobolev_bernstein_two_sided(g128):
    rng = np.random.default_rng(41)
    for _ in range(20):
        u = random_field(g128, rng, mean_zero=True)
        rep = check_sobolev_bernstein(u, P.replace(s=-1.0))
        assert rep.passed
        assert 1 / 8 <= rep.fitted_constant <= 8 and rep.lower <= 8


# -- norm equivalence --------------------------------------------------------------
def test_equivalence_constant(g128):
    c = Field(g128, np.full((1,) + g128.shape, 2.0))
    rep = check_norm_equivalence(c, P)
    assert rep.extra["homogeneous"] < 1e-12 * rep.extra["herz"]
    assert rep.passed


def test_equivalence_random_fields(g128):
    rng = np.random.default_rng(51)
    ups, lows = [], []
    for _ in range(50):
        rep = check_norm_equivalence(random_field(g128, rng, sigma=1.5), P)
        assert rep.passed
        ups.append(rep.fitted_constant)
        lows.append(rep.lower)
    assert max(ups) <= 16 and max(lows) <= 16


def test_equivalence_high_mode(g128):
    # |k| ~ 7.9 sits inside the bank's coverage, far from the base block
    u, _ = _mode(g128, (20, 0))
    rep = check_norm_equivalence(u, P)
    hom = rep.extra["homogeneous"]
    assert abs(rep.lhs / hom - 1.0) < 1e-12          # same blocks on both sides
    assert rep.extra["herz"] < 0.01 * hom
    assert abs(rep.fitted_constant - 1.0) < 0.01 and abs(rep.lower - 1.0) < 0.01


def test_equivalence_rejects_nonpositive_s(g128, rng):
    with pytest.raises(ParameterError):
        check_norm_equivalence(random_field(g128, rng), P.replace(s=0.0))


# -- L-infinity embedding ----------------------------------------------------------
def test_embedding_constant_field(g128):
    rep = check_linfty_embedding(Field(g128, np.ones((1,) + g128.shape)), P)
    assert rep.lhs == 1.0 and rep.rhs > 0 and rep.passed


def test_embedding_sweep_single_constant(g128):
    rng = np.random.default_rng(61)
    Q = NormParams(alpha=0.5, p=2, q=2, r=2, s=1.5)
    cs = [check_linfty_embedding(random_field(g128, rng), Q).fitted_constant for _ in range(100)]
    assert max(cs) <= 64


def test_embedding_excluded_case(g128, rng):
    with pytest.raises(ParameterError):
        check_linfty_embedding(random_field(g128, rng), NormParams(p=2, s=1.0, r=math.inf))
    # the endpoint with r = 1 is admitted
    assert check_linfty_embedding(random_field(g128, rng), NormParams(p=2, s=1.0, r=1)).passed


def test_homogeneous_breakdown_excludes_mean(g128):
    c = Field(g128, np.full((1,) + g128.shape, 1.0))
    assert besov_herz_norm(c, P, HOMOGENEOUS)[0] < 1e-14
