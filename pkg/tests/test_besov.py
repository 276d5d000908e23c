import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from torpsido.besov import (
    EQUIVALENCE_CONSTANT,
    BesovParams,
    besov_norm,
    besov_norm_derivative_form,
    lp_norm,
    lq_aggregate,
    spectral_derivative,
)
from torpsido.dyadic import BumpParams, build_dyadic
from torpsido.grid import FrequencyLattice, GridFunction, SpectralCoeffs, TorusGrid, inverse_transform, random_coeffs
from torpsido.verify import random_family

INF = math.inf
L64 = FrequencyLattice(1, 64)
D64 = build_dyadic(L64)
G64 = TorusGrid(1, 129)


def single_frequency_oracle(D, k0, s, q):
    """Closed form over the blocks active at k0 (at most three)."""
    vals = [2.0 ** (j * s) * D.evaluate(j, np.array([k0]))[0] for j in range(D.j_max + 1)]
    return lq_aggregate(vals, q)


def test_params_validation():
    assert BesovParams(1, "inf", "inf").p == INF
    with pytest.raises(ValueError):
        BesovParams(1, 0.5, 1)
    with pytest.raises(ValueError):
        BesovParams(1, 2, 0)


@pytest.mark.parametrize("p", [1, 1.5, 2, 4, INF])
def test_lp_of_constant_and_character(p):
    grid = TorusGrid(1, 17)
    c = np.array([3.0, -4.0j])
    assert lp_norm(GridFunction(grid, np.broadcast_to(c, (17, 2))), p) == pytest.approx(5.0, rel=1e-15)
    e = GridFunction.from_callable(grid, lambda x: np.stack([np.exp(1j * x[..., 0]), 0 * x[..., 0]], -1))
    assert lp_norm(e, p) == pytest.approx(1.0, rel=1e-15)


@pytest.mark.parametrize("N", [3, 5, 64])
def test_l2_of_cosine(N):
    f = GridFunction.from_callable(TorusGrid(1, N), lambda x: np.cos(x[..., 0])[..., None])
    assert lp_norm(f, 2) == pytest.approx(1 / math.sqrt(2), abs=1e-12)


def test_lp_rejects_small_p():
    with pytest.raises(ValueError):
        lp_norm(GridFunction.zeros(TorusGrid(1, 3), 1), 0.9)


def test_l1_of_cosine_converges_under_refinement():
    exact = 2 / math.pi
    errs = []
    for N in (16, 64, 256):
        f = GridFunction.from_callable(TorusGrid(1, N + 1), lambda x: np.cos(x[..., 0])[..., None])
        errs.append(abs(lp_norm(f, 1) - exact))
    assert errs[-1] < 1e-4 and errs[2] < errs[0]


@pytest.mark.parametrize("s", [-0.5, 0.5, 2.0])
@pytest.mark.parametrize("p", [1, 2, INF])
@pytest.mark.parametrize("q", [1, INF])
def test_constant_function(s, p, q):
    c = np.array([1.0 + 1.0j, 2.0])
    f = GridFunction(G64, np.broadcast_to(c, (129, 2)))
    # transform rounding in empty blocks is amplified by at most 2^(j_max s)
    tol = 1e-15 * max(1.0, 2.0 ** (D64.j_max * s)) * 10
    assert besov_norm(f, D64, BesovParams(s, p, q)).value == pytest.approx(np.linalg.norm(c), rel=tol)


def test_single_frequency_regression():
    F = SpectralCoeffs.single(L64, (6,), np.array([1.0]))
    # phi_2(6) = phi_3(6) = 1/2, so the sum is 4/2 + 8/2
    assert besov_norm(F, D64, BesovParams(1.0, 2, 1), G64).value == pytest.approx(6.0, abs=1e-12)


@pytest.mark.parametrize("k0", [1, 3, 6, 11, 40])
@pytest.mark.parametrize("s,p,q", [(1.0, 2, 1), (0.5, INF, 2), (-1.0, 1, INF), (2.5, 3, 1.5)])
def test_single_frequency_closed_form(k0, s, p, q):
    v = np.array([0.6, 0.8j])
    F = SpectralCoeffs.single(L64, (k0,), v)
    value = besov_norm(F, D64, BesovParams(s, p, q), G64).value
    assert value == pytest.approx(single_frequency_oracle(D64, [k0], s, q), abs=1e-10)


def test_single_frequency_two_dimensional():
    L = FrequencyLattice(2, 12)
    D = build_dyadic(L)
    F = SpectralCoeffs.single(L, (5, -3), np.array([1.0]))
    value = besov_norm(F, D, BesovParams(0.75, 2, 2), TorusGrid(2, 25)).value
    assert value == pytest.approx(single_frequency_oracle(D, [5, -3], 0.75, 2), abs=1e-10)


def test_grid_and_spectral_inputs_agree():
    F = random_coeffs(L64, 2, np.random.default_rng(0))
    f = inverse_transform(F, G64)
    params = BesovParams(0.5, 2, 1)
    assert besov_norm(f, D64, params).value == pytest.approx(besov_norm(F, D64, params, G64).value, rel=1e-12)


def test_block_consistency_and_csv(tmp_path):
    F = random_coeffs(L64, 1, np.random.default_rng(1))
    res = besov_norm(F, D64, BesovParams(1.0, 2, 3), G64)
    assert res.recompute() == res.value
    path = tmp_path / "blocks.csv"
    res.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["j", "scale", "block_lp", "contribution"]
    assert len(rows) == len(res.j) + 1
    assert float(rows[3][3]) == res.contributions[2]


@given(st.integers(0, 2**31), st.floats(-2, 2), st.floats(0, 2), st.sampled_from([1.0, 2.0, INF]))
def test_monotone_in_s(seed, s, ds, p):
    F = random_coeffs(FrequencyLattice(1, 16), 1, np.random.default_rng(seed))
    D = build_dyadic(F.lattice)
    g = TorusGrid(1, 33)
    a = besov_norm(F, D, BesovParams(s, p, 1), g).value
    b = besov_norm(F, D, BesovParams(s + ds, p, 1), g).value
    assert a <= b * (1 + 1e-12)


@given(st.integers(0, 2**31), st.sampled_from([(1, 2), (1, INF), (2, 5), (1.5, INF)]))
def test_monotone_in_q(seed, qs):
    F = random_coeffs(FrequencyLattice(1, 16), 1, np.random.default_rng(seed))
    D = build_dyadic(F.lattice)
    g = TorusGrid(1, 33)
    small, large = (besov_norm(F, D, BesovParams(0.5, 2, q), g).value for q in qs)
    assert large <= small * (1 + 1e-12)


@given(st.integers(0, 2**31), st.sampled_from([1.0, 2.0, INF]), st.sampled_from([1.0, 2.0, INF]))
def test_triangle_and_homogeneity(seed, p, q):
    rng = np.random.default_rng(seed)
    L = FrequencyLattice(1, 16)
    D = build_dyadic(L)
    g = TorusGrid(1, 33)
    F, G = random_coeffs(L, 2, rng), random_coeffs(L, 2, rng)
    params = BesovParams(0.7, p, q)
    nf, ng = besov_norm(F, D, params, g).value, besov_norm(G, D, params, g).value
    assert besov_norm(F + G, D, params, g).value <= (nf + ng) * (1 + 1e-12)
    assert besov_norm(F * 2.0, D, params, g).value == pytest.approx(2 * nf, rel=1e-13)


def test_derivative_form_of_constant():
    f = GridFunction(G64, np.full((129, 1), 2.0 + 0j))
    assert besov_norm_derivative_form(f, D64, BesovParams(1.5, 2, 1)) == pytest.approx(2.0, rel=1e-14)


def test_derivative_form_rejects_integer_s():
    f = GridFunction.zeros(G64, 1)
    for s in (1.0, -0.5):
        with pytest.raises(ValueError):
            besov_norm_derivative_form(f, D64, BesovParams(s, 2, 1))


def test_spectral_derivative():
    L = FrequencyLattice(2, 4)
    F = SpectralCoeffs.single(L, (2, -3), np.array([1.0]))
    assert spectral_derivative(F, (1, 2)).at((2, -3))[0] == pytest.approx((2j) * (-3j) ** 2)


@pytest.mark.parametrize("k0", [1, 5, 6, 20, 50])
def test_derivative_form_single_frequency(k0):
    F = SpectralCoeffs.single(L64, (k0,), np.array([1.0]))
    params = BesovParams(1.5, 2, 1)
    closed = single_frequency_oracle(D64, [k0], 0.5, 1) * (1 + k0)
    assert besov_norm_derivative_form(F, D64, params, G64) == pytest.approx(closed, rel=1e-12)
    ratio = closed / single_frequency_oracle(D64, [k0], 1.5, 1)
    assert 1 / EQUIVALENCE_CONSTANT <= ratio <= EQUIVALENCE_CONSTANT


@pytest.mark.parametrize("family", ["flat", "blocks", "localized"])
def test_derivative_form_equivalence(family):
    fam = random_family(L64, 1, 50 if family != "localized" else 7, seed=11, kind=family, D=D64)[:50]
    params = BesovParams(1.5, 2, 1)
    for F in fam:
        ratio = besov_norm_derivative_form(F, D64, params, G64) / besov_norm(F, D64, params, G64).value
        assert 1 / EQUIVALENCE_CONSTANT <= ratio <= EQUIVALENCE_CONSTANT


def test_decomposition_independence_report():
    """Two bump choices give comparable norms; the measured constant is small."""
    other = build_dyadic(L64, BumpParams(1.2, 1.8))
    fam = random_family(L64, 1, 20, seed=5, kind="blocks", D=D64)
    params = BesovParams(0.5, 2, 2)
    ratios = [besov_norm(F, D64, params, G64).value / besov_norm(F, other, params, G64).value for F in fam]
    assert 0.5 < min(ratios) and max(ratios) < 2.0
