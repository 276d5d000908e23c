import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from torpsido.dyadic import build_dyadic
from torpsido.grid import FrequencyLattice, GridFunction, TorusGrid, inverse_transform, random_coeffs
from torpsido.psido import KernelBlock, kernel_block
from torpsido.symbol import (
    bracket_power,
    cosine,
    identity,
    rotation_matrix,
    weierstrass,
    zero,
)
from torpsido.verify import (
    EstimateReport,
    HypothesisError,
    WeightFunction,
    block_estimate_experiment,
    commutator_decay_experiment,
    convolution_bound_check,
    convolution_trials,
    elementary_inequality_gap,
    fit_log2_slope,
    homogeneity_check,
    kernel_bound_experiment,
    linearity_in_symbol_check,
    norm_equivalence_constant,
    operator_norm_experiment,
    random_family,
    sharpness_experiment,
    weight_g,
    weight_l1,
    weight_l1_sweep,
)

INF = math.inf
L64 = FrequencyLattice(1, 64)
D64 = build_dyadic(L64)


# --- weights ---------------------------------------------------------------------


def test_weight_closed_form():
    assert weight_g(0, 0.5, np.array([math.pi])) == pytest.approx(math.pi**0.5 / (math.pi * (1 + math.pi)), rel=1e-15)
    y = np.array([0.3, -0.4])
    assert weight_g(3, 0.25, y) == pytest.approx((8 * 0.5) ** 0.25 / (0.25 * (1 + 8 * 0.5)), rel=1e-15)
    assert np.isinf(weight_g(2, 0.5, np.zeros(1)))


def test_weight_rejects_theta():
    for theta in (0.0, 1.0, -0.2):
        with pytest.raises(ValueError):
            WeightFunction(1, theta)


def test_weight_positive_away_from_zero():
    g = TorusGrid(2, 9)
    vals = WeightFunction(4, 0.5)(g.lag_points)
    assert np.all(vals[np.isfinite(vals)] > 0)
    assert np.sum(~np.isfinite(vals)) == 1


def test_weight_l1_uniform_in_j():
    vals, ratio = weight_l1_sweep(range(9), 0.5, TorusGrid(1, 1025))
    assert all(math.isfinite(v) and v > 0 for v in vals.values())
    assert ratio <= 2.0


def test_weight_l1_continuous_in_theta():
    grid = TorusGrid(1, 257)
    thetas = np.linspace(0.1, 0.9, 17)
    vals = np.array([weight_l1(3, t, grid) for t in thetas])
    assert np.all(np.isfinite(vals))
    assert np.max(np.abs(np.diff(vals))) < 0.5 * np.max(vals)


@given(
    st.lists(st.integers(-1000, 1000), min_size=1, max_size=3).filter(any),
    st.lists(st.floats(-math.pi, math.pi), min_size=3, max_size=3),
    st.sampled_from([0.25, 0.5, 0.75]),
)
def test_elementary_inequality(k, eta, theta):
    k = np.array(k)
    eta = np.array(eta[: len(k)])
    assert elementary_inequality_gap(k, eta, theta) >= -1e-12


@pytest.mark.parametrize("n", [1, 2])
def test_norm_equivalence_constant(n):
    for order in (n, n + 1):
        coarse = norm_equivalence_constant(n, order, 64)
        fine = norm_equivalence_constant(n, order, 128)
        assert math.isfinite(coarse) and math.isfinite(fine)
        assert fine / coarse < 1.1


def test_norm_equivalence_constant_closed_form():
    # n = 1, order 1: sup |eta| / |e^{-i eta} - 1| = pi / 2, approached at eta = pi
    assert norm_equivalence_constant(1, 1, 1000) == pytest.approx(math.pi / 2, rel=2e-3)
    assert norm_equivalence_constant(1, 1, 1000) <= math.pi / 2


# --- kernel estimate ----------------------------------------------------------------


def test_kernel_bound_zero_symbol():
    rep = kernel_bound_experiment(zero(1, 1), D64, range(1, 7))
    assert rep.values("C_j") == [0.0] * 6
    assert rep.passed


@pytest.mark.parametrize("a", [identity(1, 1), bracket_power(1, 1, m=1.0), rotation_matrix(1, m=0.0)])
def test_kernel_bound_finite_and_flat(a):
    rep = kernel_bound_experiment(a, D64, range(1, 7))
    C = rep.values("C_j")
    assert all(math.isfinite(c) and c > 0 for c in C)
    assert rep.verdicts == {"finite": True, "non_growing": True}
    assert rep.params["N"] == 257


def kernel_constant_oracle(D, j, N, theta):
    """Scalar loop: max over lag nodes of |sum_k phi_j(k) e^{iky}| / g_{j,theta}(y)."""
    K = (N - 1) // 2
    phi = {k: float(D.evaluate(j, np.array([[k]]))[0]) for k in range(-K, K + 1)}
    best = 0.0
    for l in range(1, N):
        y = 2 * math.pi * l / N
        y = y - 2 * math.pi if y >= math.pi else y
        kern = abs(sum(v * complex(math.cos(k * y), math.sin(k * y)) for k, v in phi.items() if v))
        g = (2**j * abs(y)) ** theta / (abs(y) * (1 + 2**j * abs(y)))
        best = max(best, kern / g)
    return best


def test_kernel_bound_identity_regression():
    C = kernel_bound_experiment(identity(1, 1), D64, range(1, 7)).values("C_j")
    oracle = [kernel_constant_oracle(D64, j, 257, 0.5) for j in range(1, 7)]
    assert C == pytest.approx(oracle, rel=1e-12)
    frozen = [9.080439195325015, 7.4400849697913385, 7.493637675603031,
              7.4795280443217145, 7.479683234090964, 7.303922797758511]
    assert C == pytest.approx(frozen, rel=1e-12)


def test_kernel_bound_normalization_consistency():
    """Shifting the declared order by m0 rescales every C_j by 2^(-j m0) / norm ratio."""
    a = cosine(1, 1, r=1.0, m=0.0)
    shifted = a.with_order(1.0)
    base = kernel_bound_experiment(a, D64, range(1, 7))
    other = kernel_bound_experiment(shifted, D64, range(1, 7))
    scale = base.fits["symbol_norm_rho_0"] / other.fits["symbol_norm_rho_0"]
    for j, c0, c1 in zip(range(1, 7), base.values("C_j"), other.values("C_j")):
        assert c1 == pytest.approx(c0 * scale * 2.0**-j, rel=1e-9)


def test_kernel_bound_bracket_power_equivalence():
    """<k>^m0 a with order m + m0 gives the same C_j as a rescaled by the recomputed norm."""
    a = bracket_power(1, 1, m=0.0)
    b = bracket_power(1, 1, m=1.0)
    ra = kernel_bound_experiment(a, D64, range(2, 7))
    rb = kernel_bound_experiment(b, D64, range(2, 7))
    for ca, cb in zip(ra.values("C_j"), rb.values("C_j")):
        assert math.isfinite(ca) and math.isfinite(cb)
        assert 0.5 < cb / ca < 2.0


def test_kernel_bound_empty_range():
    with pytest.raises(ValueError):
        kernel_bound_experiment(identity(), D64, [])


# --- convolution bounds ----------------------------------------------------------------


def test_constant_kernel_mean_bound():
    grid = TorusGrid(1, 17)
    K = KernelBlock(0, grid, np.ones((1, 17, 1, 1), dtype=complex), True, False)
    f = GridFunction.from_callable(grid, lambda x: (1 + np.cos(x[..., 0]) + 1j * np.sin(2 * x[..., 0]))[..., None])
    for p in (1, 2, INF):
        chk = convolution_bound_check(K, f, p)
        assert chk.lhs == pytest.approx(1.0, rel=1e-14)
        assert chk.ok


@pytest.mark.parametrize("p", [1, 2, INF])
@pytest.mark.parametrize("double", [False, True])
def test_young_trials(p, double):
    rep = convolution_trials(TorusGrid(1, 16), p, trials=30, seed=7, d=2, double=double, positive=False)
    assert rep.fits["violations"] == 0
    assert rep.passed


def test_double_sharp_bumps_near_equality():
    grid = TorusGrid(1, 33)
    vals = np.zeros((1, 33, 1, 1), dtype=complex)
    vals[0, 0] = 33.0
    spike = KernelBlock(0, grid, vals, True, False)
    inner = KernelBlock(0, grid, np.broadcast_to(vals, (33, 33, 1, 1)).copy(), False, False)
    f = GridFunction(grid, np.ones((33, 1)))
    for kind in (1, 2):
        chk = convolution_bound_check(spike, f, 2, inner=inner, kind=kind)
        assert chk.ok
        assert chk.lhs == pytest.approx(chk.rhs, rel=1e-12)


def test_double_requires_x_independent_outer():
    grid = TorusGrid(1, 5)
    K = KernelBlock(0, grid, np.ones((5, 5, 1, 1), dtype=complex), False, False)
    with pytest.raises(ValueError):
        convolution_bound_check(K, GridFunction.zeros(grid, 1), 2, inner=K)


def test_kernel_block_satisfies_young():
    a = rotation_matrix(1, m=0.0)
    grid = TorusGrid(1, 257)
    f = inverse_transform(random_coeffs(L64, 2, np.random.default_rng(0)), grid)
    for j in range(1, 7):
        for p in (1, 2, INF):
            assert convolution_bound_check(kernel_block(a, D64, j, grid), f, p).ok


# --- block estimate --------------------------------------------------------------------


def test_block_estimate_identity_bounded_by_one():
    fam = random_family(L64, 1, 6, seed=2, kind="flat", D=D64)
    rep = block_estimate_experiment(identity(1, 1), D64, fam, 2, range(0, 7))
    assert max(rep.values("max_ratio")) <= 1 + 1e-9
    assert rep.passed


def test_block_estimate_skips_vanishing_denominators():
    fam = random_family(L64, 1, 1, seed=2, kind="localized", D=D64)
    rep = block_estimate_experiment(identity(1, 1), D64, fam, 2, range(2, 7))
    assert rep.fits["skipped"] > 0


def test_block_estimate_homogeneity():
    fam = random_family(L64, 1, 3, seed=4, kind="blocks", D=D64)
    a = weierstrass(1, 1, r=0.5, J=5)
    base = block_estimate_experiment(a, D64, fam, INF, range(1, 7)).values("max_ratio")
    scaled_f = block_estimate_experiment(a, D64, [F * 3.0 for F in fam], INF, range(1, 7)).values("max_ratio")
    scaled_a = block_estimate_experiment(a * 2.0, D64, fam, INF, range(1, 7)).values("max_ratio")
    assert scaled_f == pytest.approx(base, rel=1e-12)
    assert scaled_a == pytest.approx([2 * v for v in base], rel=1e-12)


def test_block_estimate_degenerate_family():
    fam = [random_coeffs(L64, 1, np.random.default_rng(0)) * 0.0]
    with pytest.raises(ValueError):
        block_estimate_experiment(identity(), D64, fam, 2, range(2, 5))


# --- commutator decay -------------------------------------------------------------------


def test_commutator_exact_branch():
    fam = random_family(L64, 2, 2, seed=0, D=D64)
    rep = commutator_decay_experiment(bracket_power(1, 2, m=1.0), D64, fam, 2, range(2, 6))
    assert rep.values("c_j") == [0.0] * 4
    assert rep.verdicts == {"exact_commutation": True}
    assert "exact commutation" in rep.notes[0]


def test_commutator_decay_smooth_symbol():
    L = FrequencyLattice(1, 256)
    D = build_dyadic(L)
    fam = random_family(L, 1, 3, seed=1, kind="blocks", D=D)
    rep = commutator_decay_experiment(cosine(1, 1, r=0.9), D, fam, 2, range(3, 8))
    assert rep.verdicts["decay_rate"]
    assert rep.fits["slope"] <= -0.9 + 0.35


def test_commutator_requires_fractional_r():
    fam = random_family(L64, 1, 1, seed=0, D=D64)
    with pytest.raises(HypothesisError):
        commutator_decay_experiment(cosine(1, 1, r=1.0), D64, fam, 2, range(2, 6))


def test_fit_exact_line():
    slope, intercept, resid = fit_log2_slope([1, 2, 3, 4], [2.0**-0.5, 2.0**-1, 2.0**-1.5, 2.0**-2])
    assert slope == pytest.approx(-0.5, abs=1e-14)
    assert intercept == pytest.approx(0.0, abs=1e-14)
    assert resid < 1e-14


# --- operator norm -------------------------------------------------------------------------


def test_opnorm_refuses_outside_range():
    for s in (0.0, 0.5, 0.8):
        with pytest.raises(HypothesisError, match="0 < s < r"):
            operator_norm_experiment(weierstrass(1, 1, r=0.5, J=4), L64, s, 2, 1)


@pytest.mark.parametrize("p,q", [(2, 1), (INF, INF), (1, 2)])
def test_opnorm_identity_exactly_one(p, q):
    rep = operator_norm_experiment(identity(1, 2), FrequencyLattice(1, 32), 0.5, p, q, trials=3)
    assert rep.values("Q") == [1.0, 1.0]
    assert rep.passed


def test_opnorm_bracket_negative_order():
    rep = operator_norm_experiment(bracket_power(1, 1, m=-1.0), FrequencyLattice(1, 32), 0.5, 2, 1, trials=4)
    assert rep.passed
    assert all(0.5 < q < 1.5 for q in rep.values("Q"))


def test_opnorm_homogeneity():
    a = rotation_matrix(1, m=0.0)
    qc, expected = homogeneity_check(a, FrequencyLattice(1, 32), 0.5, 2, 1, trials=3)
    assert qc == pytest.approx(expected, rel=1e-12)


def test_sharpness_is_report_only():
    rep = sharpness_experiment(weierstrass(1, 1, r=0.5, J=5), FrequencyLattice(1, 16), [0.25, 0.45, 0.6], trials=2)
    assert rep.verdicts == {}
    assert all(math.isfinite(v) for v in rep.values("Q"))


def test_linearity_in_symbol():
    L = FrequencyLattice(1, 16)
    F = random_coeffs(L, 2, np.random.default_rng(0))
    grid = TorusGrid(1, 65)
    a1, a2 = rotation_matrix(1, m=1.0), cosine(1, 2, r=0.5)
    assert linearity_in_symbol_check(a1, zero(1, 2), F, grid) == 0.0
    assert linearity_in_symbol_check(a1, a2, F, grid) < 1e-12
    assert linearity_in_symbol_check(weierstrass(1, 2, J=4), bracket_power(1, 2, m=-1.0), F, grid) < 1e-12


# --- reports -----------------------------------------------------------------------------------


def test_report_serialization(tmp_path):
    rep = EstimateReport("demo", {"seed": 1, "p": INF})
    rep.add_series("c_j", "j", [(2, 0.5), (3, 0.25)])
    rep.fits["slope"] = -1.0
    rep.verdicts["ok"] = True
    rep.timing["seconds"] = 0.1
    data = json.loads(rep.to_json(tmp_path / "r.json"))
    assert data["series"]["c_j"] == [{"j": 2, "value": 0.5}, {"j": 3, "value": 0.25}]
    assert data["params"]["p"] == "inf"
    assert "timing" not in rep.to_dict(include_timing=False)
    rep.to_csv(tmp_path / "r.csv")
    rows = list(csv.reader(open(tmp_path / "r.csv")))
    assert rows == [["experiment", "series", "index", "value"], ["demo", "c_j", "2", "0.5"], ["demo", "c_j", "3", "0.25"]]


def test_report_verdict_failure():
    rep = EstimateReport("demo", {})
    rep.verdicts.update({"a": True, "b": False})
    assert not rep.passed


def test_random_family_deterministic_and_real():
    a = random_family(L64, 2, 3, seed=9, kind="dyadic", s=1.0, D=D64, real=True)
    b = random_family(L64, 2, 3, seed=9, kind="dyadic", s=1.0, D=D64, real=True)
    assert all(np.array_equal(x.coeffs, y.coeffs) for x, y in zip(a, b))
    f = inverse_transform(a[0], TorusGrid(1, 129))
    assert np.max(np.abs(f.values.imag)) < 1e-12
    with pytest.raises(ValueError):
        random_family(L64, 1, 1, 0, kind="nope")


def test_experiments_deterministic_with_workers():
    fam = random_family(L64, 1, 3, seed=1, kind="blocks", D=D64)
    a = weierstrass(1, 1, r=0.5, J=6)
    r1 = commutator_decay_experiment(a, D64, fam, 2, range(2, 7), workers=1)
    r2 = commutator_decay_experiment(a, D64, fam, 2, range(2, 7), workers=3)
    assert r1.to_dict(include_timing=False) == r2.to_dict(include_timing=False)
    k1 = kernel_bound_experiment(a, D64, range(1, 7), workers=1)
    k2 = kernel_bound_experiment(a, D64, range(1, 7), workers=2)
    assert k1.to_dict(include_timing=False) == k2.to_dict(include_timing=False)
