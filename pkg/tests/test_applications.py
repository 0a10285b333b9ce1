import math

import numpy as np
import pytest
from scipy.stats import ks_2samp, kstest

from ifslab.applications import (
    BakerSpec,
    FurstenbergSpec,
    PlaceDepBC,
    baker_orbit,
    baker_vs_bc,
    bc_bounds,
    bc_chaos_game,
    bc_entropy_lyapunov,
    bc_region_classify,
    cocycle_lyapunov,
    furstenberg_dimension,
    furstenberg_gibbs,
    furstenberg_pressure,
    make_rng,
    stationarity_check,
)
from ifslab.errors import NoConvergence, NotInU
from ifslab.thermo import conformal_similarity_dimension

PAIR = (((2, 1), (1, 2)), ((1, 1), (1, 2)))


def test_spec_validation():
    for lam, rho in [(0.0, 0.1), (1.0, 0.1), (0.5, 0.5), (0.5, -0.1)]:
        with pytest.raises(ValueError):
            PlaceDepBC(lam, rho)
        with pytest.raises(ValueError):
            BakerSpec(lam, rho)
    with pytest.raises(ValueError):
        FurstenbergSpec((((1, 0), (1, 1)),))


def test_generator_is_keyed_by_seed_and_stream():
    a = make_rng(3, 0).random(5)
    assert np.array_equal(a, make_rng(3, 0).random(5))
    assert not np.array_equal(a, make_rng(3, 1).random(5))


def test_chaos_game_samples_and_branch_frequency():
    spec = PlaceDepBC(0.6, 0.3)
    x, e = bc_chaos_game(spec, 200_000, seed=8, return_branches=True)
    assert x.min() >= -1 and x.max() <= 1
    # branch e_k is drawn at x_{k-1}; the first branch uses the last burn-in state
    p0 = 0.5 + spec.rho * x[:-1]
    freq = float((e[1:] == 0).mean())
    se = math.sqrt(0.25 / p0.size) * 4
    assert abs(p0.mean() - freq) < 3 * se
    np.testing.assert_allclose(x[1:], np.where(e[1:] == 0, spec.lam * x[:-1] - 0.4, spec.lam * x[:-1] + 0.4), atol=1e-15)


def test_classical_cases():
    x = bc_chaos_game(PlaceDepBC(0.5, 0.0), 100_000, seed=1)
    assert kstest(x, "uniform", args=(-1, 2)).statistic < 0.02
    y = bc_chaos_game(PlaceDepBC(0.4, 0.0), 100_000, seed=1)
    assert not np.any((y > 2 * 0.4 - 1) & (y < 1 - 2 * 0.4))


def test_entropy_statistics():
    spec = PlaceDepBC(0.6, 0.2)
    stats = bc_entropy_lyapunov(spec, bc_chaos_game(spec, 50_000, seed=2))
    assert stats.chi_mc == -math.log(0.6)
    assert 0 < stats.h_se < 0.01
    with pytest.raises(ValueError):
        bc_entropy_lyapunov(spec, np.zeros(10))


def test_bounds_examples():
    assert bc_bounds(0.6, 0.2).B == pytest.approx(0.04 / (3 * 0.84))
    b0 = bc_bounds(0.6, 0.0)
    assert b0.dim_lower == b0.dim_upper == pytest.approx(math.log(2) / -math.log(0.6))
    b = bc_bounds(0.55, 0.45)
    assert b.B == pytest.approx(0.2025 / (3 * 0.19))
    assert bc_region_classify(0.55, 0.45) == ("singular" if b.dim_upper < 1 else "undetermined")


def test_stationarity():
    x = bc_chaos_game(PlaceDepBC(0.5, 0.0), 100_000, seed=3)
    assert stationarity_check(PlaceDepBC(0.5, 0.0), x) < 0.02
    wrong = make_rng(9).uniform(-1, 1, 100_000)
    assert stationarity_check(PlaceDepBC(0.6, 0.0), wrong) > 0.1


def test_furstenberg_pressure_oracles():
    A = np.array([[2.0, 1.0], [1.0, 2.0]])
    single = FurstenbergSpec((A.tolist(),), 1.5)
    assert furstenberg_pressure(single, 14).value == pytest.approx(1.5 * math.log(3), abs=1e-10)
    same = FurstenbergSpec((A.tolist(),) * 3, 0.7)
    assert furstenberg_pressure(same, 12).value == pytest.approx(math.log(3) + 0.7 * math.log(3), abs=1e-10)
    # power-method oracle for a non-symmetric matrix
    B = np.array([[3.0, 1.0], [2.0, 1.0]])
    rho = max(abs(np.linalg.eigvals(B)))
    assert furstenberg_pressure(FurstenbergSpec((B.tolist(),), 1.0), 14).value == pytest.approx(math.log(rho), abs=1e-8)


def test_furstenberg_gibbs_paths():
    spec = FurstenbergSpec(PAIR, 1.0)
    a = furstenberg_gibbs(spec, 8, "norm").weights
    b = furstenberg_gibbs(spec, 8, "transfer").weights_at(8)
    assert np.abs(np.log(a / b)).max() <= 0.05
    with pytest.raises(ValueError):
        furstenberg_gibbs(spec, 4, "other")


def test_cocycle_exponents_against_monte_carlo():
    spec = FurstenbergSpec(PAIR, 0.0)
    ex = cocycle_lyapunov(spec, None, 12)
    assert ex.eta1 > ex.eta2
    rng = np.random.default_rng(0)
    mats = np.array(PAIR, dtype=float)
    words = rng.integers(0, 2, size=(100_000, 12))
    P = np.broadcast_to(np.eye(2), (words.shape[0], 2, 2)).copy()
    for col in range(12):
        P = P @ mats[words[:, col]]
    top = np.log(np.linalg.svd(P, compute_uv=False)[:, 0]) / 12
    assert abs(top.mean() - ex.eta1) < 4 * top.std() / math.sqrt(top.size)


def test_cocycle_identity_enforced_for_ill_conditioned_products():
    spec = FurstenbergSpec((((3, 1), (1, 2)), ((1, 2), (2, 5))), 1.0)
    assert cocycle_lyapunov(spec, None, 16).identity_residual < 1e-10
    with pytest.raises(NoConvergence):
        cocycle_lyapunov(spec, None, 4, tol=-1.0)


def test_furstenberg_dimension_equal_matrices():
    A = ((2, 1), (1, 2))
    spec = FurstenbergSpec((A, A), 0.0)
    rep = furstenberg_dimension(spec, n=10)
    assert rep.entropy == pytest.approx(math.log(2), abs=1e-12)
    assert rep.lyapunov == pytest.approx(math.log(3), abs=1e-9)
    s = conformal_similarity_dimension(spec.family()).value
    assert rep.dimension == pytest.approx(min(1.0, s), abs=1e-6)


def test_furstenberg_dimension_requires_U():
    with pytest.raises(NotInU):
        furstenberg_dimension(FurstenbergSpec((((3, 1), (1, 2)),)))
    assert not FurstenbergSpec((((3, 1), (1, 2)),)).in_U


def test_baker_marginals():
    xs, ys = baker_orbit(BakerSpec(0.5, 0.0), 100_000, seed=6)
    assert kstest(xs, "uniform", args=(-1, 2)).statistic < 0.02
    assert ys.min() >= 0 and ys.max() < 1
    assert kstest(ys, "uniform").statistic < 0.02
    near = baker_orbit(BakerSpec(0.6, 1e-3), 100_000, seed=7)[0]
    assert ks_2samp(near, bc_chaos_game(PlaceDepBC(0.6, 0.0), 100_000, seed=7)).statistic < 0.03


def test_baker_far_mismatch_is_detected():
    assert baker_vs_bc(BakerSpec(0.55, 0.1), 100_000, seed=1, bc_spec=PlaceDepBC(0.8, 0.1)) > 0.1
