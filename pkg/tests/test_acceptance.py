"""Acceptance checks, one test per numbered criterion."""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from ifslab.applications import (
    BakerSpec,
    FurstenbergSpec,
    PlaceDepBC,
    baker_vs_bc,
    bc_bounds,
    bc_chaos_game,
    bc_entropy_lyapunov,
    bc_gibbs,
    bc_region_classify,
    bc_region_scan,
    cocycle_lyapunov,
    furstenberg_gibbs,
    furstenberg_pressure,
    gibbs_path_discrepancy,
)
from ifslab.dim_est import (
    _EnergyLevels,
    box_dimension_estimate,
    correlation_dimension_estimate,
    energy_continuity_probe,
    symbolic_energy,
)
from ifslab.ifs_core import Affine, IFSFamily, affine_family, detect_exact_overlap, mobius_family, vertical_translate_family
from ifslab.thermo import (
    FirstSymbol,
    Geometric,
    conformal_similarity_dimension,
    entropy_estimate,
    equilibrium_check,
    lyapunov_estimate,
    measure_modulus,
    product_measure,
    solve_similarity_dimension,
    transfer_operator_solve,
)
from ifslab.transversality import check_MT


def overlap_triple():
    return affine_family([1 / 3] * 3, [0.0, 1 / 3, 1.0], X=(0.0, 1.5))


def test_criterion_01_similarity_dimension():
    assert abs(solve_similarity_dimension([1 / 3] * 3) - 1.0) < 1e-10
    assert abs(solve_similarity_dimension([1 / 3] * 2) - math.log(2) / math.log(3)) < 1e-10
    reps = 200
    t = time.perf_counter()
    for _ in range(reps):
        solve_similarity_dimension([1 / 3] * 3)
    assert (time.perf_counter() - t) / reps < 1e-3


def test_criterion_02_exact_overlap_attractor():
    t = time.perf_counter()
    fam = overlap_triple()
    est = box_dimension_estimate(fam, None, range(6, 13))
    assert abs(est.value - 0.876) <= 0.03
    assert ((1, 3), (2, 1)) in detect_exact_overlap(fam, None, 2)
    assert time.perf_counter() - t < 10


def test_criterion_03_gibbs_machinery():
    t = time.perf_counter()
    halves = affine_family([0.5, 0.5], [0.0, 0.5])
    p = (0.3, 0.7)
    pot = FirstSymbol(tuple(math.log(v) for v in p))
    g = transfer_operator_solve(pot, halves, None, n=12)
    assert g.residual < 1e-10
    np.testing.assert_allclose(g.weights, product_measure(p, 12).weights, rtol=1e-12, atol=0)

    cantor = affine_family([1 / 3, 1 / 3], [0.0, 2 / 3])
    s = conformal_similarity_dimension(cantor).value
    geo = Geometric(s)
    gg = transfer_operator_solve(geo, cantor, None, n=12)
    assert np.abs(gg.weights - 2.0**-12).max() <= 1e-8
    assert equilibrium_check(geo, cantor, None, gg) < 1e-6
    h = entropy_estimate(gg).value
    chi = lyapunov_estimate(gg, cantor).value
    assert abs(s - h / chi) < 1e-6

    # a non-linear system where the identity is not forced by symmetry
    mob = mobius_family([[[3, 1], [1, 2]], [[1, 1], [1, 2]]])
    sm = conformal_similarity_dimension(mob).value
    gm = transfer_operator_solve(Geometric(sm), mob, None, n=12)
    assert abs(sm - entropy_estimate(gm).value / lyapunov_estimate(gm, mob).value) < 1e-6
    assert time.perf_counter() - t < 30


def test_criterion_04_place_dependent_bc():
    t = time.perf_counter()
    spec = PlaceDepBC(0.55, 0.1)
    x = bc_chaos_game(spec, 10**6, seed=2024)
    stats = bc_entropy_lyapunov(spec, x)
    assert stats.chi_mc == -math.log(0.55)
    A, B, _, _ = bc_bounds(0.55, 0.1)
    assert abs(A - 0.688062) < 1e-6 and abs(B - 0.003472) < 1e-6
    assert A - B - 3 * stats.h_se <= stats.h_mc <= A + 3 * stats.h_se
    flat = bc_entropy_lyapunov(PlaceDepBC(0.55, 0.0), bc_chaos_game(PlaceDepBC(0.55, 0.0), 10**6, seed=2024))
    assert flat.h_mc == math.log(2)
    assert time.perf_counter() - t < 60


def test_criterion_05_region_map():
    t = time.perf_counter()
    lams = np.linspace(0.5, 0.67, 50).tolist()
    rhos = np.linspace(0.0, 0.45, 50).tolist()
    rows = bc_region_scan(lams, rhos)
    elapsed = time.perf_counter() - t
    assert len(rows) == 2500
    cls = {(r[0], r[1]): r[-1] for r in rows}
    # abs_cont_ae next to the right end of the transversality interval at small rho
    near_top = [lam for lam in lams if 0.6 < lam < 0.6684755]
    assert all(cls[(lam, rhos[1])] == "abs_cont_ae" for lam in near_top)
    # singular for large rho
    assert all(cls[(lam, rhos[-1])] == "singular" for lam in lams[:5])
    assert bc_region_classify(0.66, 0.02) == "abs_cont_ae"
    assert bc_region_classify(0.45, 0.1) == "singular"
    assert bc_region_classify(0.55, 0.45) == "undetermined"
    assert all(bc_region_classify(lam, 0.1) == "singular" for lam in (0.2, 0.3, 0.4, 0.49))
    assert elapsed < 1


def test_criterion_06_transversality():
    t = time.perf_counter()
    base = affine_family([1 / 3, 1 / 3], [0.0, 2 / 3])
    rep = check_MT(vertical_translate_family(base, 0.05), 9, 4)
    assert rep.eta_passed is not None and rep.eta_passed >= 0.05
    frozen = IFSFamily(
        (Affine(1 / 3, 0.0, (0.0,), (0.0,)), Affine(1 / 3, 1 / 3, (0.0,), (0.0,)), Affine(1 / 3, 1.0, (0.0,), (0.0,))),
        (0.0, 1.5),
        ((0.0, 1.0),),
    )
    neg = check_MT(frozen, 9, 4)
    assert neg.violations
    assert neg.eta_passed is None
    assert time.perf_counter() - t < 60


def test_criterion_07_correlation_dimension():
    t = time.perf_counter()
    halves = affine_family([0.5, 0.5], [0.0, 0.5])
    g = product_measure((0.5, 0.5), 13)
    assert abs(correlation_dimension_estimate(g, halves, None, 12).value - 1.0) <= 0.02
    third = affine_family([1 / 3, 1 / 3], [0.0, 2 / 3])
    gb = product_measure((0.3, 0.7), 13)
    exact = math.log(0.3**2 + 0.7**2) / math.log(1 / 3)
    cd = correlation_dimension_estimate(gb, third, None, 12)
    assert abs(cd.value - exact) <= 0.02
    # level terms grow with alpha, growth rate changes sign at the dimension
    levels = _EnergyLevels(gb, third, None, 12)
    alphas = np.linspace(0.0, 1.0, 11)
    logs = np.array([levels.log_terms(a) for a in alphas])
    assert np.all(np.diff(logs, axis=0) >= -1e-12)
    assert symbolic_energy(gb, third, None, exact - 0.1, 12).growth_rate < 0
    assert symbolic_energy(gb, third, None, exact + 0.1, 12).growth_rate > 0
    assert time.perf_counter() - t < 30


def test_criterion_08_furstenberg():
    t = time.perf_counter()
    spec = FurstenbergSpec((((2, 1), (1, 2)), ((1, 1), (1, 2))), 1.0)
    ex = cocycle_lyapunov(spec, furstenberg_gibbs(spec, 12, "transfer"), 12)
    assert ex.identity_residual <= 1e-10
    flat = FurstenbergSpec(spec.matrices, 0.0)
    assert furstenberg_pressure(flat, 10).value == math.log(2)
    assert np.all(furstenberg_gibbs(flat, 8, "norm").weights == 2.0**-8)
    g0 = furstenberg_gibbs(flat, 8, "transfer")
    np.testing.assert_allclose(g0.weights_at(8), 2.0**-8, rtol=1e-9)
    single = FurstenbergSpec((((2, 1), (1, 2)),))
    fam = single.family()
    assert abs(fam.info["derivative_norms"][0] - 1 / 3) < 1e-12
    assert single.in_U
    assert gibbs_path_discrepancy(spec, 8) <= 0.05
    assert time.perf_counter() - t < 60


def test_criterion_09_baker_vs_bc():
    t = time.perf_counter()
    assert baker_vs_bc(BakerSpec(0.55, 0.1), 2 * 10**5, seed=11) < 0.03
    assert baker_vs_bc(BakerSpec(0.6, 0.05), 2 * 10**5, seed=12) < 0.03
    assert baker_vs_bc(BakerSpec(0.55, 0.1), 2 * 10**5, seed=13, bc_spec=PlaceDepBC(0.65, 0.1)) > 0.1
    assert time.perf_counter() - t < 120


def test_criterion_10_measure_continuity():
    t = time.perf_counter()
    gA = bc_gibbs(PlaceDepBC(0.55, 0.1), n=10)
    gB = bc_gibbs(PlaceDepBC(0.56, 0.1), n=10)
    est = measure_modulus(gA, gB, 10)
    assert math.isfinite(est.c_hat) and est.c_hat > 0
    halves = affine_family([0.5, 0.5], [0.0, 0.5])
    lo, hi = energy_continuity_probe(product_measure((0.5, 0.5), 12), product_measure((0.51, 0.49), 12), halves, None, 0.8, 0.05)
    # sandwich with C2 = 0 and C1 = 2: E_{a-e}(B)/2 <= E_a(A) <= 2 E_{a+e}(B)
    assert lo >= 0.5 and hi <= 2.0
    assert time.perf_counter() - t < 30


CLI_RUNS = [
    ["sim-dim", "--ratios", "0.3333333,0.3333333"],
    ["pressure-curve", "--family", "affine:0.5,0;0.5,0.5", "--t", "0:1:5", "--depth", "8"],
    ["gibbs", "--potential", "first-symbol:0.3,0.7", "--depth", "6"],
    ["dim-scan", "--grid", "0.55:0.6:2", "--depth", "6"],
    ["bc-region", "--lambda", "0.5:0.67:50", "--rho", "0:0.45:50"],
    ["bc-sample", "--lambda", "0.55", "--rho", "0:0.2:3", "--n", "20000", "--seed", "7"],
    ["transversality", "--family", "translates:0.3333333333,0;0.3333333333,0.6666666667", "--grid", "3", "--depth", "2"],
    ["furstenberg", "--q", "0:1:2", "--depth", "8"],
    ["baker", "--n", "20000", "--seed", "5"],
]


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_criterion_11_determinism(tmp_path, fmt):
    for argv in CLI_RUNS:
        outputs = []
        for run in range(2):
            out = tmp_path / f"{argv[0]}-{run}.{fmt}"
            proc = subprocess.run([sys.executable, "-m", "ifslab", *argv, "--out", str(out)], capture_output=True, text=True)
            assert proc.returncode == 0, proc.stderr
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1], argv
