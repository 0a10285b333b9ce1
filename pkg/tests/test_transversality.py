import numpy as np
import pytest

from ifslab.applications import TRANSVERSALITY_INTERVAL, bc_family
from ifslab.errors import BudgetExceeded
from ifslab.ifs_core import affine_family, vertical_translate_family
from ifslab.symbolic import EventuallyPeriodicWord as W
from ifslab.transversality import cell_centers, check_MT, check_T3_slope, sample_words


def test_cell_centers_nest_under_odd_refinement():
    U = ((0.0, 1.0),)
    coarse = cell_centers(U, 3)[:, 0]
    fine = cell_centers(U, 9)[:, 0]
    assert all(np.isclose(fine, c).any() for c in coarse)
    assert cell_centers(((0, 1), (0, 2)), [2, 3]).shape == (6, 2)


def test_sample_words_are_distinct():
    words = sample_words(2, 3)
    assert len(words) == len(set(words))
    assert W((), (1,)) in words and W((1, 2, 1), (2,)) in words


def test_bc_interval_passes_at_ladder_minimum():
    lo, hi = TRANSVERSALITY_INTERVAL
    rep = check_MT(bc_family(lo, hi), 60, 5)
    assert rep.eta_passed is not None
    assert not [v for v in rep.violations if v.eta <= 0.005]
    d = rep.to_json_dict()
    assert d["pairs_tested"] == rep.pairs_tested


def test_violation_records_are_sorted():
    rep = check_MT(bc_family(0.4, 0.8), 12, 3)
    keys = [max(v.delta, v.grad_norm) for v in rep.violations]
    assert keys == sorted(keys)


def test_pair_cap():
    fam = vertical_translate_family(affine_family([1 / 3, 1 / 3], [0.0, 2 / 3]), 0.05)
    with pytest.raises(BudgetExceeded):
        check_MT(fam, 200, 6)


def test_slab_fraction_is_linear_in_r():
    fam = vertical_translate_family(affine_family([1 / 3, 1 / 3], [0.0, 2 / 3]), 0.05)
    i, j = W((), (1,)), W((), (2,))
    fracs, slope = check_T3_slope(fam, i, j, [0.913, 0.957, 1.0123, 1.0571], 41)
    # Pi(i) - Pi(j) = -1 + 1.5 (lam1 - lam2): the slab has width 2r / 1.5 in lam1 - lam2
    grid = cell_centers(fam.U, 41)
    dist = np.abs(-1.0 + 1.5 * (grid[:, 0] - grid[:, 1]))
    for r, f in fracs:
        assert f == pytest.approx(float((dist < r).mean()))
    assert 0 < fracs[0][1] < fracs[-1][1] < 1
    assert np.isfinite(slope) and slope > 0
    with pytest.raises(ValueError):
        check_T3_slope(fam, W((), (1,)), W((1,), (2,)), [0.1], 3)
