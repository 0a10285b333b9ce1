import math

import numpy as np
import pytest

from ifslab.applications import bc_family
from ifslab.errors import ContractionTooWeak, NotContracting, SingularMatrix, UnsupportedKind
from ifslab.ifs_core import (
    Affine,
    IFSFamily,
    affine_family,
    apply_word,
    cylinder_endpoints,
    cylinder_geometry,
    cylinder_interval,
    detect_exact_overlap,
    distortion_ratio,
    mobius_family,
    natural_projection,
    projection_gradient,
    verify_assumptions,
    vertical_translate_family,
    word_points,
)
from ifslab.symbolic import EventuallyPeriodicWord as W


@pytest.fixture
def cantor():
    return affine_family([1 / 3, 1 / 3], [0.0, 2 / 3])


def test_cylinder_interval(cantor):
    c = cylinder_interval(cantor, None, (1, 2))
    assert c.lo == pytest.approx(2 / 9) and c.hi == pytest.approx(1 / 3)
    assert c.length == pytest.approx(1 / 9)


def test_cylinders_nest_and_lengths_match(cantor):
    lo, hi = cylinder_endpoints(cantor, None, 6)
    glo, ghi, length = cylinder_geometry(cantor, None, 6)
    np.testing.assert_allclose(length, 3.0**-6, rtol=1e-12)
    np.testing.assert_allclose(hi - lo, length, atol=1e-15)
    plo, phi = cylinder_endpoints(cantor, None, 5)
    parent = np.repeat(np.arange(32), 2)
    assert np.all(lo >= plo[parent] - 1e-15) and np.all(hi <= phi[parent] + 1e-15)


def test_word_points_are_images_of_start(cantor):
    pts = word_points(cantor, None, 2, 0.0)
    np.testing.assert_allclose(pts, [0, 2 / 9, 2 / 3, 8 / 9], atol=1e-15)


def test_projection_closed_forms(cantor):
    # (1 2)^inf solves x = (x/3 + 2/3)/3
    x, err = natural_projection(cantor, None, W.periodic((1, 2)))
    assert x == pytest.approx(0.25, abs=1e-13) and err <= 1e-12
    assert natural_projection(cantor, None, W((2,), (1,)))[0] == pytest.approx(2 / 3)
    bc = bc_family()
    assert natural_projection(bc, [0.6], W.periodic((1,)))[0] == pytest.approx(-1.0)


def test_projection_gradient_matches_finite_difference():
    bc = bc_family()
    word = W((2, 1, 1), (2, 1))
    lam, h = 0.58, 1e-6
    grad, tail = projection_gradient(bc, [lam], word)
    fd = (natural_projection(bc, [lam + h], word)[0] - natural_projection(bc, [lam - h], word)[0]) / (2 * h)
    assert grad[0] == pytest.approx(fd, abs=1e-7)
    assert tail < 1e-9


def test_apply_word_derivative():
    fam = mobius_family([[[3, 1], [1, 2]], [[1, 1], [1, 2]]])
    x, h = 0.37, 1e-6
    _, d = apply_word(fam, None, (1, 2, 1), x)
    fd = (apply_word(fam, None, (1, 2, 1), x + h)[0] - apply_word(fam, None, (1, 2, 1), x - h)[0]) / (2 * h)
    assert d == pytest.approx(fd, rel=1e-6)


def test_distortion():
    assert distortion_ratio(affine_family([0.4, 0.5], [0.0, 0.5]), None, (1, 2, 1)) == pytest.approx(1.0)
    # [[2,1],[1,2]] acts as the affine map (x+1)/3; [[3,1],[1,2]] is genuinely projective
    assert distortion_ratio(mobius_family([[[2, 1], [1, 2]]]), None, (1,)) == pytest.approx(1.0)
    assert distortion_ratio(mobius_family([[[3, 1], [1, 2]]]), None, (1,)) > 1.5


def test_exact_overlap_detection(cantor):
    triple = affine_family([1 / 3] * 3, [0.0, 1 / 3, 1.0], X=(0.0, 1.5))
    assert detect_exact_overlap(triple, None, 2) == [((1, 3), (2, 1))]
    assert detect_exact_overlap(cantor, None, 4) == []
    with pytest.raises(UnsupportedKind):
        detect_exact_overlap(mobius_family([[[3, 1], [1, 2]]]), None, 2)


def test_vertical_translates(cantor):
    fam = vertical_translate_family(cantor, 0.05)
    assert fam.d == 2 and fam.U == ((-0.05, 0.05), (-0.05, 0.05))
    assert fam.X == pytest.approx((-0.075, 1.075))
    assert verify_assumptions(fam).ok
    grad, _ = projection_gradient(fam, [0.0, 0.0], W.periodic((1,)))
    np.testing.assert_allclose(grad, [1.5, 0.0], atol=1e-12)
    with pytest.raises(ContractionTooWeak):
        vertical_translate_family(affine_family([0.6, 0.3], [0.0, 0.7]), 0.05)


def test_mobius_validation():
    with pytest.raises(SingularMatrix):
        mobius_family([[[1, 1], [1, 1]]])
    with pytest.raises(NotContracting):
        mobius_family([[[1, 0], [0, 2]]])
    fam = mobius_family([[[2, 1], [1, 2]]])
    assert fam.info["derivative_norms"][0] == pytest.approx(1 / 3)


def test_verify_assumptions_flags_escape():
    bad = IFSFamily((Affine(0.5, 0.0), Affine(0.5, 0.7)), (0.0, 1.0))
    rep = verify_assumptions(bad)
    assert not rep.ok
    assert any("not inside X" in v for v in rep.violations)
    assert verify_assumptions(bc_family()).ok


def test_family_validation():
    with pytest.raises(ValueError):
        affine_family([0.5], [0.0, 0.5])
    with pytest.raises(ValueError):
        IFSFamily((), (0.0, 1.0))
