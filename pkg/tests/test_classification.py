import numpy as np
import pytest

from chamber_harmonics.classification import (FINITE_ENERGY, SolutionSpaceSpec, basis_for_SL, classification_report,
                                              member_certificates, positive_cone_membership, sample_points,
                                              space_dimension)
from chamber_harmonics.cross_section import Interval, Rectangle, compute_spectrum, morse_index
from chamber_harmonics.errors import ThresholdError, TruncationError
from chamber_harmonics.junction import make_embedding

ONE, TWO = compute_spectrum(Interval(1.0), 32), compute_spectrum(Interval(2.0), 32)


@pytest.fixture(scope="module")
def rect():
    return make_embedding(Rectangle(2.0, 2.0), Rectangle(np.pi, np.pi))


def test_dimension_both_thresholds():
    spec = SolutionSpaceSpec(TWO.eigenvalues[0], ONE.eigenvalues[0])
    assert space_dimension(spec, ONE, TWO) == 2


def test_dimension_finite_energy_left():
    assert space_dimension(SolutionSpaceSpec(TWO.eigenvalues[0], FINITE_ENERGY), ONE, TWO) == 1
    assert space_dimension(SolutionSpaceSpec(FINITE_ENERGY, FINITE_ENERGY), ONE, TWO) == 0


def test_dimension_degenerate_rectangle(rect):
    spec = SolutionSpaceSpec(5.0, FINITE_ENERGY)
    assert space_dimension(spec, rect.left, rect.right) == 3 == morse_index(rect.right, 5.0)


@pytest.mark.parametrize("a, b", [(0, 0), (1, 0), (2, 3), (4, 1)])
def test_dimension_additivity(a, b):
    dR, dL = TWO.eigenvalues[a], ONE.eigenvalues[b]
    both = space_dimension(SolutionSpaceSpec(dR, dL), ONE, TWO)
    assert both == space_dimension(SolutionSpaceSpec(dR, None), ONE, TWO) + \
        space_dimension(SolutionSpaceSpec(None, dL), ONE, TWO)


def test_dimension_monotone_in_threshold(rect):
    sec = rect.right
    distinct = np.unique(np.round(sec.eigenvalues[:10], 9))
    dims = [space_dimension(SolutionSpaceSpec(d, None), rect.left, sec) for d in distinct]
    mult = [int(np.sum(np.abs(sec.eigenvalues - d) < 1e-9)) for d in distinct]
    assert np.all(np.diff(dims) == mult[1:])


def test_threshold_errors():
    with pytest.raises(ThresholdError):
        space_dimension(SolutionSpaceSpec(3.0, None), ONE, TWO)
    with pytest.raises(ThresholdError):
        space_dimension(SolutionSpaceSpec(-1.0, None), ONE, TWO)
    with pytest.raises(TruncationError):
        space_dimension(SolutionSpaceSpec(None, 1e9), ONE, TWO)


def test_basis_nested_intervals(nested):
    b1 = basis_for_SL(nested, 1)
    assert len(b1) == 1 and b1.rank == 1
    b2 = basis_for_SL(nested, 2)
    assert b2.rank == 2 and b2.conditioning > 1e-6
    # the second member changes sign in y on a right slice; the first does not
    y = np.linspace(0.01, 1.99, 200)
    second = b2[1].evaluate(np.full(200, 3.0), y)
    first = b2[0].evaluate(np.full(200, 3.0), y)
    assert second.min() < 0 < second.max() and first.min() > 0


def test_basis_rectangle_full_rank(rect):
    b = basis_for_SL(rect, 3)
    assert len(b) == 3 and b.rank == 3 and b.conditioning > 1e-6
    np.testing.assert_allclose(np.sort(np.linalg.svd(b.alpha_matrix, compute_uv=False))[::-1], b.singular_values)


def test_member_certificates(nested, rect):
    for emb, k in ((nested, 2), (rect, 3)):
        for c in member_certificates(basis_for_SL(emb, k)):
            assert c.error < 1e-3
            assert c.expected == pytest.approx(np.sqrt(emb.right.eigenvalues[c.mode - 1]))


def test_sample_points_interior(nested):
    x, y = sample_points(nested, 3.0, 10_000)
    assert 9_000 <= len(x) <= 10_000 and not np.any(x == 0)
    assert np.all((y > 0) & (y < 2))
    assert np.all((y[x < 0] > 0.5) & (y[x < 0] < 1.5))


@pytest.mark.parametrize("cL, cR", [(1, 0), (0, 1), (1, 1), (0.3, 0.7)])
def test_positive_combinations(v_left, v_right, cL, cR):
    res = positive_cone_membership(cL, cR, v_left, v_right)
    assert res.positive and res.minimum > 0 and len(res.values) >= 9_000


def test_negative_combination_not_positive(v_left, v_right):
    with pytest.raises(ValueError):
        positive_cone_membership(1, -1, v_left, v_right)
    res = positive_cone_membership(1, -1, v_left, v_right, enforce_cone=False)
    assert not res.positive and res.minimum < 0


def test_positivity_requires_sides(v_left, v_right):
    with pytest.raises(ValueError):
        positive_cone_membership(1, 1, v_right, v_left)


def test_report(nested):
    text = classification_report(SolutionSpaceSpec(TWO.eigenvalues[0], None), nested.left, nested.right,
                                 basis_for_SL(nested, 1))
    kv = dict(line.split(": ", 1) for line in text.splitlines())
    assert kv["dimension"] == "1" and kv["K_R"] == "32" and kv["basis_rank"] == "1"
    assert "member_1_frequency_limit" in kv
