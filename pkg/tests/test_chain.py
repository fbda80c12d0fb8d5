import numpy as np
import pytest

from chamber_harmonics.almgren import Variant, frequency_limit
from chamber_harmonics.chain import chain_report, chain_solve, kappa, log_linear_fit
from chamber_harmonics.cross_section import Interval, Rectangle
from chamber_harmonics.errors import GeometryError
from chamber_harmonics.fd_oracle import ChamberGeometry, canonical_load, slice_coefficients, solve_truncated
from chamber_harmonics.junction import make_embedding, solve_matched

ONE_TWO_FOUR = (Interval(1.0), Interval(2.0), Interval(4.0))


@pytest.fixture(scope="module")
def chain3():
    return chain_solve(ONE_TWO_FOUR)


@pytest.fixture(scope="module")
def chain3_finite():
    return chain_solve(ONE_TWO_FOUR, middle_lengths=[4.0])


@pytest.fixture(scope="module")
def oracle_regression(chain3_finite):
    geo = ChamberGeometry.from_widths([1.0, 2.0, 4.0], middle_lengths=(4.0,), X=8.0)
    right = chain3_finite.embeddings[-1].right
    field = solve_truncated(geo, canonical_load(right, 1, geo.chambers[-1].offset), 1 / 32)
    xs = -6.0 + 0.5 * np.arange(10)
    coeffs = [slice_coefficients(field, x, chain3_finite.embeddings[0].left, 1)[0] for x in xs]
    return field, log_linear_fit(xs, coeffs)


def test_two_chambers_match_single_junction():
    ch = chain_solve(ONE_TWO_FOUR[:2])
    m = solve_matched(make_embedding(Interval(1.0), Interval(2.0)))
    np.testing.assert_array_equal(ch.systems[0].alpha, m.system.alpha)
    assert kappa(ch) == m.system.alpha[0]


def test_kappa_is_product(chain3):
    assert chain3.kappa == pytest.approx(np.prod(chain3.alpha_first), rel=1e-12)
    assert chain3.effective_kappa == chain3.kappa


def test_identical_pairwise_geometries():
    # every junction doubles the width, so all junctions are similar and alpha_1 is scale invariant
    kinds = [Interval(2.0**j) for j in range(4)]
    ch = chain_solve(kinds)
    a = solve_matched(make_embedding(Interval(1.0), Interval(2.0))).system.alpha[0]
    assert ch.kappa == pytest.approx(a**3, rel=1e-12)


def test_multiplicativity(chain3, chain3_finite):
    a12 = solve_matched(make_embedding(Interval(1.0), Interval(2.0))).system.alpha[0]
    a24 = solve_matched(make_embedding(Interval(2.0), Interval(4.0))).system.alpha[0]
    assert chain3.kappa == pytest.approx(a12 * a24, rel=1e-12)
    # finite middle chamber: higher-mode leakage changes kappa only slightly
    assert chain3_finite.kappa == pytest.approx(a12 * a24, rel=1e-3)
    assert chain3_finite.effective_kappa == pytest.approx(chain3_finite.kappa * np.exp(-np.pi / 2 * 4.0), rel=1e-12)


def test_non_nested_junction_named():
    with pytest.raises(GeometryError, match="junction 2"):
        chain_solve([Interval(1.0), Interval(2.0), Interval(1.5)])
    with pytest.raises(GeometryError):
        chain_solve([Interval(1.0)])
    with pytest.raises(GeometryError):
        chain_solve(ONE_TWO_FOUR, middle_lengths=[-1.0])


def test_kappa_needs_first_mode():
    with pytest.raises(ValueError):
        kappa(chain_solve(ONE_TWO_FOUR[:2], source_mode=2))


def test_rectangle_chain():
    ch = chain_solve([Rectangle(1.0, 1.0), Rectangle(2.0, 2.0), Rectangle(3.0, 3.0)], K=12)
    assert 0 < ch.kappa < 1 and all(s.residual < 1e-10 for s in ch.systems)


def test_leftmost_series_limit(chain3):
    cert = frequency_limit(chain3.leftmost_series(), Variant.FULL_LINE, (-10, -5), 1e-3)
    assert cert.limit == pytest.approx(np.pi, abs=1e-3)


def test_log_linear_fit_exact():
    xs = np.linspace(-3, 0, 7)
    slope, intercept = log_linear_fit(xs, -0.2 * np.exp(1.7 * xs))
    assert slope == pytest.approx(1.7, abs=1e-12) and intercept == pytest.approx(np.log(0.2), abs=1e-12)
    with pytest.raises(ValueError):
        log_linear_fit([0, 1], [1.0, 0.0])


def test_oracle_positive_and_regression(chain3_finite, oracle_regression):
    field, (slope, intercept) = oracle_regression
    assert np.all(field.values[field.mask] > 0)
    assert abs(slope - np.pi) / np.pi < 1e-3
    assert abs(np.exp(intercept) - chain3_finite.effective_kappa) / chain3_finite.effective_kappa < 0.03


def test_chain_report(chain3_finite, oracle_regression):
    text = chain_report(chain3_finite, oracle_regression[1])
    kv = dict(line.split(": ", 1) for line in text.splitlines())
    assert kv["chambers"] == "3" and float(kv["kappa"]) == chain3_finite.kappa
    assert float(kv["expected_slope"]) == pytest.approx(np.pi)
    for key in ("junction_1_alpha1", "junction_2_contraction_norm", "effective_kappa", "regression_slope"):
        assert key in kv
