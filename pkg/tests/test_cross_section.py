import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from chamber_harmonics.cross_section import (Grid1D, Grid2D, Interval, Rectangle, all_eigenvalues_below,
                                             compute_spectrum, discrete_operator,
                                             eigenvalue_domain_monotonicity_check, morse_index)
from chamber_harmonics.errors import AmbiguousThreshold, DimensionError, GeometryError, TruncationError


def test_interval_pi_modes():
    sec = compute_spectrum(Interval(np.pi), 3)
    np.testing.assert_allclose(sec.eigenvalues, [1, 4, 9], atol=1e-12)
    y = np.linspace(0, np.pi, 11)
    for k in (1, 2, 3):
        np.testing.assert_allclose(sec.eigenfunction(k, y), np.sqrt(2 / np.pi) * np.sin(k * y), atol=1e-14)


def test_rectangle_degenerate_pair():
    sec = compute_spectrum(Rectangle(np.pi, np.pi), 4)
    np.testing.assert_allclose(sec.eigenvalues, [2, 5, 5, 8], atol=1e-12)


def test_grid1d_first_eigenvalue():
    sec = compute_spectrum(Grid1D(1.0, 256), 1)
    assert abs(sec.eigenvalues[0] - np.pi**2) / np.pi**2 < 5e-3


def test_grid1d_second_order():
    errs = [abs(compute_spectrum(Grid1D(2.0, n), 1).eigenvalues[0] - np.pi**2 / 4) for n in (32, 64, 128)]
    assert errs[0] / errs[1] >= 3.8 and errs[1] / errs[2] >= 3.8


@pytest.mark.parametrize("kind", [Interval(1.3), Rectangle(1.0, 2.0)])
def test_analytic_orthonormality(kind):
    sec = compute_spectrum(kind, 6)
    if sec.dim == 1:
        gram = np.array([[quad(lambda y: sec.eigenfunction(j, y)[0] * sec.eigenfunction(k, y)[0], 0, 1.3,
                               limit=200)[0] for k in range(1, 7)] for j in range(1, 7)])
    else:
        # tensor Gauss rule exact for products of these sines
        t, w = np.polynomial.legendre.leggauss(40)
        x, wx = 0.5 * (t + 1), 0.5 * w
        y, wy = (t + 1), w
        X, Y = np.meshgrid(x, y, indexing="ij")
        psi = sec.eigenfunctions(np.column_stack([X.ravel(), Y.ravel()]))
        gram = (psi * np.outer(wx, wy).ravel()) @ psi.T
    np.testing.assert_allclose(gram, np.eye(6), atol=1e-8)


@pytest.mark.parametrize("kind", [Grid1D(1.0, 64), Grid2D(1.0, 1.5, 20, 30)])
def test_grid_orthonormality_and_rayleigh_residual(kind):
    sec = compute_spectrum(kind, 8)
    V = sec.interior_values()
    w = sec.node_weight()
    np.testing.assert_allclose(w * V @ V.T, np.eye(8), atol=1e-6)
    A = discrete_operator(kind)
    for k in range(8):
        r = A @ V[k] - sec.eigenvalues[k] * V[k]
        assert np.sqrt(w * r @ r) / sec.eigenvalues[k] < 1e-8


def test_sign_convention():
    for kind in (Interval(2.0), Rectangle(1.0, 1.0), Grid1D(1.0, 40), Grid2D(1.0, 1.0, 12, 12)):
        sec = compute_spectrum(kind, 5)
        if sec.analytic:
            pts = np.linspace(1e-3, kind.extent[0] - 1e-3, 97) if sec.dim == 1 else \
                np.column_stack([np.repeat(np.linspace(0.01, 0.99, 21), 21), np.tile(np.linspace(0.01, 0.99, 21), 21)])
            vals = sec.eigenfunctions(pts)
        else:
            vals = sec.nodal.reshape(sec.count, -1)
        for v in vals:
            first = v[np.abs(v) > 1e-12][0]
            assert first > 0


def test_determinism():
    a = compute_spectrum(Grid2D(1.0, 1.0, 16, 16), 10)
    b = compute_spectrum(Grid2D(1.0, 1.0, 16, 16), 10)
    assert np.array_equal(a.eigenvalues, b.eigenvalues) and np.array_equal(a.nodal, b.nodal)


def test_bilinear_interpolation_reproduces_nodes():
    sec = compute_spectrum(Grid2D(1.0, 1.0, 10, 10), 3)
    pts = np.array([[0.3, 0.4], [0.5, 0.5]])
    np.testing.assert_allclose(sec.eigenfunctions(pts), sec.nodal[:, [3, 5], [4, 5]], atol=1e-14)


def test_spectrum_errors():
    with pytest.raises(DimensionError):
        compute_spectrum(Grid1D(1.0, 8), 7)
    with pytest.raises(DimensionError):
        compute_spectrum(Interval(1.0), 0)
    with pytest.raises(GeometryError):
        Interval(-1.0)
    with pytest.raises(GeometryError):
        Rectangle(1.0, 0.0)
    with pytest.raises(GeometryError):
        compute_spectrum(Interval(1.0), 2).eigenfunctions([1.5])


def test_morse_index_examples():
    assert morse_index(compute_spectrum(Interval(np.pi), 8), 4) == 2
    assert morse_index(compute_spectrum(Rectangle(np.pi, np.pi), 8), 5) == 3
    assert morse_index(compute_spectrum(Interval(np.pi), 8), 0.5) == 0


def test_morse_index_errors():
    with pytest.raises(TruncationError):
        morse_index(compute_spectrum(Interval(np.pi), 3), 9.5)
    grid = compute_spectrum(Grid1D(1.0, 32), 4)
    with pytest.raises(AmbiguousThreshold):
        morse_index(grid, grid.eigenvalues[0] * (1 + 1e-11))
    assert morse_index(grid, float(grid.eigenvalues[1])) == 2


def test_domain_monotonicity_examples():
    one, two = compute_spectrum(Interval(1.0), 10), compute_spectrum(Interval(2.0), 10)
    assert eigenvalue_domain_monotonicity_check(one, two)
    assert eigenvalue_domain_monotonicity_check(one, one)
    assert not eigenvalue_domain_monotonicity_check(two, one)


def test_all_eigenvalues_below_counts_rectangle():
    assert all_eigenvalues_below(Rectangle(np.pi, np.pi), 5.0) == 3
    assert all_eigenvalues_below(Interval(1.0), np.pi**2 * 4) == 2


@settings(max_examples=30, deadline=None)
@given(L=st.floats(0.2, 5.0), K=st.integers(1, 12))
def test_interval_eigenvalues_sorted_positive(L, K):
    lam = compute_spectrum(Interval(L), K).eigenvalues
    assert np.all(lam > 0) and np.all(np.diff(lam) > 0)
    np.testing.assert_allclose(lam, (np.pi * np.arange(1, K + 1) / L) ** 2, rtol=1e-14)


@settings(max_examples=20, deadline=None)
@given(w=st.floats(0.3, 3.0), h=st.floats(0.3, 3.0), K=st.integers(1, 20))
def test_rectangle_eigenvalues_sorted(w, h, K):
    lam = compute_spectrum(Rectangle(w, h), K).eigenvalues
    assert np.all(np.diff(lam) >= 0)
    jj, kk = np.meshgrid(np.arange(1, 25), np.arange(1, 25))
    ref = np.sort(((np.pi * jj / w) ** 2 + (np.pi * kk / h) ** 2).ravel())[:K]
    np.testing.assert_allclose(lam, ref, rtol=1e-14)
