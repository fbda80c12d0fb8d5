"""Harmonic functions on a single chamber as separated mode series.

A series on a chamber with section U is

    v(x, y) = sum_k (c+_k e^{a_k x} + c-_k e^{-a_k x}) psi_k(y),    a_k = sqrt(lambda_k),

built from terms tagged GrowExp, DecayExp or Sinh. Each term is harmonic
exactly, so all axial integrals below are closed-form.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .cross_section import CrossSection
from .errors import DimensionError, GeometryError, InfiniteEnergy, RangeError

EXP_LIMIT = 700.0


class Profile(Enum):
    GROW = "GrowExp"
    DECAY = "DecayExp"
    SINH = "Sinh"


class Side(Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class Term:
    mode: int  # 1-based
    coeff: float
    profile: Profile


@dataclass(frozen=True, eq=False)
class ModeSeries:
    section: CrossSection
    terms: tuple
    side: Side

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            if not 1 <= t.mode <= self.section.count:
                raise DimensionError(f"term mode {t.mode} outside 1..{self.section.count}")

    def exp_coefficients(self):
        """Per-mode (c+, c-) arrays of length section.count."""
        cp = np.zeros(self.section.count)
        cm = np.zeros(self.section.count)
        for t in self.terms:
            if t.profile is Profile.GROW:
                cp[t.mode - 1] += t.coeff
            elif t.profile is Profile.DECAY:
                cm[t.mode - 1] += t.coeff
            else:
                cp[t.mode - 1] += t.coeff
                cm[t.mode - 1] -= t.coeff
        return cp, cm

    def finite_energy(self) -> bool:
        """True when the series has finite energy toward its chamber's infinite end."""
        cp, cm = self.exp_coefficients()
        return not np.any(cm if self.side is Side.LEFT else cp)

    def _compatible(self, other):
        if other.section is not self.section or other.side is not self.side:
            raise GeometryError("series arithmetic needs a shared section and side")

    def __add__(self, other):
        self._compatible(other)
        return ModeSeries(self.section, self.terms + other.terms, self.side)

    def __mul__(self, c):
        return ModeSeries(self.section, tuple(Term(t.mode, c * t.coeff, t.profile) for t in self.terms), self.side)

    __rmul__ = __mul__

    def __neg__(self):
        return -1.0 * self

    def __sub__(self, other):
        return self + (-other)


def zero_series(section, side=Side.RIGHT):
    return ModeSeries(section, (), side)


def canonical_semicylinder_solution(section: CrossSection, k: int = 1) -> ModeSeries:
    """(e^{a_k x} - e^{-a_k x}) psi_k(y) on the right semicylinder."""
    if not 1 <= k <= section.count:
        raise DimensionError(f"mode {k} outside 1..{section.count}")
    return ModeSeries(section, (Term(k, 1.0, Profile.SINH),), Side.RIGHT)


def _check_side(series, x):
    if series.side is Side.RIGHT and np.any(x < 0):
        raise GeometryError("right-side series evaluated at x < 0")
    if series.side is Side.LEFT and np.any(x > 0):
        raise GeometryError("left-side series evaluated at x > 0")


def _axial_factors(series, x):
    """e^{a x} and e^{-a x} weighted by c+ / c-, shape (K, P); guards overflow."""
    cp, cm = series.exp_coefficients()
    a = series.section.roots
    ax = np.outer(a, x)
    live_p = cp != 0
    live_m = cm != 0
    top = max(np.max(ax[live_p], initial=-np.inf), np.max(-ax[live_m], initial=-np.inf))
    if top > EXP_LIMIT:
        raise RangeError(f"exponent {top:.1f} exceeds {EXP_LIMIT}")
    grow = np.where(live_p[:, None], cp[:, None] * np.exp(np.where(live_p[:, None], ax, 0.0)), 0.0)
    decay = np.where(live_m[:, None], cm[:, None] * np.exp(np.where(live_m[:, None], -ax, 0.0)), 0.0)
    return grow, decay


def evaluate(series: ModeSeries, x, y):
    """Pointwise value; ``x`` broadcasts against the points in ``y``."""
    pts = series.section.points(y)
    x_arr = np.broadcast_to(np.asarray(x, dtype=float), (len(pts),))
    _check_side(series, x_arr)
    grow, decay = _axial_factors(series, x_arr)
    psi = series.section.eigenfunctions(pts)
    out = np.sum((grow + decay) * psi, axis=0)
    if np.ndim(x) == 0 and np.ndim(y) == (0 if series.section.dim == 1 else 1):
        return float(out[0])
    return out


def boundary_trace_and_flux(series: ModeSeries):
    """Per-mode trace and x-derivative coefficients at x = 0."""
    cp, cm = series.exp_coefficients()
    return cp + cm, series.section.roots * (cp - cm)


def axial_energy(series: ModeSeries, x0: float, x1: float) -> float:
    """Dirichlet energy of the series over x0 < x < x1 (either end may be infinite).

    Per mode the cross terms cancel and |grad|^2 integrates to
    a c+^2 (e^{2a x1} - e^{2a x0}) + a c-^2 (e^{-2a x0} - e^{-2a x1}).
    """
    value, shift = scaled_axial_energy(series, x0, x1)
    if shift > EXP_LIMIT:
        raise RangeError(f"energy scale exponent {shift:.1f} exceeds {EXP_LIMIT}")
    return float(value * np.exp(shift))


def scaled_axial_energy(series, x0, x1, shift=None):
    """Energy over (x0, x1) as (value * e^{-shift}, shift) to keep large x finite."""
    if x1 < x0:
        raise GeometryError("x1 must not precede x0")
    cp, cm = series.exp_coefficients()
    a = series.section.roots
    lp, lm = cp != 0, cm != 0
    if np.isneginf(x0) and lm.any():
        raise InfiniteEnergy("e^{-a x} terms have infinite energy toward x = -inf")
    if np.isposinf(x1) and lp.any():
        raise InfiniteEnergy("e^{+a x} terms have infinite energy toward x = +inf")
    if shift is None:
        shift = max(np.max(2 * a[lp] * x1, initial=0.0) if np.isfinite(x1) else 0.0,
                    np.max(-2 * a[lm] * x0, initial=0.0) if np.isfinite(x0) else 0.0)
    total = 0.0
    if lp.any():
        ap = a[lp]
        hi = np.exp(2 * ap * x1 - shift) if np.isfinite(x1) else 0.0
        lo = np.exp(2 * ap * x0 - shift) if np.isfinite(x0) else 0.0
        total += np.sum(ap * cp[lp] ** 2 * (hi - lo))
    if lm.any():
        am = a[lm]
        hi = np.exp(-2 * am * x0 - shift) if np.isfinite(x0) else 0.0
        lo = np.exp(-2 * am * x1 - shift) if np.isfinite(x1) else 0.0
        total += np.sum(am * cm[lm] ** 2 * (hi - lo))
    return float(total), float(shift)


def scaled_slice_mass(series, x, shift):
    """Integral of v(x, .)^2 over the section times e^{-shift}."""
    cp, cm = series.exp_coefficients()
    a = series.section.roots
    half = 0.5 * shift
    c = np.where(cp != 0, cp * np.exp(np.where(cp != 0, a * x - half, 0.0)), 0.0)
    c += np.where(cm != 0, cm * np.exp(np.where(cm != 0, -a * x - half, 0.0)), 0.0)
    return float(np.sum(c**2))


def residual_harmonicity(series: ModeSeries, x_range, y_box, h: float) -> float:
    """Max |discrete Laplacian| of sampled values over interior nodes of a box.

    ``y_box`` is (lo, hi) for 1-D sections or ((lo0, hi0), (lo1, hi1)) for 2-D.
    """
    xs = np.arange(x_range[0], x_range[1] + 0.5 * h, h)
    dim = series.section.dim
    boxes = [y_box] if dim == 1 else list(y_box)
    axes = [np.arange(lo, hi + 0.5 * h, h) for lo, hi in boxes]
    mesh = np.meshgrid(xs, *axes, indexing="ij")
    ypts = mesh[1].ravel() if dim == 1 else np.column_stack([m.ravel() for m in mesh[1:]])
    vals = evaluate(series, mesh[0].ravel(), ypts).reshape(mesh[0].shape)
    inner = tuple(slice(1, -1) for _ in vals.shape)
    lap = -2 * len(vals.shape) * vals[inner]
    for ax in range(vals.ndim):
        lap = lap + np.roll(vals, 1, axis=ax)[inner] + np.roll(vals, -1, axis=ax)[inner]
    return float(np.max(np.abs(lap / h**2), initial=0.0))


def export_csv(series: ModeSeries, xs, ys, path) -> None:
    """Sample the series on the tensor grid xs x ys and write x, y..., value rows."""
    ys = series.section.points(ys)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        ycols = ["y"] if series.section.dim == 1 else ["y0", "y1"]
        w.writerow(["x", *ycols, "value"])
        for x in xs:
            vals = evaluate(series, np.full(len(ys), x), ys)
            for yp, v in zip(ys, vals):
                w.writerow([f"{x:.17g}", *(f"{c:.17g}" for c in np.atleast_1d(yp)), f"{v:.17g}"])
