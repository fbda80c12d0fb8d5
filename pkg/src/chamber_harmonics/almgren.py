"""Almgren frequency quotients: energy over slice mass, and their limits."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConvergenceError, DegenerateSlice, GeometryError, RangeError
from .harmonic_field import EXP_LIMIT, ModeSeries, Side, scaled_axial_energy, scaled_slice_mass

TINY_MASS = 1e-300


class Variant(Enum):
    FROM_ZERO = "CylindricalFromZero"
    FULL_LINE = "CylindricalFullLine"
    RADIAL = "RadialHalfspace"


@dataclass(frozen=True)
class FrequencyTrace:
    coords: np.ndarray
    values: np.ndarray
    variant: Variant
    extracted_limit: float | None = None


@dataclass(frozen=True)
class LimitCertificate:
    limit: float
    index: int | None  # 1-based eigenvalue index matched, None for an infinite limit
    root: float | None
    residual: float | None
    band: tuple
    window: tuple
    trace: FrequencyTrace


def _series_frequency(series: ModeSeries, x: float, variant: Variant) -> float:
    cp, cm = series.exp_coefficients()
    a = series.section.roots
    exps = np.concatenate([2 * a[cp != 0] * x, -2 * a[cm != 0] * x])
    if exps.size == 0:
        raise DegenerateSlice("zero series has no frequency")
    shift = float(np.max(exps))
    if shift > 2 * EXP_LIMIT:
        raise RangeError(f"exponent {shift / 2:.1f} exceeds {EXP_LIMIT}")
    mass = scaled_slice_mass(series, x, shift)
    if mass == 0.0 or np.log(mass) + shift < np.log(TINY_MASS):
        raise DegenerateSlice(f"slice mass below {TINY_MASS:g} at x = {x}")
    if variant is Variant.FULL_LINE:
        lo, hi = -np.inf, x
    elif x >= 0:
        lo, hi = 0.0, x
    else:
        lo, hi = x, 0.0
    energy, _ = scaled_axial_energy(series, lo, hi, shift=shift)
    return energy / mass


def cylindrical_frequency(source, x: float, variant: Variant = Variant.FROM_ZERO) -> float:
    """N(x) = D(x) / H(x) for a mode series (closed form) or an oracle grid field.

    FROM_ZERO integrates the energy between the junction slice and x, using the
    chamber that contains x; FULL_LINE integrates from -inf and needs a series
    with finite energy toward -inf.
    """
    if isinstance(source, ModeSeries):
        return _series_frequency(source, float(x), variant)
    return source.cylindrical_frequency(float(x), variant)


def frequency_trace(source, xs, variant: Variant = Variant.FROM_ZERO) -> FrequencyTrace:
    xs = np.asarray(xs, dtype=float)
    vals = np.array([cylindrical_frequency(source, x, variant) for x in xs])
    return FrequencyTrace(xs, vals, variant)


def frequency_limit(source, variant: Variant, window, tolerance: float, section=None,
                    samples: int = 201) -> LimitCertificate:
    """Limit of N toward the infinite end that ``window`` points at.

    The far half of the window (larger |x|) must vary by less than
    ``tolerance``; its mean is matched to the nearest sqrt(lambda_j).
    """
    lo, hi = float(window[0]), float(window[1])
    if section is None:
        section = source.section
    xs = np.linspace(lo, hi, samples)
    trace = frequency_trace(source, xs, variant)
    toward_minus = hi <= 0 and (not isinstance(source, ModeSeries) or source.side is Side.LEFT)
    half = samples // 2
    far = trace.values[: half + 1] if toward_minus else trace.values[half:]
    end_value = far[0] if toward_minus else far[-1]
    band = (float(far.min()), float(far.max()))
    roots = section.roots
    if end_value > roots[-1]:
        limit = float("inf")
        return LimitCertificate(limit, None, None, None, band, (lo, hi),
                                FrequencyTrace(xs, trace.values, variant, limit))
    if band[1] - band[0] >= tolerance:
        raise ConvergenceError(f"N varies over {band} in the far half of {window}", observed=band)
    limit = float(np.mean(far))
    j = int(np.argmin(np.abs(roots - limit)))
    return LimitCertificate(limit, j + 1, float(roots[j]), float(abs(limit - roots[j])), band, (lo, hi),
                            FrequencyTrace(xs, trace.values, variant, limit))


def _bilinear(xs, ys, grid, px, py):
    h = xs[1] - xs[0]
    i = np.clip(np.floor((px - xs[0]) / h).astype(int), 0, len(xs) - 2)
    j = np.clip(np.floor((py - ys[0]) / h).astype(int), 0, len(ys) - 2)
    s = (px - xs[i]) / h
    t = (py - ys[j]) / h
    return (grid[i, j] * (1 - s) * (1 - t) + grid[i + 1, j] * s * (1 - t)
            + grid[i, j + 1] * (1 - s) * t + grid[i + 1, j + 1] * s * t)


def _gradients(field):
    h = field.h
    v = field.values
    # the flat side x = 0 carries zero data: odd reflection gives centred x-differences there
    padded = np.vstack([-v[1:2], v])
    gx = np.empty_like(v)
    gx[:-1] = (padded[2:] - padded[:-2]) / (2 * h)
    gx[-1] = (v[-1] - v[-2]) / h
    gy = np.gradient(v, h, axis=1)
    return gx, gy


def radial_frequency(field, r: float) -> float:
    """Radial quotient r^{2-N} int_{C_r} |grad v|^2 / r^{1-N} int_{Gamma_r} v^2 in the plane (N = 2)."""
    h = field.h
    if not 0 < r <= field.radius - h:
        raise GeometryError(f"r = {r} outside (0, {field.radius - h}]")
    gx, gy = _gradients(field)
    n_r = max(16, int(np.ceil(2 * r / h)))
    n_t = max(64, int(np.ceil(2 * np.pi * r / h)))
    rho = (np.arange(n_r) + 0.5) * (r / n_r)
    theta = -0.5 * np.pi + (np.arange(n_t) + 0.5) * (np.pi / n_t)
    P, Th = np.meshgrid(rho, theta, indexing="ij")
    px, py = P * np.cos(Th), P * np.sin(Th)
    g2 = _bilinear(field.xs, field.ys, gx, px, py) ** 2 + _bilinear(field.xs, field.ys, gy, px, py) ** 2
    energy = np.sum(g2 * P) * (r / n_r) * (np.pi / n_t)
    arc = _bilinear(field.xs, field.ys, field.values, r * np.cos(theta), r * np.sin(theta))
    mass = np.sum(arc**2) * (np.pi / n_t)
    if mass < TINY_MASS:
        raise DegenerateSlice(f"arc mass below {TINY_MASS:g} at r = {r}")
    return float(energy / mass)


def radial_trace(field, rs) -> FrequencyTrace:
    rs = np.asarray(rs, dtype=float)
    return FrequencyTrace(rs, np.array([radial_frequency(field, r) for r in rs]), Variant.RADIAL)


def spherical_eigenvalue_of_degree(nbar: float, dim: int) -> float:
    """Spherical-Laplacian eigenvalue carried by a degree-nbar homogeneous harmonic in R^dim."""
    return nbar * (nbar - 1) + nbar * (dim - 1)


def trace_to_csv(trace: FrequencyTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["coordinate", "N"])
        for c, v in zip(trace.coords, trace.values):
            w.writerow([f"{c:.17g}", f"{v:.17g}"])
