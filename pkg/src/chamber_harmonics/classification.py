"""Dimension counts of admissible solution spaces and explicit bases.

A space is fixed by a frequency-squared threshold on each end, or by
requiring finite energy there. Its dimension is the sum of the Morse indices
of the thresholds; the finite-energy-on-the-left space is spanned by matched
solutions whose growing source mode runs over the right eigenmodes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .almgren import Variant, frequency_limit
from .cross_section import THRESHOLD_TOL, CrossSection, morse_index
from .errors import ChamberError, DependenceError, ThresholdError, TruncationError
from .harmonic_field import Side
from .junction import JunctionEmbedding, MatchedSolution, solve_matched

FINITE_ENERGY = None
RANK_CUTOFF = 1e-8
SAMPLE_POINTS = 10_000


@dataclass(frozen=True)
class SolutionSpaceSpec:
    """Thresholds d_R, d_L; ``FINITE_ENERGY`` (None) asks for finite energy on that end."""

    d_R: float | None
    d_L: float | None

    def check(self, left: CrossSection, right: CrossSection) -> None:
        for name, d, sec in (("d_R", self.d_R, right), ("d_L", self.d_L, left)):
            if d is FINITE_ENERGY:
                continue
            if d <= 0:
                raise ThresholdError(f"{name} = {d} must be positive")
            if d > sec.eigenvalues[-1]:
                raise TruncationError(f"{name} = {d} exceeds lambda_K = {sec.eigenvalues[-1]}")
            if np.min(np.abs(sec.eigenvalues - d)) > THRESHOLD_TOL * max(1.0, abs(d)):
                raise ThresholdError(f"{name} = {d} is not an eigenvalue of its section")


def space_dimension(spec: SolutionSpaceSpec, left: CrossSection, right: CrossSection) -> int:
    """m(d_R) + m(d_L), a finite-energy end contributing nothing."""
    spec.check(left, right)
    total = 0
    if spec.d_R is not FINITE_ENERGY:
        total += morse_index(right, spec.d_R)
    if spec.d_L is not FINITE_ENERGY:
        total += morse_index(left, spec.d_L)
    return total


@dataclass(frozen=True, eq=False)
class Basis:
    members: tuple
    alpha_matrix: np.ndarray  # columns are the alpha vectors of the members
    singular_values: np.ndarray

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i):
        return self.members[i]

    @property
    def rank(self) -> int:
        s = self.singular_values
        return int(np.count_nonzero(s > RANK_CUTOFF * s[0])) if s.size and s[0] > 0 else 0

    @property
    def conditioning(self) -> float:
        """Smallest over largest singular value of the alpha matrix."""
        s = self.singular_values
        return float(s[-1] / s[0]) if s.size and s[0] > 0 else 0.0


def basis_for_SL(embedding: JunctionEmbedding, k_max: int) -> Basis:
    """One matched solution per right mode k <= k_max, finite energy on the left chamber."""
    members = tuple(solve_matched(embedding, k, Side.RIGHT) for k in range(1, k_max + 1))
    A = np.column_stack([m.system.alpha for m in members])
    s = np.linalg.svd(A, compute_uv=False)
    basis = Basis(members, A, s)
    if basis.rank < k_max:
        raise DependenceError(f"alpha matrix has rank {basis.rank} < {k_max}; truncation too coarse")
    return basis


def sample_points(embedding: JunctionEmbedding, x_span=3.0, count=SAMPLE_POINTS):
    """Open-interior sample grid of about ``count`` points on both chambers.

    Returns (x, y) with y in right-section coordinates.
    """
    dim = embedding.right.dim
    n_y = int(round(np.sqrt(count))) if dim == 1 else int(round(count ** (1 / 3)))
    n_x = count // n_y**dim
    xs = np.linspace(-x_span, x_span, n_x)
    xs = xs[xs != 0] if n_x % 2 == 0 else xs
    out_x, out_y = [], []
    for x in xs:
        sec = embedding.right if x >= 0 else embedding.left
        axes = [(np.arange(n_y) + 0.5) * (e / n_y) for e in sec.extent]
        if dim == 1:
            pts = axes[0]
        else:
            g0, g1 = np.meshgrid(*axes, indexing="ij")
            pts = np.column_stack([g0.ravel(), g1.ravel()])
        if x < 0:
            pts = embedding.to_right(pts)
        out_x.append(np.full(len(pts), x))
        out_y.append(pts)
    return np.concatenate(out_x), np.concatenate(out_y)


@dataclass(frozen=True, eq=False)
class PositivityResult:
    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    minimum: float
    argmin: tuple
    positive: bool


def positive_cone_membership(cL: float, cR: float, vL: MatchedSolution, vR: MatchedSolution,
                             x_span: float = 3.0, count: int = SAMPLE_POINTS,
                             enforce_cone: bool = True) -> PositivityResult:
    """Sample cL vL + cR vR and report its minimum; positive iff the minimum is > 0.

    ``enforce_cone=False`` lets tests probe combinations outside the cone.
    """
    if enforce_cone and (cL < 0 or cR < 0 or cL + cR <= 0):
        raise ValueError("coefficients must be nonnegative with a positive sum")
    if vL.source_side is not Side.LEFT or vR.source_side is not Side.RIGHT:
        raise ValueError("vL needs its source on the left chamber and vR on the right")
    x, y = sample_points(vR.embedding, x_span, count)
    values = cL * vL.evaluate(x, y) + cR * vR.evaluate(x, y)
    i = int(np.argmin(values))
    yi = tuple(np.atleast_1d(y[i]).tolist())
    return PositivityResult(x, y, values, float(values[i]), (float(x[i]), *yi), bool(values[i] > 0))


@dataclass(frozen=True)
class FrequencyCertificate:
    mode: int
    limit: float
    expected: float
    error: float


def member_certificates(basis: Basis, window=(5.0, 10.0), tolerance=1e-3) -> list:
    """Right-end frequency limit of every member against the root of its source eigenvalue."""
    out = []
    for m in basis:
        cert = frequency_limit(m.right, Variant.FROM_ZERO, window, tolerance)
        expected = float(m.embedding.right.roots[m.source_mode - 1])
        out.append(FrequencyCertificate(m.source_mode, cert.limit, expected, abs(cert.limit - expected)))
    return out


def classification_report(spec: SolutionSpaceSpec, left: CrossSection, right: CrossSection,
                          basis: Basis | None = None) -> str:
    """Key-value text: thresholds, Morse indices, dimension, truncation and basis certificates."""

    def thr(d):
        return "finite_energy" if d is FINITE_ENERGY else f"{d:.17g}"

    m_R = 0 if spec.d_R is FINITE_ENERGY else morse_index(right, spec.d_R)
    m_L = 0 if spec.d_L is FINITE_ENERGY else morse_index(left, spec.d_L)
    lines = [
        f"d_R: {thr(spec.d_R)}",
        f"d_L: {thr(spec.d_L)}",
        f"morse_index_right: {m_R}",
        f"morse_index_left: {m_L}",
        f"dimension: {space_dimension(spec, left, right)}",
        f"K_R: {right.count}",
        f"K_L: {left.count}",
    ]
    if basis is not None:
        lines += [f"basis_size: {len(basis)}", f"basis_rank: {basis.rank}",
                  f"basis_conditioning: {basis.conditioning:.17g}"]
        try:
            certs = member_certificates(basis)
        except ChamberError as exc:
            lines.append(f"certificates: failed ({type(exc).__name__}: {exc})")
        else:
            for c in certs:
                lines.append(f"member_{c.mode}_frequency_limit: {c.limit:.17g} "
                             f"(expected {c.expected:.17g}, error {c.error:.3g})")
    return "\n".join(lines) + "\n"
