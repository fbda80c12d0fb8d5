"""Junction transfer between a narrow left chamber and a wide right chamber.

With left trace coefficients alpha on the opening U^L and right trace
beta = U^T alpha, continuity of v = u + Phi across x = 0 turns the weak
jump condition into

    (Lambda^L + U Lambda^R U^T) alpha = U gamma,  i.e.  (I + T) alpha = alpha0,

where U is the overlap of left modes (extended by zero) with right modes,
Lambda the diagonal of sqrt(lambda), T = (Lambda^L)^{-1} U Lambda^R U^T and
alpha0 = (Lambda^L)^{-1} U gamma. The right flux of the decaying response is
-sqrt(lambda^R) beta, hence the plus sign. In the weighted inner product
<a, b> = sum sqrt(lambda_j^L) a_j b_j the operator T is self-adjoint with
spectrum in [0, ||T||], ||T|| <= 1.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .cross_section import DEFAULT_MODES, CrossSection, Interval, Rectangle, all_eigenvalues_below, compute_spectrum
from .errors import ContractionFailure, ConvergenceError, DimensionError, GeometryError
from .harmonic_field import ModeSeries, Profile, Side, Term, evaluate

DEGENERACY_TOL = 1e-9
FIXED_POINT_TOL = 1e-14
RESIDUAL_TOL = 1e-10
POWER_STEPS = 50
QUAD_PANELS = 512


@dataclass(frozen=True, eq=False)
class JunctionEmbedding:
    """Placement of U^L inside U^R; ``offset`` is the translation per axis."""

    left: CrossSection
    right: CrossSection
    offset: tuple

    def __post_init__(self):
        if self.left.dim != self.right.dim:
            raise GeometryError("left and right sections differ in dimension")
        off = tuple(float(o) for o in np.atleast_1d(self.offset))
        if len(off) != self.left.dim:
            raise GeometryError(f"offset needs {self.left.dim} component(s)")
        object.__setattr__(self, "offset", off)
        for o, lw, rw in zip(off, self.left.extent, self.right.extent):
            if o < -1e-12 or o + lw > rw + 1e-12:
                raise GeometryError(f"left section [{o}, {o + lw}] does not fit inside [0, {rw}]")

    @classmethod
    def centered(cls, left, right):
        return cls(left, right, tuple((r - l) / 2 for l, r in zip(left.extent, right.extent)))

    def to_right(self, y_left):
        return self.left.points(y_left) + (self.offset[0] if self.left.dim == 1 else np.asarray(self.offset))

    def to_left(self, y_right):
        return self.right.points(y_right) - (self.offset[0] if self.left.dim == 1 else np.asarray(self.offset))

    def in_opening(self, y_right, tol=1e-12):
        return self.left.contains(self.to_left(y_right), tol)


def make_embedding(left_kind, right_kind, K_R=DEFAULT_MODES, K_L=None, offset=None) -> JunctionEmbedding:
    """Spectra for both sides plus their placement (centered unless ``offset`` is given).

    By default K_L is frequency matched: every left eigenvalue up to
    lambda_{K_R}^R is retained, so both bases resolve the same scale.
    """
    right = compute_spectrum(right_kind, K_R)
    if K_L is None:
        K_L = max(1, all_eigenvalues_below(left_kind, right.eigenvalues[-1]))
        if not left_kind.analytic:
            K_L = min(K_L, left_kind.interior_count - 1)
    left = compute_spectrum(left_kind, K_L)
    if offset is None:
        return JunctionEmbedding.centered(left, right)
    return JunctionEmbedding(left, right, offset)


def _interval_overlap(p_idx, q_idx, a, b, o):
    """int_o^{o+a} sqrt(2/a) sin(p pi (y-o)/a) sqrt(2/b) sin(q pi y/b) dy for index arrays."""
    p = np.pi * np.asarray(p_idx, dtype=float)[:, None] / a
    q = np.pi * np.asarray(q_idx, dtype=float)[None, :] / b
    c = q * o

    def span(w, phase):
        # int_0^a cos(w t + phase) dt, stable as w -> 0
        return a * np.cos(phase + 0.5 * w * a) * np.sinc(w * a / (2 * np.pi))

    return (span(p - q, -c) - span(p + q, c)) / np.sqrt(a * b)


def _gauss_panels(lo, hi, panels, order=4):
    t, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    pts = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    return pts, wts


def _quadrature_overlap(emb, panels):
    left, right = emb.left, emb.right
    if left.dim == 1:
        y, w = _gauss_panels(0.0, left.extent[0], panels)
        return (left.eigenfunctions(y) * w) @ right.eigenfunctions(emb.to_right(y)).T
    yx, wx = _gauss_panels(0.0, left.extent[0], panels, order=2)
    yy, wy = _gauss_panels(0.0, left.extent[1], panels, order=2)
    out = np.zeros((left.count, right.count))
    strip = 64
    for s in range(0, len(yx), strip):
        X, Y = np.meshgrid(yx[s:s + strip], yy, indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()])
        wts = np.outer(wx[s:s + strip], wy).ravel()
        out += (left.eigenfunctions(pts) * wts) @ right.eigenfunctions(emb.to_right(pts)).T
    return out


def overlap_matrix(embedding: JunctionEmbedding, K_L=None, K_R=None, return_error=False):
    """Matrix of <psi_j^L extended by zero, psi_k^R>, rows indexed by left modes.

    Closed form for interval and rectangle pairs; otherwise composite
    Gauss-Legendre quadrature on QUAD_PANELS panels per axis, with the
    difference to the half-resolution result reported as error estimate.
    """
    left, right = embedding.left, embedding.right
    K_L = left.count if K_L is None else K_L
    K_R = right.count if K_R is None else K_R
    if K_L > left.count or K_R > right.count:
        raise DimensionError("requested more modes than the sections carry")
    if isinstance(left.kind, Interval) and isinstance(right.kind, Interval):
        U = _interval_overlap(left.quantum[:K_L, 0], right.quantum[:K_R, 0],
                              left.extent[0], right.extent[0], embedding.offset[0])
        err = 0.0
    elif isinstance(left.kind, Rectangle) and isinstance(right.kind, Rectangle):
        ux = _interval_overlap(left.quantum[:K_L, 0], right.quantum[:K_R, 0],
                               left.extent[0], right.extent[0], embedding.offset[0])
        uy = _interval_overlap(left.quantum[:K_L, 1], right.quantum[:K_R, 1],
                               left.extent[1], right.extent[1], embedding.offset[1])
        U, err = ux * uy, 0.0
    else:
        fine = _quadrature_overlap(embedding, QUAD_PANELS)
        coarse = _quadrature_overlap(embedding, QUAD_PANELS // 2)
        U = fine[:K_L, :K_R]
        err = float(np.max(np.abs(fine - coarse)))
    return (U, err) if return_error else U


def canonical_flux(section: CrossSection, k: int = 1) -> np.ndarray:
    """Coefficients of d/dx (e^{a x} - e^{-a x}) psi_k at x = 0: 2 a_k e_k."""
    if not 1 <= k <= section.count:
        raise DimensionError(f"mode {k} outside 1..{section.count}")
    g = np.zeros(section.count)
    g[k - 1] = 2.0 * section.roots[k - 1]
    return g


@dataclass(frozen=True, eq=False)
class TransferSystem:
    embedding: JunctionEmbedding
    overlap: np.ndarray
    T: np.ndarray
    contraction_norm: float
    spectrum_bounds: tuple  # (mu_min, mu_max) of T in the weighted inner product
    power_estimate: float
    power_change: float
    source_side: Side
    gamma: np.ndarray
    alpha0: np.ndarray
    alpha: np.ndarray | None = None
    beta: np.ndarray | None = None
    residual: float | None = None
    iterations: int | None = None

    @property
    def solved(self) -> bool:
        return self.alpha is not None

    @property
    def iteration_factor(self) -> float:
        """Certified contraction factor of the relaxed fixed-point map used by solve_transfer."""
        lo, hi = self.spectrum_bounds
        return (hi - lo) / (2.0 + lo + hi)

    def weighted_norm(self, a) -> float:
        return float(np.sqrt(np.sum(self.embedding.left.roots * np.asarray(a) ** 2)))

    def residual_vector(self, alpha) -> np.ndarray:
        return alpha + self.T @ alpha - self.alpha0


def _power_norm(T, w, steps=POWER_STEPS):
    """Power iteration on T*T (weighted adjoint); returns (norm estimate, last relative change)."""
    adj = (T.T * w[None, :]) / w[:, None]
    v = np.ones(T.shape[0])
    est, change = 0.0, np.inf
    for _ in range(steps):
        z = adj @ (T @ v)
        nrm = np.sqrt(np.sum(w * z * z))
        if nrm == 0:
            return 0.0, 0.0
        new = np.sqrt(nrm / np.sqrt(np.sum(w * v * v)))
        change = abs(new - est) / new
        est, v = new, z / nrm
    return float(est), float(change)


def assemble_transfer(embedding: JunctionEmbedding, gamma, side: Side = Side.RIGHT) -> TransferSystem:
    """Build T, alpha0 and the contraction certificate for a load ``gamma``.

    ``gamma`` lives on the right basis when the growing mode sits in the right
    chamber (side RIGHT) and on the left basis for the mirrored problem.
    """
    gamma = np.asarray(gamma, dtype=float)
    need = embedding.right.count if side is Side.RIGHT else embedding.left.count
    if gamma.shape != (need,):
        raise DimensionError(f"gamma must have length {need}")
    U = overlap_matrix(embedding)
    aL, aR = embedding.left.roots, embedding.right.roots
    G = (U * aR) @ U.T
    T = G / aL[:, None]
    sym = G / np.sqrt(np.outer(aL, aL))
    mu = np.linalg.eigvalsh(0.5 * (sym + sym.T))
    slack = 8 * len(mu) * np.finfo(float).eps * max(1.0, float(np.max(np.abs(mu))))
    est, change = _power_norm(T, aL)
    load = U @ gamma if side is Side.RIGHT else gamma
    return TransferSystem(
        embedding=embedding, overlap=U, T=T,
        contraction_norm=float(max(mu[-1] + slack, est)),
        spectrum_bounds=(float(max(mu[0], 0.0)), float(mu[-1])),
        power_estimate=est, power_change=change, source_side=side,
        gamma=gamma, alpha0=load / aL,
    )


def solve_transfer(system: TransferSystem, tol: float = FIXED_POINT_TOL, max_iter: int = 10**6) -> TransferSystem:
    """Solve (I + T) alpha = alpha0 by fixed-point iteration.

    The iterated map alpha <- alpha - w((I + T) alpha - alpha0) with
    w = 2 / (2 + mu_min + mu_max) contracts by (mu_max - mu_min) / (2 + mu_min + mu_max) <= 1/3.
    A junction whose T is the identity (no narrowing: equal sections) is
    rejected, as is a T exceeding the identity (inconsistent embedding).
    """
    mu_lo, mu_hi = system.spectrum_bounds
    if mu_lo > 1.0 - DEGENERACY_TOL:
        raise ContractionFailure(
            f"T is the identity to {DEGENERACY_TOL:g} (||T|| = {system.contraction_norm:.15g}): "
            "the junction does not narrow", norm=system.contraction_norm)
    if system.contraction_norm > 1.0 + DEGENERACY_TOL:
        raise ContractionFailure(f"||T|| = {system.contraction_norm:.15g} exceeds 1: overlap is not a contraction",
                                 norm=system.contraction_norm)
    omega = 2.0 / (2.0 + mu_lo + mu_hi)
    a0 = system.alpha0
    scale = max(1.0, system.weighted_norm(a0))
    alpha = np.zeros_like(a0)
    it = 0
    while True:
        it += 1
        step = -omega * system.residual_vector(alpha)
        alpha = alpha + step
        if system.weighted_norm(step) < tol * scale:
            break
        if it >= max_iter:
            raise ConvergenceError(f"fixed point not reached in {max_iter} steps",
                                   observed=system.weighted_norm(step))
    n0 = system.weighted_norm(a0)
    residual = system.weighted_norm(system.residual_vector(alpha)) / n0 if n0 > 0 else 0.0
    if residual >= RESIDUAL_TOL:
        raise ConvergenceError(f"relative residual {residual:.3g} >= {RESIDUAL_TOL:g}", observed=residual)
    return replace(system, alpha=alpha, beta=system.overlap.T @ alpha, residual=residual, iterations=it)


def solve_direct(system: TransferSystem) -> np.ndarray:
    """Dense solve of (I + T) alpha = alpha0, the independent route for checking the iteration."""
    return np.linalg.solve(np.eye(len(system.alpha0)) + system.T, system.alpha0)


def jump_defect(system: TransferSystem) -> np.ndarray:
    """sqrt(lambda^L) alpha - U(right flux + load): zero when the weak jump holds mode by mode."""
    aL, aR = system.embedding.left.roots, system.embedding.right.roots
    right_flux = -aR * system.beta
    if system.source_side is Side.RIGHT:
        return aL * system.alpha - system.overlap @ (right_flux + system.gamma)
    return aL * system.alpha - system.overlap @ right_flux - system.gamma


def compliance(system: TransferSystem) -> float:
    """<gamma, trace of u on the source side> = max of 2<f, w> - ||grad w||^2."""
    if not system.solved:
        raise ConvergenceError("system not solved")
    trace = system.beta if system.source_side is Side.RIGHT else system.alpha
    return float(system.gamma @ trace)


@dataclass(frozen=True, eq=False)
class MatchedSolution:
    """v = u + Phi on both chambers; unpacks as (left, right)."""

    left: ModeSeries
    right: ModeSeries
    system: TransferSystem
    source_mode: int
    source_side: Side

    def __iter__(self):
        return iter((self.left, self.right))

    @property
    def embedding(self):
        return self.system.embedding

    def evaluate(self, x, y):
        """Value at (x, y) with y in right-section coordinates for either chamber."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        pts = self.embedding.right.points(y)
        x = np.broadcast_to(x, (len(pts),))
        out = np.zeros(len(pts))
        neg = x < 0
        if neg.any():
            yl = self.embedding.to_left(pts[neg])
            if not np.all(self.embedding.left.contains(yl)):
                raise GeometryError("point with x < 0 lies outside the left chamber")
            out[neg] = evaluate(self.left, x[neg], yl)
        if (~neg).any():
            out[~neg] = evaluate(self.right, x[~neg], pts[~neg])
        return out


def matched_solution(system: TransferSystem, k: int = 1) -> MatchedSolution:
    """Series pair of the finite-energy-on-one-side solution with growing source mode ``k``."""
    if not system.solved:
        raise ConvergenceError("system not solved")
    emb = system.embedding
    src = emb.right if system.source_side is Side.RIGHT else emb.left
    if not np.allclose(system.gamma, canonical_flux(src, k), rtol=1e-12, atol=0):
        raise ValueError(f"system load is not the canonical flux of mode {k}")
    left_terms = [Term(j + 1, float(c), Profile.GROW) for j, c in enumerate(system.alpha)]
    right_terms = [Term(j + 1, float(c), Profile.DECAY) for j, c in enumerate(system.beta)]
    if system.source_side is Side.RIGHT:
        right_terms.append(Term(k, 1.0, Profile.SINH))
    else:
        # e^{-a x} - e^{a x} is the positive canonical solution on x < 0
        left_terms.append(Term(k, -1.0, Profile.SINH))
    return MatchedSolution(ModeSeries(emb.left, left_terms, Side.LEFT),
                           ModeSeries(emb.right, right_terms, Side.RIGHT),
                           system, k, system.source_side)


def solve_matched(embedding: JunctionEmbedding, k: int = 1, side: Side = Side.RIGHT) -> MatchedSolution:
    src = embedding.right if side is Side.RIGHT else embedding.left
    system = solve_transfer(assemble_transfer(embedding, canonical_flux(src, k), side))
    return matched_solution(system, k)


def transfer_report(system: TransferSystem, head: int = 8) -> str:
    """Key-value text: spectra heads, contraction norm, alpha, beta, residual, compliance."""
    emb = system.embedding

    def fmt(v):
        return "[" + ", ".join(f"{x:.17g}" for x in np.asarray(v)[:head]) + "]"

    lines = [
        f"left_kind: {emb.left.kind!r}",
        f"right_kind: {emb.right.kind!r}",
        f"offset: {list(emb.offset)}",
        f"K_L: {emb.left.count}",
        f"K_R: {emb.right.count}",
        f"left_eigenvalues_head: {fmt(emb.left.eigenvalues)}",
        f"right_eigenvalues_head: {fmt(emb.right.eigenvalues)}",
        f"source_side: {system.source_side.value}",
        f"contraction_norm: {system.contraction_norm:.17g}",
        f"spectrum_bounds: [{system.spectrum_bounds[0]:.17g}, {system.spectrum_bounds[1]:.17g}]",
        f"power_estimate: {system.power_estimate:.17g}",
        f"power_last_relative_change: {system.power_change:.17g}",
        f"iteration_factor: {system.iteration_factor:.17g}",
    ]
    if system.solved:
        lines += [
            f"alpha_head: {fmt(system.alpha)}",
            f"beta_head: {fmt(system.beta)}",
            f"residual: {system.residual:.17g}",
            f"iterations: {system.iterations}",
            f"compliance: {compliance(system):.17g}",
        ]
    return "\n".join(lines) + "\n"
