"""Chains of nested chambers C^1 ⊂ C^2 ⊂ ... ⊂ C^N joined left to right.

Junctions are solved right to left. The load at each junction is the growing
part arriving from the junction to its right, normalised so its first mode
has coefficient 1; kappa is the product of the first left coefficients.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cross_section import DEFAULT_MODES
from .errors import ContractionFailure, DimensionError, GeometryError
from .harmonic_field import ModeSeries, Profile, Side, Term
from .junction import assemble_transfer, make_embedding, solve_transfer


@dataclass(frozen=True, eq=False)
class ChamberChain:
    kinds: tuple
    embeddings: tuple  # embeddings[j] joins chamber j (left) to chamber j+1 (right)
    systems: tuple  # solved transfer systems, same indexing
    loads: tuple  # normalised growing-mode amplitudes fed into each junction
    middle_lengths: tuple | None
    source_mode: int
    kappa: float

    @property
    def junction_count(self) -> int:
        return len(self.systems)

    @property
    def alpha_first(self) -> np.ndarray:
        return np.array([s.alpha[0] for s in self.systems])

    @property
    def effective_kappa(self) -> float:
        """First-mode amplitude on C^1 in coordinates where junction 1 sits at x = 0.

        Equals kappa when middle chambers are treated as semi-infinite; with
        finite lengths each middle chamber contributes e^{-sqrt(lambda_1) l}.
        """
        if self.middle_lengths is None:
            return self.kappa
        decay = sum(self.embeddings[j].right.roots[0] * ell for j, ell in enumerate(self.middle_lengths))
        return float(self.kappa * np.exp(-decay))

    def leftmost_series(self) -> ModeSeries:
        """Solution on C^1 (x < 0 measured from the first junction)."""
        scale = self.effective_kappa / self.systems[0].alpha[0]
        sec = self.embeddings[0].left
        terms = [Term(j + 1, float(scale * c), Profile.GROW) for j, c in enumerate(self.systems[0].alpha)]
        return ModeSeries(sec, terms, Side.LEFT)


def chain_solve(kinds, offsets=None, K: int = DEFAULT_MODES, source_mode: int = 1,
                middle_lengths=None) -> ChamberChain:
    """Solve every junction of the chain ``kinds`` (narrowest first).

    ``offsets[j]`` places chamber j inside chamber j+1 (None: centred). Without
    ``middle_lengths`` the middle chambers are semi-infinite for bookkeeping
    and each junction sees a pure first-mode load. With lengths, the load
    carries every mode arriving from the next junction, attenuated by
    e^{-sqrt(lambda_m) l}; reflections between junctions are not iterated.
    """
    kinds = tuple(kinds)
    n = len(kinds)
    if n < 2:
        raise GeometryError("a chain needs at least two chambers")
    offsets = [None] * (n - 1) if offsets is None else list(offsets)
    if len(offsets) != n - 1:
        raise GeometryError(f"need {n - 1} offsets")
    if middle_lengths is not None:
        middle_lengths = tuple(float(v) for v in middle_lengths)
        if len(middle_lengths) != n - 2 or any(v <= 0 for v in middle_lengths):
            raise GeometryError(f"need {n - 2} positive middle chamber lengths")
    embeddings = []
    for j in range(n - 1):
        try:
            embeddings.append(make_embedding(kinds[j], kinds[j + 1], K_R=K, offset=offsets[j]))
        except GeometryError as exc:
            raise GeometryError(f"junction {j + 1} is not nested: {exc}") from exc
    systems = [None] * (n - 1)
    loads = [None] * (n - 1)
    right = embeddings[-1].right
    if not 1 <= source_mode <= right.count:
        raise DimensionError(f"source mode {source_mode} outside 1..{right.count}")
    amp = np.zeros(right.count)
    amp[source_mode - 1] = 1.0
    kappa = 1.0
    for j in range(n - 2, -1, -1):
        emb = embeddings[j]
        gamma = 2.0 * emb.right.roots * amp  # each e^{a x} mode loads like its canonical flux
        try:
            systems[j] = solve_transfer(assemble_transfer(emb, gamma, Side.RIGHT))
        except ContractionFailure as exc:
            raise ContractionFailure(f"junction {j + 1}: {exc}", norm=exc.norm) from exc
        loads[j] = amp
        kappa *= systems[j].alpha[0]
        if j == 0:
            break
        nxt = embeddings[j - 1].right
        m = min(nxt.count, emb.left.count)
        amp = np.zeros(nxt.count)
        if middle_lengths is None:
            amp[0] = 1.0
        else:
            carried = systems[j].alpha[:m] * np.exp(-(emb.left.roots[:m] - emb.left.roots[0]) * middle_lengths[j - 1])
            amp[:m] = carried / carried[0]
    return ChamberChain(kinds, tuple(embeddings), tuple(systems), tuple(loads), middle_lengths,
                        source_mode, float(kappa))


def kappa(chain: ChamberChain) -> float:
    """Product of the first left coefficients over all junctions."""
    if chain.source_mode != 1:
        raise ValueError("kappa is defined for source mode 1")
    return chain.kappa


def log_linear_fit(xs, coefficients):
    """Least-squares slope and intercept of ln|c(x)| against x."""
    xs = np.asarray(xs, dtype=float)
    c = np.abs(np.asarray(coefficients, dtype=float))
    if np.any(c == 0):
        raise ValueError("zero coefficient in log-linear fit")
    slope, intercept = np.polyfit(xs, np.log(c), 1)
    return float(slope), float(intercept)


def chain_report(chain: ChamberChain, regression=None) -> str:
    """Key-value text: per-junction alpha_1 and contraction norms, kappa, ln kappa split.

    ``regression`` is an optional (slope, intercept) from an oracle projection.
    """
    lines = [f"chambers: {len(chain.kinds)}", f"source_mode: {chain.source_mode}"]
    for j, s in enumerate(chain.systems):
        lines += [f"junction_{j + 1}_alpha1: {s.alpha[0]:.17g}",
                  f"junction_{j + 1}_contraction_norm: {s.contraction_norm:.17g}",
                  f"junction_{j + 1}_residual: {s.residual:.3g}"]
    lines += [f"kappa: {chain.kappa:.17g}", f"ln_kappa: {np.log(abs(chain.kappa)):.17g}",
              "ln_alpha1_terms: [" + ", ".join(f"{np.log(abs(a)):.17g}" for a in chain.alpha_first) + "]"]
    if chain.middle_lengths is not None:
        lines += ["middle_lengths: [" + ", ".join(f"{v:.17g}" for v in chain.middle_lengths) + "]",
                  f"effective_kappa: {chain.effective_kappa:.17g}"]
    if regression is not None:
        slope, intercept = regression
        expected = chain.embeddings[0].left.roots[0]
        lines += [f"regression_slope: {slope:.17g}", f"expected_slope: {expected:.17g}",
                  f"regression_intercept: {intercept:.17g}",
                  f"ln_effective_kappa: {np.log(abs(chain.effective_kappa)):.17g}"]
    return "\n".join(lines) + "\n"
