"""Command-line front end: ``chamber-harmonics <subcommand> --config run.yaml --out dir``."""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .almgren import Variant, frequency_limit, frequency_trace
from .chain import chain_report, chain_solve, log_linear_fit
from .classification import (FINITE_ENERGY, SolutionSpaceSpec, basis_for_SL, classification_report,
                             space_dimension)
from .config import RunConfig, load_config
from .cross_section import THRESHOLD_TOL, Grid1D, Interval, compute_spectrum, morse_index
from .errors import (ChamberError, ContractionFailure, ConvergenceError, DegenerateSlice, DependenceError,
                     InfiniteEnergy, RangeError, ResourceError, SolverError, ValidationError)
from .fd_oracle import (DEFAULT_MEMORY_CAP, SOLVER_RTOL, ChamberGeometry, canonical_load, discrete_compliance,
                        slice_coefficients, solve_truncated, to_csv)
from .harmonic_field import Side, canonical_semicylinder_solution, evaluate
from .junction import (DEGENERACY_TOL, FIXED_POINT_TOL, RESIDUAL_TOL, compliance,
                       make_embedding, solve_matched, transfer_report)
from .reports import ArtifactWriter

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_RESOURCE = 0, 2, 3, 4
NUMERICAL = (ContractionFailure, ConvergenceError, SolverError, DependenceError, RangeError,
             DegenerateSlice, InfiniteEnergy)

TOLERANCES = {
    "degeneracy_tol": DEGENERACY_TOL,
    "fixed_point_step": FIXED_POINT_TOL,
    "transfer_residual": RESIDUAL_TOL,
    "oracle_solver_rtol": SOLVER_RTOL,
    "threshold_match": THRESHOLD_TOL,
}


def _need_chambers(cfg: RunConfig, n=None, minimum=None):
    count = len(cfg.chambers)
    if n is not None and count != n:
        raise ValidationError(f"this subcommand needs exactly {n} chambers, got {count}",
                              cfg.line("geometry", "chambers"))
    if minimum is not None and count < minimum:
        raise ValidationError(f"this subcommand needs at least {minimum} chambers, got {count}",
                              cfg.line("geometry", "chambers"))


def _offset(cfg, j):
    o = cfg.offsets[j]
    return None if o is None else (tuple(o) if isinstance(o, list) else (o,))


def _embedding(cfg):
    _need_chambers(cfg, n=2)
    return make_embedding(cfg.chambers[0], cfg.chambers[1], K_R=cfg.K, K_L=cfg.K_L, offset=_offset(cfg, 0))


def _side(cfg):
    side = cfg.task_value("source_side", "right", str)
    if side not in ("left", "right"):
        raise ValidationError("task.source_side must be 'left' or 'right'", cfg.line("task", "source_side"))
    return Side.RIGHT if side == "right" else Side.LEFT


def _fd_geometry(cfg):
    _need_chambers(cfg, minimum=2)
    widths = []
    for i, kind in enumerate(cfg.chambers):
        if not isinstance(kind, (Interval, Grid1D)):
            raise ValidationError(f"the oracle grid is planar: chamber {i} must have a 1-D section",
                                  cfg.line("geometry", "chambers", i))
        widths.append(kind.length)
    middle = cfg.middle_lengths
    if len(widths) > 2 and middle is None:
        raise ValidationError("the oracle needs geometry.middle_lengths for chains", cfg.line("geometry"))
    return ChamberGeometry.from_widths(widths, list(cfg.offsets), tuple(middle or ()), X=cfg.X)


def _fd_source(cfg, geo):
    mode = cfg.task_value("source_mode", 1, int)
    right = compute_spectrum(cfg.chambers[-1], max(cfg.K, mode))
    return right, mode, canonical_load(right, mode, geo.chambers[-1].offset)


def cmd_spectrum(cfg, out):
    results = {}
    for i, kind in enumerate(cfg.chambers):
        sec = compute_spectrum(kind, cfg.K)
        out.csv(f"spectrum_chamber{i}.csv", ["k", "eigenvalue"],
                [(k + 1, lam) for k, lam in enumerate(sec.eigenvalues)])
        results[f"chamber{i}_lambda1"] = float(sec.eigenvalues[0])
    return results


def cmd_semicylinder(cfg, out):
    idx = cfg.task_value("chamber", len(cfg.chambers) - 1, int)
    sec = compute_spectrum(cfg.chambers[idx], cfg.K)
    modes = cfg.task.get("modes", [1])
    x_max = cfg.task_value("x_max", 10.0, float)
    samples = cfg.task_value("samples", 201, int)
    xs = np.linspace(x_max / samples, x_max, samples)
    results, lines = {}, []
    for k in modes:
        v = canonical_semicylinder_solution(sec, int(k))
        a = sec.roots[int(k) - 1]
        trace = frequency_trace(v, xs, Variant.FROM_ZERO)
        out.csv(f"semicylinder_trace_k{k}.csv", ["x", "N", "a_coth_ax"],
                [(x, n, a / np.tanh(a * x)) for x, n in zip(xs, trace.values)])
        cert = frequency_limit(v, Variant.FROM_ZERO, (x_max / 2, x_max), 1e-6)
        lines += [f"mode_{k}_limit: {cert.limit:.17g}", f"mode_{k}_sqrt_lambda: {a:.17g}",
                  f"mode_{k}_N_at_x_max: {trace.values[-1]:.17g}"]
        results[f"mode_{k}_limit_error"] = abs(cert.limit - a)
        if sec.dim == 1:
            ys = np.linspace(0.0, sec.extent[0], 33)
            out.csv(f"semicylinder_samples_k{k}.csv", ["x", "y", "value"],
                    [(x, y, evaluate(v, x, y)) for x in np.linspace(0.0, 2.0, 9) for y in ys])
    out.text("semicylinder_report.txt", "\n".join(lines) + "\n")
    return results


def cmd_transfer(cfg, out):
    emb = _embedding(cfg)
    side = _side(cfg)
    k = cfg.task_value("source_mode", 1, int)
    m = solve_matched(emb, k, side)
    s = m.system
    out.text("transfer_report.txt", transfer_report(s))
    out.csv("transfer_alpha.csv", ["j", "alpha"], [(j + 1, a) for j, a in enumerate(s.alpha)])
    out.csv("transfer_beta.csv", ["k", "beta"], [(j + 1, b) for j, b in enumerate(s.beta)])
    if emb.right.dim == 1:
        span = cfg.task_value("sample_span", 3.0, float)
        n = cfg.task_value("sample_count", 25, int)
        rows = []
        for x in np.linspace(-span, span, n):
            sec = emb.right if x >= 0 else emb.left
            ys_local = np.linspace(0.0, sec.extent[0], n)
            ys = ys_local if x >= 0 else emb.to_right(ys_local)
            rows += [(x, y, v) for y, v in zip(ys, m.evaluate(np.full(n, x), ys))]
        out.csv("matched_samples.csv", ["x", "y", "value"], rows)
    return {"contraction_norm": s.contraction_norm, "iteration_factor": s.iteration_factor,
            "residual": s.residual, "iterations": s.iterations,
            "alpha1": float(s.alpha[0]), "compliance": compliance(s), "K_L": emb.left.count, "K_R": emb.right.count}


def _threshold(cfg, key):
    value = cfg.task.get(key, "finite_energy")
    if value in ("finite_energy", None):
        return FINITE_ENERGY
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"task.{key} must be a number or 'finite_energy'", cfg.line("task", key))
    return float(value)


def cmd_classify(cfg, out):
    emb = _embedding(cfg)
    spec = SolutionSpaceSpec(_threshold(cfg, "d_R"), _threshold(cfg, "d_L"))
    dim = space_dimension(spec, emb.left, emb.right)
    basis = None
    if spec.d_L is FINITE_ENERGY and spec.d_R is not FINITE_ENERGY:
        k_max = cfg.task_value("k_max", morse_index(emb.right, spec.d_R), int)
        basis = basis_for_SL(emb, k_max)
        rows = [(i + 1, *b.system.alpha[:4]) for i, b in enumerate(basis)]
        header = ["member"] + [f"alpha{j}" for j in range(1, 1 + min(4, emb.left.count))]
        out.csv("basis_alpha_head.csv", header, rows)
    out.text("classification_report.txt", classification_report(spec, emb.left, emb.right, basis))
    res = {"dimension": dim, "K_L": emb.left.count, "K_R": emb.right.count}
    if basis is not None:
        res["basis_rank"] = basis.rank
    return res


def _oracle_regression(cfg, chain):
    geo = _fd_geometry(cfg)
    _, _, load = _fd_source(cfg, geo)
    field = solve_truncated(geo, load, cfg.h)
    xs = cfg.task.get("regression_slices") or list(-6.0 + 0.5 * np.arange(10))
    coeffs = [slice_coefficients(field, x, chain.embeddings[0].left, 1)[0] for x in xs]
    return log_linear_fit(xs, coeffs), field


def cmd_chain(cfg, out):
    _need_chambers(cfg, minimum=2)
    offsets = [_offset(cfg, j) for j in range(len(cfg.chambers) - 1)]
    mode = cfg.task_value("source_mode", 1, int)
    chain = chain_solve(cfg.chambers, offsets, cfg.K, mode, cfg.middle_lengths)
    regression = None
    if cfg.task_value("oracle", False, bool):
        regression, _ = _oracle_regression(cfg, chain)
    out.text("chain_report.txt", chain_report(chain, regression))
    out.csv("chain_junctions.csv", ["junction", "alpha1", "contraction_norm", "residual"],
            [(j + 1, s.alpha[0], s.contraction_norm, s.residual) for j, s in enumerate(chain.systems)])
    res = {"kappa": chain.kappa, "effective_kappa": chain.effective_kappa}
    if regression is not None:
        res.update(regression_slope=regression[0], regression_intercept=regression[1])
    return res


def cmd_oracle(cfg, out):
    geo = _fd_geometry(cfg)
    _, mode, load = _fd_source(cfg, geo)
    cap_mb = cfg.task_value("memory_cap_mb", None, float)
    cap = DEFAULT_MEMORY_CAP if cap_mb is None else cap_mb * 2**20
    method = cfg.task_value("method", "auto", str)
    if method not in ("auto", "direct", "amg-cg"):
        raise ValidationError(f"task.method must be auto, direct or amg-cg, not {method!r}", cfg.line("task", "method"))
    field = solve_truncated(geo, load, cfg.h, method=method, memory_cap=cap)
    slices = cfg.task.get("slices", [-1.0])
    K = cfg.task_value("modes", 4, int)
    rows = []
    for x in slices:
        c = field.chamber_at(float(x))
        sec = compute_spectrum(cfg.chambers[c], max(K, 1))
        coeff = slice_coefficients(field, float(x), sec, K, chamber=c)
        rows += [(x, c, k + 1, v) for k, v in enumerate(coeff)]
    out.csv("oracle_slices.csv", ["x", "chamber", "k", "coefficient"], rows)
    if cfg.task_value("write_field", False, bool) and "csv" in out.formats:
        to_csv(field, out.path("oracle_field.csv"))
        out.register("oracle_field.csv")
    C = discrete_compliance(field)
    out.keyvalue("oracle_report.txt", [("h", field.h), ("X", geo.X), ("method", field.method),
                                       ("solver_residual", field.residual), ("unknowns", int(field.mask.sum())),
                                       ("source_mode", mode), ("discrete_compliance", C)])
    return {"solver_residual": field.residual, "discrete_compliance": C, "unknowns": int(field.mask.sum())}


def cmd_compare(cfg, out):
    _need_chambers(cfg, minimum=2)
    rows = []
    if len(cfg.chambers) == 2:
        emb = _embedding(cfg)
        m = solve_matched(emb, 1, Side.RIGHT)
        geo = _fd_geometry(cfg)
        field = solve_truncated(geo, canonical_load(emb.right, 1, geo.chambers[1].offset), cfg.h)
        x = cfg.task_value("slice", -1.0, float)
        a1 = emb.left.roots[0]
        c1 = slice_coefficients(field, x, emb.left, 1)[0]
        rows.append(("alpha1", m.system.alpha[0], c1 * np.exp(-a1 * x)))
        rows.append(("compliance", compliance(m.system), discrete_compliance(field)))
    else:
        offsets = [_offset(cfg, j) for j in range(len(cfg.chambers) - 1)]
        chain = chain_solve(cfg.chambers, offsets, cfg.K, 1, cfg.middle_lengths)
        (slope, intercept), _ = _oracle_regression(cfg, chain)
        rows.append(("effective_kappa", chain.effective_kappa, float(np.exp(intercept))))
        rows.append(("slope", float(chain.embeddings[0].left.roots[0]), slope))
    table = [(q, s, o, abs(o - s) / abs(s)) for q, s, o in rows]
    out.csv("compare.csv", ["quantity", "spectral", "oracle", "relative_delta"], table)
    worst = max(r[3] for r in table)
    out.keyvalue("compare_report.txt", [*((f"{q}_relative_delta", d) for q, _, _, d in table),
                                        ("max_relative_delta", worst)])
    return {"max_relative_delta": worst, **{f"{q}_relative_delta": d for q, _, _, d in table}}


COMMANDS = {
    "spectrum": (cmd_spectrum, "eigenvalue tables per chamber"),
    "semicylinder": (cmd_semicylinder, "canonical semicylinder solutions and their frequency traces"),
    "transfer": (cmd_transfer, "solve one junction: alpha, beta, contraction norm, compliance"),
    "classify": (cmd_classify, "solution-space dimension and basis certificates"),
    "chain": (cmd_chain, "multi-chamber kappa report"),
    "oracle": (cmd_oracle, "finite-difference solve and slice coefficients"),
    "compare": (cmd_compare, "spectral vs finite-difference deltas"),
}


def build_parser():
    p = argparse.ArgumentParser(prog="chamber-harmonics", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", required=True, help="YAML run configuration")
        s.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override a dotted config key (repeatable)")
        s.add_argument("--out", help="output directory (overrides output.directory)")
    return p


def run(command, config_path, overrides=(), out_dir=None) -> int:
    try:
        cfg = load_config(config_path, overrides)
        try:
            writer = ArtifactWriter(out_dir or cfg.output_dir, cfg.formats)
        except OSError as exc:
            raise ValidationError(f"output directory unusable: {exc}") from exc
        results = COMMANDS[command][0](cfg, writer)
        writer.manifest(command, cfg.digest, TOLERANCES, results, __version__)
    except ValidationError as exc:
        print(f"error: ValidationError: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ResourceError as exc:
        print(f"error: ResourceError: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except NUMERICAL as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ChamberError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except MemoryError as exc:
        print(f"error: MemoryError: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(args.command, args.config, args.overrides, args.out)


if __name__ == "__main__":
    sys.exit(main())
