"""Finite-difference ground truth on truncated chambered domains.

Chambers are rectangles in the (x, y) plane sharing one lattice of spacing h.
The finite-energy response u to a line load gamma on one junction minimises

    1/2 sum_edges (u_a - u_b)^2 - h sum_{junction nodes} gamma_i u_i

with u = 0 on the walls and on the truncation ends x = x_min, x_max, i.e.
L u = h gamma for the five-point graph Laplacian L.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .almgren import Variant
from .errors import DegenerateSlice, GeometryError, ResourceError, SolverError

SOLVER_RTOL = 1e-12
DIRECT_LIMIT = 60_000
BYTES_PER_UNKNOWN = 1_000
DEFAULT_MEMORY_CAP = 4 * 2**30
AMG_SEED = 20240601


@dataclass(frozen=True)
class Chamber:
    width: float
    offset: float  # global y of the lower wall
    x0: float
    x1: float


@dataclass(frozen=True)
class ChamberGeometry:
    chambers: tuple
    junctions: tuple
    X: float

    @classmethod
    def from_widths(cls, widths, offsets=None, middle_lengths=(), X=8.0):
        """Chambers listed left to right; ``offsets[j]`` places chamber j inside chamber j+1.

        Offsets default to centred placement. The first junction sits at x = 0.
        """
        widths = [float(w) for w in widths]
        if len(widths) < 2:
            raise GeometryError("need at least two chambers")
        if len(middle_lengths) != len(widths) - 2:
            raise GeometryError(f"need {len(widths) - 2} middle chamber length(s)")
        if offsets is None:
            offsets = [None] * (len(widths) - 1)
        local = [(widths[j + 1] - widths[j]) / 2 if o is None else float(o) for j, o in enumerate(offsets)]
        glob = [0.0] * len(widths)
        for j in range(len(widths) - 2, -1, -1):
            glob[j] = glob[j + 1] + local[j]
        junctions = np.concatenate([[0.0], np.cumsum(middle_lengths)]).tolist()
        xs = [junctions[0] - X] + junctions + [junctions[-1] + X]
        chambers = tuple(Chamber(w, g, xs[i], xs[i + 1]) for i, (w, g) in enumerate(zip(widths, glob)))
        return cls(chambers, tuple(junctions), float(X))

    def opening(self, j):
        a, b = self.chambers[j], self.chambers[j + 1]
        lo, hi = max(a.offset, b.offset), min(a.offset + a.width, b.offset + b.width)
        if hi <= lo:
            raise GeometryError(f"junction {j} has an empty opening")
        return lo, hi

    def to_dict(self):
        return {"chambers": [vars(c) for c in self.chambers], "junctions": list(self.junctions), "X": self.X}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(Chamber(**c) for c in d["chambers"]), tuple(d["junctions"]), d["X"])


def _on_lattice(value, h):
    q = value / h
    return abs(q - round(q)) < 1e-9 * max(1.0, abs(q))


def _lattice(geometry, h):
    ymin = min(c.offset for c in geometry.chambers)
    ymax = max(c.offset + c.width for c in geometry.chambers)
    checks = [c.width for c in geometry.chambers] + [c.offset - ymin for c in geometry.chambers]
    checks += [c.x1 - c.x0 for c in geometry.chambers]
    if not all(_on_lattice(v, h) for v in checks):
        raise GeometryError(f"h = {h} does not divide every section length, offset and chamber length")
    x0 = geometry.chambers[0].x0
    nx = int(round((geometry.chambers[-1].x1 - x0) / h))
    ny = int(round((ymax - ymin) / h))
    xs = x0 + h * np.arange(nx + 1)
    ys = ymin + h * np.arange(ny + 1)
    return xs, ys


def _interior_mask(geometry, xs, ys, h):
    eps = 1e-7 * h
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    mask = np.zeros(X.shape, bool)
    for c in geometry.chambers:
        mask |= (X > c.x0 + eps) & (X < c.x1 - eps) & (Y > c.offset + eps) & (Y < c.offset + c.width - eps)
    for j, xj in enumerate(geometry.junctions):
        lo, hi = geometry.opening(j)
        mask |= (np.abs(X - xj) < eps) & (Y > lo + eps) & (Y < hi - eps)
    return mask


def graph_laplacian(mask) -> sp.csr_matrix:
    """Five-point stencil (4 on the diagonal) on the True nodes of ``mask``, zero data elsewhere."""
    n = int(mask.sum())
    idx = -np.ones(mask.shape, dtype=np.int64)
    idx[mask] = np.arange(n)
    rows, cols = [np.arange(n)], [np.arange(n)]
    vals = [np.full(n, 4.0)]
    for axis in (0, 1):
        a = idx[:-1, :] if axis == 0 else idx[:, :-1]
        b = idx[1:, :] if axis == 0 else idx[:, 1:]
        both = (a >= 0) & (b >= 0)
        rows += [a[both], b[both]]
        cols += [b[both], a[both]]
        vals += [-np.ones(both.sum())] * 2
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))


def _spd_solve(A, b, method, memory_cap):
    n = A.shape[0]
    if n * BYTES_PER_UNKNOWN > memory_cap:
        raise ResourceError(f"{n} unknowns need ~{n * BYTES_PER_UNKNOWN / 2**20:.0f} MiB, cap is "
                            f"{memory_cap / 2**20:.0f} MiB")
    nb = np.linalg.norm(b)
    if nb == 0:
        return np.zeros(n), 0.0, "trivial"
    if method == "auto":
        method = "direct" if n <= DIRECT_LIMIT else "amg-cg"
    if method == "direct":
        u = spla.spsolve(A.tocsc(), b)
    elif method == "amg-cg":
        import pyamg

        # pyamg draws its spectral-radius start vector from the global RNG; pin it for reproducible runs
        state = np.random.get_state()
        np.random.seed(AMG_SEED)
        try:
            ml = pyamg.smoothed_aggregation_solver(A, symmetry="symmetric", coarse_solver="splu")
        finally:
            np.random.set_state(state)
        u = ml.solve(b, tol=0.1 * SOLVER_RTOL, accel="cg", maxiter=500)
    else:
        raise ValueError(f"unknown solver method {method!r}")
    rel = float(np.linalg.norm(b - A @ u) / nb)
    if not np.isfinite(rel) or rel >= SOLVER_RTOL:
        raise SolverError(f"{method} stopped at relative residual {rel:.3g}")
    return u, rel, method


@dataclass(frozen=True, eq=False)
class GridField:
    """Nodal values on the shared lattice of a truncated chambered domain."""

    geometry: ChamberGeometry
    h: float
    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray
    mask: np.ndarray
    residual: float = 0.0
    method: str = ""
    source_junction: int | None = None
    source_ys: np.ndarray | None = field(default=None, repr=False)
    source_load: np.ndarray | None = field(default=None, repr=False)

    def column(self, x) -> int:
        if not _on_lattice(x - self.xs[0], self.h):
            raise GeometryError(f"x = {x} is not on a grid line")
        i = int(round((x - self.xs[0]) / self.h))
        if not 0 <= i < len(self.xs):
            raise GeometryError(f"x = {x} outside the grid")
        return i

    def chamber_at(self, x) -> int:
        """Chamber whose closed x-range holds x; at a junction, the narrower neighbour."""
        for j, xj in enumerate(self.geometry.junctions):
            if abs(x - xj) < 1e-9 * max(1.0, self.h):
                a, b = self.geometry.chambers[j], self.geometry.chambers[j + 1]
                return j if a.width <= b.width else j + 1
        for c, ch in enumerate(self.geometry.chambers):
            if ch.x0 <= x <= ch.x1:
                return c
        raise GeometryError(f"x = {x} outside the domain")

    def slice(self, x):
        """(y coordinates, values) of interior nodes on the grid line x."""
        i = self.column(x)
        m = self.mask[i]
        return self.ys[m], self.values[i, m]

    def strip_energy(self, xa, xb) -> float:
        """Discrete Dirichlet energy between grid lines xa <= xb (trapezoid in x)."""
        ia, ib = self.column(xa), self.column(xb)
        v = self.values
        horiz = np.sum(np.diff(v[ia:ib + 1], axis=0) ** 2)
        vert_cols = np.sum(np.diff(v[ia:ib + 1], axis=1) ** 2, axis=1)
        vert = np.sum(vert_cols) - 0.5 * (vert_cols[0] + vert_cols[-1])
        return float(horiz + vert)

    def cylindrical_frequency(self, x, variant=Variant.FROM_ZERO) -> float:
        _, vals = self.slice(x)
        mass = self.h * float(np.sum(vals**2))
        if mass < 1e-300:
            raise DegenerateSlice(f"slice mass vanishes at x = {x}")
        c = self.chamber_at(x)
        if variant is Variant.FULL_LINE:
            lo, hi = self.xs[0], x
        else:
            # junction bounding the chamber on the side facing the domain's centre
            j = c - 1 if x >= self.geometry.junctions[-1] else min(c, len(self.geometry.junctions) - 1)
            xj = self.geometry.junctions[j]
            lo, hi = (min(x, xj), max(x, xj))
        return self.strip_energy(lo, hi) / mass


def solve_truncated(geometry: ChamberGeometry, source, h: float, junction: int = -1,
                    method: str = "auto", memory_cap: float = DEFAULT_MEMORY_CAP) -> GridField:
    """Discrete minimiser for a line load on one junction.

    ``source`` is a callable of the global y coordinate or an array of loads on
    the junction's interior nodes (bottom to top).
    """
    if h <= 0:
        raise GeometryError("h must be positive")
    # truncation error e^{-sqrt(lambda_1) X} of the widest (slowest) chamber must be negligible
    need = 6.0 * max(c.width for c in geometry.chambers) / np.pi
    if geometry.X < need * (1 - 1e-12):
        raise GeometryError(f"X = {geometry.X} is below 6/sqrt(lambda_1) = {need:.6g} of the widest chamber")
    xs, ys = _lattice(geometry, h)
    mask = _interior_mask(geometry, xs, ys, h)
    junction = junction % len(geometry.junctions)
    jcol = int(round((geometry.junctions[junction] - xs[0]) / h))
    jnodes = np.flatnonzero(mask[jcol])
    y_src = ys[jnodes]
    load = np.asarray(source(y_src) if callable(source) else source, dtype=float)
    if load.shape != y_src.shape:
        raise GeometryError(f"source needs {len(y_src)} junction values")
    idx = -np.ones(mask.shape, dtype=np.int64)
    idx[mask] = np.arange(int(mask.sum()))
    b = np.zeros(int(mask.sum()))
    b[idx[jcol, jnodes]] = h * load
    u, rel, used = _spd_solve(graph_laplacian(mask), b, method, memory_cap)
    values = np.zeros(mask.shape)
    values[mask] = u
    return GridField(geometry, float(h), xs, ys, values, mask, rel, used, junction, y_src, load)


def canonical_load(section, k=1, offset=0.0):
    """Callable y -> d/dx of the canonical k-th semicylinder solution at x = 0 (global y)."""
    a = float(section.roots[k - 1])

    def load(y):
        local = np.asarray(y, dtype=float) - offset
        inside = section.contains(local)
        out = np.zeros(local.shape)
        out[inside] = 2 * a * section.eigenfunctions(local[inside], [k - 1])[0]
        return out

    return load


def slice_coefficients(field: GridField, x: float, section, K=None, chamber=None) -> np.ndarray:
    """Discrete L2 projections of the slice at x onto the first K section modes."""
    c = field.chamber_at(x) if chamber is None else chamber
    ch = field.geometry.chambers[c]
    if abs(section.extent[0] - ch.width) > 1e-9 * ch.width:
        raise GeometryError(f"section width {section.extent[0]} does not match chamber width {ch.width}")
    K = section.count if K is None else K
    i = field.column(x)
    y_local = field.ys - ch.offset
    inside = (y_local > 1e-9 * field.h) & (y_local < ch.width - 1e-9 * field.h)
    psi = section.eigenfunctions(y_local[inside], np.arange(K))
    return field.h * psi @ field.values[i, inside]


def discrete_compliance(field: GridField, source=None) -> float:
    """h sum gamma_i u_i on the loaded junction (= 2<gamma, u> - energy at the minimiser)."""
    if source is None:
        load = field.source_load
    else:
        load = np.asarray(source(field.source_ys) if callable(source) else source, dtype=float)
    jcol = field.column(field.geometry.junctions[field.source_junction])
    u = field.values[jcol, np.flatnonzero(field.mask[jcol])]
    return float(field.h * np.sum(load * u))


def stencil_residual(field: GridField) -> np.ndarray:
    """Five-point residual L u / h^2 on every lattice node (zero padding outside)."""
    v = np.pad(field.values, 1)
    lap = 4 * v[1:-1, 1:-1] - v[:-2, 1:-1] - v[2:, 1:-1] - v[1:-1, :-2] - v[1:-1, 2:]
    return np.where(field.mask, lap / field.h**2, 0.0)


def to_csv(field: GridField, path) -> None:
    """Structured '#' header (geometry, h, X, solver residual) then x, y, value rows."""
    header = {"geometry": field.geometry.to_dict(), "h": field.h, "X": field.geometry.X,
              "solver_residual": field.residual, "method": field.method,
              "source_junction": field.source_junction}
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "value"])
        for i, x in enumerate(field.xs):
            for j, y in enumerate(field.ys):
                w.writerow([f"{x:.17g}", f"{y:.17g}", f"{field.values[i, j]:.17g}"])


def from_csv(path) -> GridField:
    with open(path) as fh:
        header = json.loads(fh.readline()[1:])
        rows = np.loadtxt(io.StringIO(fh.read()), delimiter=",", skiprows=1, ndmin=2)
    geometry = ChamberGeometry.from_dict(header["geometry"])
    h = header["h"]
    xs, ys = _lattice(geometry, h)
    values = rows[:, 2].reshape(len(xs), len(ys))
    mask = _interior_mask(geometry, xs, ys, h)
    return GridField(geometry, h, xs, ys, values, mask, header["solver_residual"], header["method"],
                     header["source_junction"])


@dataclass(frozen=True, eq=False)
class HalfDiskField:
    """Values on the lattice [0, R] x [-R, R]; ``mask`` marks nodes of the open half-disk."""

    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray
    mask: np.ndarray
    h: float
    radius: float
    residual: float = 0.0


def _half_disk_lattice(radius, h):
    if not _on_lattice(radius, h):
        raise GeometryError("h must divide the radius")
    n = int(round(radius / h))
    xs = h * np.arange(n + 1)
    ys = h * np.arange(-n, n + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    mask = (X > 0.5 * h) & (X**2 + Y**2 < radius**2 * (1 - 1e-12))
    return xs, ys, X, Y, mask


def sample_half_disk(func, radius=1.0, h=0.01) -> HalfDiskField:
    """Sample an analytic field func(x, y) on the half-disk lattice."""
    xs, ys, X, Y, mask = _half_disk_lattice(radius, h)
    return HalfDiskField(xs, ys, np.asarray(func(X, Y), dtype=float), mask, h, radius)


def solve_half_disk(arc_data, radius=1.0, h=0.01, method="auto") -> HalfDiskField:
    """Harmonic field on the half-disk, zero on the flat side, ``arc_data(theta)`` on the arc.

    Lattice nodes outside the disk carry the data of their radial projection.
    """
    xs, ys, X, Y, mask = _half_disk_lattice(radius, h)
    outside = ~mask & (X > 0.5 * h)
    values = np.zeros(X.shape)
    values[outside] = arc_data(np.arctan2(Y[outside], X[outside]))
    idx = -np.ones(mask.shape, dtype=np.int64)
    idx[mask] = np.arange(int(mask.sum()))
    b = np.zeros(int(mask.sum()))
    padded = np.pad(values, 1)
    pmask = np.pad(mask, 1)
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        nb_vals = padded[1 + di:padded.shape[0] - 1 + di, 1 + dj:padded.shape[1] - 1 + dj]
        nb_int = pmask[1 + di:pmask.shape[0] - 1 + di, 1 + dj:pmask.shape[1] - 1 + dj]
        contrib = np.where(nb_int, 0.0, nb_vals)
        b += contrib[mask]
    u, rel, _ = _spd_solve(graph_laplacian(mask), b, method, DEFAULT_MEMORY_CAP)
    values[mask] = u
    return HalfDiskField(xs, ys, values, mask, h, radius, rel)
