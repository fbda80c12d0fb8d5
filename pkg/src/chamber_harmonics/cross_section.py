"""Dirichlet eigenpairs of chamber cross-sections.

Intervals and rectangles use closed-form sine modes. The grid kinds solve the
second-order central-difference eigenproblem with the boundary rows eliminated
and expose their eigenvectors as piecewise (bi)linear functions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import ClassVar, Union

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal

from .errors import AmbiguousThreshold, DimensionError, GeometryError, TruncationError

DEFAULT_MODES = 32
THRESHOLD_TOL = 1e-9


def _positive(name, value):
    if not np.isfinite(value) or value <= 0:
        raise GeometryError(f"{name} must be a positive real, got {value!r}")


def _positive_int(name, value):
    if int(value) != value or value < 1:
        raise GeometryError(f"{name} must be a positive integer, got {value!r}")


@dataclass(frozen=True)
class Interval:
    length: float
    dim: ClassVar[int] = 1
    analytic: ClassVar[bool] = True

    def __post_init__(self):
        _positive("length", self.length)

    @property
    def extent(self):
        return (float(self.length),)


@dataclass(frozen=True)
class Rectangle:
    width: float
    height: float
    dim: ClassVar[int] = 2
    analytic: ClassVar[bool] = True

    def __post_init__(self):
        _positive("width", self.width)
        _positive("height", self.height)

    @property
    def extent(self):
        return (float(self.width), float(self.height))


@dataclass(frozen=True)
class Grid1D:
    length: float
    n: int
    dim: ClassVar[int] = 1
    analytic: ClassVar[bool] = False

    def __post_init__(self):
        _positive("length", self.length)
        _positive_int("n", self.n)

    @property
    def extent(self):
        return (float(self.length),)

    @property
    def spacing(self):
        return (self.length / self.n,)

    @property
    def interior_count(self):
        return self.n - 1


@dataclass(frozen=True)
class Grid2D:
    width: float
    height: float
    nx: int
    ny: int
    dim: ClassVar[int] = 2
    analytic: ClassVar[bool] = False

    def __post_init__(self):
        _positive("width", self.width)
        _positive("height", self.height)
        _positive_int("nx", self.nx)
        _positive_int("ny", self.ny)

    @property
    def extent(self):
        return (float(self.width), float(self.height))

    @property
    def spacing(self):
        return (self.width / self.nx, self.height / self.ny)

    @property
    def interior_count(self):
        return (self.nx - 1) * (self.ny - 1)


SectionKind = Union[Interval, Rectangle, Grid1D, Grid2D]


@dataclass(frozen=True, eq=False)
class CrossSection:
    """A cross-section together with its first ``count`` Dirichlet eigenpairs.

    Eigenfunctions are L2-orthonormal (the discrete inner product for grid
    kinds) and sign-fixed so the first non-negligible sample is positive.
    For analytic kinds ``quantum`` holds the sine indices of every mode; for
    grid kinds ``nodal`` holds nodal values including the boundary zeros.
    """

    kind: SectionKind
    eigenvalues: np.ndarray
    quantum: np.ndarray | None = field(default=None, repr=False)
    nodal: np.ndarray | None = field(default=None, repr=False)

    @property
    def count(self) -> int:
        return len(self.eigenvalues)

    @property
    def dim(self) -> int:
        return self.kind.dim

    @property
    def extent(self):
        return self.kind.extent

    @property
    def roots(self) -> np.ndarray:
        """Square roots of the eigenvalues (the axial decay/growth rates)."""
        return np.sqrt(self.eigenvalues)

    @property
    def analytic(self) -> bool:
        return self.kind.analytic

    def points(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.dim == 1:
            return np.atleast_1d(y).reshape(-1)
        y = np.atleast_2d(y)
        if y.shape[-1] != 2:
            raise GeometryError("two-dimensional sections take points of shape (P, 2)")
        return y.reshape(-1, 2)

    def contains(self, y, tol=1e-12) -> np.ndarray:
        """Membership of points in the closed section."""
        y = self.points(y)
        if self.dim == 1:
            return (y >= -tol) & (y <= self.extent[0] + tol)
        w, h = self.extent
        return (y[:, 0] >= -tol) & (y[:, 0] <= w + tol) & (y[:, 1] >= -tol) & (y[:, 1] <= h + tol)

    def eigenfunctions(self, y, modes=None) -> np.ndarray:
        """Evaluate modes (0-based indices, default all) at points; shape (len(modes), P)."""
        y = self.points(y)
        if not np.all(self.contains(y)):
            raise GeometryError("evaluation point outside the cross-section")
        idx = np.arange(self.count) if modes is None else np.asarray(modes, dtype=int)
        if self.analytic:
            return _sine_modes(self.extent, self.quantum[idx], y)
        return _interpolate(self.kind, self.nodal[idx], y)

    def eigenfunction(self, k: int, y) -> np.ndarray:
        """Mode ``k`` (1-based) evaluated at points."""
        if not 1 <= k <= self.count:
            raise DimensionError(f"mode {k} outside 1..{self.count}")
        return self.eigenfunctions(y, [k - 1])[0]

    def interior_nodes(self) -> np.ndarray:
        """Interior grid coordinates of a grid kind, in flattened C order."""
        return _interior_nodes(self.kind)

    def interior_values(self) -> np.ndarray:
        """Nodal eigenvector values restricted to interior nodes, shape (K, n_interior)."""
        if self.analytic:
            raise GeometryError("analytic sections have no grid")
        if self.dim == 1:
            return self.nodal[:, 1:-1]
        return self.nodal[:, 1:-1, 1:-1].reshape(self.count, -1)

    def node_weight(self) -> float:
        if self.analytic:
            raise GeometryError("analytic sections have no grid")
        return float(np.prod(self.kind.spacing))


def _sine_modes(extent, quantum, y):
    if len(extent) == 1:
        (L,) = extent
        return np.sqrt(2.0 / L) * np.sin(np.pi * np.outer(quantum[:, 0], y) / L)
    (W, H) = extent
    sx = np.sin(np.pi * np.outer(quantum[:, 0], y[:, 0]) / W)
    sy = np.sin(np.pi * np.outer(quantum[:, 1], y[:, 1]) / H)
    return (2.0 / np.sqrt(W * H)) * sx * sy


def _cell(coord, spacing, n):
    s = coord / spacing
    i = np.clip(np.floor(s).astype(int), 0, n - 1)
    return i, s - i


def _interpolate(kind, nodal, y):
    if kind.dim == 1:
        (hx,) = kind.spacing
        i, t = _cell(y, hx, kind.n)
        return nodal[:, i] * (1 - t) + nodal[:, i + 1] * t
    hx, hy = kind.spacing
    i, s = _cell(y[:, 0], hx, kind.nx)
    j, t = _cell(y[:, 1], hy, kind.ny)
    return (nodal[:, i, j] * (1 - s) * (1 - t) + nodal[:, i + 1, j] * s * (1 - t)
            + nodal[:, i, j + 1] * (1 - s) * t + nodal[:, i + 1, j + 1] * s * t)


def _interior_nodes(kind):
    if kind.dim == 1:
        (hx,) = kind.spacing
        return hx * np.arange(1, kind.n)
    hx, hy = kind.spacing
    X, Y = np.meshgrid(hx * np.arange(1, kind.nx), hy * np.arange(1, kind.ny), indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()])


def _fix_sign(vectors):
    """Flip each row so its first entry above 1e-12 in magnitude is positive."""
    flat = vectors.reshape(len(vectors), -1)
    for row in flat:
        nz = np.flatnonzero(np.abs(row) > 1e-12)
        if nz.size and row[nz[0]] < 0:
            row *= -1.0
    return vectors


def _dirichlet_1d(n, h):
    """Eigenpairs of the (n-1)-point Dirichlet second-difference operator."""
    d = np.full(n - 1, 2.0 / h**2)
    e = np.full(n - 2, -1.0 / h**2)
    lam, vec = eigh_tridiagonal(d, e)
    return lam, vec.T / np.sqrt(h)


def discrete_operator(kind) -> sp.csr_matrix:
    """Sparse -Laplacian on the interior nodes of a grid kind (C order)."""
    if kind.dim == 1:
        (h,) = kind.spacing
        m = kind.n - 1
        return sp.diags([-np.ones(m - 1), 2 * np.ones(m), -np.ones(m - 1)], [-1, 0, 1], format="csr") / h**2
    hx, hy = kind.spacing
    ax = _dirichlet_1d_matrix(kind.nx - 1, hx)
    ay = _dirichlet_1d_matrix(kind.ny - 1, hy)
    return (sp.kron(ax, sp.identity(kind.ny - 1)) + sp.kron(sp.identity(kind.nx - 1), ay)).tocsr()


def _dirichlet_1d_matrix(m, h):
    return sp.diags([-np.ones(m - 1), 2 * np.ones(m), -np.ones(m - 1)], [-1, 0, 1]) / h**2


def all_eigenvalues_below(kind, lam_max) -> int:
    """Number of Dirichlet eigenvalues of ``kind`` that are <= lam_max (relative slack 1e-12)."""
    cut = lam_max * (1 + 1e-12)
    if isinstance(kind, Interval):
        return int(np.floor(kind.length * np.sqrt(cut) / np.pi))
    if isinstance(kind, Rectangle):
        W, H = kind.extent
        jmax = int(np.floor(W * np.sqrt(cut) / np.pi))
        j = np.arange(1, jmax + 1)
        rem = cut - (np.pi * j / W) ** 2
        return int(np.sum(np.floor(H * np.sqrt(np.maximum(rem, 0)) / np.pi)))
    if isinstance(kind, Grid1D):
        lam, _ = _dirichlet_1d(kind.n, kind.spacing[0])
        return int(np.count_nonzero(lam <= cut))
    lx, _ = _dirichlet_1d(kind.nx, kind.spacing[0])
    ly, _ = _dirichlet_1d(kind.ny, kind.spacing[1])
    return int(np.count_nonzero(np.add.outer(lx, ly) <= cut))


def compute_spectrum(kind: SectionKind, K: int = DEFAULT_MODES) -> CrossSection:
    """First ``K`` Dirichlet eigenpairs of ``kind``, ascending."""
    if int(K) != K or K < 1:
        raise DimensionError(f"K must be a positive integer, got {K!r}")
    K = int(K)
    if not kind.analytic and K >= kind.interior_count:
        raise DimensionError(f"K={K} needs fewer modes than the {kind.interior_count} interior grid points")

    if isinstance(kind, Interval):
        q = np.arange(1, K + 1)
        lam = (np.pi * q / kind.length) ** 2
        return _frozen(kind, lam, quantum=q[:, None])

    if isinstance(kind, Rectangle):
        W, H = kind.extent
        j, k = np.meshgrid(np.arange(1, K + 1), np.arange(1, K + 1), indexing="ij")
        j, k = j.ravel(), k.ravel()
        lam = (np.pi * j / W) ** 2 + (np.pi * k / H) ** 2
        order = np.lexsort((k, j, lam))[:K]
        return _frozen(kind, lam[order], quantum=np.column_stack([j[order], k[order]]))

    if isinstance(kind, Grid1D):
        lam, vec = _dirichlet_1d(kind.n, kind.spacing[0])
        nodal = np.zeros((K, kind.n + 1))
        nodal[:, 1:-1] = vec[:K]
        return _frozen(kind, lam[:K], nodal=_fix_sign(nodal))

    hx, hy = kind.spacing
    lx, vx = _dirichlet_1d(kind.nx, hx)
    ly, vy = _dirichlet_1d(kind.ny, hy)
    i, j = np.meshgrid(np.arange(len(lx)), np.arange(len(ly)), indexing="ij")
    i, j = i.ravel(), j.ravel()
    lam = lx[i] + ly[j]
    order = np.lexsort((j, i, lam))[:K]
    nodal = np.zeros((K, kind.nx + 1, kind.ny + 1))
    nodal[:, 1:-1, 1:-1] = vx[i[order]][:, :, None] * vy[j[order]][:, None, :]
    return _frozen(kind, lam[order], nodal=_fix_sign(nodal))


def _frozen(kind, lam, quantum=None, nodal=None):
    lam = np.array(lam, dtype=float)
    lam.setflags(write=False)
    for arr in (quantum, nodal):
        if arr is not None:
            arr.setflags(write=False)
    return CrossSection(kind, lam, quantum=quantum, nodal=nodal)


def morse_index(section: CrossSection, d: float) -> int:
    """Number of eigenvalues <= d, counted with multiplicity.

    For analytic sections a threshold within 1e-9 of an eigenvalue is taken to
    be that eigenvalue; for grid sections such a near miss is ambiguous.
    """
    lam = section.eigenvalues
    tol = THRESHOLD_TOL * max(1.0, abs(d))
    near = np.abs(lam - d) <= tol
    if near.any() and not section.analytic and not np.all(lam[near] == d):
        raise AmbiguousThreshold(f"threshold {d!r} lies within {tol:g} of a discrete eigenvalue")
    cut = d + tol if section.analytic else d
    if lam[-1] <= cut:
        raise TruncationError(f"lambda_K = {lam[-1]!r} <= d = {d!r}; retain more modes")
    return int(np.count_nonzero(lam <= cut))


def eigenvalue_domain_monotonicity_check(inner: CrossSection, outer: CrossSection) -> bool:
    """True iff lambda_k(outer) <= lambda_k(inner) for every common mode index."""
    m = min(inner.count, outer.count)
    return bool(np.all(outer.eigenvalues[:m] <= inner.eigenvalues[:m]))
