"""Vertex-centred grids on axis-aligned boxes with Neumann-consistent operators.

Fields are plain numpy arrays. A scalar field has shape ``grid.shape``; a
vector field has shape ``grid.shape + (c,)``. Spatial derivatives use the
mirror-ghost rule: the ghost node outside a face takes the value of the
first interior node, so second differences of discrete cosine modes are
exact eigenvectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterator

import numpy as np

from .errors import GridMismatch, GridTooSmall

MIN_NODES = 4


@dataclass(frozen=True)
class Grid:
    """Box ``[0, L_1] x ... x [0, L_d]`` sampled at ``N_j`` nodes per axis."""

    counts: tuple[int, ...]
    extents: tuple[float, ...]

    def __post_init__(self):
        counts = tuple(int(n) for n in self.counts)
        extents = tuple(float(L) for L in self.extents)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "extents", extents)
        if len(counts) != len(extents):
            raise ValueError("counts and extents must have the same length")
        if not 1 <= len(counts) <= 3:
            raise ValueError(f"dimension must be 1, 2 or 3, got {len(counts)}")
        if any(n < MIN_NODES for n in counts):
            raise GridTooSmall(f"every axis needs at least {MIN_NODES} nodes, got {counts}")
        if any(not L > 0 or not np.isfinite(L) for L in extents):
            raise ValueError(f"extents must be positive, got {extents}")

    @classmethod
    def cube(cls, n: int, length: float = 1.0, dim: int = 3) -> "Grid":
        return cls((n,) * dim, (length,) * dim)

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.counts

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / (n - 1) for n, L in zip(self.counts, self.extents))

    @property
    def min_spacing(self) -> float:
        return min(self.spacing)

    @property
    def volume(self) -> float:
        return float(np.prod(self.extents))

    def axis_coords(self, axis: int) -> np.ndarray:
        return np.linspace(0.0, self.extents[axis], self.counts[axis])

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Broadcastable coordinate arrays, one per axis (``ij`` indexing)."""
        return tuple(np.meshgrid(*(self.axis_coords(j) for j in range(self.dim)),
                                 indexing="ij", sparse=True))

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoidal product quadrature weights, shape ``grid.shape``."""
        w = np.ones(self.shape)
        for j, h in enumerate(self.spacing):
            w1 = np.full(self.counts[j], h)
            w1[[0, -1]] = h / 2
            shape = [1] * self.dim
            shape[j] = -1
            w = w * w1.reshape(shape)
        return w

    def check(self, f: np.ndarray) -> None:
        if tuple(f.shape[: self.dim]) != self.shape:
            raise GridMismatch(f"field of shape {f.shape} does not live on grid {self.shape}")

    def zeros(self, components: int | None = None) -> np.ndarray:
        return np.zeros(self.shape if components is None else self.shape + (components,))


def _sl(ndim: int, axis: int, s) -> tuple:
    idx = [slice(None)] * ndim
    idx[axis] = s
    return tuple(idx)


def second_difference(f: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Three-point second difference with mirror ghosts along ``axis``."""
    n = f.ndim
    out = np.empty_like(f, dtype=float)
    out[_sl(n, axis, slice(1, -1))] = (f[_sl(n, axis, slice(2, None))]
                                       - 2.0 * f[_sl(n, axis, slice(1, -1))]
                                       + f[_sl(n, axis, slice(None, -2))])
    out[_sl(n, axis, 0)] = 2.0 * (f[_sl(n, axis, 1)] - f[_sl(n, axis, 0)])
    out[_sl(n, axis, -1)] = 2.0 * (f[_sl(n, axis, -2)] - f[_sl(n, axis, -1)])
    out /= h * h
    return out


def central_difference(f: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Central first difference with mirror ghosts (zero on the two faces)."""
    n = f.ndim
    out = np.zeros_like(f, dtype=float)
    out[_sl(n, axis, slice(1, -1))] = (f[_sl(n, axis, slice(2, None))]
                                       - f[_sl(n, axis, slice(None, -2))]) / (2.0 * h)
    return out


def laplacian_neumann(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Second-order Laplacian with homogeneous Neumann data (mirror ghosts).

    Works on scalar fields and, componentwise, on vector fields.
    """
    grid.check(f)
    out = second_difference(f, 0, grid.spacing[0])
    for j in range(1, grid.dim):
        out += second_difference(f, j, grid.spacing[j])
    return out


def gradient_neumann(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Central gradient; appends a trailing axis of length ``grid.dim``.

    A vector field of shape ``shape + (3,)`` gives ``shape + (3, d)``.
    """
    grid.check(f)
    return np.stack([central_difference(f, j, h) for j, h in enumerate(grid.spacing)], axis=-1)


def divergence(grid: Grid, v: np.ndarray) -> np.ndarray:
    """Central divergence of a field whose trailing axis holds the ``d``
    spatial components.

    The normal component is reflected with a sign change across each face,
    the ghost rule under which this operator is minus the adjoint of
    :func:`gradient_neumann` on gradient fields.
    """
    grid.check(v)
    if v.shape[-1] != grid.dim:
        raise GridMismatch(f"divergence needs {grid.dim} spatial components, got {v.shape[-1]}")
    out = np.zeros(v.shape[:-1])
    for j, h in enumerate(grid.spacing):
        vj = v[..., j]
        n = vj.ndim
        dj = np.empty_like(vj)
        dj[_sl(n, j, slice(1, -1))] = (vj[_sl(n, j, slice(2, None))]
                                       - vj[_sl(n, j, slice(None, -2))]) / (2.0 * h)
        dj[_sl(n, j, 0)] = vj[_sl(n, j, 1)] / h
        dj[_sl(n, j, -1)] = -vj[_sl(n, j, -2)] / h
        out += dj
    return out


def integrate(grid: Grid, f: np.ndarray) -> float | np.ndarray:
    """Trapezoidal integral over the box; vector fields integrate per component."""
    grid.check(f)
    w = grid.weights
    if f.ndim > grid.dim:
        w = w.reshape(w.shape + (1,) * (f.ndim - grid.dim))
        return np.sum(w * f, axis=tuple(range(grid.dim)))
    return float(np.sum(w * f))


def inner(grid: Grid, f: np.ndarray, g: np.ndarray) -> float:
    """L^2 inner product summed over all components."""
    prod = f * g
    if prod.ndim > grid.dim:
        prod = prod.reshape(grid.shape + (-1,)).sum(axis=-1)
    return integrate(grid, prod)


def l2_norm(grid: Grid, f: np.ndarray) -> float:
    return float(np.sqrt(max(inner(grid, f, f), 0.0)))


def h1_norm(grid: Grid, f: np.ndarray) -> float:
    g = gradient_neumann(grid, f)
    return float(np.sqrt(inner(grid, f, f) + inner(grid, g, g)))


def sobolev_norm(grid: Grid, f: np.ndarray, k: int) -> float:
    """Discrete H^k norm for k = 0..3.

    H^0 and H^1 are direct; H^2 and H^3 use the Neumann equivalent form
    ``||u||_{H^{k+2}} = ||u||_{L^2} + ||Lap u||_{H^k}``.
    """
    if k == 0:
        return l2_norm(grid, f)
    if k == 1:
        return h1_norm(grid, f)
    if k in (2, 3):
        return l2_norm(grid, f) + sobolev_norm(grid, laplacian_neumann(grid, f), k - 2)
    raise ValueError(f"sobolev_norm supports k = 0..3, got {k}")


@dataclass
class BoundaryField:
    """Values on the boundary faces, keyed by ``(axis, side)``.

    ``side`` is 0 for the face at x_axis = 0 (outward normal -e_axis) and 1
    for x_axis = L (outward normal +e_axis). Edge and corner nodes appear on
    every face they belong to.
    """

    grid: Grid
    faces: dict[tuple[int, int], np.ndarray]

    @staticmethod
    def normal(axis: int, side: int, dim: int) -> np.ndarray:
        nu = np.zeros(dim)
        nu[axis] = 1.0 if side else -1.0
        return nu

    def items(self) -> Iterator[tuple[tuple[int, int], np.ndarray]]:
        return iter(self.faces.items())

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(v))) for v in self.faces.values())


def boundary_normal_derivative(grid: Grid, f: np.ndarray) -> BoundaryField:
    """Outward normal derivative on every face by one-sided second-order
    differences (three nodes along the normal)."""
    grid.check(f)
    faces = {}
    for j, h in enumerate(grid.spacing):
        n = f.ndim
        f0, f1, f2 = (f[_sl(n, j, i)] for i in (0, 1, 2))
        faces[(j, 0)] = (3.0 * (f0 - f1) - (f1 - f2)) / (2.0 * h)
        g0, g1, g2 = (f[_sl(n, j, i)] for i in (-1, -2, -3))
        faces[(j, 1)] = (3.0 * (g0 - g1) - (g1 - g2)) / (2.0 * h)
    return BoundaryField(grid, faces)


def boundary_mask(grid: Grid, margin: int = 1) -> np.ndarray:
    """True on nodes closer than ``margin`` cells to any face."""
    mask = np.zeros(grid.shape, dtype=bool)
    for j in range(grid.dim):
        idx = np.arange(grid.counts[j])
        near = (idx < margin) | (idx > grid.counts[j] - 1 - margin)
        shape = [1] * grid.dim
        shape[j] = -1
        mask |= near.reshape(shape)
    return mask
