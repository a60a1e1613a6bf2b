"""Demagnetizing field by direct quadrature of the Newtonian potential.

With N(x) = -1/(4 pi |x|) the field is h_d = -grad(phi), where

    phi(x) = int_Omega <grad N(x - y), u(y)> dy,   grad N(r) = r / (4 pi |r|^3).

phi is summed directly over all node pairs (O(M^2) for M nodes). Each
node carries its trapezoid control box; boxes near the target node are
integrated exactly and distant ones by the point rule.
"""

from __future__ import annotations

from functools import lru_cache

import numba
import numpy as np

from .errors import DimensionError
from .grid import Grid


def _antiderivative(a, y, z):
    """F with d^2F/dydz = 1/sqrt(a^2 + y^2 + z^2), for a >= 0."""
    a, y, z = np.broadcast_arrays(np.asarray(a, float), np.asarray(y, float), np.asarray(z, float))
    r = np.hypot(np.hypot(a, y), z)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # y asinh(z / hypot(a, y)) in log form, which stays finite when hypot(a, y) is subnormal
        t1 = np.where(y == 0, 0.0, y * np.sign(z) * (np.log(np.abs(z) + r) - np.log(np.hypot(a, y))))
        t2 = np.where(z == 0, 0.0, z * np.sign(y) * (np.log(np.abs(y) + r) - np.log(np.hypot(a, z))))
    t3 = a * np.arctan2(y * z, a * r)
    return t1 + t2 - t3


def _face_integral(a, y0, y1, z0, z1):
    """Integral of 1/|r| over the rectangle [y0,y1] x [z0,z1] at height a."""
    F = _antiderivative
    return F(a, y1, z1) - F(a, y0, z1) - F(a, y1, z0) + F(a, y0, z0)


def box_integral_grad_newton(lo, hi) -> np.ndarray:
    """Exact integral of r / (4 pi |r|^3) over the box ``lo <= r <= hi``.

    ``lo`` and ``hi`` have shape (..., 3); the box may contain the origin.
    """
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    out = np.empty(np.broadcast_shapes(lo.shape, hi.shape))
    for ax in range(3):
        j, k = (ax + 1) % 3, (ax + 2) % 3
        # r_ax / |r|^3 = -d/dr_ax (1/|r|)
        lower = _face_integral(np.abs(lo[..., ax]), lo[..., j], hi[..., j], lo[..., k], hi[..., k])
        upper = _face_integral(np.abs(hi[..., ax]), lo[..., j], hi[..., j], lo[..., k], hi[..., k])
        out[..., ax] = (lower - upper) / (4.0 * np.pi)
    return out


NEAR = 3
"""Pairs within this many cells along every axis use exact box integrals."""


@numba.njit(cache=True)
def _direct_sum(kernel, near, kind0, kind1, kind2, source, weighted):
    n0, n1, n2 = source.shape[0], source.shape[1], source.shape[2]
    m = (near.shape[3] - 1) // 2
    out = np.zeros((n0, n1, n2))
    for i in range(n0):
        for j in range(n1):
            for k in range(n2):
                acc = 0.0
                for a in range(n0):
                    ia = i - a + n0 - 1
                    for b in range(n1):
                        jb = j - b + n1 - 1
                        for c in range(n2):
                            kc = k - c + n2 - 1
                            if abs(i - a) <= m and abs(j - b) <= m and abs(k - c) <= m:
                                t = near[kind0[a], kind1[b], kind2[c], i - a + m, j - b + m, k - c + m]
                                acc += t[0] * source[a, b, c, 0] + t[1] * source[a, b, c, 1] + t[2] * source[a, b, c, 2]
                            else:
                                acc += (kernel[ia, jb, kc, 0] * weighted[a, b, c, 0]
                                        + kernel[ia, jb, kc, 1] * weighted[a, b, c, 1]
                                        + kernel[ia, jb, kc, 2] * weighted[a, b, c, 2])
                out[i, j, k] = acc
    return out


def _node_kinds(n: int) -> np.ndarray:
    """Control-box kind per node along one axis: 0 full, 1 first node, 2 last node."""
    kinds = np.zeros(n, dtype=np.int64)
    kinds[0], kinds[-1] = 1, 2
    return kinds


@lru_cache(maxsize=8)
def _tables(grid: Grid):
    h = np.array(grid.spacing)
    offsets = [np.arange(-(n - 1), n) * hj for n, hj in zip(grid.counts, h)]
    R = np.stack(np.meshgrid(*offsets, indexing="ij"), axis=-1)
    r = np.linalg.norm(R, axis=-1)
    centre = tuple(n - 1 for n in grid.counts)
    r[centre] = 1.0
    kernel = R / (4.0 * np.pi * r[..., None] ** 3)
    kernel[centre] = 0.0

    # control box of a node at y_j, per axis, as y - y_j in [box_lo, box_hi] by kind
    box_lo = np.stack([-h / 2, np.zeros(3), -h / 2])
    box_hi = np.stack([h / 2, h / 2, np.zeros(3)])
    d = np.arange(-NEAR, NEAR + 1)
    lo = np.empty((3, 3, 3, len(d), len(d), len(d), 3))
    hi = np.empty_like(lo)
    for ax in range(3):
        shape_k = [1, 1, 1, 1, 1, 1]
        shape_k[ax] = 3
        shape_d = [1, 1, 1, 1, 1, 1]
        shape_d[3 + ax] = len(d)
        # r = x_i - y ranges over d h - [box_lo, box_hi]
        dh = (d * h[ax]).reshape(shape_d)
        lo[..., ax] = dh - box_hi[:, ax].reshape(shape_k)
        hi[..., ax] = dh - box_lo[:, ax].reshape(shape_k)
    near = box_integral_grad_newton(lo, hi)
    kinds = tuple(_node_kinds(n) for n in grid.counts)
    return np.ascontiguousarray(kernel), np.ascontiguousarray(near), kinds


def newton_potential(grid: Grid, u: np.ndarray) -> np.ndarray:
    """phi(x) = int <grad N(x - y), u(y)> dy at every node.

    u is taken constant on each node's control box. Boxes within ``NEAR``
    cells are integrated exactly, farther ones by the point rule.
    """
    if grid.dim != 3:
        raise DimensionError(f"the demagnetizing field is defined for 3D grids, got dim={grid.dim}")
    grid.check(u)
    kernel, near, kinds = _tables(grid)
    source = np.ascontiguousarray(u, dtype=float)
    weighted = np.ascontiguousarray(grid.weights[..., None] * source)
    return _direct_sum(kernel, near, *kinds, source, weighted)


def demag_field(grid: Grid, u: np.ndarray) -> np.ndarray:
    """h_d(u) = -grad(phi); one-sided second-order differences on the faces,
    since phi itself carries no Neumann condition."""
    phi = newton_potential(grid, u)
    grads = np.gradient(phi, *grid.spacing, edge_order=2)
    return -np.stack(grads, axis=-1)
