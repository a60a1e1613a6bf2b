"""Neumann cosine eigenbasis of Lap - I on a box and the Galerkin flow.

The eigenpairs are ``(Lap - I) f_k = -lambda_k f_k`` with
``lambda_k = 1 + sum_j (k_j pi / L_j)^2`` and
``f_k = prod_j c_{k_j} cos(k_j pi x_j / L_j)``, sampled at the grid nodes.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from . import geometry
from .errors import GridMismatch, TooManyModes
from .grid import Grid, gradient_neumann, l2_norm
from .io import write_csv


class AliasingWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class NeumannBasis:
    grid: Grid
    modes: np.ndarray
    """(n, d) integer multi-indices, sorted by eigenvalue then lexicographically."""
    eigenvalues: np.ndarray
    """lambda_k of Lap - I (continuum values)."""
    grid_eigenvalues: np.ndarray
    """Eigenvalues of the mirror-ghost Laplacian on the same sampled modes."""
    functions: np.ndarray
    """(n, M) sampled eigenfunctions, M = number of nodes."""

    @property
    def n(self) -> int:
        return len(self.modes)

    def laplacian_eigenvalues(self, kind: str = "grid") -> np.ndarray:
        """Multipliers of the spectral Laplacian on the coefficients."""
        if kind == "grid":
            return self.grid_eigenvalues
        if kind == "continuum":
            return -(self.eigenvalues - 1.0)
        raise ValueError(f"unknown Laplacian kind {kind!r}")


def _axis_factor(k: int, n: int, L: float, x: np.ndarray) -> np.ndarray:
    if k == 0:
        c = 1.0 / np.sqrt(L)
    else:
        c = np.sqrt(2.0 / L)
        if k == n - 1:
            # the highest representable cosine has twice the trapezoid norm
            c /= np.sqrt(2.0)
    return c * np.cos(k * np.pi * x / L)


def build_basis(grid: Grid, n: int) -> NeumannBasis:
    """First ``n`` Neumann modes representable on ``grid``.

    Modes with k_j <= N_j - 1 span the grid functions, so ``n`` may not
    exceed the node count. The sampled functions are orthonormal under the
    trapezoid rule.
    """
    if n > grid.size:
        raise TooManyModes(f"{n} modes requested but the grid has only {grid.size} nodes")
    if n < 1:
        raise ValueError("need at least one mode")
    ranges = [range(N) for N in grid.counts]
    all_modes = np.array(list(itertools.product(*ranges)), dtype=int)
    kpi = all_modes * (np.pi / np.array(grid.extents))
    lam = 1.0 + np.sum(kpi ** 2, axis=1)
    # rounded key so that degenerate eigenvalues tie exactly
    key = np.round(lam, 9)
    order = np.lexsort(tuple(all_modes[:, j] for j in reversed(range(grid.dim))) + (key,))
    modes = all_modes[order[:n]]
    lam = lam[order[:n]]

    h = np.array(grid.spacing)
    grid_lam = -np.sum((2.0 / h ** 2) * (1.0 - np.cos(modes * np.pi * h / np.array(grid.extents))), axis=1)

    if np.any(2 * modes.max(axis=0) + 2 > np.array(grid.counts)):
        warnings.warn("retained modes exceed N_j >= 2 max k_j + 2; pointwise products alias",
                      AliasingWarning, stacklevel=2)

    funcs = np.empty((n, grid.size))
    axes = [grid.axis_coords(j) for j in range(grid.dim)]
    for i, k in enumerate(modes):
        f = np.ones(())
        for j in range(grid.dim):
            f = np.multiply.outer(f, _axis_factor(int(k[j]), grid.counts[j], grid.extents[j], axes[j]))
        funcs[i] = f.ravel()
    return NeumannBasis(grid, modes, lam, grid_lam, funcs)


@dataclass
class GalerkinState:
    coefficients: np.ndarray
    """(n, 3) coefficients of the three ambient components."""
    basis: NeumannBasis
    time: float = 0.0


def project_coefficients(basis: NeumannBasis, f: np.ndarray) -> np.ndarray:
    """Trapezoid inner products <f, f_i>; ``f`` scalar or vector field."""
    grid = basis.grid
    if tuple(f.shape[: grid.dim]) != grid.shape:
        raise GridMismatch(f"field of shape {f.shape} is not on the basis grid {grid.shape}")
    w = grid.weights.ravel()
    flat = f.reshape(grid.size, -1) if f.ndim > grid.dim else f.reshape(grid.size, 1)
    c = basis.functions @ (w[:, None] * flat)
    return c if f.ndim > grid.dim else c[:, 0]


def project(f: np.ndarray, basis: NeumannBasis, time: float = 0.0) -> GalerkinState:
    return GalerkinState(project_coefficients(basis, f), basis, time)


def synthesize(basis: NeumannBasis, coefficients: np.ndarray) -> np.ndarray:
    grid = basis.grid
    vals = basis.functions.T @ coefficients
    return vals.reshape(grid.shape + coefficients.shape[1:])


def reconstruct(state: GalerkinState) -> np.ndarray:
    return synthesize(state.basis, state.coefficients)


def projector(basis: NeumannBasis, f: np.ndarray) -> np.ndarray:
    """P_n f as a grid field."""
    return synthesize(basis, project_coefficients(basis, f))


def projection_error(basis: NeumannBasis, f: np.ndarray) -> float:
    """||f - P_n f|| from the coefficients P_n discards.

    The full basis spans the grid functions, so by discrete Parseval the
    error is the root sum of squares of the dropped coefficients. Unlike the
    direct difference this does not cancel down to round-off once the
    spectral tail is below machine precision.
    """
    grid = basis.grid
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AliasingWarning)
        full = build_basis(grid, grid.size)
    if not np.array_equal(full.modes[: basis.n], basis.modes):
        raise GridMismatch("basis modes are not a prefix of the full basis on its grid")
    tail = project_coefficients(full, f)[basis.n:]
    return float(np.sqrt(np.sum(tail ** 2)))


def galerkin_rhs(state: GalerkinState, epsilon: float, laplacian: str = "grid") -> np.ndarray:
    """Coefficient derivative of
    ``d/dt u = eps Lap u + eps P(|grad u|^2 u) + P(u x Lap u)``.

    The linear term acts on the coefficients directly; the nonlinear terms
    are formed pointwise on the grid from the reconstructed field and
    projected back. ``laplacian="grid"`` uses the eigenvalues of the
    mirror-ghost stencil, so at full truncation the scheme reproduces the
    finite-difference right-hand side; ``"continuum"`` uses -(lambda_k - 1).
    """
    basis = state.basis
    grid = basis.grid
    c = state.coefficients
    mu = basis.laplacian_eigenvalues(laplacian)
    lap_c = mu[:, None] * c
    u = synthesize(basis, c)
    lap_u = synthesize(basis, lap_c)
    nonlinear = geometry.cross(u, lap_u)
    out = project_coefficients(basis, nonlinear)
    if epsilon:
        g = gradient_neumann(grid, u)
        g2 = np.einsum("...ij,...ij->...", g, g)
        out += epsilon * (lap_c + project_coefficients(basis, g2[..., None] * u))
    return out


def step_galerkin(state: GalerkinState, epsilon: float, dt: float, scheme: str = "rk4",
                  laplacian: str = "grid") -> GalerkinState:
    """One explicit step on the coefficients; the iterate is not renormalized."""
    f = lambda c: galerkin_rhs(GalerkinState(c, state.basis), epsilon, laplacian)
    c = state.coefficients
    if scheme == "explicit-euler":
        new = c + dt * f(c)
    elif scheme == "rk4":
        k1 = f(c)
        k2 = f(c + 0.5 * dt * k1)
        k3 = f(c + 0.5 * dt * k2)
        k4 = f(c + dt * k3)
        new = c + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return GalerkinState(new, state.basis, state.time + dt)


def evolve_galerkin(state: GalerkinState, epsilon: float, dt: float, n_steps: int,
                    scheme: str = "rk4", laplacian: str = "grid") -> list[GalerkinState]:
    states = [state]
    for _ in range(n_steps):
        state = step_galerkin(state, epsilon, dt, scheme, laplacian)
        states.append(state)
    return states


def galerkin_energy(state: GalerkinState) -> float:
    """int (|u^n|^2 + |grad u^n|^2) on the grid."""
    grid = state.basis.grid
    u = reconstruct(state)
    g = gradient_neumann(grid, u)
    return l2_norm(grid, u) ** 2 + l2_norm(grid, g) ** 2


def max_unit_deviation(state: GalerkinState) -> float:
    u = reconstruct(state)
    return float(np.max(np.abs(np.sqrt(geometry.dot(u, u)) - 1.0)))


def dump_coefficients(path, state: GalerkinState) -> None:
    """CSV with columns (mode multi-index, lambda, c_x, c_y, c_z)."""
    basis = state.basis
    header = [f"k{j}" for j in range(basis.grid.dim)] + ["lambda", "c_x", "c_y", "c_z"]
    rows = ([*map(int, k), lam, *c] for k, lam, c in
            zip(basis.modes, basis.eigenvalues, state.coefficients))
    write_csv(path, header, rows)
