"""Right-hand sides of the sphere-valued flows and explicit time marching.

Every RHS takes the grid and a field ``u`` of shape ``grid.shape + (3,)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import geometry
from .demag import demag_field
from .errors import (BlowUp, BoundaryFluxNonzero, CFLViolation, ConfigError, DimensionError,
                     NotDivergenceFree, ZeroVector)
from .grid import Grid, divergence, gradient_neumann, l2_norm, laplacian_neumann
from .rng import LCG64

SCHEMES = ("explicit-euler", "rk4")
PHYSICS = ("pure", "perturbed", "landau-lifshitz", "incompressible")
SCHEME_ORDER = {"explicit-euler": 1, "rk4": 4}
BLOWUP_TOL = 0.1
DIV_TOL = 1e-8


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    epsilon: float = 0.0
    scheme: str = "rk4"
    renormalize_every: int = 1
    physics: str = "perturbed"
    anisotropy_axis: tuple[float, float, float] | None = None
    anisotropy_strength: float = 0.0
    include_demag: bool = False
    cfl_safety: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise ConfigError(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.physics not in PHYSICS:
            raise ConfigError(f"physics must be one of {PHYSICS}, got {self.physics!r}")
        if int(self.renormalize_every) != self.renormalize_every or self.renormalize_every < 1:
            raise ConfigError("renormalize_every must be an integer >= 1")
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ConfigError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if self.anisotropy_strength < 0:
            raise ConfigError("anisotropy strength K must be >= 0")
        if self.anisotropy_axis is not None:
            a = np.asarray(self.anisotropy_axis, float)
            if a.shape != (3,) or not geometry.is_unit(a, 1e-12):
                raise ConfigError(f"anisotropy axis must be a unit 3-vector, got {self.anisotropy_axis}")
            object.__setattr__(self, "anisotropy_axis", tuple(float(x) for x in a))

    @property
    def order(self) -> int:
        return SCHEME_ORDER[self.scheme]

    def check_cfl(self, grid: Grid) -> None:
        limit = max_stable_dt(grid, self.epsilon, self.cfl_safety)
        if self.dt > limit * (1 + 1e-12):
            raise CFLViolation(f"dt={self.dt:g} exceeds the CFL limit {limit:g} on grid {grid.shape}")


def max_stable_dt(grid: Grid, epsilon: float = 0.0, cfl_safety: float = 0.5) -> float:
    """cfl_safety * min h^2 / (2 d (1 + epsilon))."""
    return cfl_safety * grid.min_spacing ** 2 / (2 * grid.dim * (1.0 + epsilon))


def grad_energy_density(grid: Grid, u: np.ndarray) -> np.ndarray:
    """|grad u|^2 summed over components and directions."""
    g = gradient_neumann(grid, u)
    return np.einsum("...ij,...ij->...", g, g)


def tension(grid: Grid, u: np.ndarray) -> np.ndarray:
    """tau(u) = Lap u + |grad u|^2 u."""
    return laplacian_neumann(grid, u) + grad_energy_density(grid, u)[..., None] * u


def rhs_perturbed(grid: Grid, u: np.ndarray, epsilon: float) -> np.ndarray:
    """epsilon * tau(u) + u x Lap u."""
    lap = laplacian_neumann(grid, u)
    out = geometry.cross(u, lap)
    if epsilon:
        out += epsilon * (lap + grad_energy_density(grid, u)[..., None] * u)
    return out


def rhs_schroedinger(grid: Grid, u: np.ndarray) -> np.ndarray:
    return rhs_perturbed(grid, u, 0.0)


def perturbation_form_gap(grid: Grid, u: np.ndarray, epsilon: float) -> float:
    """L^2 distance between epsilon*tau(u) and -epsilon*u x (u x Lap u).

    The two damping forms agree on the sphere; off it (before
    renormalization, or for Galerkin iterates) they differ, and this
    reports by how much.
    """
    lap = laplacian_neumann(grid, u)
    a = epsilon * (lap + grad_energy_density(grid, u)[..., None] * u)
    b = -epsilon * geometry.cross(u, geometry.cross(u, lap))
    return l2_norm(grid, a - b)


def ll_effective_field(grid: Grid, u: np.ndarray, config: SolverConfig) -> np.ndarray:
    """h = Lap u + h_d(u) - grad Phi(u) with easy-axis
    Phi(u) = K/2 (1 - <u, a>^2), whose ambient gradient gives K <u, a> a."""
    h = laplacian_neumann(grid, u)
    if config.include_demag:
        h = h + demag_field(grid, u)
    if config.anisotropy_axis is not None and config.anisotropy_strength > 0:
        a = np.asarray(config.anisotropy_axis)
        h = h + config.anisotropy_strength * (u @ a)[..., None] * a
    return h


def rhs_landau_lifshitz(grid: Grid, u: np.ndarray, config: SolverConfig) -> np.ndarray:
    return -geometry.cross(u, ll_effective_field(grid, u, config))


def check_velocity(grid: Grid, v: np.ndarray, div_tol: float = DIV_TOL) -> None:
    """Raise unless ``v`` is discretely divergence-free and tangent to the
    boundary."""
    flux = 0.0
    for j in range(grid.dim):
        vj = np.moveaxis(v[..., j], j, 0)
        flux = max(flux, float(np.max(np.abs(vj[0]))), float(np.max(np.abs(vj[-1]))))
    if flux > div_tol:
        raise BoundaryFluxNonzero(f"max |<v, nu>| on the boundary = {flux:.3e} > {div_tol:g}")
    div = divergence(grid, v)
    if np.max(np.abs(div)) > div_tol:
        raise NotDivergenceFree(f"max |div v| = {np.max(np.abs(div)):.3e} > {div_tol:g}")


def cellular_flow(grid: Grid, amplitude: float = 1.0) -> np.ndarray:
    """Single-cell swirl in the x-y plane, the grid-consistent curl of
    psi = A sin(pi x / Lx) sin(pi y / Ly), so its discrete divergence vanishes
    to round-off and it is tangent to every face."""
    if grid.dim < 2:
        raise DimensionError("a cellular flow needs at least two dimensions")
    (hx, hy), (lx, ly) = grid.spacing[:2], grid.extents[:2]
    sx, sy = np.pi * grid.coords[0] / lx, np.pi * grid.coords[1] / ly
    v = np.zeros(grid.shape + (grid.dim,))
    v[..., 0] = amplitude * np.sin(sx) * np.cos(sy) * np.sin(np.pi * hy / ly) / hy
    v[..., 1] = -amplitude * np.cos(sx) * np.sin(sy) * np.sin(np.pi * hx / lx) / hx
    for j in range(2):
        # pin exact zeros of sin on the faces
        vj = np.moveaxis(v[..., j], j, 0)
        vj[0] = vj[-1] = 0.0
    return v


def rhs_incompressible(grid: Grid, u: np.ndarray, v: np.ndarray, *, div_tol: float = DIV_TOL,
                       check: bool = True) -> np.ndarray:
    """-sum_j v_j d_j u + u x Lap u for a solenoidal velocity ``v`` with
    ``grid.dim`` components."""
    if check:
        check_velocity(grid, v, div_tol)
    g = gradient_neumann(grid, u)
    return -np.einsum("...ij,...j->...i", g, v) + rhs_schroedinger(grid, u)


def rhs(grid: Grid, u: np.ndarray, config: SolverConfig, velocity: np.ndarray | None = None) -> np.ndarray:
    """Dispatch on ``config.physics``."""
    if config.physics == "perturbed":
        return rhs_perturbed(grid, u, config.epsilon)
    if config.physics == "pure":
        return rhs_schroedinger(grid, u)
    if config.physics == "landau-lifshitz":
        return rhs_landau_lifshitz(grid, u, config)
    if velocity is None:
        raise ConfigError("incompressible physics needs a velocity field")
    return rhs_incompressible(grid, u, velocity, check=False)


def renormalize(u: np.ndarray) -> np.ndarray:
    norm = np.sqrt(geometry.dot(u, u))
    if np.any(norm == 0):
        raise ZeroVector("cannot renormalize a field with a zero vector")
    return u / norm[..., None]


def unit_violation(u: np.ndarray) -> float:
    """max | |u| - 1 | over nodes."""
    return float(np.max(np.abs(np.sqrt(geometry.dot(u, u)) - 1.0)))


def step(grid: Grid, u: np.ndarray, config: SolverConfig, *, index: int = 0,
         velocity: np.ndarray | None = None) -> tuple[np.ndarray, float]:
    """Advance one step of size ``config.dt``.

    ``index`` counts completed steps; renormalization runs after the step
    when ``(index + 1) % renormalize_every == 0``. Returns the new field
    and the pre-renormalization unit violation.
    """
    dt = config.dt
    f = lambda w: rhs(grid, w, config, velocity)
    if config.scheme == "explicit-euler":
        new = u + dt * f(u)
    else:
        k1 = f(u)
        k2 = f(u + 0.5 * dt * k1)
        k3 = f(u + 0.5 * dt * k2)
        k4 = f(u + dt * k3)
        new = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(new)):
        raise BlowUp(f"non-finite values after step {index + 1}")
    violation = unit_violation(new)
    if violation > BLOWUP_TOL:
        raise BlowUp(f"| |u| - 1 | reached {violation:.3e} at step {index + 1}")
    if (index + 1) % config.renormalize_every == 0:
        new = renormalize(new)
    return new, violation


@dataclass
class Trajectory:
    """Snapshots at uniform spacing ``dt`` (the step size times the stride)."""

    grid: Grid
    config: SolverConfig
    times: list[float] = field(default_factory=list)
    snapshots: list[np.ndarray] = field(default_factory=list)
    unit_violations: list[float] = field(default_factory=list)
    stride: int = 1

    @property
    def dt(self) -> float:
        return self.config.dt * self.stride

    def __len__(self) -> int:
        return len(self.snapshots)

    def append(self, t: float, u: np.ndarray) -> None:
        if self.times and not t > self.times[-1]:
            raise ValueError("snapshot times must increase")
        self.times.append(float(t))
        self.snapshots.append(u)

    @property
    def final(self) -> np.ndarray:
        return self.snapshots[-1]


def run(grid: Grid, u0: np.ndarray, config: SolverConfig, n_steps: int, *, stride: int = 1,
        velocity: np.ndarray | None = None, check_cfl: bool = True,
        callback: Callable[[int, float, np.ndarray], None] | None = None) -> Trajectory:
    """March ``n_steps`` steps, storing every ``stride``-th state (and the
    initial one)."""
    if check_cfl:
        config.check_cfl(grid)
    if velocity is not None and config.physics == "incompressible":
        check_velocity(grid, velocity)
    traj = Trajectory(grid, config, stride=stride)
    u = np.array(u0, dtype=float)
    traj.append(0.0, u)
    for n in range(n_steps):
        u, viol = step(grid, u, config, index=n, velocity=velocity)
        traj.unit_violations.append(viol)
        t = (n + 1) * config.dt
        if callback is not None:
            callback(n + 1, t, u)
        if (n + 1) % stride == 0:
            traj.append(t, u)
    return traj


def laplacian_consistency_residual(grid: Grid, u: np.ndarray, u_t: np.ndarray, epsilon: float) -> float:
    """L^2 norm of Lap u - [(eps u_t - u x u_t)/(1 + eps^2) - |grad u|^2 u]."""
    lap = laplacian_neumann(grid, u)
    recon = (epsilon * u_t - geometry.cross(u, u_t)) / (1.0 + epsilon ** 2)
    recon -= grad_energy_density(grid, u)[..., None] * u
    return l2_norm(grid, lap - recon)


# --- initial data -----------------------------------------------------------

Mode = tuple[float, Sequence[int]]


def cosine_mode(grid: Grid, k: Sequence[int]) -> np.ndarray:
    """prod_j cos(k_j pi x_j / L_j) sampled on the grid (unnormalized)."""
    k = tuple(k) + (0,) * (grid.dim - len(k))
    out = np.ones(grid.shape)
    for j, kj in enumerate(k[: grid.dim]):
        if kj:
            out = out * np.cos(kj * np.pi * grid.coords[j] / grid.extents[j])
    return out


def _mode_sum(grid: Grid, modes: Sequence[Mode], offset: float = 0.0) -> np.ndarray:
    out = np.full(grid.shape, float(offset))
    for amp, k in modes:
        out += amp * cosine_mode(grid, k)
    return out


def from_angles(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def random_modes(seed: int, n_modes: int, max_k: int, amplitude: float, dim: int) -> list[Mode]:
    """Mode list drawn from the portable LCG: per mode, ``dim`` wavenumbers
    in 0..max_k, then an amplitude in [-amplitude, amplitude]."""
    rng = LCG64(seed)
    modes = []
    for _ in range(n_modes):
        k = tuple(min(int(rng.random() * (max_k + 1)), max_k) for _ in range(dim))
        modes.append((rng.uniform(-amplitude, amplitude), k))
    return modes


def make_initial_data(kind: str, params: dict | None, grid: Grid) -> np.ndarray:
    """Build u0 = (sin t cos p, sin t sin p, cos t).

    kinds
        ``constant``: ``direction`` (unit 3-vector, default north pole).
        ``modes``: ``theta`` and ``phi`` lists of ``(amplitude, k)`` cosine
        modes plus optional offsets ``theta0``, ``phi0``.
        ``random``: ``seed``, ``n_modes``, ``max_k``, ``amplitude``; theta
        modes are drawn first, then phi modes.
        ``ramp``: theta = ``slope`` * x_axis. Not Neumann-compatible; meant
        as a negative control.
    """
    params = dict(params or {})
    if kind == "constant":
        d = np.asarray(params.get("direction", (0.0, 0.0, 1.0)), float)
        d = d / np.linalg.norm(d)
        return np.broadcast_to(d, grid.shape + (3,)).copy()
    if kind == "modes":
        theta = _mode_sum(grid, params.get("theta", ()), params.get("theta0", 0.0))
        phi = _mode_sum(grid, params.get("phi", ()), params.get("phi0", 0.0))
        return from_angles(theta, phi)
    if kind == "random":
        seed = int(params.get("seed", 0))
        n_modes = int(params.get("n_modes", 3))
        max_k = int(params.get("max_k", 2))
        amp = float(params.get("amplitude", 0.5))
        modes = random_modes(seed, 2 * n_modes, max_k, amp, grid.dim)
        theta = _mode_sum(grid, modes[:n_modes], params.get("theta0", 0.0))
        phi = _mode_sum(grid, modes[n_modes:], params.get("phi0", 0.0))
        return from_angles(theta, phi)
    if kind == "ramp":
        axis = int(params.get("axis", 0))
        theta = float(params.get("slope", 1.0)) * grid.coords[axis] * np.ones(grid.shape)
        return from_angles(theta, np.zeros(grid.shape))
    raise ConfigError(f"unknown initial-data kind {kind!r}")


def rotate_perturbation(grid: Grid, u: np.ndarray, amplitude: float,
                        axis: Sequence[float] = (1.0, 0.0, 0.0), k: Sequence[int] = (1,)) -> np.ndarray:
    """Rotate ``u`` nodewise about ``axis`` by ``amplitude * cos(k pi x / L)``.

    The result stays unit and Neumann-compatible, and differs from ``u``
    by at most ``amplitude`` in geodesic distance.
    """
    a = np.asarray(axis, float)
    a = a / np.linalg.norm(a)
    angle = (amplitude * cosine_mode(grid, k))[..., None]
    axu = geometry.cross(a, u)
    return (u * np.cos(angle) + axu * np.sin(angle)
            + a * geometry.dot(a, u)[..., None] * (1.0 - np.cos(angle)))
