"""Runtime checks built from the analytic identities of the flow.

Time derivatives are central differences of consecutive snapshots; spatial
operators come from :mod:`spinflow.grid` unless noted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import geometry
from .dynamics import SolverConfig, Trajectory, check_velocity, grad_energy_density, step, tension
from .errors import DistanceTooLarge, GridMismatch, TooFewSnapshots
from .grid import (Grid, boundary_mask, boundary_normal_derivative, gradient_neumann,
                   integrate, l2_norm, laplacian_neumann, sobolev_norm)

LOG_FLOOR = 1e-300


@dataclass
class DiagnosticsRecord:
    time: float
    l2_norm: float
    h1_energy: float
    dissipation: float
    sobolev_h2: float
    sobolev_h3: float
    bc_residual: float
    wave1_residual: float
    wave2_residual: float
    unit_violation: float


@dataclass
class UniquenessRecord:
    time: float
    Q1: float
    Q2: float
    max_distance: float


def h1_energy(grid: Grid, u: np.ndarray) -> float:
    """int (|u|^2 + |grad u|^2)."""
    return float(integrate(grid, np.einsum("...i,...i->...", u, u) + grad_energy_density(grid, u)))


def dissipation(grid: Grid, u: np.ndarray, epsilon: float) -> float:
    """2 eps int |u x Lap u|^2."""
    if not epsilon:
        return 0.0
    w = geometry.cross(u, laplacian_neumann(grid, u))
    return 2.0 * epsilon * float(integrate(grid, np.einsum("...i,...i->...", w, w)))


def h1_identity_residual(traj: Trajectory, epsilon: float) -> np.ndarray:
    """|(E_{k+1} - E_{k-1}) / (2 dt) + 2 eps int |u_k x Lap u_k|^2| for the
    interior snapshots k = 1 .. K-2."""
    if len(traj) < 3:
        raise TooFewSnapshots(f"need at least 3 snapshots, got {len(traj)}")
    grid = traj.grid
    E = [h1_energy(grid, u) for u in traj.snapshots]
    diss = [dissipation(grid, u, epsilon) for u in traj.snapshots]
    return h1_residual_series(E, diss, traj.dt)


def h1_residual_series(energies: Sequence[float], dissipations: Sequence[float], dt: float) -> np.ndarray:
    """Same residual from precomputed per-snapshot energies and dissipations."""
    E = np.asarray(energies, float)
    diss = np.asarray(dissipations, float)
    if len(E) < 3:
        raise TooFewSnapshots(f"need at least 3 snapshots, got {len(E)}")
    return np.abs((E[2:] - E[:-2]) / (2.0 * dt) + diss[1:-1])


def _time_derivatives(u_prev, u_now, u_next, dt):
    return (u_next - u_prev) / (2.0 * dt), (u_next - 2.0 * u_now + u_prev) / dt ** 2


def wave1_residual(grid: Grid, u_prev: np.ndarray, u_now: np.ndarray, u_next: np.ndarray,
                   epsilon: float, dt: float) -> float:
    """L^2 norm of
    u_tt - [eps (Lap u_t + d_t(|grad u|^2 u)) + u_t x Lap u + u x Lap u_t]."""
    u_t, u_tt = _time_derivatives(u_prev, u_now, u_next, dt)
    lap_u = laplacian_neumann(grid, u_now)
    lap_ut = laplacian_neumann(grid, u_t)
    rhs = geometry.cross(u_t, lap_u) + geometry.cross(u_now, lap_ut)
    if epsilon:
        g_next = grad_energy_density(grid, u_next)[..., None] * u_next
        g_prev = grad_energy_density(grid, u_prev)[..., None] * u_prev
        rhs += epsilon * (lap_ut + (g_next - g_prev) / (2.0 * dt))
    return l2_norm(grid, u_tt - rhs)


# --- fourth-order identities on a reflect-padded copy --------------------

PAD = 3
INTERIOR_MARGIN = 2


class _Padded:
    """Central differences on a field extended by even reflection.

    Each difference leaves NaN in its outermost layer, so any use of
    values outside the valid region shows up in the result.
    """

    def __init__(self, grid: Grid, pad: int = PAD):
        self.grid = grid
        self.pad = pad
        self.h = grid.spacing
        self.d = grid.dim

    def extend(self, f: np.ndarray) -> np.ndarray:
        width = [(self.pad, self.pad)] * self.d + [(0, 0)] * (f.ndim - self.d)
        return np.pad(f, width, mode="reflect")

    def crop(self, f: np.ndarray) -> np.ndarray:
        p = self.pad
        return f[(slice(p, -p),) * self.d]

    def D(self, f, j):
        out = np.full_like(f, np.nan)
        sl = lambda s: tuple([slice(None)] * j + [s])
        out[sl(slice(1, -1))] = (f[sl(slice(2, None))] - f[sl(slice(None, -2))]) / (2.0 * self.h[j])
        return out

    def D2(self, f, j):
        out = np.full_like(f, np.nan)
        sl = lambda s: tuple([slice(None)] * j + [s])
        out[sl(slice(1, -1))] = (f[sl(slice(2, None))] - 2.0 * f[sl(slice(1, -1))]
                                 + f[sl(slice(None, -2))]) / self.h[j] ** 2
        return out

    def Dij(self, f, i, j):
        return self.D2(f, i) if i == j else self.D(self.D(f, j), i)

    def lap(self, f):
        return sum(self.D2(f, j) for j in range(self.d))


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


class _Terms:
    """Spatial building blocks of the wave-type identities for one field."""

    def __init__(self, P: _Padded, u: np.ndarray):
        self.P = P
        d = P.d
        self.u = u
        self.du = [P.D(u, i) for i in range(d)]
        self.lap = P.lap(u)
        self.g2 = sum(_dot(g, g) for g in self.du)
        self.g2u = self.g2[..., None] * u
        self.tau = self.lap + self.g2u

    def div_cross(self):
        """sum_ij d_i (d_j u x d_ij u)."""
        P, d = self.P, self.P.d
        return sum(P.D(geometry.cross(self.du[j], P.Dij(self.u, i, j)), i)
                   for i in range(d) for j in range(d))

    def div2_scalar(self):
        """sum_ij d_ij (d_i u . d_j u)."""
        P, d = self.P, self.P.d
        return sum(P.Dij(_dot(self.du[i], self.du[j]), i, j) for i in range(d) for j in range(d))

    def grad_g2_dot(self):
        """sum_i d_i |grad u|^2 d_i u."""
        return sum(self.P.D(self.g2, i)[..., None] * self.du[i] for i in range(self.P.d))

    def lap_dot(self):
        """sum_i <Lap u, d_i u> d_i u."""
        return sum(_dot(self.lap, g)[..., None] * g for g in self.du)

    def contracted_rhs(self):
        """Right side of the contracted eps = 0 form, with Lap^2 u moved left."""
        return (-2.0 * self.div2_scalar()[..., None] * self.u - 2.0 * self.grad_g2_dot()
                - 2.0 * self.lap_dot() - self.g2[..., None] * self.lap)

    def divergence_form_rhs(self):
        """-2 div^2((du.du) u) + 2 div((du.du) du) - div(|grad u|^2 grad u)."""
        P, d, u, du = self.P, self.P.d, self.u, self.du
        out = 0.0
        for i in range(d):
            for j in range(d):
                s = _dot(du[i], du[j])[..., None]
                out = out - 2.0 * P.Dij(s * u, i, j) + 2.0 * P.D(s * du[j], i)
            out = out - P.D(self.g2[..., None] * du[i], i)
        return out


def _interior_norm(grid: Grid, P: _Padded, r: np.ndarray, margin: int) -> float:
    r = P.crop(r)
    mask = ~boundary_mask(grid, margin)
    if not mask.any():
        return math.nan
    rr = np.einsum("...i,...i->...", r, r)[mask]
    if not np.all(np.isfinite(rr)):
        raise RuntimeError("wave-type residual touched an invalid stencil region")
    return float(np.sqrt(np.sum(grid.weights[mask] * rr)))


class Wave2Result(NamedTuple):
    residual: float
    """Interior L^2 residual of the full second-order identity."""
    divergence_form_residual: float | None
    """eps = 0 only: residual of the divergence form."""
    form_gap: float | None
    """eps = 0 only: interior L^2 gap between the two eps = 0 forms."""


def wave2_residual(grid: Grid, u_prev: np.ndarray, u_now: np.ndarray, u_next: np.ndarray,
                   epsilon: float, dt: float, margin: int = INTERIOR_MARGIN) -> Wave2Result:
    """Residual of

        u_tt + (1 - eps^2) Lap tau - 2 eps Lap(u x Lap u)
          = eps {d_t(|grad u|^2 u) - 2 div(grad u x. grad^2 u)
                 + u x Lap(|grad u|^2 u) + |grad u|^2 u x Lap u}
            + Lap(|grad u|^2 u) - 2 div^2(grad u (x). grad u) u
            - 2 <grad |grad u|^2, grad u> - 2 <Lap u, grad u> . grad u
            - |grad u|^2 Lap u

    on nodes at least ``margin`` cells from the boundary.
    """
    P = _Padded(grid)
    u_t, u_tt = _time_derivatives(u_prev, u_now, u_next, dt)
    T = _Terms(P, P.extend(u_now))
    utt = P.extend(u_tt)

    base = T.contracted_rhs()
    lhs = utt + (1.0 - epsilon ** 2) * P.lap(T.tau)
    rhs = P.lap(T.g2u) + base
    if epsilon:
        ucl = geometry.cross(T.u, T.lap)
        lhs = lhs - 2.0 * epsilon * P.lap(ucl)
        g2u_next = grad_energy_density(grid, u_next)[..., None] * u_next
        g2u_prev = grad_energy_density(grid, u_prev)[..., None] * u_prev
        dt_g2u = P.extend((g2u_next - g2u_prev) / (2.0 * dt))
        rhs = rhs + epsilon * (dt_g2u - 2.0 * T.div_cross() + geometry.cross(T.u, P.lap(T.g2u))
                               + T.g2[..., None] * ucl)
    residual = _interior_norm(grid, P, lhs - rhs, margin)
    if epsilon:
        return Wave2Result(residual, None, None)
    lap2 = P.lap(T.lap)
    div_form = _interior_norm(grid, P, utt + lap2 - T.divergence_form_rhs(), margin)
    gap = _interior_norm(grid, P, T.contracted_rhs() - T.divergence_form_rhs(), margin)
    return Wave2Result(residual, div_form, gap)


def wave_form_gap(grid: Grid, u: np.ndarray, margin: int = INTERIOR_MARGIN) -> float:
    """Interior L^2 gap between the two eps = 0 wave-type forms; a purely
    spatial identity that holds exactly for unit fields in the continuum."""
    P = _Padded(grid)
    T = _Terms(P, P.extend(u))
    return _interior_norm(grid, P, T.contracted_rhs() - T.divergence_form_rhs(), margin)


def compatibility_residuals(traj: Trajectory) -> list[tuple[float, float]]:
    """Per interior snapshot: max boundary |d/dnu d_t u| and |d/dnu tau(u)|."""
    if len(traj) < 3:
        raise TooFewSnapshots(f"need at least 3 snapshots, got {len(traj)}")
    grid, s = traj.grid, traj.snapshots
    out = []
    for k in range(1, len(s) - 1):
        u_t = (s[k + 1] - s[k - 1]) / (2.0 * traj.dt)
        out.append((boundary_normal_derivative(grid, u_t).max_abs(),
                    boundary_normal_derivative(grid, tension(grid, s[k])).max_abs()))
    return out


# --- Gronwall comparison time ---------------------------------------------

def gronwall_time(y0: float, C: float) -> float:
    """Blow-up time of y' = C (1 + y)^6 from y(0) = y0:
    int_{y0}^inf dy / (C (1 + y)^6) = 1 / (5 C (1 + y0)^5)."""
    if y0 < 0:
        raise ValueError("y0 must be >= 0")
    if not C > 0:
        raise ValueError("C must be > 0")
    return 1.0 / (5.0 * C * (1.0 + y0) ** 5)


def fit_gronwall_constant(times: Sequence[float], y: Sequence[float]) -> float:
    """Heuristic least-squares C from a measured curve y(t).

    Along the comparison ODE, (1 + y)^-5 = (1 + y0)^-5 - 5 C t, so C is a
    fifth of minus the fitted slope of (1 + y)^-5 against t. The result is
    empirical, not the constant of any a-priori estimate.
    """
    t = np.asarray(times, float)
    if len(t) < 2 or len(t) != len(y):
        raise TooFewSnapshots("the fit needs at least two (t, y) pairs")
    z = (1.0 + np.asarray(y, float)) ** -5
    slope, _ = np.polyfit(t, z, 1)
    return -slope / 5.0


# --- uniqueness functional ------------------------------------------------

def uniqueness_record(grid: Grid, u1: np.ndarray, u2: np.ndarray, time: float) -> UniquenessRecord:
    """Q1 = int d(u1, u2)^2 and Q2 = int |P grad u2 - grad u1|^2, with P the
    nodewise transport from u2(x) to u1(x)."""
    dist = geometry.geodesic_distance(u1, u2)
    dmax = float(np.max(dist))
    if dmax >= np.pi / 2:
        raise DistanceTooLarge(f"sup d(u1, u2) = {dmax:.4f} >= pi/2 at t = {time:g}")
    g1 = np.moveaxis(gradient_neumann(grid, u1), -1, -2)
    g2 = np.moveaxis(gradient_neumann(grid, u2), -1, -2)
    p = np.broadcast_to(u1[..., None, :], g2.shape)
    q = np.broadcast_to(u2[..., None, :], g2.shape)
    phi = geometry.rotate_between(p, q, g2) - g1
    q1 = float(integrate(grid, dist ** 2))
    q2 = float(integrate(grid, np.einsum("...ji,...ji->...", phi, phi)))
    return UniquenessRecord(float(time), q1, q2, dmax)


def uniqueness_monitor(traj1: Trajectory, traj2: Trajectory,
                       floor: float = LOG_FLOOR) -> tuple[list[UniquenessRecord], float]:
    """Q1/Q2 along two trajectories and the largest observed growth rate
    max_k [log(Q_{k+1} + floor) - log(Q_k + floor)] / dt."""
    if traj1.grid != traj2.grid:
        raise GridMismatch("trajectories live on different grids")
    if not math.isclose(traj1.dt, traj2.dt, rel_tol=1e-12) or len(traj1) != len(traj2):
        raise GridMismatch("trajectories differ in time step or length")
    records = [uniqueness_record(traj1.grid, a, b, t)
               for t, a, b in zip(traj1.times, traj1.snapshots, traj2.snapshots)]
    q = np.log(np.array([r.Q1 + r.Q2 for r in records]) + floor)
    slope = float(np.max(np.diff(q)) / traj1.dt) if len(q) > 1 else 0.0
    return records, slope


# --- per-step record --------------------------------------------------------

def diagnostics_record(grid: Grid, u_prev: np.ndarray, u_now: np.ndarray, u_next: np.ndarray,
                       epsilon: float, dt: float, time: float, unit_violation: float,
                       waves: bool = True) -> DiagnosticsRecord:
    """All DiagnosticsRecord fields for the middle state of a three-step
    window; the wave residuals are NaN when ``waves`` is false."""
    w1 = wave1_residual(grid, u_prev, u_now, u_next, epsilon, dt) if waves else math.nan
    w2 = wave2_residual(grid, u_prev, u_now, u_next, epsilon, dt).residual if waves else math.nan
    return DiagnosticsRecord(
        time=float(time),
        l2_norm=l2_norm(grid, u_now),
        h1_energy=h1_energy(grid, u_now),
        dissipation=dissipation(grid, u_now, epsilon),
        sobolev_h2=sobolev_norm(grid, u_now, 2),
        sobolev_h3=sobolev_norm(grid, u_now, 3),
        bc_residual=boundary_normal_derivative(grid, u_now).max_abs(),
        wave1_residual=w1,
        wave2_residual=w2,
        unit_violation=float(unit_violation),
    )


@dataclass
class MonitoredRun:
    records: list[DiagnosticsRecord]
    energies: list[float]
    """h1_energy at every recorded step, starting with the initial state."""
    dissipations: list[float]
    final: np.ndarray
    """State at ``n_steps`` (the extra look-ahead step is not kept)."""


def monitored_run(grid: Grid, u0: np.ndarray, config: SolverConfig, n_steps: int, stride: int = 1,
                  waves: bool = True, on_state=None,
                  velocity: np.ndarray | None = None) -> MonitoredRun:
    """March ``n_steps`` steps and build a DiagnosticsRecord at every
    ``stride``-th step from a rolling three-state window.

    One extra step is taken so that the last recorded state has a
    successor; the run yields ``n_steps // stride`` records. ``on_state``
    is called as ``on_state(step_index, time, u)`` for step 0 and every
    recorded step. ``velocity`` is the advecting field for incompressible
    physics.
    """
    config.check_cfl(grid)
    if velocity is not None and config.physics == "incompressible":
        check_velocity(grid, velocity)
    dt = config.dt
    u_prev = None
    u_now = np.array(u0, dtype=float)
    viol_now = 0.0
    out = MonitoredRun([], [h1_energy(grid, u_now)], [dissipation(grid, u_now, config.epsilon)], u_now)
    if on_state is not None:
        on_state(0, 0.0, u_now)
    for n in range(n_steps + 1):
        u_next, viol_next = step(grid, u_now, config, index=n, velocity=velocity)
        m = n  # index of u_now
        if m > 0 and m % stride == 0:
            rec = diagnostics_record(grid, u_prev, u_now, u_next, config.epsilon, dt, m * dt,
                                     viol_now, waves=waves)
            out.records.append(rec)
            out.energies.append(rec.h1_energy)
            out.dissipations.append(rec.dissipation)
            if on_state is not None:
                on_state(m, m * dt, u_now)
        if m == n_steps:
            out.final = u_now
            break
        u_prev, u_now, viol_now = u_now, u_next, viol_next
    return out
