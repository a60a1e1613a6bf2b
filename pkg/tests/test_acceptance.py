"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v``.
"""

import math
import time

import numpy as np
import pytest
import scipy.integrate as si

from conftest import observed_order, random_unit
from test_geometry import half_d2_fd_errors, transport_ode
from spinflow import cli
from spinflow import diagnostics as diag
from spinflow import geometry as geo
from spinflow.demag import demag_field
from spinflow.dynamics import (SolverConfig, make_initial_data, max_stable_dt, rhs_perturbed,
                               rotate_perturbation, run, tension, unit_violation)
from spinflow.galerkin import AliasingWarning, build_basis, galerkin_rhs, project, projection_error, synthesize
from spinflow.grid import Grid, integrate, l2_norm
from spinflow.rng import LCG64

ONE_MODE = dict(theta0=0.8, theta=[(0.3, (1, 1, 1))])
SMOOTH = dict(seed=7, n_modes=3, max_k=2, amplitude=0.5)


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance] criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, detail
    return emit


def ladder_steps(T, fine, multiple=4, epsilon=0.1):
    """Step count at the finest level of a ladder, at its CFL limit and a multiple of ``multiple``."""
    n = math.ceil(T / max_stable_dt(fine, epsilon, 0.5))
    return multiple * math.ceil(n / multiple)


# 1 -------------------------------------------------------------------------------

def test_constraint_preservation(verdict):
    T = 0.1
    g = Grid.cube(16)
    n = math.ceil(T / max_stable_dt(g, 0.0, 0.5))
    start = time.perf_counter()
    traj = run(g, make_initial_data("modes", ONE_MODE, g), SolverConfig(dt=T / n, physics="pure"), n)
    elapsed = time.perf_counter() - start
    pre = max(traj.unit_violations)
    post = max(unit_violation(u) for u in traj.snapshots)
    verdict(1, pre <= 1e-6 and post <= 1e-15 and elapsed <= 60,
            f"{n} steps, pre {pre:.2e} <= 1e-6, post {post:.2e} <= 1e-15, {elapsed:.1f}s <= 60s")


# 2 -------------------------------------------------------------------------------

@pytest.mark.slow
def test_h1_identity(verdict):
    T, levels = 0.1, (9, 17, 33)
    nf = ladder_steps(T, Grid.cube(levels[-1]))
    details, ok = [], True
    for eps in (0.0, 0.1):
        residuals, worst_increase = [], -math.inf
        for l, n in enumerate(levels):
            g = Grid.cube(n)
            steps = nf // 4 * 2 ** l
            traj = run(g, make_initial_data("modes", ONE_MODE, g), SolverConfig(dt=T / steps, epsilon=eps),
                       steps, stride=4)
            residuals.append(float(np.max(diag.h1_identity_residual(traj, eps))))
            E = [diag.h1_energy(g, u) for u in traj.snapshots]
            worst_increase = max(worst_increase, float(np.max(np.diff(E))))
        factors = [residuals[i] / residuals[i + 1] for i in range(2)]
        order = math.log2(residuals[0] / residuals[2]) / 2
        ok &= min(factors) >= 3 and order >= 1.6
        detail = f"eps={eps}: factors {factors[0]:.2f}, {factors[1]:.2f} >= 3, order {order:.2f} >= 1.6"
        if eps > 0:
            ok &= worst_increase <= 1e-8
            detail += f", max energy increase {worst_increase:.2e} <= 1e-8"
        details.append(detail)
    verdict(2, ok, "; ".join(details))


# 3 -------------------------------------------------------------------------------

def heat_flow(grid, u0, dt, steps):
    out = [u0]
    for _ in range(steps):
        u = out[-1] + dt * tension(grid, out[-1])
        out.append(u / np.linalg.norm(u, axis=-1, keepdims=True))
    return out


@pytest.mark.slow
def test_wave_identities(verdict):
    T, eps, levels = 0.02, 0.05, (9, 17, 33)
    nf = ladder_steps(T, Grid.cube(levels[-1]))
    wave1, ratios = [], []
    for l, n in enumerate(levels):
        g = Grid.cube(n)
        steps = nf // 4 * 2 ** l
        u0 = make_initial_data("random", SMOOTH, g)
        traj = run(g, u0, SolverConfig(dt=T / steps, epsilon=eps), steps)
        k = len(traj) // 2
        wave1.append(diag.wave1_residual(g, *traj.snapshots[k - 1:k + 2], eps, traj.dt))
        heat = heat_flow(g, u0, traj.dt, k + 1)
        ratios.append(diag.wave1_residual(g, *heat[k - 1:k + 2], eps, traj.dt) / wave1[-1])
    gaps = []
    for n in (17, 33, 65):
        g = Grid.cube(n)
        gaps.append(diag.wave_form_gap(g, make_initial_data("random", SMOOTH, g)))
    w_orders, g_orders = observed_order(wave1), observed_order(gaps)
    ok = min(w_orders) >= 1 and min(g_orders) >= 1 and min(ratios) >= 100
    verdict(3, ok, f"wave1 orders {np.round(w_orders, 2).tolist()} >= 1, gap orders "
                   f"{np.round(g_orders, 2).tolist()} >= 1, heat-flow ratios >= {min(ratios):.0f} >= 100")


# 4 -------------------------------------------------------------------------------

def test_galerkin_fidelity(verdict):
    line = Grid((64,), (1.0,))
    b = build_basis(line, 16)
    w = line.weights.ravel()
    gram_err = float(np.max(np.abs((b.functions * w) @ b.functions.T - np.eye(16))))

    f = np.exp(np.cos(math.pi * line.axis_coords(0)))
    proj = [projection_error(build_basis(line, n), f) for n in (4, 8, 16, 32)]
    decreasing = all(a > c for a, c in zip(proj, proj[1:]))

    short = Grid((8,), (1.0,))
    with pytest.warns(AliasingWarning):
        full = build_basis(short, 8)
    u = random_unit(np.random.default_rng(4), short.shape)
    rhs_err = max(float(np.max(np.abs(synthesize(full, galerkin_rhs(project(u, full), eps))
                                      - rhs_perturbed(short, u, eps)))) for eps in (0.0, 0.1))
    verdict(4, gram_err <= 1e-10 and decreasing and rhs_err <= 1e-8,
            f"Gram {gram_err:.1e} <= 1e-10, projection errors {', '.join(f'{e:.1e}' for e in proj)} "
            f"strictly decreasing, full-truncation rhs {rhs_err:.1e} <= 1e-8")


# 5 -------------------------------------------------------------------------------

def test_epsilon_continuation(verdict):
    T, g = 0.05, Grid.cube(12)
    epsilons = (0.1, 0.05, 0.025, 0.0125)
    steps = max(math.ceil(T / max_stable_dt(g, e, 0.5)) for e in epsilons)
    u0 = make_initial_data("random", SMOOTH, g)
    finals = [run(g, u0, SolverConfig(dt=T / steps, epsilon=e), steps, stride=steps).final for e in epsilons]
    dists = [l2_norm(g, finals[i] - finals[i + 1]) for i in range(3)]
    verdict(5, all(a > c for a, c in zip(dists, dists[1:])),
            f"distances {', '.join(f'{d:.4f}' for d in dists)} strictly decreasing")


# 6 -------------------------------------------------------------------------------

def test_uniqueness_gronwall(verdict):
    T, g = 0.05, Grid.cube(12)
    base = math.ceil(T / max_stable_dt(g, 0.0, 0.5))
    u1 = make_initial_data("random", SMOOTH, g)
    u2 = rotate_perturbation(g, u1, 1e-6)
    slopes = []
    for m in (1, 2):
        cfg = SolverConfig(dt=T / (base * m))
        t1 = run(g, u1, cfg, base * m, stride=m)
        t2 = run(g, u2, cfg, base * m, stride=m)
        slopes.append(diag.uniqueness_monitor(t1, t2)[1])
    records, control = diag.uniqueness_monitor(t1, t1)
    exact_zero = all(r.Q1 == 0.0 and r.Q2 == 0.0 for r in records)
    rel = abs(slopes[1] - slopes[0]) / abs(slopes[0])
    ok = all(map(math.isfinite, slopes)) and rel <= 0.2 and exact_zero
    verdict(6, ok, f"slopes {slopes[0]:.4f}, {slopes[1]:.4f} (change {rel:.1%} <= 20%), "
                   f"identical data Q1 = Q2 = 0: {exact_zero}")


# 7 -------------------------------------------------------------------------------

@pytest.mark.slow
def test_demag_operator(verdict):
    def cube_mean(n):
        g = Grid.cube(n)
        e3 = np.broadcast_to(np.array([0.0, 0.0, 1.0]), g.shape + (3,)).copy()
        return float(integrate(g, demag_field(g, e3)[..., 2])) / g.volume

    coarse, oracle = cube_mean(16), cube_mean(32)
    g = Grid.cube(12)
    rng = LCG64(2026)
    ratios = []
    for _ in range(20):
        u = cli.random_unit_field(g, rng)
        ratios.append(l2_norm(g, demag_field(g, u)) / l2_norm(g, u))
    ok = (abs(coarse + 1 / 3) <= 1 / 30 and abs(oracle + 1 / 3) <= 1 / 30
          and abs(coarse - oracle) <= 0.1 * abs(oracle) and max(ratios) <= 1.1)
    verdict(7, ok, f"16^3 mean {coarse:.4f}, 32^3 oracle {oracle:.4f}, target -1/3 +- 10%; "
                   f"max L2 ratio {max(ratios):.3f} <= 1.1")


# 8 -------------------------------------------------------------------------------

def test_gronwall_predictor(verdict):
    Cs = (0.1, 0.5, 1.0, 2.0, 10.0)
    y0s = (0.0, 0.1, 0.5, 1.0, 3.0)
    worst = 0.0
    table = np.empty((5, 5))
    for i, y0 in enumerate(y0s):
        for j, C in enumerate(Cs):
            quad, _ = si.quad(lambda y: 1.0 / (C * (1.0 + y) ** 6), y0, np.inf, epsabs=1e-14, epsrel=1e-13)
            table[i, j] = diag.gronwall_time(y0, C)
            worst = max(worst, abs(table[i, j] - quad))
    monotone = bool(np.all(np.diff(table, axis=0) < 0) and np.all(np.diff(table, axis=1) < 0))
    verdict(8, worst <= 1e-10 and monotone,
            f"max |closed form - quadrature| {worst:.1e} <= 1e-10, monotone on 5x5 lattice: {monotone}")


# 9 -------------------------------------------------------------------------------

def test_geometry_suite(verdict):
    rng = np.random.default_rng(99)
    worst, count = 0.0, 0
    while count < 100:
        p, q = random_unit(rng), random_unit(rng)
        if geo.geodesic_distance(p, q) >= math.pi - 0.1:
            continue
        X = geo.tangent_project(q, rng.normal(size=3))
        worst = max(worst, float(np.max(np.abs(geo.parallel_transport(p, q, X) - transport_ode(p, q, X)))))
        count += 1
    min_order = math.inf
    for _ in range(20):
        p = random_unit(rng)
        q = geo.exp_map(p, geo.tangent_project(p, rng.normal(size=3)) * 0.3)
        X1 = geo.tangent_project(p, rng.normal(size=3))
        X2 = geo.tangent_project(q, rng.normal(size=3))
        errs = half_d2_fd_errors(p, q, X1, X2, [1e-2, 5e-3, 2.5e-3, 1.25e-3])
        min_order = min(min_order, float(np.min(observed_order(errs))))
    verdict(9, worst <= 1e-8 and min_order >= 0.9,
            f"transport vs ODE {worst:.1e} <= 1e-8 over 100 triples, distance-Hessian FD order "
            f"{min_order:.2f} >= 0.9")


# 10 ------------------------------------------------------------------------------

def test_determinism(verdict, tmp_path):
    cfg = tmp_path / "det.cfg"
    cfg.write_text("dim = 3\nn = 10\nepsilon = 0.1\nt_final = 0.01\ninitial = random\nseed = 11\n"
                   "snapshot_stride = 1\n")
    codes = [cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / d)]) for d in ("a", "b")]
    a, b = ((tmp_path / d / "diag.csv").read_bytes() for d in ("a", "b"))
    verdict(10, codes == [0, 0] and a == b and len(a) > 0,
            f"exit codes {codes}, diag.csv byte-identical: {a == b} ({len(a)} bytes)")
