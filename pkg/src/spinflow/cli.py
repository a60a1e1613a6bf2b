"""Command-line entry point.

    spinflow <command> --config <path> [--out <dir>] [--seed <u64>]

Exit codes: 0 success, 2 configuration error, 3 numerical breakdown,
4 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import diagnostics as diag
from .config import RunConfig, load_config
from .demag import demag_field
from .dynamics import make_initial_data, rotate_perturbation, run
from .errors import BlowUp, ConfigError, DistanceTooLarge, SpinflowError
from .galerkin import build_basis, evolve_galerkin, max_unit_deviation, project, reconstruct
from .grid import Grid, integrate, l2_norm
from .io import write_csv, write_records, write_snapshot
from .rng import LCG64

log = logging.getLogger("spinflow")

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_IO = 0, 2, 3, 4


def worker_count() -> int:
    """Worker cap from SPINFLOW_THREADS (0 or unset means one per CPU)."""
    raw = os.environ.get("SPINFLOW_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"SPINFLOW_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ConfigError("SPINFLOW_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def _map(fn, items):
    """Ordered map, in worker processes when more than one is allowed."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _initial(cfg: RunConfig, grid: Grid) -> np.ndarray:
    return make_initial_data(cfg.initial, cfg.initial_params(), grid)


def _prepare_out(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- commands ---------------------------------------------------------------

def cmd_run(cfg: RunConfig) -> int:
    grid = cfg.grid()
    n_steps = cfg.n_steps(grid)
    solver = cfg.solver(grid, n_steps=n_steps)
    out = _prepare_out(cfg)

    def save(step_index, t, u):
        if cfg.write_snapshots:
            write_snapshot(out / f"snap_{step_index}.spnf", grid, u, t)

    result = diag.monitored_run(grid, _initial(cfg, grid), solver, n_steps, cfg.snapshot_stride,
                                waves=cfg.waves, on_state=save, velocity=cfg.velocity_field(grid))
    write_records(out / "diag.csv", result.records, diag.DiagnosticsRecord)
    log.info("run: %d steps, dt=%.6g, %d rows", n_steps, solver.dt, len(result.records))
    return EXIT_OK


def _final_state(args):
    cfg, eps, n_steps = args
    grid = cfg.grid()
    solver = cfg.solver(grid, epsilon=eps, n_steps=n_steps)
    return run(grid, _initial(cfg, grid), solver, n_steps, stride=n_steps,
               velocity=cfg.velocity_field(grid)).final


def cmd_sweep_epsilon(cfg: RunConfig) -> int:
    grid = cfg.grid()
    eps = list(cfg.epsilons)
    # one step size for all members so that only epsilon differs
    n_steps = max(cfg.n_steps(grid, e) for e in eps)
    for e in eps:
        cfg.solver(grid, epsilon=e, n_steps=n_steps)
    out = _prepare_out(cfg)
    finals = _map(_final_state, [(cfg, e, n_steps) for e in eps])
    rows = [(eps[i], eps[i + 1], l2_norm(grid, finals[i] - finals[i + 1])) for i in range(len(eps) - 1)]
    write_csv(out / "sweep.csv", ["epsilon_a", "epsilon_b", "l2_distance"], rows)
    return EXIT_OK


def _galerkin_final(args):
    cfg, n, n_steps = args
    grid = cfg.grid()
    basis = build_basis(grid, n)
    dt = cfg.t_final / n_steps
    states = evolve_galerkin(project(_initial(cfg, grid), basis), cfg.epsilon, dt, n_steps, cfg.scheme)
    return reconstruct(states[-1]), max_unit_deviation(states[-1])


def cmd_galerkin_converge(cfg: RunConfig) -> int:
    grid = cfg.grid()
    modes = list(cfg.galerkin_modes)
    if cfg.physics != "perturbed":
        raise ConfigError("galerkin-converge only evolves physics = perturbed")
    if max(modes) > grid.size:
        raise ConfigError(f"galerkin_modes up to {max(modes)} exceed the {grid.size} grid nodes")
    n_steps = cfg.n_steps(grid)
    out = _prepare_out(cfg)
    results = _map(_galerkin_final, [(cfg, n, n_steps) for n in modes])
    rows = []
    for i, n in enumerate(modes):
        dist = l2_norm(grid, results[i][0] - results[i + 1][0]) if i + 1 < len(modes) else math.nan
        rows.append((n, dist, results[i][1]))
    write_csv(out / "galerkin.csv", ["n", "l2_distance_to_next", "max_unit_deviation"], rows)
    return EXIT_OK


def refinement_ladder(cfg: RunConfig) -> list[tuple[Grid, int]]:
    """Grids with h halved per level and step counts doubled per level; the
    finest level's step fits its CFL limit, so every level does."""
    levels = cfg.levels
    grids = [Grid(tuple((n - 1) * 2 ** l + 1 for n in cfg.counts), cfg.extents) for l in range(levels)]
    fine_steps = cfg.n_steps(grids[-1])
    base = max(1, math.ceil(fine_steps / 2 ** (levels - 1)))
    return [(g, base * 2 ** l) for l, g in enumerate(grids)]


def cmd_refine(cfg: RunConfig) -> int:
    ladder = refinement_ladder(cfg)
    for grid, n_steps in ladder:
        cfg.solver(grid, n_steps=n_steps)
    out = _prepare_out(cfg)
    rows = []
    prev = None
    for level, (grid, n_steps) in enumerate(ladder):
        solver = cfg.solver(grid, n_steps=n_steps)
        # constant stride in steps, so the snapshot spacing halves with h
        stride = cfg.snapshot_stride
        res = diag.monitored_run(grid, _initial(cfg, grid), solver, n_steps, stride, waves=cfg.waves,
                                  velocity=cfg.velocity_field(grid))
        h1 = float(np.max(diag.h1_residual_series(res.energies, res.dissipations, solver.dt * stride)))
        w1 = max(r.wave1_residual for r in res.records)
        w2 = max(r.wave2_residual for r in res.records)
        cur = (h1, w1, w2)
        orders = [math.log2(p / c) if prev and c > 0 and p > 0 else math.nan
                  for p, c in zip(prev or cur, cur)]
        rows.append((level, grid.counts[0], grid.min_spacing, solver.dt, h1, w1, w2, *orders))
        prev = cur
    write_csv(out / "refine.csv",
              ["level", "n", "h", "dt", "h1_residual", "wave1_residual", "wave2_residual",
               "h1_order", "wave1_order", "wave2_order"], rows)
    return EXIT_OK


def cmd_uniqueness(cfg: RunConfig) -> int:
    grid = cfg.grid()
    n_steps = cfg.n_steps(grid)
    solver = cfg.solver(grid, n_steps=n_steps)
    out = _prepare_out(cfg)
    u1 = _initial(cfg, grid)
    u2 = rotate_perturbation(grid, u1, cfg.perturbation)
    v = cfg.velocity_field(grid)
    t1 = run(grid, u1, solver, n_steps, stride=cfg.snapshot_stride, velocity=v)
    t2 = run(grid, u2, solver, n_steps, stride=cfg.snapshot_stride, velocity=v)
    records, slope = diag.uniqueness_monitor(t1, t2)
    write_records(out / "uniq.csv", records, diag.UniquenessRecord)
    print(f"growth slope {slope!r}")
    return EXIT_OK


def random_unit_field(grid: Grid, rng: LCG64) -> np.ndarray:
    """Nodewise uniform-cube samples normalized to the sphere."""
    vals = np.array([rng.uniform(-1.0, 1.0) for _ in range(grid.size * 3)]).reshape(grid.shape + (3,))
    return vals / np.linalg.norm(vals, axis=-1, keepdims=True)


def cmd_demag_check(cfg: RunConfig) -> int:
    grid = cfg.grid()
    if grid.dim != 3:
        raise ConfigError("demag-check needs a 3D grid")
    out = _prepare_out(cfg)
    e3 = np.broadcast_to(np.array([0.0, 0.0, 1.0]), grid.shape + (3,)).copy()
    mean = float(integrate(grid, demag_field(grid, e3)[..., 2])) / grid.volume
    rng = LCG64(cfg.seed)
    rows = [("constant_e3_mean", 0, mean)]
    for i in range(cfg.demag_samples):
        u = random_unit_field(grid, rng)
        rows.append(("random_ratio", i, l2_norm(grid, demag_field(grid, u)) / l2_norm(grid, u)))
    write_csv(out / "demag.csv", ["check", "sample", "value"], rows)
    print(f"mean <h_d, e3> for constant e3: {mean!r}")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "sweep-epsilon": cmd_sweep_epsilon,
    "galerkin-converge": cmd_galerkin_converge,
    "refine": cmd_refine,
    "uniqueness": cmd_uniqueness,
    "demag-check": cmd_demag_check,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spinflow", description="Schroedinger map and Landau-Lifshitz flow experiments")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="key = value config file")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--seed", type=int, help="unsigned 64-bit seed (overrides the config)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        worker_count()
        cfg = load_config(args.config, out=args.out, seed=args.seed)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"spinflow: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BlowUp, DistanceTooLarge) as exc:
        print(f"spinflow: numerical breakdown: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except OSError as exc:
        print(f"spinflow: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SpinflowError as exc:
        print(f"spinflow: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
