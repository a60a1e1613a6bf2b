"""Galerkin truncations against the grid solver on the same grid.

With every basis function kept, the Galerkin system is the grid solver
in another basis (without renormalization), so the last row should sit at
round-off. Smaller truncations show the projection and evolution error.

    python3 scripts/galerkin_vs_grid.py --n 12 --modes 8 32 144
"""

import argparse
import math

from spinflow.dynamics import SolverConfig, make_initial_data, max_stable_dt, run
from spinflow.galerkin import build_basis, evolve_galerkin, max_unit_deviation, project, projection_error, reconstruct
from spinflow.grid import Grid, l2_norm


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=12, help="nodes per axis of the 2D grid")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--t-final", type=float, default=0.01)
    p.add_argument("--modes", type=int, nargs="+", default=[8, 32, 144])
    args = p.parse_args(argv)

    grid = Grid.cube(args.n, dim=2)
    params = {"theta0": 0.6, "theta": [(0.3, (1, 0)), (0.2, (0, 1))], "phi": [(0.4, (1, 1))]}
    u0 = make_initial_data("modes", params, grid)
    n_steps = math.ceil(args.t_final / max_stable_dt(grid, args.epsilon))
    dt = args.t_final / n_steps
    cfg = SolverConfig(dt=dt, epsilon=args.epsilon, renormalize_every=10 ** 9)
    reference = run(grid, u0, cfg, n_steps, stride=n_steps).final

    print(f"{'modes':>6s} {'proj err':>11s} {'|u_G - u_h|':>12s} {'unit dev':>10s}")
    for n in args.modes:
        basis = build_basis(grid, n)
        err0 = max(projection_error(basis, u0[..., c]) for c in range(3))
        final = evolve_galerkin(project(u0, basis), args.epsilon, dt, n_steps)[-1]
        gap = l2_norm(grid, reconstruct(final) - reference)
        print(f"{n:6d} {err0:11.3e} {gap:12.3e} {max_unit_deviation(final):10.3e}")


if __name__ == "__main__":
    main()
