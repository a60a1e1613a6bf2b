"""Observed temporal order of the grid solver by self-convergence.

Each scheme is run at n, 2n and 4n steps to a fixed time; the order is
log2 of the ratio of successive differences. Renormalization every step
caps the order at one for epsilon > 0, so both settings are reported.

    python3 scripts/time_order_study.py --n 9 --epsilon 0.1
"""

import argparse
import math

from spinflow.dynamics import SolverConfig, make_initial_data, max_stable_dt, run
from spinflow.grid import Grid, l2_norm


def final_state(grid, u0, scheme, epsilon, t_final, n_steps, renormalize_every):
    cfg = SolverConfig(dt=t_final / n_steps, epsilon=epsilon, scheme=scheme,
                       renormalize_every=renormalize_every)
    return run(grid, u0, cfg, n_steps, stride=n_steps).final


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=9, help="nodes per axis")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--t-final", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=7)
    args = p.parse_args(argv)

    grid = Grid.cube(args.n, dim=args.dim)
    u0 = make_initial_data("random", {"seed": args.seed, "n_modes": 3, "max_k": 2, "amplitude": 0.5}, grid)
    # Euler is unstable at the CFL limit on the dispersive term, so it starts finer
    base = math.ceil(args.t_final / max_stable_dt(grid, args.epsilon))
    print(f"{'scheme':14s} {'renorm':>8s} {'diff(n,2n)':>12s} {'diff(2n,4n)':>12s} {'order':>6s}")
    for scheme, start in (("explicit-euler", 8 * base), ("rk4", base)):
        for every, label in ((1, "every"), (10 ** 9, "never")):
            finals = [final_state(grid, u0, scheme, args.epsilon, args.t_final, start * 2 ** i, every)
                      for i in range(3)]
            d1 = l2_norm(grid, finals[0] - finals[1])
            d2 = l2_norm(grid, finals[1] - finals[2])
            order = math.log2(d1 / d2) if d2 > 0 else math.nan
            print(f"{scheme:14s} {label:>8s} {d1:12.3e} {d2:12.3e} {order:6.2f}")


if __name__ == "__main__":
    main()
