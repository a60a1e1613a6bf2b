"""Run configuration: plain ``key = value`` files with ``#`` comments.

Example::

    dim = 3
    n = 12                 # or: counts = 12, 12, 16
    length = 1.0           # or: extents = 1, 1, 2
    epsilon = 0.1
    dt = auto              # largest CFL-admissible step that divides t_final
    t_final = 0.05
    initial = random
    seed = 7
    physics = incompressible   # with velocity = cellular (dim >= 2)

Mode lists use ``amplitude@k0,k1,k2`` entries separated by ``;``, for
example ``theta_modes = 0.3@1,0,0; 0.1@0,1,1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .dynamics import PHYSICS, SCHEMES, SolverConfig, cellular_flow, max_stable_dt
from .errors import ConfigError, SpinflowError
from .grid import Grid

INITIAL_KINDS = ("constant", "modes", "random", "ramp")
VELOCITY_KINDS = ("none", "cellular")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.replace(",", " ").split())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _modes(text: str) -> tuple[tuple[float, tuple[int, ...]], ...]:
    out = []
    for item in filter(None, (s.strip() for s in text.split(";"))):
        amp, _, k = item.partition("@")
        if not k:
            raise ValueError(f"mode {item!r} is not of the form amplitude@k0,k1,...")
        out.append((float(amp), _ints(k)))
    return tuple(out)


def _optional_float(text: str) -> float | None:
    return None if text.strip().lower() in ("auto", "") else float(text)


def _optional_axis(text: str) -> tuple[float, ...] | None:
    return None if text.strip().lower() in ("none", "") else _floats(text)


@dataclass(frozen=True)
class RunConfig:
    # grid
    dim: int = 3
    counts: tuple[int, ...] = (12,)
    extents: tuple[float, ...] = (1.0,)
    # solver
    epsilon: float = 0.0
    dt: float | None = None
    scheme: str = "rk4"
    renormalize_every: int = 1
    physics: str = "perturbed"
    anisotropy_axis: tuple[float, ...] | None = None
    anisotropy_strength: float = 0.0
    include_demag: bool = False
    cfl_safety: float = 0.5
    velocity: str = "none"
    velocity_amplitude: float = 1.0
    # initial data
    initial: str = "random"
    seed: int = 0
    n_modes: int = 3
    max_k: int = 2
    amplitude: float = 0.5
    direction: tuple[float, ...] = (0.0, 0.0, 1.0)
    theta0: float = 0.0
    phi0: float = 0.0
    theta_modes: tuple = ()
    phi_modes: tuple = ()
    slope: float = 1.0
    # run control
    t_final: float = 0.05
    snapshot_stride: int = 1
    out: str = "out"
    waves: bool = True
    write_snapshots: bool = False
    # command-specific
    epsilons: tuple[float, ...] = (0.1, 0.05, 0.025, 0.0125)
    galerkin_modes: tuple[int, ...] = (4, 8, 16)
    levels: int = 3
    perturbation: float = 1e-6
    demag_samples: int = 20

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ConfigError(f"dim must be 1, 2 or 3, got {self.dim}")
        counts = self.counts * self.dim if len(self.counts) == 1 else self.counts
        extents = self.extents * self.dim if len(self.extents) == 1 else self.extents
        if len(counts) != self.dim or len(extents) != self.dim:
            raise ConfigError("counts and extents need one entry or one per dimension")
        object.__setattr__(self, "counts", tuple(int(n) for n in counts))
        object.__setattr__(self, "extents", tuple(float(x) for x in extents))
        if not self.t_final > 0:
            raise ConfigError(f"t_final must be positive, got {self.t_final}")
        if self.snapshot_stride < 1:
            raise ConfigError("snapshot_stride must be >= 1")
        if self.initial not in INITIAL_KINDS:
            raise ConfigError(f"initial must be one of {INITIAL_KINDS}, got {self.initial!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.levels < 1:
            raise ConfigError("levels must be >= 1")
        if self.demag_samples < 1:
            raise ConfigError("demag_samples must be >= 1")
        if not self.epsilons or not all(0 <= e < 1 for e in self.epsilons):
            raise ConfigError("epsilons must be a non-empty list in [0, 1)")
        if not self.galerkin_modes or min(self.galerkin_modes) < 1:
            raise ConfigError("galerkin_modes must be a non-empty list of positive integers")
        if self.velocity not in VELOCITY_KINDS:
            raise ConfigError(f"velocity must be one of {VELOCITY_KINDS}, got {self.velocity!r}")
        if (self.physics == "incompressible") != (self.velocity != "none"):
            raise ConfigError("physics = incompressible needs a velocity, and only it accepts one")
        if self.velocity != "none" and self.dim < 2:
            raise ConfigError("velocity = cellular needs dim >= 2")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        # build everything derived once so that bad values surface here
        self.grid()
        self.solver()

    # --- derived objects ---------------------------------------------------

    def grid(self) -> Grid:
        try:
            return Grid(self.counts, self.extents)
        except SpinflowError as exc:
            raise ConfigError(str(exc)) from exc

    def n_steps(self, grid: Grid | None = None, epsilon: float | None = None) -> int:
        """Step count; ``dt = auto`` picks the fewest steps within the CFL limit."""
        if self.dt is not None:
            n = self.t_final / self.dt
            if abs(n - round(n)) > 1e-9 * max(1.0, n):
                raise ConfigError(f"t_final={self.t_final} is not a multiple of dt={self.dt}")
            return int(round(n))
        grid = grid or self.grid()
        eps = self.epsilon if epsilon is None else epsilon
        return max(1, math.ceil(self.t_final / max_stable_dt(grid, eps, self.cfl_safety) - 1e-9))

    def solver(self, grid: Grid | None = None, epsilon: float | None = None,
               n_steps: int | None = None) -> SolverConfig:
        """SolverConfig for this run, CFL-checked on ``grid``."""
        grid = grid or self.grid()
        eps = self.epsilon if epsilon is None else epsilon
        n = n_steps if n_steps is not None else self.n_steps(grid, eps)
        cfg = SolverConfig(
            dt=self.t_final / n, epsilon=eps, scheme=self.scheme,
            renormalize_every=self.renormalize_every, physics=self.physics,
            anisotropy_axis=self.anisotropy_axis, anisotropy_strength=self.anisotropy_strength,
            include_demag=self.include_demag, cfl_safety=self.cfl_safety)
        if self.include_demag and grid.dim != 3:
            raise ConfigError("include_demag needs a 3D grid")
        cfg.check_cfl(grid)
        return cfg

    def velocity_field(self, grid: Grid | None = None) -> np.ndarray | None:
        """Advecting velocity sampled on ``grid``, or None without one."""
        if self.velocity == "none":
            return None
        return cellular_flow(grid or self.grid(), self.velocity_amplitude)

    def initial_params(self) -> dict:
        return {
            "direction": self.direction, "seed": self.seed, "n_modes": self.n_modes,
            "max_k": self.max_k, "amplitude": self.amplitude, "theta0": self.theta0,
            "phi0": self.phi0, "theta": self.theta_modes, "phi": self.phi_modes,
            "slope": self.slope,
        }

    def replace(self, **changes) -> "RunConfig":
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data.update(changes)
        return RunConfig(**data)


_PARSERS = {
    "dim": int, "n": _ints, "counts": _ints, "length": _floats, "extents": _floats,
    "epsilon": float, "dt": _optional_float, "scheme": str, "renormalize_every": int,
    "physics": str, "anisotropy_axis": _optional_axis, "anisotropy_strength": float,
    "include_demag": _bool, "cfl_safety": float,
    "velocity": str, "velocity_amplitude": float,
    "initial": str, "seed": int, "n_modes": int, "max_k": int, "amplitude": float,
    "direction": _floats, "theta0": float, "phi0": float,
    "theta_modes": _modes, "phi_modes": _modes, "slope": float,
    "t_final": float, "snapshot_stride": int, "out": str, "waves": _bool,
    "write_snapshots": _bool, "epsilons": _floats, "galerkin_modes": _ints,
    "levels": int, "perturbation": float, "demag_samples": int,
}
_ALIASES = {"n": "counts", "length": "extents"}


def parse_config(text: str, **overrides) -> RunConfig:
    """Parse config text; keyword ``overrides`` replace parsed values."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            parsed = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
        name = _ALIASES.get(key, key)
        if name in values:
            raise ConfigError(f"line {lineno}: {name} given twice")
        values[name] = parsed
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path, **overrides) -> RunConfig:
    """Read and validate a config file; OSError propagates for missing files."""
    return parse_config(Path(path).read_text(), **overrides)


__all__ = ["RunConfig", "parse_config", "load_config", "INITIAL_KINDS", "VELOCITY_KINDS", "PHYSICS", "SCHEMES"]
