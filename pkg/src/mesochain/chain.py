"""Scaled microscale chain: configuration, state, forces, and integration.

The chain has N identical particles of mass M/N confined to (0, L) by
stationary wall pseudo-particles.  Forces come from the finite-range
repulsive potential evaluated on scaled separations gap/eps with
eps = 1/N, and the equations of motion are

    dq_j/dt = v_j,     eps * M * dv_j/dt = f_j.

Integration uses velocity Verlet with a default step chosen from the
linearized bond frequency, dt = 0.05 / omega_max with
omega_max = N * sqrt(2 c_r p / M).
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _integrator
from .errors import ChainGeometryError, IntegrationBlowupError
from .potentials import PowerLawPotential

CHECKPOINT_COLUMNS = ("j", "q", "v")


def stability_frequency(n: int, c_r: float, p: float, m: float) -> float:
    """Linearized bond frequency estimate omega_max = N sqrt(2 c_r p / M)."""
    return n * np.sqrt(2.0 * c_r * p / m)


@dataclass(frozen=True)
class ChainConfig:
    """Parameters of the scaled chain.

    n: particle count (>= 2); l: domain length; m: total mass.
    eps = 1/n and h = l/n are exact derived quantities.
    wall_offset_half_h shifts the walls to -h/2 and l + h/2 so that the
    uniform rest lattice q_j = (j - 1/2) h is a strict equilibrium; the
    default keeps walls at exactly 0 and l.
    """

    n: int
    l: float = 1.0
    m: float = 1.0
    potential: PowerLawPotential = field(default_factory=PowerLawPotential)
    wall_stiffness: float | None = None
    dt: float | None = None
    wall_offset_half_h: bool = False

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need at least 2 particles, got {self.n}")
        if self.l <= 0 or self.m <= 0:
            raise ValueError("domain length and total mass must be positive")
        if self.wall_stiffness is None:
            object.__setattr__(self, "wall_stiffness", self.potential.c_r)
        omega = stability_frequency(self.n, self.potential.c_r, self.potential.p, self.m)
        if self.dt is None:
            object.__setattr__(self, "dt", 0.05 / omega)
        elif self.dt * omega > 0.05 * (1.0 + 1e-12):
            raise ValueError(
                f"dt * omega_max = {self.dt * omega:.3g} exceeds the stability "
                f"budget 0.05 (omega_max = {omega:.3g})"
            )

    @property
    def eps(self) -> float:
        return 1.0 / self.n

    @property
    def h(self) -> float:
        return self.l / self.n

    @property
    def wall_left(self) -> float:
        return -0.5 * self.h if self.wall_offset_half_h else 0.0

    @property
    def wall_right(self) -> float:
        return self.l + 0.5 * self.h if self.wall_offset_half_h else self.l

    def to_dict(self) -> dict:
        pot = self.potential
        return {
            "n": self.n,
            "l": self.l,
            "m": self.m,
            "c_r": pot.c_r,
            "p": pot.p,
            "x_star": pot.x_star,
            "wall_stiffness": self.wall_stiffness,
            "dt": self.dt,
            "wall_offset_half_h": self.wall_offset_half_h,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChainConfig":
        pot = PowerLawPotential(c_r=d["c_r"], p=d["p"], x_star=d["x_star"])
        return cls(
            n=int(d["n"]), l=d["l"], m=d["m"], potential=pot,
            wall_stiffness=d.get("wall_stiffness"), dt=d.get("dt"),
            wall_offset_half_h=bool(d.get("wall_offset_half_h", False)),
        )


@dataclass
class ChainState:
    """Positions and velocities at time t; positions strictly ordered in (0, L)."""

    t: float
    q: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.q = np.ascontiguousarray(self.q, dtype=float)
        self.v = np.ascontiguousarray(self.v, dtype=float)
        if self.q.shape != self.v.shape or self.q.ndim != 1:
            raise ValueError("q and v must be 1d arrays of equal length")

    def validate(self, cfg: ChainConfig) -> None:
        if self.q.size != cfg.n:
            raise ChainGeometryError(f"state has {self.q.size} particles, config {cfg.n}")
        if self.q[0] <= 0.0 or self.q[-1] >= cfg.l:
            raise ChainGeometryError("particles must lie strictly inside (0, L)")
        if np.any(np.diff(self.q) <= 0.0):
            raise ChainGeometryError("particles must be strictly ordered")

    def copy(self) -> "ChainState":
        return ChainState(self.t, self.q.copy(), self.v.copy())


def lattice_positions(cfg: ChainConfig) -> np.ndarray:
    """Rest lattice q_j = (j - 1/2) h, j = 1..N."""
    return (np.arange(cfg.n) + 0.5) * cfg.h


def ramp_profile(q: np.ndarray, l: float, gamma: float) -> np.ndarray:
    """Piecewise initial velocity: gamma, linear ramp down, then zero.

    v = gamma on [0, L/5], gamma(-5q/L + 2) on [L/5, 2L/5], 0 on [2L/5, L].
    """
    v = np.zeros_like(q)
    plateau = q <= l / 5.0
    ramp = (~plateau) & (q <= 2.0 * l / 5.0)
    v[plateau] = gamma
    v[ramp] = gamma * (-5.0 / l * q[ramp] + 2.0)
    return v


def init_ramp(cfg: ChainConfig, gamma: float) -> ChainState:
    """Rest lattice with the rightward-propagating ramp velocity profile."""
    q = lattice_positions(cfg)
    return ChainState(0.0, q, ramp_profile(q, cfg.l, gamma))


def init_oscillatory(cfg: ChainConfig, gamma: float, a: float, k: float) -> ChainState:
    """Ramp profile plus a*sin(5 k pi q / L) on the moving region [0, 2L/5]."""
    q = lattice_positions(cfg)
    v = ramp_profile(q, cfg.l, gamma)
    moving = q <= 2.0 * cfg.l / 5.0
    v[moving] += a * np.sin(5.0 * k * np.pi * q[moving] / cfg.l)
    return ChainState(0.0, q, v)


def net_forces(cfg: ChainConfig, state: ChainState) -> np.ndarray:
    """Signed nearest-neighbor pair forces plus wall contributions.

    f_j = U'(gap_left/eps) - U'(gap_right/eps); the first and last gaps are
    measured to the stationary walls using the wall stiffness.
    """
    state.validate(cfg)
    f = np.empty(cfg.n)
    pot = cfg.potential
    ok = _integrator.fill_forces(
        state.q, f, cfg.n, pot.c_r, pot.p, pot.x_star, cfg.wall_stiffness,
        cfg.wall_left, cfg.wall_right,
    )
    if not ok:
        raise ChainGeometryError("coincident or wall-penetrating particles")
    return f


def potential_energy(cfg: ChainConfig, q: np.ndarray) -> float:
    """Bond + wall potential -eps * sum U(gap/eps) of ordered positions.

    The minus sign is what makes the total energy conserved under the
    equations of motion (U' >= 0 is paired with repulsive forces).
    """
    pot = cfg.potential
    inv_eps = float(cfg.n)
    gaps = np.diff(q)
    bond = float(np.sum(pot.energy(gaps * inv_eps)))
    wall_pot = PowerLawPotential(cfg.wall_stiffness, pot.p, pot.x_star)
    walls = float(wall_pot.energy((q[0] - cfg.wall_left) * inv_eps))
    walls += float(wall_pot.energy((cfg.wall_right - q[-1]) * inv_eps))
    return -cfg.eps * (bond + walls)


def total_energy(cfg: ChainConfig, state: ChainState) -> float:
    """Kinetic energy (1/2)(M/N) sum v^2 plus the potential of the positions."""
    kin = 0.5 * (cfg.m / cfg.n) * float(np.dot(state.v, state.v))
    return kin + potential_energy(cfg, state.q)


def advance(cfg: ChainConfig, state: ChainState, nsteps: int,
            dt: float | None = None) -> ChainState:
    """Integrate nsteps of velocity Verlet, returning a new state.

    Raises IntegrationBlowupError if the ordering degenerates mid-run.
    """
    if nsteps < 0:
        raise ValueError("nsteps must be nonnegative")
    state.validate(cfg)
    dt = cfg.dt if dt is None else dt
    q = state.q.copy()
    v = state.v.copy()
    f = np.empty(cfg.n)
    pot = cfg.potential
    args = (cfg.n, pot.c_r, pot.p, pot.x_star, cfg.wall_stiffness,
            cfg.wall_left, cfg.wall_right)
    if not _integrator.fill_forces(q, f, *args):
        raise ChainGeometryError("coincident or wall-penetrating particles")
    done = _integrator.verlet_steps(q, v, f, nsteps, dt, cfg.n, cfg.m, *args[1:])
    if done != nsteps:
        raise IntegrationBlowupError(
            f"ordering lost after {done} of {nsteps} steps at dt={dt:.3e}; "
            "use a smaller time step"
        )
    out = ChainState(state.t + nsteps * dt, q, v)
    if np.any(np.diff(out.q) <= 0.0):
        raise IntegrationBlowupError(
            f"ordering lost at dt={dt:.3e}; use a smaller time step"
        )
    return out


def step_verlet(cfg: ChainConfig, state: ChainState) -> ChainState:
    """One velocity-Verlet step at the configured dt."""
    return advance(cfg, state, 1)


def advance_to(cfg: ChainConfig, state: ChainState, t_target: float) -> ChainState:
    """Advance to exactly t_target, shortening the final step to land on it."""
    if t_target < state.t - 1e-15:
        raise ValueError(f"cannot integrate backwards to {t_target} from {state.t}")
    remain = t_target - state.t
    if remain <= 0.0:
        return state.copy()
    nfull = int(np.floor(remain / cfg.dt * (1.0 + 1e-12)))
    out = advance(cfg, state, nfull)
    last = t_target - out.t
    if last > 1e-14 * max(1.0, abs(t_target)):
        out = advance(cfg, out, 1, dt=last)
    out.t = t_target
    return out


def write_checkpoint(path, state: ChainState) -> None:
    """Columnar CSV with header j,q,v (1-based particle index)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CHECKPOINT_COLUMNS)
        for j in range(state.q.size):
            writer.writerow(
                [j + 1, format(state.q[j], ".17g"), format(state.v[j], ".17g")]
            )


def read_checkpoint(path, t: float = 0.0) -> ChainState:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CHECKPOINT_COLUMNS:
            raise ValueError(f"unexpected checkpoint header {header}")
        rows = [(float(r[1]), float(r[2])) for r in reader]
    q = np.array([r[0] for r in rows])
    v = np.array([r[1] for r in rows])
    return ChainState(t, q, v)


def write_config(path, cfg: ChainConfig) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")


def read_config(path) -> ChainConfig:
    return ChainConfig.from_dict(json.loads(Path(path).read_text()))
