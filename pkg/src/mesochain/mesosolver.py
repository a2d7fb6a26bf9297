"""Explicit solver for the closed isothermal zero-order continuum model.

Unknowns are cell values of density and momentum on the mesoscale mesh,
advanced with a conservative Lax-Friedrichs step; the closure stress enters
the momentum flux (F_mom = m^2/rho - T).  Reflective walls mirror the
microscale confinement: the ghost cells carry (rho, -m, T), which makes the
wall mass flux vanish identically, so discrete total mass is conserved
exactly.  The convective stress term is dropped by default (its mesoscale
divergence vanishes for quasi-isothermal dynamics); a closure returning the
full stress can simply include it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .chain import ChainConfig
from .errors import CFLViolationError, NegativeDensityError
from .fields import MesoField, fine_default_size
from .windows import MesoMesh, WindowFunction
from . import averaging
from . import closure as closure_mod

StressClosure = Callable[[MesoField, ChainConfig], np.ndarray]


@dataclass
class MesoState:
    """Density and momentum node values at time t."""

    rho: MesoField
    mom: MesoField
    t: float

    def __post_init__(self):
        if self.rho.mesh.b != self.mom.mesh.b:
            raise ValueError("density and momentum live on different meshes")
        if np.any(self.rho.values <= 0.0):
            raise NegativeDensityError("density must be positive on all cells")

    @property
    def mesh(self) -> MesoMesh:
        return self.rho.mesh

    def mass(self) -> float:
        return float(np.sum(self.rho.values) * self.mesh.l_eta)

    def velocity(self) -> np.ndarray:
        return self.mom.values / self.rho.values


def sound_speed(rho: np.ndarray, cfg: ChainConfig) -> np.ndarray:
    """c_s^2 = |U''(M/rho)| M / rho^2, the local equation-of-state stiffness."""
    xi = cfg.m / rho
    curv = np.abs(cfg.potential.curvature(xi))
    return np.sqrt(curv * cfg.m) / rho


def local_eos_closure(field: MesoField, cfg: ChainConfig) -> np.ndarray:
    """Pointwise stress T(rho) = -U'(M/rho) at the mesh nodes."""
    return -cfg.potential.gradient(cfg.m / field.values)


def make_nonlocal_closure(window: WindowFunction, g: int | None = None) -> StressClosure:
    """Zero-order nonlocal interaction stress as a pluggable closure."""

    def _closure(field: MesoField, cfg: ChainConfig) -> np.ndarray:
        fld = closure_mod.stress_int_zero(
            field, window, cfg, mode="integral", g=g or fine_default_size(cfg.n)
        )
        return fld.values

    return _closure


def cfl_limit(state: MesoState, cfg: ChainConfig) -> float:
    """Largest dt with dt (|v| + c_s) / L_eta <= 0.9."""
    speed = np.max(np.abs(state.velocity()) + sound_speed(state.rho.values, cfg))
    if speed <= 0.0:
        return np.inf
    return 0.9 * state.mesh.l_eta / speed


def step_meso(state: MesoState, closure_fn: StressClosure, dt_meso: float,
              cfg: ChainConfig) -> MesoState:
    """One conservative Lax-Friedrichs step with reflective walls."""
    mesh = state.mesh
    dx = mesh.l_eta
    if dt_meso <= 0.0:
        raise ValueError("dt must be positive")
    if dt_meso > cfl_limit(state, cfg) * (1.0 + 1e-12):
        raise CFLViolationError(
            f"dt = {dt_meso:.3e} exceeds the CFL limit {cfl_limit(state, cfg):.3e}"
        )
    rho = state.rho.values
    mom = state.mom.values
    stress = np.asarray(closure_fn(state.rho, cfg), dtype=float)
    # ghost cells: mirrored density/stress, negated momentum
    rho_e = np.concatenate([[rho[0]], rho, [rho[-1]]])
    mom_e = np.concatenate([[-mom[0]], mom, [-mom[-1]]])
    str_e = np.concatenate([[stress[0]], stress, [stress[-1]]])
    f_rho = mom_e
    f_mom = mom_e * mom_e / rho_e - str_e
    lam = dx / dt_meso
    flux_rho = 0.5 * (f_rho[:-1] + f_rho[1:]) - 0.5 * lam * (rho_e[1:] - rho_e[:-1])
    flux_mom = 0.5 * (f_mom[:-1] + f_mom[1:]) - 0.5 * lam * (mom_e[1:] - mom_e[:-1])
    rho_new = rho - (dt_meso / dx) * np.diff(flux_rho)
    mom_new = mom - (dt_meso / dx) * np.diff(flux_mom)
    if np.any(rho_new <= 0.0):
        raise NegativeDensityError("density became nonpositive after step")
    return MesoState(
        MesoField(mesh, rho_new, "density", state.rho.boundary_affected),
        MesoField(mesh, mom_new, "momentum", state.mom.boundary_affected),
        state.t + dt_meso,
    )


def run_closed(initial: MesoState, t_end: float, closure_fn: StressClosure,
               cfg: ChainConfig, snapshot_times: Sequence[float] | None = None,
               dt_meso: float | None = None) -> list[MesoState]:
    """Repeated step_meso with snapshots at the requested times.

    The step before each snapshot is shortened to land on it exactly.
    Returns the snapshot states (initial state included when t=0 or
    snapshot_times starts at the initial time).
    """
    if t_end < initial.t:
        raise ValueError("t_end precedes the initial time")
    times = sorted(snapshot_times) if snapshot_times is not None else [t_end]
    if times and (times[0] < initial.t - 1e-15 or times[-1] > t_end + 1e-15):
        raise ValueError("snapshot times must lie within [t0, t_end]")
    out: list[MesoState] = []
    state = initial
    for target in times:
        while state.t < target - 1e-14:
            dt = dt_meso if dt_meso is not None else 0.5 * cfl_limit(state, cfg)
            if not np.isfinite(dt):
                dt = target - state.t
            dt = min(dt, target - state.t)
            state = step_meso(state, closure_fn, dt, cfg)
        state = MesoState(state.rho, state.mom, target)
        out.append(state)
    return out


def meso_state_from_micro(cfg: ChainConfig, chain_state, window: WindowFunction,
                          mesh: MesoMesh) -> MesoState:
    """Average a microscale state into a MesoState initial condition."""
    rho = averaging.average_density(cfg, chain_state, window, mesh)
    mom = averaging.average_momentum(cfg, chain_state, window, mesh)
    return MesoState(rho, mom, chain_state.t)
