"""Mesoscale averages and exact stresses of a microscale chain state.

All operations are pure functions of (state, window, mesh) with fixed
summation order.  Box windows aligned with the mesh (b * eta = 1) use exact
counting/overlap fast paths; other combinations fall back to direct kernel
evaluation.
"""
from __future__ import annotations

import numpy as np

from .chain import ChainConfig, ChainState
from .errors import EmptyCellError
from .fields import MesoField
from .windows import BOX, GL5_NODES, GL5_WEIGHTS, MesoMesh, WindowFunction


def _check_geometry(window: WindowFunction, mesh: MesoMesh) -> bool:
    """True when the box window tiles the mesh cells exactly."""
    return (
        window.kind == BOX
        and abs(window.eta * mesh.b - 1.0) < 1e-9
        and abs(window.l - mesh.l) < 1e-12 * max(1.0, mesh.l)
    )


def _kernel_sums(window: WindowFunction, mesh: MesoMesh, q: np.ndarray,
                 weights=None) -> np.ndarray:
    """sum_j w_j * psi_eta(x_beta - q_j) for every node, O(B) passes."""
    out = np.empty(mesh.b)
    x = mesh.centers
    r = window.half_width
    # q is sorted for chain states, so slice the support of each node.
    lo = np.searchsorted(q, x - r, side="left")
    hi = np.searchsorted(q, x + r, side="right")
    for beta in range(mesh.b):
        sl = slice(lo[beta], hi[beta])
        psi = window.values(x[beta] - q[sl])
        if weights is None:
            out[beta] = psi.sum()
        else:
            out[beta] = np.dot(weights[sl], psi)
    return out


def average_density(cfg: ChainConfig, state: ChainState, window: WindowFunction,
                    mesh: MesoMesh) -> MesoField:
    """rho_bar(x_beta) = (M/N) sum_j psi_eta(x_beta - q_j)."""
    state.validate(cfg)
    mesh.check_separation(cfg.n)
    if _check_geometry(window, mesh):
        counts = np.bincount(mesh.cell_index(state.q), minlength=mesh.b)
        values = cfg.m * counts / (cfg.n * window.eta * window.l)
    else:
        values = (cfg.m / cfg.n) * _kernel_sums(window, mesh, state.q)
    return MesoField(mesh, values, "density", mesh.boundary_affected(window))


def average_momentum(cfg: ChainConfig, state: ChainState, window: WindowFunction,
                     mesh: MesoMesh) -> MesoField:
    """(rho_bar v_bar)(x_beta) = (M/N) sum_j v_j psi_eta(x_beta - q_j)."""
    state.validate(cfg)
    if _check_geometry(window, mesh):
        idx = mesh.cell_index(state.q)
        sums = np.bincount(idx, weights=state.v, minlength=mesh.b)
        values = cfg.m * sums / (cfg.n * window.eta * window.l)
    else:
        values = (cfg.m / cfg.n) * _kernel_sums(window, mesh, state.q, state.v)
    return MesoField(mesh, values, "momentum", mesh.boundary_affected(window))


def average_velocity(cfg: ChainConfig, state: ChainState, window: WindowFunction,
                     mesh: MesoMesh) -> MesoField:
    """v_bar(x_beta) = sum v_j psi / sum psi; errors on empty cells."""
    state.validate(cfg)
    if _check_geometry(window, mesh):
        idx = mesh.cell_index(state.q)
        den = np.bincount(idx, minlength=mesh.b).astype(float)
        num = np.bincount(idx, weights=state.v, minlength=mesh.b)
    else:
        den = _kernel_sums(window, mesh, state.q)
        num = _kernel_sums(window, mesh, state.q, state.v)
    empty = den <= 0.0
    if np.any(empty):
        cells = np.flatnonzero(empty) + 1
        raise EmptyCellError(f"no kernel mass in cells {cells.tolist()}")
    return MesoField(mesh, num / den, "velocity", mesh.boundary_affected(window))


def convective_stress_exact(cfg: ChainConfig, state: ChainState,
                            window: WindowFunction, mesh: MesoMesh) -> MesoField:
    """T_c(x_beta) = -(M/N) sum_j (v_j - v_bar(x_beta))^2 psi_eta(x_beta - q_j).

    Computed as a sum of nonnegative terms, so node values are <= 0 exactly.
    """
    vbar = average_velocity(cfg, state, window, mesh)
    q, v = state.q, state.v
    values = np.empty(mesh.b)
    if _check_geometry(window, mesh):
        idx = mesh.cell_index(q)
        fluct = v - vbar.values[idx]
        sums = np.bincount(idx, weights=fluct * fluct, minlength=mesh.b)
        values = -(cfg.m / cfg.n) * sums / (window.eta * window.l)
    else:
        x = mesh.centers
        r = window.half_width
        lo = np.searchsorted(q, x - r, side="left")
        hi = np.searchsorted(q, x + r, side="right")
        for beta in range(mesh.b):
            sl = slice(lo[beta], hi[beta])
            psi = window.values(x[beta] - q[sl])
            d = v[sl] - vbar.values[beta]
            values[beta] = -(cfg.m / cfg.n) * np.dot(d * d, psi)
    return MesoField(mesh, values, "stress-conv", mesh.boundary_affected(window))


def bond_forces(cfg: ChainConfig, state: ChainState) -> np.ndarray:
    """Signed pair force f_{j,j+1} = -U'(gap/eps) for each of the N-1 bonds."""
    gaps = np.diff(state.q)
    return -cfg.potential.gradient(gaps * cfg.n)


def interaction_stress_exact(cfg: ChainConfig, state: ChainState,
                             window: WindowFunction, mesh: MesoMesh) -> MesoField:
    """T_int(x_beta) = sum_bonds f_{j,j+1} (q_{j+1}-q_j) * bond kernel integral.

    The bond integral int_0^1 psi_eta(x - s q_{j+1} - (1-s) q_j) ds is exact
    interval overlap for box windows and 5-point Gauss-Legendre otherwise.
    Wall pseudo-bonds are not part of the stress sum.
    """
    state.validate(cfg)
    q = state.q
    gaps = np.diff(q)
    f = bond_forces(cfg, state)
    values = np.zeros(mesh.b)
    if _check_geometry(window, mesh):
        # Box windows tile the cells: split each bond between the cells it
        # spans; the node contribution is f * overlap / (eta L).
        inv_w = 1.0 / (window.eta * window.l)
        i0 = mesh.cell_index(q[:-1])
        i1 = mesh.cell_index(q[1:])
        same = i0 == i1
        np.add.at(values, i0[same], f[same] * gaps[same] * inv_w)
        cross = np.flatnonzero(~same)
        if cross.size:
            edges = np.arange(1, mesh.b + 1) * mesh.l_eta
            for j in cross:
                a, b = i0[j], i1[j]
                left = edges[a] - q[j]
                values[a] += f[j] * left * inv_w
                for mcell in range(a + 1, b):
                    values[mcell] += f[j] * mesh.l_eta * inv_w
                values[b] += f[j] * (q[j + 1] - edges[b - 1]) * inv_w
    else:
        x = mesh.centers
        r = window.half_width
        for s, ws in zip(GL5_NODES, GL5_WEIGHTS):
            z = (1.0 - s) * q[:-1] + s * q[1:]
            lo = np.searchsorted(z, x - r, side="left")
            hi = np.searchsorted(z, x + r, side="right")
            for beta in range(mesh.b):
                sl = slice(lo[beta], hi[beta])
                psi = window.values(x[beta] - z[sl])
                values[beta] += ws * np.dot(f[sl] * gaps[sl], psi)
    return MesoField(mesh, values, "stress-int", mesh.boundary_affected(window))


def jacobian_at_mesh(cfg: ChainConfig, state: ChainState, mesh: MesoMesh) -> MesoField:
    """J(x_beta) = h / (q_{j+1} - q_j) for the bond straddling the node.

    This is 1/q_tilde' of the piecewise-linear position interpolant over the
    eps-lattice, inverted at the node.  Nodes outside [q_1, q_N] are flagged
    and clamped to the nearest edge bond.
    """
    state.validate(cfg)
    x = mesh.centers
    q = state.q
    j = np.searchsorted(q, x, side="right") - 1
    extrapolated = (j < 0) | (j >= cfg.n - 1)
    j = np.clip(j, 0, cfg.n - 2)
    values = cfg.h / (q[j + 1] - q[j])
    return MesoField(mesh, values, "jacobian", extrapolated)


def jacobian_fine(cfg: ChainConfig, state: ChainState, g: int):
    """Piecewise-constant J sampled on the fine grid (for operator tests)."""
    from .fields import FineField

    x = (np.arange(g) + 0.5) * (cfg.l / g)
    q = state.q
    j = np.clip(np.searchsorted(q, x, side="right") - 1, 0, cfg.n - 2)
    return FineField(g, cfg.l, cfg.h / (q[j + 1] - q[j]))
