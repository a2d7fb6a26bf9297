"""Closed-form stress approximations built from mesoscale data.

Includes the quasi-isothermal prescription of synthetic particle positions
and velocities (equal spacing per cell from the density; sign-alternating
velocity perturbations sized so that every cell carries the same
kernel-weighted fluctuation energy kappa^2 and the microscopic energy is
conserved exactly), the zero-order interaction/convective stresses, the
general order-n stress quadratures, and the local equation-of-state limit.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .chain import ChainConfig, ChainState, potential_energy, write_checkpoint
from .deconvolution import ConvOperator
from .errors import (
    InfeasiblePrescriptionError,
    ReconstructionFailureError,
    ZeroDensityCellError,
)
from .fields import FineField, MesoField, fine_default_size, meso_to_fine
from .windows import BOX, GL5_NODES, GL5_WEIGHTS, MesoMesh, WindowFunction
from . import averaging


@dataclass
class PrescribedState:
    """Synthetic particle data compatible with given mesoscale averages.

    Velocity-related fields are None until ``prescribe_velocities`` runs.
    Per-cell quantities are indexed by cell; q_hat/v_hat/signs/delta_v by
    particle, with ``cell_of`` mapping particles to cells.
    """

    mesh: MesoMesh
    n_beta: np.ndarray
    delta_beta: np.ndarray
    q_hat: np.ndarray
    cell_of: np.ndarray
    v_hat: np.ndarray | None = None
    kappa_sq: float | None = None
    k_beta: np.ndarray | None = None
    t_amp: np.ndarray | None = None
    signs: np.ndarray | None = None
    delta_v: np.ndarray | None = None

    @property
    def complete(self) -> bool:
        return self.v_hat is not None

    def within_index(self) -> np.ndarray:
        """Position index of each particle inside its own cell (0-based)."""
        return np.concatenate([np.arange(nb) for nb in self.n_beta])

    def as_chain_state(self, t: float = 0.0) -> ChainState:
        v = self.v_hat if self.v_hat is not None else np.zeros_like(self.q_hat)
        return ChainState(t, self.q_hat.copy(), np.asarray(v, dtype=float).copy())


def _even_counts(raw: np.ndarray, n_total: int) -> np.ndarray:
    """Integer per-cell counts: rounded, renormalized to n_total, all even.

    Parity is fixed by pairing consecutive odd cells and moving one particle
    within each pair toward the larger count, which keeps the total exact.
    """
    n = np.rint(raw).astype(np.int64)
    n = np.maximum(n, 2)
    resid = n - raw
    while n.sum() > n_total:
        order = np.lexsort((np.arange(n.size), -resid))
        for idx in order:
            if n[idx] > 2:
                n[idx] -= 1
                resid[idx] -= 1.0
                break
        else:
            raise ZeroDensityCellError("cannot renormalize counts down to total")
    while n.sum() < n_total:
        idx = int(np.argmin(resid))
        n[idx] += 1
        resid[idx] += 1.0
    odd = np.flatnonzero(n % 2 == 1)
    if odd.size % 2 == 1:
        raise ValueError("total particle count must be even for the prescription")
    for a, b in zip(odd[0::2], odd[1::2]):
        if n[a] >= n[b]:
            n[a] += 1
            n[b] -= 1
        else:
            n[a] -= 1
            n[b] += 1
    return n


def prescribe_positions(rho_bar: MesoField, cfg: ChainConfig) -> PrescribedState:
    """Equally spaced synthetic positions matching the cell densities.

    Cell counts n_beta = round(rho_beta * L_eta * N / M) are adjusted to be
    even and renormalized so their total is exactly N; spacing within cell
    beta is Delta_beta = L_eta / n_beta.
    """
    mesh = rho_bar.mesh
    if np.any(rho_bar.values <= 0.0):
        cells = (np.flatnonzero(rho_bar.values <= 0.0) + 1).tolist()
        raise ZeroDensityCellError(f"zero density in cells {cells}")
    raw = rho_bar.values * mesh.l_eta * cfg.n / cfg.m
    n_beta = _even_counts(raw, cfg.n)
    delta = mesh.l_eta / n_beta
    cell_of = np.repeat(np.arange(mesh.b), n_beta)
    left = (mesh.centers - 0.5 * mesh.l_eta)[cell_of]
    within = np.concatenate([np.arange(nb) for nb in n_beta]).astype(float)
    q_hat = left + (within + 0.5) * delta[cell_of]
    return PrescribedState(mesh, n_beta, delta, q_hat, cell_of)


def prescribe_velocities(v_bar: MesoField, pos: PrescribedState, energy_ref: float,
                         window: WindowFunction, cfg: ChainConfig) -> PrescribedState:
    """Four-step quasi-isothermal velocity prescription.

    1) kappa^2 from the global energy budget, 2) per-cell fluctuation
    budgets K_beta, 3) per-cell amplitude t, 4) sign-alternating
    perturbations delta_v = t * (+-1) / psi.  The weighted perturbation sum
    vanishes per cell and the total energy of (q_hat, v_hat) equals
    energy_ref whenever the budget is feasible.
    """
    mesh = pos.mesh
    psi = window.values(mesh.centers[pos.cell_of] - pos.q_hat)
    if np.any(psi <= 0.0):
        raise ValueError("window must be positive at in-cell prescribed positions")
    inv = 1.0 / psi
    s1 = np.bincount(pos.cell_of, weights=inv, minlength=mesh.b)
    s2 = np.bincount(pos.cell_of, weights=inv * inv, minlength=mesh.b)
    u_hat = potential_energy(cfg, pos.q_hat)
    kin_means = 0.5 * (cfg.m / cfg.n) * float(
        np.dot(v_bar.values * v_bar.values, pos.n_beta)
    )
    budget = energy_ref - u_hat - kin_means
    scale = max(1.0, abs(energy_ref))
    if budget < -1e-12 * scale:
        raise InfeasiblePrescriptionError(-budget)
    budget = max(budget, 0.0)
    kappa_sq = (2.0 * cfg.n / cfg.m) * budget / float(np.sum(s2 / s1))
    k_beta = kappa_sq * s2 / s1
    t_amp = np.sqrt(kappa_sq / s1)
    signs = np.where(pos.within_index() % 2 == 0, 1.0, -1.0)
    delta_v = t_amp[pos.cell_of] * signs * inv
    v_hat = v_bar.values[pos.cell_of] + delta_v
    return PrescribedState(
        mesh, pos.n_beta, pos.delta_beta, pos.q_hat, pos.cell_of,
        v_hat=v_hat, kappa_sq=float(kappa_sq), k_beta=k_beta, t_amp=t_amp,
        signs=signs.astype(np.int64), delta_v=delta_v,
    )


def write_prescribed(path, prescribed: PrescribedState) -> None:
    """Checkpoint-style CSV (j,q,v) plus a JSON record of the cell data."""
    path = Path(path)
    write_checkpoint(path, prescribed.as_chain_state())
    meta = {
        "kappa_sq": prescribed.kappa_sq,
        "n_beta": prescribed.n_beta.tolist(),
        "delta_beta": prescribed.delta_beta.tolist(),
        "k_beta": None if prescribed.k_beta is None else prescribed.k_beta.tolist(),
        "t_amp": None if prescribed.t_amp is None else prescribed.t_amp.tolist(),
    }
    path.with_suffix(".json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n"
    )


def stress_conv_zero(v_bar: MesoField, prescribed: PrescribedState,
                     window: WindowFunction, cfg: ChainConfig) -> MesoField:
    """Riemann-sum convective stress of the prescribed state.

    T(x_alpha) = -sum_j (delta_v_j)^2 psi_eta(x_alpha - q_hat_j); under the
    quasi-isothermal prescription with a box window every node value equals
    -kappa^2, so the mesoscale finite difference of this field vanishes.
    """
    if not prescribed.complete:
        raise ValueError("velocity prescription required before convective stress")
    mesh = prescribed.mesh
    dv2 = prescribed.delta_v * prescribed.delta_v
    if window.kind == BOX and abs(window.eta * mesh.b - 1.0) < 1e-9:
        sums = np.bincount(prescribed.cell_of, weights=dv2, minlength=mesh.b)
        values = -sums / (window.eta * window.l)
    else:
        x = mesh.centers
        values = np.empty(mesh.b)
        for alpha in range(mesh.b):
            values[alpha] = -np.dot(dv2, window.values(x[alpha] - prescribed.q_hat))
    return MesoField(mesh, values, "stress-conv", mesh.boundary_affected(window))


def local_eos(rho_bar_value: float, cfg: ChainConfig) -> float:
    """Local equation of state T = -U'(M / rho); zero in the vacuum regime."""
    if rho_bar_value <= 0.0:
        raise ZeroDensityCellError("local equation of state needs positive density")
    return -float(cfg.potential.gradient(cfg.m / rho_bar_value))


def _interaction_integral(j_fine: FineField, window: WindowFunction,
                          cfg: ChainConfig, points: np.ndarray) -> np.ndarray:
    """-int U'(L/J(y)) int_0^1 psi(x - y - s h / J(y)) ds dy at given points.

    Box windows: the s-integral and the window discontinuity are handled by
    exact interval bookkeeping (invert y + s*d(y) at the window edges on the
    piecewise-linear grid, then difference the exact prefix integral of
    U'(L/J)).  Gaussian windows: tensor quadrature, trapezoid in y and
    5-point Gauss-Legendre in s.
    """
    jv = j_fine.values
    if np.any(jv <= 0.0):
        raise ReconstructionFailureError("nonpositive Jacobian on the fine grid")
    force = cfg.potential.gradient(cfg.l / jv)
    offset = cfg.h / jv
    x_f = j_fine.x
    if window.kind == BOX:
        a = window.half_width
        yn = np.concatenate([[0.0], x_f, [j_fine.l]])
        fe = np.concatenate([[force[0]], force, [force[-1]]])
        de = np.concatenate([[offset[0]], offset, [offset[-1]]])
        seg = 0.5 * (fe[1:] + fe[:-1]) * np.diff(yn)
        csum = np.concatenate([[0.0], np.cumsum(seg)])

        def prefix(t):
            t = np.clip(t, 0.0, j_fine.l)
            k = np.clip(np.searchsorted(yn, t, side="right") - 1, 0, yn.size - 2)
            dt = t - yn[k]
            slope = (fe[k + 1] - fe[k]) / (yn[k + 1] - yn[k])
            return csum[k] + fe[k] * dt + 0.5 * slope * dt * dt

        out = np.zeros(points.size)
        for s, ws in zip(GL5_NODES, GL5_WEIGHTS):
            z = yn + s * de
            if np.any(np.diff(z) <= 0.0):
                raise ReconstructionFailureError(
                    "bond-offset map is not monotone; Jacobian too rough"
                )
            y_lo = np.interp(points - a, z, yn)
            y_hi = np.interp(points + a, z, yn)
            out += ws * (prefix(y_hi) - prefix(y_lo))
        return -out / (window.eta * window.l)
    w = np.full(j_fine.g, j_fine.dx)
    w[0] *= 0.5
    w[-1] *= 0.5
    out = np.zeros(points.size)
    for s, ws in zip(GL5_NODES, GL5_WEIGHTS):
        psi = window.values(points[:, None] - x_f[None, :] - s * offset[None, :])
        out += ws * (psi @ (w * force))
    return -out


def stress_int_zero(rho_bar, window: WindowFunction, cfg: ChainConfig,
                    mode: str = "integral", g: int | None = None) -> MesoField:
    """Zero-order interaction stress at the mesh nodes.

    integral mode evaluates the nonlocal density functional with J = (L/M)
    rho on the fine grid; riemann mode places prescribed particles from the
    density and sums exact bond contributions over them.
    """
    if mode not in ("integral", "riemann"):
        raise ValueError(f"unknown mode {mode!r}")
    if isinstance(rho_bar, MesoField):
        mesh = rho_bar.mesh
        if np.any(rho_bar.values <= 0.0):
            raise ZeroDensityCellError("interaction stress needs positive density")
        if mode == "riemann":
            pos = prescribe_positions(rho_bar, cfg)
            pseudo = ChainState(0.0, pos.q_hat, np.zeros(cfg.n))
            return averaging.interaction_stress_exact(cfg, pseudo, window, mesh)
        fine_rho = meso_to_fine(rho_bar, g or fine_default_size(cfg.n))
    else:
        from .windows import mesh_for_window

        mesh = mesh_for_window(window)
        if mode == "riemann":
            raise ValueError("riemann mode needs mesh node densities (MesoField)")
        fine_rho = rho_bar
        if np.any(fine_rho.values <= 0.0):
            raise ZeroDensityCellError("interaction stress needs positive density")
    j0 = FineField(fine_rho.g, fine_rho.l, (cfg.l / cfg.m) * fine_rho.values)
    values = _interaction_integral(j0, window, cfg, mesh.centers)
    return MesoField(mesh, values, "stress-int", mesh.boundary_affected(window))


def stress_order_n(j_n: FineField, v_n: FineField, v_bar: MesoField,
                   window: WindowFunction, cfg: ChainConfig
                   ) -> tuple[MesoField, MesoField]:
    """Order-n convective and interaction stresses from fine reconstructions.

    T_conv(x) = -(M/L) int (v_n(y) - v_bar(x))^2 psi_eta(x - y) J_n(y) dy,
    expanded into three window convolutions of J, v J, v^2 J; T_int keeps
    the bond offset h / J_n(y) inside the kernel argument.
    """
    if j_n.g != v_n.g:
        raise ValueError("Jacobian and velocity reconstructions must share a grid")
    if np.any(j_n.values <= 0.0):
        raise ReconstructionFailureError("nonpositive Jacobian on the fine grid")
    mesh = v_bar.mesh
    nodes = mesh.centers
    op = ConvOperator(window, j_n.g)
    jv = j_n.values
    vv = v_n.values
    conv_j = op.apply_values_at(jv, nodes)
    conv_vj = op.apply_values_at(vv * jv, nodes)
    conv_v2j = op.apply_values_at(vv * vv * jv, nodes)
    vb = v_bar.values
    t_conv = -(cfg.m / cfg.l) * (conv_v2j - 2.0 * vb * conv_vj + vb * vb * conv_j)
    t_int = _interaction_integral(j_n, window, cfg, nodes)
    flags = mesh.boundary_affected(window)
    return (
        MesoField(mesh, t_conv, "stress-conv", flags),
        MesoField(mesh, t_int, "stress-int", flags),
    )
