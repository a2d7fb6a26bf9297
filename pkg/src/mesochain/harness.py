"""Experiment orchestration: configured runs, comparisons, and CSV bundles.

Every command echoes its effective configuration into the output directory
and records emitted files in ``manifest.json``.  The pipeline is
deterministic: identical configurations produce byte-identical CSVs.
"""
from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import averaging, closure, deconvolution, mesosolver
from .chain import (
    ChainConfig,
    ChainState,
    advance_to,
    init_oscillatory,
    init_ramp,
    read_checkpoint,
    total_energy,
    write_checkpoint,
    write_config,
)
from .errors import ConfigError, InfeasiblePrescriptionError
from .fields import fine_default_size, meso_to_fine
from .potentials import PowerLawPotential
from .windows import BOX, GAUSSIAN, MesoMesh, WindowFunction

SCHEMA_VERSION = 1
PAIRED_COLUMNS = ("beta", "x_beta", "exact", "approx", "abs_err")
DEFAULT_SNAPSHOTS = (0.0, 0.01, 0.03, 0.05, 0.06, 0.07)


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one experiment.

    wall_offset_half_h defaults to True here: with walls at exactly 0 and L
    the rest lattice is not an equilibrium (the half-gap falls inside the
    potential cutoff) and the boundary particles inject a spurious O(1)
    velocity burst that swamps the wave fields being reproduced.
    """

    n: int = 40000
    l: float = 1.0
    m: float = 1.0
    c_r: float = 100.0
    p: float = 2.0
    alpha: float = 1.0
    wall_stiffness: float | None = None
    wall_offset_half_h: bool = True
    dt: float | None = None
    window_kind: str = BOX
    b: int = 50
    g: int | None = None
    order: int = 0
    ic: str = "ramp"
    gamma: float = 0.3
    amp: float = 5.0
    freq: float = 20.0
    snapshots: tuple = DEFAULT_SNAPSHOTS
    out_dir: str = "out"
    exclude_boundary: bool = True
    norms: tuple = ("Linf", "L2")
    seed: int | None = None  # reserved; the pipeline is deterministic

    def __post_init__(self):
        if self.ic not in ("ramp", "oscillatory"):
            raise ConfigError(f"unknown initial condition {self.ic!r}")
        if self.window_kind not in (BOX, GAUSSIAN):
            raise ConfigError(f"unknown window kind {self.window_kind!r}")
        if self.b < 2:  # eta = 1/b must lie strictly inside (0, 1)
            raise ConfigError("b must be an integer >= 2")
        snaps = tuple(float(t) for t in self.snapshots)
        if not snaps:
            raise ConfigError("at least one snapshot time is required")
        if any(t < 0.0 for t in snaps) or list(snaps) != sorted(snaps):
            raise ConfigError("snapshot times must be sorted and nonnegative")
        object.__setattr__(self, "snapshots", snaps)
        unknown = set(self.norms) - {"Linf", "L2"}
        if unknown:
            raise ConfigError(f"unknown norms {sorted(unknown)}")
        if self.order < 0:
            raise ConfigError("closure order must be nonnegative")

    @property
    def eta(self) -> float:
        return 1.0 / self.b

    @property
    def t_end(self) -> float:
        return self.snapshots[-1]

    def chain_config(self) -> ChainConfig:
        pot = PowerLawPotential(c_r=self.c_r, p=self.p, x_star=self.alpha * self.l)
        return ChainConfig(
            n=self.n, l=self.l, m=self.m, potential=pot,
            wall_stiffness=self.wall_stiffness, dt=self.dt,
            wall_offset_half_h=self.wall_offset_half_h,
        )

    def window(self) -> WindowFunction:
        return WindowFunction(self.window_kind, self.eta, self.l)

    def mesh(self) -> MesoMesh:
        return MesoMesh(self.b, self.l)

    def fine_size(self) -> int:
        return self.g if self.g is not None else fine_default_size(self.n)

    def initial_state(self) -> ChainState:
        cfg = self.chain_config()
        if self.ic == "ramp":
            return init_ramp(cfg, self.gamma)
        return init_oscillatory(cfg, self.gamma, self.amp, self.freq)

    def to_dict(self) -> dict:
        return {
            "n": self.n, "l": self.l, "m": self.m, "c_r": self.c_r, "p": self.p,
            "alpha": self.alpha, "wall_stiffness": self.wall_stiffness,
            "wall_offset_half_h": self.wall_offset_half_h, "dt": self.dt,
            "window_kind": self.window_kind, "b": self.b, "eta": self.eta,
            "g": self.g, "order": self.order, "ic": self.ic, "gamma": self.gamma,
            "amp": self.amp, "freq": self.freq, "snapshots": list(self.snapshots),
            "out_dir": self.out_dir, "exclude_boundary": self.exclude_boundary,
            "norms": list(self.norms), "seed": self.seed,
            "schema_version": SCHEMA_VERSION,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        d.pop("schema_version", None)
        eta = d.pop("eta", None)
        if eta is not None and "b" in d and abs(d["b"] * eta - 1.0) > 1e-9:
            raise ConfigError(f"b = {d['b']} and eta = {eta} violate b * eta = 1")
        if eta is not None and "b" not in d:
            b = round(1.0 / eta)
            if abs(b * eta - 1.0) > 1e-9:
                raise ConfigError(f"1/eta = {1.0 / eta} is not an integer")
            d["b"] = b
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        if "snapshots" in d:
            d["snapshots"] = tuple(d["snapshots"])
        if "norms" in d:
            d["norms"] = tuple(d["norms"])
        return cls(**d)


def load_config(path) -> ExperimentConfig:
    """Read an ExperimentConfig from a JSON or TOML file."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib  # py311+
        except ModuleNotFoundError:
            try:
                import tomli as tomllib
            except ModuleNotFoundError as exc:
                raise ConfigError("TOML configs need python>=3.11 or tomli") from exc
        data = tomllib.loads(text)
    else:
        data = json.loads(text)
    return ExperimentConfig.from_dict(data)


class Manifest:
    """Collects emitted files with their schemas for the output directory."""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.entries: list[dict] = []

    def add(self, path: Path, kind: str, schema, **meta) -> None:
        entry = {"path": str(Path(path).relative_to(self.out_dir)), "kind": kind,
                 "schema": list(schema)}
        entry.update(meta)
        self.entries.append(entry)

    def write(self) -> None:
        payload = {"schema_version": SCHEMA_VERSION, "files": self.entries}
        (self.out_dir / "manifest.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n"
        )


def _prepare_out(config: ExperimentConfig, out_dir) -> tuple[Path, Manifest]:
    out = Path(out_dir if out_dir is not None else config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "experiment_config.json").write_text(
        json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n"
    )
    return out, Manifest(out)


def snapshot_name(t: float) -> str:
    return f"t{t:.6f}"


def run_snapshots(config: ExperimentConfig):
    """Integrate the microscale chain, yielding (t, state) at snapshot times."""
    cfg = config.chain_config()
    state = config.initial_state()
    for t in config.snapshots:
        state = advance_to(cfg, state, t)
        yield t, state


def cmd_run_micro(config: ExperimentConfig, out_dir=None) -> list[ChainState]:
    """Integrate and write one checkpoint CSV per snapshot time."""
    out, manifest = _prepare_out(config, out_dir)
    cfg = config.chain_config()
    write_config(out / "chain_config.json", cfg)
    t0 = time.perf_counter()
    states = []
    for t, state in run_snapshots(config):
        path = out / f"checkpoint_{snapshot_name(t)}.csv"
        write_checkpoint(path, state)
        manifest.add(path, "chain_checkpoint", ("j", "q", "v"), t=t)
        states.append(state.copy())
    manifest.entries.append({"path": "chain_config.json", "kind": "chain_config",
                             "schema": [], "runtime_s": time.perf_counter() - t0})
    manifest.write()
    return states


def load_snapshots(config: ExperimentConfig, out_dir) -> list[ChainState] | None:
    """Read previously written checkpoints, or None if any is missing."""
    out = Path(out_dir)
    states = []
    for t in config.snapshots:
        path = out / f"checkpoint_{snapshot_name(t)}.csv"
        if not path.exists():
            return None
        states.append(read_checkpoint(path, t=t))
    return states


def _norms(exact: np.ndarray, approx: np.ndarray, mask: np.ndarray,
           l_eta: float) -> dict:
    err = np.abs(exact - approx)
    out = {
        "linf": float(err.max()) if err.size else 0.0,
        "l2": float(np.sqrt(np.sum(err * err) * l_eta)),
        "linf_interior": float(err[mask].max()) if mask.any() else 0.0,
        "l2_interior": float(np.sqrt(np.sum(err[mask] ** 2) * l_eta)),
        "max_abs_exact": float(np.abs(exact).max()) if exact.size else 0.0,
        "max_abs_approx": float(np.abs(approx).max()) if approx.size else 0.0,
    }
    return out


def write_paired_csv(path, mesh: MesoMesh, exact: np.ndarray,
                     approx: np.ndarray) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PAIRED_COLUMNS)
        x = mesh.centers
        for i in range(mesh.b):
            writer.writerow([
                i + 1, format(x[i], ".17g"), format(exact[i], ".17g"),
                format(approx[i], ".17g"), format(abs(exact[i] - approx[i]), ".17g"),
            ])


def micro_velocity_at(state: ChainState, points: np.ndarray) -> np.ndarray:
    """Microscale velocity interpolant sampled at given points."""
    return np.interp(points, state.q, state.v)


@dataclass
class SnapshotComparison:
    t: float
    quantities: dict
    kappa_sq: float | None
    infeasible_deficit: float | None
    fields: dict = field(default_factory=dict, repr=False)


def compare_snapshot(config: ExperimentConfig, state: ChainState,
                     energy_ref: float) -> SnapshotComparison:
    """Exact vs closed-form quantities at the mesh nodes for one snapshot."""
    cfg = config.chain_config()
    window = config.window()
    mesh = config.mesh()
    gsize = config.fine_size()
    order = config.order

    rho = averaging.average_density(cfg, state, window, mesh)
    mom = averaging.average_momentum(cfg, state, window, mesh)
    vbar = averaging.average_velocity(cfg, state, window, mesh)
    tconv_exact = averaging.convective_stress_exact(cfg, state, window, mesh)
    tint_exact = averaging.interaction_stress_exact(cfg, state, window, mesh)
    jac_exact = averaging.jacobian_at_mesh(cfg, state, mesh)

    if order == 0:
        jac_approx = (cfg.l / cfg.m) * rho.values
        v_approx = vbar.values
        tint_approx = closure.stress_int_zero(
            rho, window, cfg, mode="integral", g=gsize
        ).values
        tconv_order = None
    else:
        op = deconvolution.ConvOperator(window, gsize)
        j_n = deconvolution.reconstruct_J(op, meso_to_fine(rho, gsize), order, cfg)
        v_n = deconvolution.reconstruct_v(
            op, meso_to_fine(rho, gsize), meso_to_fine(mom, gsize), order, cfg
        )
        tconv_n, tint_n = closure.stress_order_n(j_n, v_n, vbar, window, cfg)
        jac_approx = j_n.sample_at(mesh.centers)
        v_approx = v_n.sample_at(mesh.centers)
        tint_approx = tint_n.values
        tconv_order = tconv_n.values

    kappa_sq = None
    deficit = None
    try:
        pos = closure.prescribe_positions(rho, cfg)
        prescribed = closure.prescribe_velocities(vbar, pos, energy_ref, window, cfg)
        kappa_sq = prescribed.kappa_sq
    except InfeasiblePrescriptionError as exc:
        deficit = exc.deficit
    except ValueError:
        pass

    if tconv_order is not None:
        tconv_approx = tconv_order
    elif kappa_sq is not None:
        tconv_approx = np.full(mesh.b, -kappa_sq)
    else:
        tconv_approx = np.zeros(mesh.b)

    v_exact = micro_velocity_at(state, mesh.centers)
    interior = ~(rho.boundary_affected | jac_exact.boundary_affected)
    quantities = {
        "jacobian": {"exact": jac_exact.values, "approx": jac_approx},
        "velocity": {"exact": v_exact, "approx": v_approx},
        "stress_int": {"exact": tint_exact.values, "approx": tint_approx},
        "stress_conv": {"exact": tconv_exact.values, "approx": tconv_approx},
    }
    report_q = {}
    for name, pair in quantities.items():
        report_q[name] = _norms(pair["exact"], pair["approx"], interior, mesh.l_eta)
    fields = {
        "rho": rho, "mom": mom, "vbar": vbar, "tconv_exact": tconv_exact,
        "tint_exact": tint_exact, "jac_exact": jac_exact, "interior": interior,
        "pairs": quantities,
    }
    return SnapshotComparison(state.t, report_q, kappa_sq, deficit, fields)


def cmd_compare_closure(config: ExperimentConfig, out_dir=None,
                        states: list[ChainState] | None = None) -> dict:
    """Full exact-vs-closure comparison report plus paired-series CSVs."""
    out, manifest = _prepare_out(config, out_dir)
    cfg = config.chain_config()
    t_start = time.perf_counter()
    if states is None:
        states = load_snapshots(config, out)
    if states is None:
        states = [state for _, state in run_snapshots(config)]
    integrate_s = time.perf_counter() - t_start

    energy_ref = total_energy(cfg, states[0])
    comparisons = []
    t_cmp = time.perf_counter()
    for state in states:
        comp = compare_snapshot(config, state, energy_ref)
        comparisons.append(comp)
        mesh = config.mesh()
        for name, pair in comp.fields["pairs"].items():
            path = out / f"compare_{name}_{snapshot_name(comp.t)}.csv"
            write_paired_csv(path, mesh, pair["exact"], pair["approx"])
            manifest.add(path, "paired_series", PAIRED_COLUMNS, t=comp.t,
                         quantity=name)
    compare_s = time.perf_counter() - t_cmp

    conv_max = max(c.quantities["stress_conv"]["max_abs_exact"] for c in comparisons)
    int_max = max(c.quantities["stress_int"]["max_abs_exact"] for c in comparisons)
    report = {
        "schema_version": SCHEMA_VERSION,
        "config": config.to_dict(),
        "energy_ref": energy_ref,
        "snapshots": [
            {
                "t": c.t,
                "kappa_sq": c.kappa_sq,
                "infeasible_deficit": c.infeasible_deficit,
                "quantities": c.quantities,
            }
            for c in comparisons
        ],
        "kappa_sq_trace": [[c.t, c.kappa_sq] for c in comparisons],
        "conv_stress_max_abs": conv_max,
        "int_stress_max_abs": int_max,
        "runtime_s": {"integration": integrate_s, "comparison": compare_s},
    }
    path = out / "comparison_report.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    manifest.add(path, "report", [])
    manifest.write()
    report["_comparisons"] = comparisons
    return report


def cmd_sweep_n(config: ExperimentConfig, n_list, out_dir=None,
                sweep_time: float | None = None) -> dict:
    """Scale-separation sweep: fixed B, varying N, errors at a common time."""
    out, manifest = _prepare_out(config, out_dir)
    t_common = sweep_time if sweep_time is not None else config.snapshots[-1]
    key = "linf_interior" if config.exclude_boundary else "linf"
    rows = []
    for n_particles in n_list:
        sub = replace(config, n=int(n_particles), snapshots=(t_common,),
                      g=None, out_dir=str(out / f"n{int(n_particles)}"))
        rep = cmd_compare_closure(sub, out_dir=sub.out_dir)
        snap = rep["snapshots"][-1]
        rows.append({
            "n": int(n_particles),
            "err_jacobian_linf_interior": snap["quantities"]["jacobian"][key],
            "err_stress_int_linf_interior": snap["quantities"]["stress_int"][key],
        })
    path = out / "sweep.csv"
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "err_jacobian_linf_interior",
                         "err_stress_int_linf_interior"])
        for row in rows:
            writer.writerow([row["n"],
                             format(row["err_jacobian_linf_interior"], ".17g"),
                             format(row["err_stress_int_linf_interior"], ".17g")])
    manifest.add(path, "sweep_series", ["n", "err_jacobian_linf_interior",
                                        "err_stress_int_linf_interior"],
                 t=t_common)
    manifest.write()
    report = {"schema_version": SCHEMA_VERSION, "t": t_common, "points": rows,
              "config": config.to_dict()}
    (out / "sweep_report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n"
    )
    return report


def front_position(state: ChainState, threshold: float) -> float:
    """Rightmost particle position with |v| above threshold (wave front)."""
    active = np.abs(state.v) > threshold
    if not active.any():
        return 0.0
    return float(state.q[np.flatnonzero(active)[-1]])


def cmd_oscillatory(config: ExperimentConfig, out_dir=None,
                    region_time: float = 0.01) -> dict:
    """High-fluctuation failure-mode experiment with a ramp companion run.

    Runs the oscillatory initial condition, measures the convective stress
    against the companion ramp run (same N, B, snapshots), and splits the
    interaction-stress error at the measured wave front of the region_time
    snapshot.
    """
    base = replace(config, ic="oscillatory")
    out, manifest = _prepare_out(base, out_dir)
    if region_time not in base.snapshots:
        raise ConfigError(f"region_time {region_time} must be a snapshot time")

    osc_rep = cmd_compare_closure(base, out_dir=str(out / "oscillatory"))
    ramp_cfg = replace(base, ic="ramp", out_dir=str(out / "ramp_reference"))
    ramp_rep = cmd_compare_closure(ramp_cfg, out_dir=ramp_cfg.out_dir)

    idx = list(base.snapshots).index(region_time)
    osc_comp = osc_rep["_comparisons"][idx]
    ramp_comp = ramp_rep["_comparisons"][idx]

    # front measured from the averaged velocity at region_time: rightmost
    # node that has started moving, plus one cell of margin
    tint_pair = osc_comp.fields["pairs"]["stress_int"]
    err = np.abs(tint_pair["exact"] - tint_pair["approx"])
    if base.exclude_boundary:
        interior = osc_comp.fields["interior"]
    else:
        interior = np.ones(base.b, dtype=bool)
    vbar = osc_comp.fields["vbar"].values
    mesh = base.mesh()
    x = mesh.centers
    active = np.abs(vbar) > 1e-8 * max(1.0, abs(base.gamma))
    front = float(x[np.flatnonzero(active)[-1]]) if active.any() else 0.0
    front += mesh.l_eta
    perturbed = interior & (x <= front)
    unperturbed = interior & (x > front)

    key = "linf_interior" if base.exclude_boundary else "linf"
    ramp_tint = ramp_comp.quantities["stress_int"][key]
    ramp_conv_max = max(
        s["quantities"]["stress_conv"]["max_abs_exact"] for s in ramp_rep["snapshots"]
    )
    osc_conv_max = max(
        s["quantities"]["stress_conv"]["max_abs_exact"] for s in osc_rep["snapshots"]
    )
    report = {
        "schema_version": SCHEMA_VERSION,
        "config": base.to_dict(),
        "region_time": region_time,
        "front_position": front,
        "conv_stress_max_abs": {"oscillatory": osc_conv_max, "ramp": ramp_conv_max},
        "conv_stress_ratio": osc_conv_max / ramp_conv_max if ramp_conv_max else None,
        "stress_int_err_perturbed_linf": float(err[perturbed].max())
        if perturbed.any() else None,
        "stress_int_err_unperturbed_linf": float(err[unperturbed].max())
        if unperturbed.any() else None,
        "ramp_stress_int_err_linf_interior": ramp_tint,
    }
    path = out / "oscillatory_report.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    manifest.add(path, "report", [])
    manifest.write()
    report["_oscillatory"] = osc_rep
    report["_ramp"] = ramp_rep
    return report


def cmd_run_meso(config: ExperimentConfig, out_dir=None,
                 closure_kind: str = "nonlocal") -> list[mesosolver.MesoState]:
    """Run the closed continuum model from the averaged initial condition."""
    out, manifest = _prepare_out(config, out_dir)
    cfg = config.chain_config()
    window = config.window()
    mesh = config.mesh()
    state0 = config.initial_state()
    meso0 = mesosolver.meso_state_from_micro(cfg, state0, window, mesh)
    if closure_kind == "nonlocal":
        closure_fn = mesosolver.make_nonlocal_closure(window, config.fine_size())
    elif closure_kind == "local":
        closure_fn = mesosolver.local_eos_closure
    else:
        raise ConfigError(f"unknown closure kind {closure_kind!r}")
    snaps = mesosolver.run_closed(
        meso0, config.t_end, closure_fn, cfg, snapshot_times=config.snapshots
    )
    for snap in snaps:
        for quantity, fld in (("density", snap.rho), ("momentum", snap.mom)):
            path = out / f"meso_{quantity}_{snapshot_name(snap.t)}.csv"
            fld.write_csv(path)
            manifest.add(path, "meso_field",
                         ("beta", "x_beta", "value", "boundary_affected"),
                         t=snap.t, quantity=quantity)
    manifest.write()
    return snaps


def cmd_reconstruct(config: ExperimentConfig, out_dir=None,
                    states: list[ChainState] | None = None) -> dict:
    """Write order-n fine-grid reconstructions J_n, v_n per snapshot."""
    out, manifest = _prepare_out(config, out_dir)
    cfg = config.chain_config()
    window = config.window()
    mesh = config.mesh()
    gsize = config.fine_size()
    op = deconvolution.ConvOperator(window, gsize)
    if states is None:
        states = load_snapshots(config, out)
    if states is None:
        states = [state for _, state in run_snapshots(config)]
    outputs = []
    for state in states:
        rho = averaging.average_density(cfg, state, window, mesh)
        mom = averaging.average_momentum(cfg, state, window, mesh)
        j_n = deconvolution.reconstruct_J(op, meso_to_fine(rho, gsize),
                                          config.order, cfg)
        v_n = deconvolution.reconstruct_v(op, meso_to_fine(rho, gsize),
                                          meso_to_fine(mom, gsize),
                                          config.order, cfg)
        for quantity, fld in (("jacobian", j_n), ("velocity", v_n)):
            path = out / f"reconstruct_{quantity}_{snapshot_name(state.t)}.csv"
            fld.write_csv(path)
            manifest.add(path, "fine_field", ("i", "x_i", "value"), t=state.t,
                         quantity=quantity, order=config.order)
        outputs.append({"t": state.t, "j_n": j_n, "v_n": v_n})
    manifest.write()
    return {"snapshots": outputs}
