"""Shared fixtures: session-cached reference runs.

Set MESOCHAIN_TEST_CACHE to a directory to persist the expensive microscale
runs (checkpoints are reused on the next pytest invocation); by default
everything lives in the session temp directory.
"""
from __future__ import annotations

import os
from dataclasses import replace
from pathlib import Path

import pytest

from mesochain import harness

RAMP_SNAPSHOTS = (0.0, 0.01, 0.03, 0.05, 0.06, 0.07)
SWEEP_NS = (10000, 20000, 40000, 80000)


@pytest.fixture(scope="session")
def cache_root(tmp_path_factory) -> Path:
    env = os.environ.get("MESOCHAIN_TEST_CACHE")
    if env:
        path = Path(env)
        path.mkdir(parents=True, exist_ok=True)
        return path
    return tmp_path_factory.mktemp("runs")


def micro_states(config: harness.ExperimentConfig, directory):
    """Load cached checkpoints or integrate and write them."""
    states = harness.load_snapshots(config, directory)
    if states is None:
        states = harness.cmd_run_micro(config, out_dir=directory)
    return states


@pytest.fixture(scope="session")
def ramp40k(cache_root):
    """Headline wave run: N=40000, B=50, box window, snapshots to t=0.07."""
    cfg = harness.ExperimentConfig(
        n=40000, snapshots=RAMP_SNAPSHOTS, out_dir=str(cache_root / "ramp40k")
    )
    states = micro_states(cfg, cfg.out_dir)
    report = harness.cmd_compare_closure(cfg, states=states)
    return {"config": cfg, "states": states, "report": report}


@pytest.fixture(scope="session")
def ramp4k(cache_root):
    """Smoke-scale wave run: N=4000, same geometry, seconds to integrate."""
    cfg = harness.ExperimentConfig(
        n=4000, snapshots=(0.0, 0.01), out_dir=str(cache_root / "ramp4k")
    )
    states = micro_states(cfg, cfg.out_dir)
    report = harness.cmd_compare_closure(cfg, states=states)
    return {"config": cfg, "states": states, "report": report}


@pytest.fixture(scope="session")
def sweep_report(cache_root):
    """Scale-separation sweep at t=0.01 with B=50 fixed."""
    base = harness.ExperimentConfig(
        n=40000, snapshots=(0.01,), out_dir=str(cache_root / "sweep")
    )
    for n_particles in SWEEP_NS:
        sub = replace(base, n=n_particles,
                      out_dir=str(Path(base.out_dir) / f"n{n_particles}"))
        micro_states(sub, sub.out_dir)
    return harness.cmd_sweep_n(base, list(SWEEP_NS), sweep_time=0.01)


@pytest.fixture(scope="session")
def osc_report(cache_root):
    """High-frequency oscillation run (N=10000) with its ramp companion."""
    out = cache_root / "osc"
    cfg = harness.ExperimentConfig(
        n=10000, snapshots=RAMP_SNAPSHOTS, amp=5.0, freq=20.0,
        out_dir=str(out),
    )
    osc_sub = replace(cfg, ic="oscillatory", out_dir=str(out / "oscillatory"))
    ramp_sub = replace(cfg, ic="ramp", out_dir=str(out / "ramp_reference"))
    micro_states(osc_sub, osc_sub.out_dir)
    micro_states(ramp_sub, ramp_sub.out_dir)
    return harness.cmd_oscillatory(cfg, region_time=0.01)
