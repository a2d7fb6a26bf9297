"""Chain mechanics: forces, integration, energy, initial data, checkpoint IO."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mesochain import chain
from mesochain.chain import (
    ChainConfig,
    ChainState,
    advance,
    advance_to,
    init_oscillatory,
    init_ramp,
    lattice_positions,
    net_forces,
    potential_energy,
    read_checkpoint,
    step_verlet,
    total_energy,
    write_checkpoint,
)
from mesochain.errors import ChainGeometryError, IntegrationBlowupError
from mesochain.potentials import PowerLawPotential


def make_cfg(n=40, offset=True, **kw):
    return ChainConfig(n=n, wall_offset_half_h=offset, **kw)


def perturbed_lattice_state(cfg, rng, rel=0.2):
    """Lattice plus sub-quarter-gap jitter: neighbors stay the only pairs in range."""
    q = lattice_positions(cfg) + rng.uniform(-rel, rel, cfg.n) * cfg.h
    v = rng.standard_normal(cfg.n) * 0.1
    return ChainState(0.0, q, v)


def brute_force_all_pairs(cfg, state):
    """O(N^2) oracle: every pair (and wall) within the cutoff contributes."""
    pot = cfg.potential
    wall_pot = PowerLawPotential(cfg.wall_stiffness, pot.p, pot.x_star)
    n = cfg.n
    f = np.zeros(n)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            xi = abs(state.q[i] - state.q[j]) * n
            if xi <= pot.x_star:
                f[i] += math.copysign(1.0, state.q[i] - state.q[j]) * pot.gradient(xi)
        for wall in (cfg.wall_left, cfg.wall_right):
            xi = abs(state.q[i] - wall) * n
            if xi <= pot.x_star:
                f[i] += math.copysign(1.0, state.q[i] - wall) * wall_pot.gradient(xi)
    return f


class TestForces:
    def test_rest_lattice_is_equilibrium_with_offset_walls(self):
        cfg = make_cfg(n=50, offset=True)
        state = ChainState(0.0, lattice_positions(cfg), np.zeros(50))
        assert np.abs(net_forces(cfg, state)).max() < 1e-8

    def test_literal_walls_push_boundary_particles(self):
        # walls at exactly 0 and L leave the half-gap inside the cutoff
        cfg = make_cfg(n=50, offset=False)
        state = ChainState(0.0, lattice_positions(cfg), np.zeros(50))
        f = net_forces(cfg, state)
        assert f[0] == pytest.approx(cfg.potential.gradient(0.5 * cfg.l), rel=1e-12)
        assert f[-1] == pytest.approx(-cfg.potential.gradient(0.5 * cfg.l), rel=1e-12)
        assert np.abs(f[1:-1]).max() < 1e-8

    def test_compressed_bond_is_equal_and_opposite(self):
        cfg = make_cfg(n=4, offset=True)
        h = cfg.h
        q = np.array([0.5 * h, 1.55 * h, 2.45 * h, 3.5 * h])
        f = net_forces(cfg, ChainState(0.0, q, np.zeros(4)))
        expected = cfg.potential.gradient(0.9 * cfg.l)
        assert f[1] == pytest.approx(-expected, rel=1e-12)
        assert f[2] == pytest.approx(expected, rel=1e-12)
        assert f[0] == 0.0 and f[3] == 0.0

    def test_matches_all_pairs_oracle(self):
        rng = np.random.default_rng(7)
        cfg = make_cfg(n=12, offset=False)
        state = perturbed_lattice_state(cfg, rng)
        np.testing.assert_allclose(
            net_forces(cfg, state), brute_force_all_pairs(cfg, state),
            rtol=1e-12, atol=1e-12,
        )

    def test_newton_third_law_bond_assembly_is_exact(self):
        from mesochain.averaging import bond_forces

        rng = np.random.default_rng(3)
        cfg = make_cfg(n=30, offset=True)
        state = perturbed_lattice_state(cfg, rng)
        bf = bond_forces(cfg, state)  # signed f_{j,j+1}, one per bond
        wall_pot = PowerLawPotential(cfg.wall_stiffness, cfg.potential.p,
                                     cfg.potential.x_star)
        f = np.zeros(cfg.n)
        f += np.concatenate([bf, [-wall_pot.gradient((cfg.wall_right - state.q[-1]) * cfg.n)]])
        f -= np.concatenate([[-wall_pot.gradient((state.q[0] - cfg.wall_left) * cfg.n)], bf])
        np.testing.assert_array_equal(f, net_forces(cfg, state))

    def test_internal_forces_sum_to_wall_reaction(self):
        rng = np.random.default_rng(11)
        cfg = make_cfg(n=25, offset=True)
        state = perturbed_lattice_state(cfg, rng)
        f = net_forces(cfg, state)
        wall_pot = PowerLawPotential(cfg.wall_stiffness, cfg.potential.p,
                                     cfg.potential.x_star)
        walls = wall_pot.gradient((state.q[0] - cfg.wall_left) * cfg.n) \
            - wall_pot.gradient((cfg.wall_right - state.q[-1]) * cfg.n)
        assert math.fsum(f) == pytest.approx(walls, abs=1e-12 * max(1.0, abs(walls)))

    def test_coincident_particles_rejected(self):
        cfg = make_cfg(n=4)
        q = np.array([0.1, 0.2, 0.2, 0.9])
        with pytest.raises(ChainGeometryError):
            net_forces(cfg, ChainState(0.0, q, np.zeros(4)))

    def test_force_is_minus_potential_gradient(self):
        rng = np.random.default_rng(5)
        cfg = make_cfg(n=10, offset=False)
        state = perturbed_lattice_state(cfg, rng)
        f = net_forces(cfg, state)
        delta = 1e-7 * cfg.l
        for j in range(cfg.n):
            q_plus = state.q.copy()
            q_minus = state.q.copy()
            q_plus[j] += delta
            q_minus[j] -= delta
            fd = -(potential_energy(cfg, q_plus) - potential_energy(cfg, q_minus)) / (2 * delta)
            assert f[j] == pytest.approx(fd, rel=1e-5, abs=1e-7)


class TestConfig:
    def test_derived_quantities_exact(self):
        cfg = make_cfg(n=400)
        assert cfg.eps == 1.0 / 400
        assert cfg.h == cfg.l / 400
        assert cfg.wall_stiffness == cfg.potential.c_r

    def test_default_dt_respects_stability_budget(self):
        cfg = make_cfg(n=40000)
        omega = cfg.n * np.sqrt(2 * cfg.potential.c_r * cfg.potential.p / cfg.m)
        assert cfg.dt * omega == pytest.approx(0.05, rel=1e-12)

    def test_oversized_dt_rejected(self):
        with pytest.raises(ValueError):
            make_cfg(n=100, dt=1.0)

    def test_too_few_particles_rejected(self):
        with pytest.raises(ValueError):
            ChainConfig(n=1)

    def test_roundtrip_dict(self):
        cfg = make_cfg(n=123, m=2.0, l=3.0)
        assert ChainConfig.from_dict(cfg.to_dict()) == cfg


class TestIntegrator:
    def test_equilibrium_is_fixed_point(self):
        cfg = make_cfg(n=20)
        state = ChainState(0.0, lattice_positions(cfg), np.zeros(20))
        nxt = step_verlet(cfg, state)
        np.testing.assert_allclose(nxt.q, state.q, rtol=0, atol=1e-12 * cfg.l)
        np.testing.assert_allclose(nxt.v, np.zeros(20), atol=1e-9)
        assert nxt.t == pytest.approx(cfg.dt)

    def test_first_order_agrees_with_euler(self):
        # one-step gap vs explicit Euler is O(dt^2): halving dt quarters it
        cfg = make_cfg(n=8)
        q = lattice_positions(cfg)
        q[3] += 0.2 * cfg.h
        v0 = 0.5 * np.sin(np.arange(1.0, 9.0))
        state = ChainState(0.0, q, v0)
        a0 = net_forces(cfg, state) * cfg.n / cfg.m

        def euler_gap(dt):
            nxt = advance(cfg, state, 1, dt=dt)
            gap = np.linalg.norm(nxt.v - (state.v + dt * a0))
            assert gap <= 5e-3 * np.linalg.norm(dt * a0)  # first-order match
            return gap

        e1 = euler_gap(cfg.dt)
        e2 = euler_gap(cfg.dt / 2)
        assert e1 / e2 == pytest.approx(4.0, rel=0.15)

    def test_energy_stable_over_ten_thousand_steps(self):
        cfg = make_cfg(n=1000)
        state = init_ramp(cfg, 0.3)
        e0 = total_energy(cfg, state)
        out = advance(cfg, state, 10_000)
        assert abs(total_energy(cfg, out) - e0) / abs(e0) < 1e-6
        assert np.all(np.diff(out.q) > 0)

    def test_time_reversibility(self):
        cfg = make_cfg(n=400)
        state = init_ramp(cfg, 0.3)
        fwd = advance(cfg, state, 1000)
        back = advance(cfg, ChainState(fwd.t, fwd.q, -fwd.v), 1000)
        assert np.abs(back.q - state.q).max() / cfg.l < 1e-8

    def test_blowup_reports_smaller_step_advice(self):
        cfg = make_cfg(n=8)
        q = lattice_positions(cfg)
        q[3] += 0.4 * cfg.h
        state = ChainState(0.0, q, np.zeros(8))
        with pytest.raises(IntegrationBlowupError, match="smaller"):
            advance(cfg, state, 500, dt=2000 * cfg.dt)

    def test_advance_to_lands_exactly_on_target(self):
        cfg = make_cfg(n=50)
        state = init_ramp(cfg, 0.1)
        target = 137.5 * cfg.dt
        out = advance_to(cfg, state, target)
        assert out.t == target
        again = advance_to(cfg, out, target)
        assert again.t == target
        np.testing.assert_array_equal(again.q, out.q)


class TestEnergy:
    def test_equilibrium_energy_is_potential_only(self):
        cfg = make_cfg(n=30, offset=True)
        state = ChainState(0.0, lattice_positions(cfg), np.zeros(30))
        # all gaps sit exactly at the cutoff, so the potential vanishes too
        assert total_energy(cfg, state) == pytest.approx(0.0, abs=1e-12)

    def test_uniform_velocity_adds_half_m_gamma_sq(self):
        cfg = make_cfg(n=30, m=2.5)
        gamma = 0.7
        state = ChainState(0.0, lattice_positions(cfg), np.full(30, gamma))
        rest = ChainState(0.0, lattice_positions(cfg), np.zeros(30))
        gain = total_energy(cfg, state) - total_energy(cfg, rest)
        assert gain == pytest.approx(0.5 * cfg.m * gamma**2, rel=1e-12)

    def test_literal_wall_energy_matches_hand_value(self):
        # walls at 0 and L: two wall gaps h/2, i.e. -2*eps*U(L/2) = +100/N
        cfg = make_cfg(n=50, offset=False)
        state = ChainState(0.0, lattice_positions(cfg), np.zeros(50))
        assert total_energy(cfg, state) == pytest.approx(100.0 / 50, rel=1e-12)


class TestInitialData:
    def test_ramp_profile_reference_points(self):
        cfg = make_cfg(n=5)  # lattice 0.1, 0.3, 0.5, 0.7, 0.9
        state = init_ramp(cfg, 0.3)
        np.testing.assert_allclose(state.v, [0.3, 0.15, 0.0, 0.0, 0.0], atol=1e-15)

    def test_ramp_is_continuous_at_breaks(self):
        cfg = make_cfg(n=1000)
        state = init_ramp(cfg, 0.3)
        v = np.interp([0.2, 0.4], state.q, state.v)
        assert v[0] == pytest.approx(0.3, abs=2e-3)
        assert v[1] == pytest.approx(0.0, abs=2e-3)

    def test_oscillatory_quarter_period_value(self):
        cfg = make_cfg(n=100)  # first particle at q=0.005
        state = init_oscillatory(cfg, 0.3, a=5.0, k=20.0)
        assert state.q[0] == pytest.approx(0.005)
        assert state.v[0] == pytest.approx(0.3 + 5.0 * np.sin(0.5 * np.pi), rel=1e-12)

    def test_oscillation_confined_to_moving_region(self):
        cfg = make_cfg(n=200)
        state = init_oscillatory(cfg, 0.3, a=5.0, k=20.0)
        quiet = state.q > 2 * cfg.l / 5
        assert np.all(state.v[quiet] == 0.0)

    def test_zero_amplitude_reduces_to_ramp(self):
        cfg = make_cfg(n=64)
        np.testing.assert_array_equal(
            init_oscillatory(cfg, 0.3, a=0.0, k=20.0).v, init_ramp(cfg, 0.3).v
        )


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(5, 60))
@settings(max_examples=40, deadline=None)
def test_ordering_preserved_and_energy_bounded(seed, n):
    # rough random states excite stiff bonds (worse at small n, where a
    # single compressed bond stores O(1) energy), so the bounded symplectic
    # oscillation sits well above the smooth-wave level; this is a coarse
    # no-blow-up bound, the tight 1e-6 lives on the smooth runs
    rng = np.random.default_rng(seed)
    cfg = make_cfg(n=n)
    state = perturbed_lattice_state(cfg, rng, rel=0.15)
    e0 = total_energy(cfg, state)
    out = advance(cfg, state, 200)
    assert np.all(np.diff(out.q) > 0)
    assert abs(total_energy(cfg, out) - e0) <= 1e-2 * max(1.0, abs(e0))


def test_numpy_fallback_matches_compiled_kernels():
    # the pure-numpy integrator is the no-numba fallback: identical
    # expressions and update order make trajectories bit-identical
    from mesochain import _integrator

    cfg = make_cfg(n=32)
    rng = np.random.default_rng(2)
    state = perturbed_lattice_state(cfg, rng)
    pot = cfg.potential
    args = (cfg.n, pot.c_r, pot.p, pot.x_star, cfg.wall_stiffness,
            cfg.wall_left, cfg.wall_right)

    def run(fill, steps_fn):
        q, v = state.q.copy(), state.v.copy()
        f = np.empty(cfg.n)
        fill(q, f, *args)
        steps_fn(q, v, f, 100, cfg.dt, cfg.n, cfg.m, *args[1:])
        return q, v

    q_jit, v_jit = run(_integrator._fill_forces, _integrator._verlet_steps)
    q_np, v_np = run(_integrator._fill_forces_numpy,
                     _integrator._verlet_steps_numpy)
    np.testing.assert_array_equal(q_jit, q_np)
    np.testing.assert_array_equal(v_jit, v_np)


class TestCheckpointIO:
    def test_roundtrip_is_exact(self, tmp_path):
        rng = np.random.default_rng(1)
        cfg = make_cfg(n=17)
        state = perturbed_lattice_state(cfg, rng)
        path = tmp_path / "ck.csv"
        write_checkpoint(path, state)
        loaded = read_checkpoint(path, t=state.t)
        np.testing.assert_array_equal(loaded.q, state.q)
        np.testing.assert_array_equal(loaded.v, state.v)

    def test_column_order_is_documented(self, tmp_path):
        cfg = make_cfg(n=3)
        state = ChainState(0.0, lattice_positions(cfg), np.zeros(3))
        path = tmp_path / "ck.csv"
        write_checkpoint(path, state)
        header = path.read_text().splitlines()[0]
        assert header == "j,q,v"

    def test_config_roundtrip(self, tmp_path):
        cfg = make_cfg(n=99, offset=False)
        chain.write_config(tmp_path / "cfg.json", cfg)
        assert chain.read_config(tmp_path / "cfg.json") == cfg

    def test_foreign_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x,y,z\n1,0.5,0.0\n")
        with pytest.raises(ValueError, match="header"):
            read_checkpoint(path)
