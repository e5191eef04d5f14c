"""Propagation, extremal dynamics, and the Hamiltonian split."""
import math

import numpy as np
import pytest

from upstage.astro import osculating_apsides
from upstage.dynamics import (Costate, IntegratorSettings, extremal_rhs,
                              hamiltonian, integrate, propagate_closed_loop,
                              propagate_extremal, state_rhs)
from upstage.errors import MassDepleted, PropagationError, SingularCostate

from conftest import hamiltonian_scale


def _example_costate() -> Costate:
    return Costate(p_r=np.array([-2.5e-3, 8.5e-4]),
                   p_v=np.array([-0.73, -2.18]), p_m=0.1975)


def test_state_rhs_zero_thrust_is_kepler(config):
    state = config.initial_state()
    out = state_rhs(state, [0.0, 1.0], 0.0, config.exhaust_velocity)
    r = np.linalg.norm(state.position)
    assert np.allclose(out[0:2], state.velocity)
    assert np.allclose(out[2:4],
                       -config.constants.mu / r**3 * state.position)
    assert out[4] == 0.0


def test_state_rhs_mass_flow_and_thrust_accel(config):
    state = config.initial_state()
    thrust = 131296.0
    out = state_rhs(state, [1.0, 0.0], thrust, config.exhaust_velocity)
    assert out[4] == -thrust / config.exhaust_velocity
    accel = out[2:4] + config.constants.mu \
        / np.linalg.norm(state.position)**3 * state.position
    assert abs(np.linalg.norm(accel) - 3.2824) < 1e-4


def test_state_rhs_guards(config):
    state = config.initial_state()
    with pytest.raises(ValueError):
        state_rhs(state, [0.5, 0.5], 1e5, config.exhaust_velocity)
    state.mass = 0.0
    with pytest.raises(MassDepleted):
        state_rhs(state, [0.0, 1.0], 1e5, config.exhaust_velocity)


def test_extremal_rhs_is_canonical(config):
    """Both derivative blocks match finite differences of H."""
    state = config.initial_state()
    costate = _example_costate()
    thrust, ve = 131296.0, config.exhaust_velocity
    rhs = extremal_rhs(state, costate, thrust, ve)

    def h_of(y):
        from upstage.astro import CartesianState
        s = CartesianState(y[0:2].copy(), y[2:4].copy(), y[4])
        c = Costate.from_array(y[5:10])
        return hamiltonian(s, c, thrust, ve)[0]

    y = np.concatenate([state.position, state.velocity, [state.mass],
                        costate.to_array()])
    fd = np.empty(10)
    for i in range(10):
        h = 1e-6 * max(abs(y[i]), 1e-3)
        up, dn = y.copy(), y.copy()
        up[i] += h
        dn[i] -= h
        fd[i] = (h_of(up) - h_of(dn)) / (2.0 * h)
    expected = np.concatenate([fd[5:10], -fd[0:5]])
    assert np.allclose(rhs, expected, rtol=1e-5, atol=1e-12)


def test_extremal_rhs_singular_costate(config):
    state = config.initial_state()
    costate = Costate(p_r=np.zeros(2), p_v=np.zeros(2), p_m=0.2)
    with pytest.raises(SingularCostate):
        extremal_rhs(state, costate, 1e5, config.exhaust_velocity)


def test_hamiltonian_split_identity(config):
    state = config.initial_state()
    costate = _example_costate()
    for thrust in (0.0, 1e5, 2.3e5):
        h, h0, h_t = hamiltonian(state, costate, thrust,
                                 config.exhaust_velocity)
        assert h == h0 + thrust * h_t


def test_mass_is_linear_in_time(optimum):
    traj = optimum.trajectory
    m0 = traj.states[0, 4]
    expected = m0 - traj.thrust * traj.times / traj.exhaust_velocity
    assert np.max(np.abs(traj.mass() - expected)) / m0 < 1e-9


def test_closed_loop_guess_point_apsides(config, guess):
    traj = propagate_closed_loop(
        config.initial_state(), guess.thrust, config.exhaust_velocity,
        guess.burn_time, constants=config.constants,
        settings=config.integrator_settings())
    final = traj.final_state
    apo, per = osculating_apsides(final.position, final.velocity,
                                  config.constants)
    assert abs(apo / 1e3 - 24026.2) < 50.0
    assert abs(per / 1e3 - 188.4) < 5.0


def test_extremal_hamiltonian_conserved(config, extremal_at_optimum):
    h, _, _ = extremal_at_optimum.hamiltonian()
    scale = hamiltonian_scale(config)
    assert np.max(np.abs((h - h[0]) * scale)) < 1e-9


def test_extremal_invariant_rates(config, extremal_at_optimum):
    """Sampled drift rates match the governing identities.

    d(p_m m)/dt = thrust * H_T and d|p_v|/dt = -(u . p_r), checked by
    central differences over the sample grid.
    """
    traj = extremal_at_optimum
    t = traj.times
    cs = traj.costates
    m = traj.mass()
    _, _, h_t = traj.hamiltonian()
    pv = np.hypot(cs[:, 2], cs[:, 3])
    u = cs[:, 2:4] / pv[:, None]
    u_dot_pr = np.sum(u * cs[:, 0:2], axis=1)

    # Centered differences need uniform spacing; the last sample sits at
    # the exact burn time, so stop one interior point short of it.
    pmm = cs[:, 4] * m
    rate_fd = (pmm[2:-1] - pmm[:-3]) / (t[2:-1] - t[:-3])
    rate_id = traj.thrust * h_t[1:-2]
    scale = np.max(np.abs(rate_id))
    assert np.max(np.abs(rate_fd - rate_id)) < 1e-3 * scale

    pv_fd = (pv[2:-1] - pv[:-3]) / (t[2:-1] - t[:-3])
    pv_id = -u_dot_pr[1:-2]
    scale = np.max(np.abs(pv_id))
    assert np.max(np.abs(pv_fd - pv_id)) < 1e-3 * scale


def test_costate_second_derivative_is_gradient_drive(config,
                                                     extremal_at_optimum):
    """p_v'' equals the gravity gradient acting on p_v (sampled check)."""
    from upstage.astro import gravity_gradient
    traj = extremal_at_optimum
    t = traj.times
    cs = traj.costates
    idx = np.arange(100, 700, 50)
    for i in idx:
        dt = t[i + 1] - t[i]
        second = (cs[i + 1, 2:4] - 2 * cs[i, 2:4] + cs[i - 1, 2:4]) / dt**2
        drive = gravity_gradient(traj.states[i, 0:2],
                                 config.constants) @ cs[i, 2:4]
        assert np.linalg.norm(second - drive) < 1e-2 * np.linalg.norm(drive)


def test_integrate_kepler_conserves_apsides(config):
    mu = config.constants.mu
    state = config.initial_state()

    def kepler(t, y):
        r = math.hypot(y[0], y[1])
        return np.array([y[2], y[3],
                         -mu / r**3 * y[0], -mu / r**3 * y[1]])

    y0 = np.concatenate([state.position, state.velocity])
    times, out = integrate(kepler, y0, (0.0, 1000.0),
                           t_eval=np.linspace(0.0, 1000.0, 21))
    apo0, per0 = osculating_apsides(y0[0:2], y0[2:4], config.constants)
    for row in out:
        apo, per = osculating_apsides(row[0:2], row[2:4], config.constants)
        assert abs(apo - apo0) < 1.0
        assert abs(per - per0) < 1.0


def test_integrate_constant_derivative_row():
    def rhs(t, y):
        return np.array([-2.5, 1.0])

    _, out = integrate(rhs, np.array([10.0, 0.0]), (0.0, 500.0))
    assert abs(out[-1, 0] - (10.0 - 2.5 * 500.0)) < 1e-9 * 1250.0
    assert abs(out[-1, 1] - 500.0) < 1e-9 * 500.0


def test_adaptive_tolerance_self_consistency(config, guess):
    finals = []
    for rtol in (1e-8, 5e-9):
        traj = propagate_closed_loop(
            config.initial_state(), guess.thrust, config.exhaust_velocity,
            guess.burn_time, constants=config.constants,
            settings=IntegratorSettings(method="rk45", rtol=rtol))
        finals.append(traj.states[-1])
    pos_diff = np.linalg.norm(finals[0][0:2] - finals[1][0:2])
    assert pos_diff / np.linalg.norm(finals[1][0:2]) < 1e-8


def test_fixed_step_cross_check(config, optimum):
    adaptive = propagate_extremal(
        config.initial_state(), optimum.costate, optimum.thrust,
        config.exhaust_velocity, optimum.burn_time,
        constants=config.constants,
        settings=IntegratorSettings(method="rk45", rtol=1e-12))
    fixed = propagate_extremal(
        config.initial_state(), optimum.costate, optimum.thrust,
        config.exhaust_velocity, optimum.burn_time,
        constants=config.constants,
        settings=IntegratorSettings(method="rk4", fixed_step=0.5))
    diff = np.linalg.norm(fixed.states[-1, 0:2] - adaptive.states[-1, 0:2])
    assert diff < 1.0


def test_fixed_step_order(config, optimum):
    """Halving the step shrinks the final-state error at fourth order."""
    def run(dt):
        return propagate_extremal(
            config.initial_state(), optimum.costate, optimum.thrust,
            config.exhaust_velocity, 400.0, constants=config.constants,
            settings=IntegratorSettings(method="rk4", fixed_step=dt))

    reference = run(0.25)
    errs = [np.linalg.norm(run(dt).states[-1, 0:2]
                           - reference.states[-1, 0:2])
            for dt in (8.0, 4.0)]
    ratio = errs[0] / errs[1]
    assert 10.0 < ratio < 25.0
    assert errs[1] < 1e-4


def test_propagation_error_carries_time(config):
    costate = _example_costate()
    with pytest.raises(PropagationError) as excinfo:
        propagate_extremal(config.initial_state(), costate, 2.4e5,
                           config.exhaust_velocity, 800.0,
                           constants=config.constants)
    assert 0.0 < excinfo.value.time < 800.0


def test_trajectory_sampling(optimum):
    traj = optimum.trajectory
    assert traj.times[0] == 0.0
    assert traj.times[-1] == optimum.burn_time
    assert np.all(np.diff(traj.times) > 0)
    pitch = traj.pitch()
    assert abs(math.degrees(pitch[0]) - 7.5153) < 0.002
