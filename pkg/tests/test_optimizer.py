"""Tests for the rocket-equation guess and the two-unknown optimizer."""
import math

import numpy as np
import pytest

from upstage.astro import osculating_apsides
from upstage.config import config_from_mapping
from upstage.dynamics import propagate_closed_loop
from upstage.optimizer import (InitialGuess, initial_costates, initial_guess,
                               optimize_thrust, velocity_losses)


def test_initial_guess_reference_values(guess):
    assert not guess.degenerate
    assert abs(guess.thrust / 1e3 - 126.038) < 0.01
    assert abs(guess.burn_time - 856.0) < 0.2
    assert abs(guess.final_mass - 8568.2) < 0.2
    assert guess.v_target > guess.v_initial


def test_initial_guess_rocket_equation_consistency(config, guess):
    m0 = config.initial_mass
    ve = config.exhaust_velocity
    gain = ve * math.log(m0 / guess.final_mass)
    assert abs(gain - (guess.v_target - guess.v_initial)) < 1e-6 * gain
    propellant = guess.thrust * guess.burn_time / ve
    assert abs(propellant - (m0 - guess.final_mass)) < 1e-9 * m0


def test_initial_guess_degenerate_when_already_fast():
    # Circular target high enough that its perigee speed is below the
    # current speed.
    config = config_from_mapping(
        {"target_orbit": {"apogee_km": 40000.0, "perigee_km": 40000.0}})
    guess = initial_guess(config)
    assert guess.degenerate
    assert guess.burn_time == 0.0
    assert guess.final_mass == config.initial_mass
    with pytest.raises(ValueError):
        optimize_thrust(config, guess)


def test_optimize_reference_optimum(optimum):
    assert abs(optimum.thrust / 1e3 - 131.296) < 0.5
    assert abs(optimum.burn_time - 839.19) < 2.0
    assert abs(optimum.final_mass - 7898.4) < 20.0
    assert np.max(np.abs(optimum.residuals)) < 10.0
    assert optimum.trajectory.times[-1] == optimum.burn_time
    assert abs(optimum.trajectory.states[-1, 4] - optimum.final_mass) < 1e-9


def test_optimize_restart_from_converged(config, optimum):
    restart = InitialGuess(
        thrust=optimum.thrust, burn_time=optimum.burn_time,
        final_mass=optimum.final_mass, v_initial=0.0, v_target=0.0)
    again = optimize_thrust(config, restart)
    assert again.iterations <= 2
    assert abs(again.thrust - optimum.thrust) < 1e-9 * optimum.thrust
    assert abs(again.burn_time - optimum.burn_time) < 1e-9 * optimum.burn_time


def test_initial_costates_identities(config):
    kin = config.initial_kinematics()
    m0 = config.initial_mass
    ve = config.exhaust_velocity
    m_f = 7898.4
    c = initial_costates(kin, m_f, m0, ve, config.constants)

    assert abs(np.linalg.norm(c.p_v) * ve - m_f) < 1e-9 * m_f
    assert abs(c.p_m - m_f / m0) < 1e-12
    # Position costate is the velocity costate rotated a quarter turn and
    # scaled by the pitch rate, hence orthogonal.
    assert abs(np.dot(c.p_r, c.p_v)) < 1e-12 * np.linalg.norm(c.p_r)

    # The whole costate is linear in the burnout mass.
    other = initial_costates(kin, 0.5 * m_f, m0, ve, config.constants)
    np.testing.assert_allclose(other.p_r, 0.5 * c.p_r, rtol=1e-12)
    np.testing.assert_allclose(other.p_v, 0.5 * c.p_v, rtol=1e-12)
    assert abs(other.p_m - 0.5 * c.p_m) < 1e-12


def test_velocity_losses_matches_solution(optimum):
    loss = velocity_losses(optimum)
    assert loss == optimum.dv_loss
    traj = optimum.trajectory
    m = traj.mass()
    v = traj.speed()
    ideal = traj.exhaust_velocity * math.log(m[0] / m[-1])
    assert abs(loss - (ideal - (v[-1] - v[0]))) < 1e-9
    assert 0.0 < loss < 1000.0


def test_optimum_is_isolated(config, optimum):
    """Perturbing thrust off the optimum misses the apsides by far."""
    state0 = config.initial_state()
    targets = config.target_altitudes()
    for d_thrust in (-2e3, 2e3):
        traj = propagate_closed_loop(
            state0, optimum.thrust + d_thrust, config.exhaust_velocity,
            optimum.burn_time, constants=config.constants,
            settings=config.integrator_settings())
        final = traj.final_state
        apo, per = osculating_apsides(final.position, final.velocity,
                                      config.constants)
        assert abs(apo - targets[0]) > 1e6
