"""Thrust-level optimization with the closed-loop pitch law.

Flying the pitch-law feedback reduces the minimum-fuel insertion problem
to two unknowns, thrust level and burn duration, matched against the two
target apsis constraints by a damped Newton iteration. The rocket
equation provides the starting point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .astro import Constants, EARTH, PolarKinematics, osculating_apsides
from .config import MissionConfig
from .dynamics import Costate, Trajectory, default_sample_times, propagate_closed_loop
from .errors import (ConvergenceError, EscapeTrajectory, MassDepleted,
                     NoPitchSolution, PropagationError)
from .pitchlaw import angular_rate, solve_pitch

#: Final-to-initial acceleration assumed by the starting guess, in g0.
GUESS_ACCEL_G = 1.5
#: Lower clamps applied to Newton iterates.
MIN_BURN_TIME = 10.0
MIN_THRUST = 1.0

_TRIAL_FAILURES = (PropagationError, EscapeTrajectory, NoPitchSolution,
                   MassDepleted)


@dataclass(frozen=True)
class InitialGuess:
    """Rocket-equation starting point for the Newton iteration.

    Attributes:
        thrust: thrust level (N).
        burn_time: burn duration (s).
        final_mass: burnout mass (kg) implied by the velocity gain.
        v_initial: speed at ignition (m/s).
        v_target: target-orbit perigee speed (m/s).
        degenerate: True when no velocity gain is required.
    """

    thrust: float
    burn_time: float
    final_mass: float
    v_initial: float
    v_target: float
    degenerate: bool = False


@dataclass
class Solution:
    """Converged burn.

    Attributes:
        thrust: thrust level (N).
        burn_time: burn duration (s).
        final_mass: burnout mass (kg).
        costate: initial costates consistent with the burn.
        residuals: (apogee, perigee) altitude miss at burnout (m).
        iterations: Newton steps taken.
        dv_loss: velocity loss over the burn (m/s).
        trajectory: sampled burn arc.
    """

    thrust: float
    burn_time: float
    final_mass: float
    costate: Costate
    residuals: np.ndarray
    iterations: int
    dv_loss: float
    trajectory: Trajectory


def initial_guess(config: MissionConfig) -> InitialGuess:
    """Size the burn with the rocket equation.

    The velocity gain is taken as the difference between the
    target-orbit perigee speed and the current speed, the mean
    acceleration as ``GUESS_ACCEL_G`` standard gravities at burnout.
    """
    kin = config.initial_kinematics()
    v0 = kin.speed
    vf = config.target_perigee_speed()
    m0 = config.initial_mass
    ve = config.exhaust_velocity
    if vf <= v0:
        return InitialGuess(thrust=0.0, burn_time=0.0, final_mass=m0,
                            v_initial=v0, v_target=vf, degenerate=True)
    m_f = m0 * math.exp(-(vf - v0) / ve)
    thrust = m_f * GUESS_ACCEL_G * config.constants.g0
    burn_time = (m0 - m_f) * ve / thrust
    return InitialGuess(thrust=thrust, burn_time=burn_time, final_mass=m_f,
                        v_initial=v0, v_target=vf)


def initial_costates(kinematics: PolarKinematics, final_mass: float,
                     initial_mass: float, exhaust_velocity: float,
                     constants: Constants = EARTH) -> Costate:
    """Costates at ignition implied by the pitch law and a burnout mass.

    The velocity costate has magnitude final_mass / exhaust_velocity and
    points along the thrust direction; the position costate is its
    rotation by the pitch rate; the mass costate is the burnout-to-start
    mass ratio.
    """
    r, v = kinematics.radius, kinematics.speed
    gamma, phi = kinematics.flight_path_angle, kinematics.longitude
    theta = solve_pitch(r, v, gamma, constants)
    omega = angular_rate(r, v, gamma, theta, constants)
    pv_mag = final_mass / exhaust_velocity
    rel = theta - phi
    s, c = math.sin(rel), math.cos(rel)
    return Costate(
        p_r=omega * pv_mag * np.array([-c, s]),
        p_v=pv_mag * np.array([s, c]),
        p_m=final_mass / initial_mass,
    )


def dv_loss_of(trajectory: Trajectory) -> float:
    """Velocity loss: ideal rocket-equation gain minus achieved gain."""
    m = trajectory.mass()
    v = trajectory.speed()
    ideal = trajectory.exhaust_velocity * math.log(m[0] / m[-1])
    return ideal - (v[-1] - v[0])


def velocity_losses(solution: Solution) -> float:
    """Velocity loss of a converged burn (m/s)."""
    return dv_loss_of(solution.trajectory)


def _residual_km(config: MissionConfig, thrust: float, burn_time: float,
                 state0, targets) -> np.ndarray:
    traj = propagate_closed_loop(
        state0, thrust, config.exhaust_velocity, burn_time,
        constants=config.constants, settings=config.integrator_settings())
    final = traj.final_state
    apo, per = osculating_apsides(final.position, final.velocity,
                                  config.constants)
    return np.array([(apo - targets[0]) / 1e3, (per - targets[1]) / 1e3])


def optimize_thrust(config: MissionConfig,
                    guess: InitialGuess | None = None) -> Solution:
    """Solve for the thrust level and burn time meeting both apsides.

    Damped 2x2 Newton iteration on residuals expressed in km, with a
    forward-difference Jacobian (relative step 1e-3) and step halving
    (up to 8) whenever a trial leaves the feasible region or fails to
    reduce the residual norm.

    Raises:
        ConvergenceError: if the residual gate is not met within the
            iteration budget; carries the best (thrust, burn_time) found.
        ValueError: on a degenerate guess (no burn required).
    """
    if guess is None:
        guess = initial_guess(config)
    if guess.degenerate or guess.burn_time <= 0.0:
        raise ValueError("initial guess is degenerate; no burn to optimize")

    state0 = config.initial_state()
    targets = config.target_altitudes()
    tol_km = config.solver.newton_tol_m / 1e3
    max_iter = config.solver.newton_max_iter

    thrust, burn_time = guess.thrust, guess.burn_time
    res = _residual_km(config, thrust, burn_time, state0, targets)
    norm = float(np.max(np.abs(res)))
    best = (thrust, burn_time, res, norm)
    iterations = 0

    while norm >= tol_km and iterations < max_iter:
        iterations += 1
        d_thrust = 1e-3 * thrust
        d_time = 1e-3 * burn_time
        try:
            res_t = _residual_km(config, thrust + d_thrust, burn_time,
                                 state0, targets)
            res_b = _residual_km(config, thrust, burn_time + d_time,
                                 state0, targets)
        except _TRIAL_FAILURES as exc:
            raise ConvergenceError(
                f"Jacobian evaluation failed near thrust {thrust:.1f} N: {exc}",
                best=best[:2], residual_norm=norm * 1e3) from exc
        jac = np.column_stack([(res_t - res) / d_thrust,
                               (res_b - res) / d_time])
        try:
            delta = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(
                "singular Jacobian in thrust/burn-time iteration",
                best=best[:2], residual_norm=norm * 1e3) from exc

        alpha = 1.0
        accepted = False
        for _ in range(9):
            t_try = max(thrust + alpha * delta[0], MIN_THRUST)
            b_try = max(burn_time + alpha * delta[1], MIN_BURN_TIME)
            try:
                res_try = _residual_km(config, t_try, b_try, state0, targets)
            except _TRIAL_FAILURES:
                alpha *= 0.5
                continue
            if float(np.max(np.abs(res_try))) < norm:
                thrust, burn_time, res = t_try, b_try, res_try
                norm = float(np.max(np.abs(res)))
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
        if norm < best[3]:
            best = (thrust, burn_time, res, norm)

    if best[3] >= tol_km:
        raise ConvergenceError(
            f"thrust optimization stalled at {best[3] * 1e3:.3g} m apsis miss "
            f"after {iterations} iterations",
            best=best[:2], residual_norm=best[3] * 1e3)

    thrust, burn_time, res, norm = best
    settings = config.integrator_settings()
    trajectory = propagate_closed_loop(
        state0, thrust, config.exhaust_velocity, burn_time,
        constants=config.constants, settings=settings,
        sample_times=default_sample_times(burn_time,
                                          config.solver.sample_dt_s))
    final_mass = float(trajectory.states[-1, 4])
    costate = initial_costates(config.initial_kinematics(), final_mass,
                               config.initial_mass, config.exhaust_velocity,
                               config.constants)
    return Solution(
        thrust=thrust, burn_time=burn_time, final_mass=final_mass,
        costate=costate, residuals=res * 1e3, iterations=iterations,
        dv_loss=dv_loss_of(trajectory), trajectory=trajectory)
