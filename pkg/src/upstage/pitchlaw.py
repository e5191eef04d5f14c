"""Closed-loop pitch law for a constantly thrusting stage.

The optimal thrust direction of the planar minimum-fuel insertion problem
satisfies a feedback relation between the pitch angle (thrust above local
horizontal) and the current radius, speed and flight path angle. The
relation has two branches; only the ascending branch is monotone in
pitch, crosses gamma = 0, and connects to the optimal ascent, so the
solver inverts that branch alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from . import kernels
from .astro import EARTH, Constants
from .errors import ConsistencyError, NoPitchSolution

#: Consistency gate between the two angular-rate expressions (relative).
RATE_CONSISTENCY_TOL = 1e-6


@dataclass(frozen=True)
class PitchSolution:
    """Pitch law output at one flight state.

    Attributes:
        theta: pitch angle of the thrust direction (rad).
        omega: pitch rate (rad/s), negative on the ascending branch.
        theta_max: largest pitch magnitude reachable at this state (rad).
    """

    theta: float
    omega: float
    theta_max: float


def pitch_bound(radius: float, speed: float,
                constants: Constants = EARTH) -> float:
    """Largest pitch magnitude the law admits at (radius, speed).

    Grows from 30 deg at circular speed toward asin(1/sqrt(3)) as the
    vehicle speeds up.
    """
    if radius <= 0.0 or speed <= 0.0:
        raise ValueError("radius and speed must be positive")
    return kernels.pitch_bound_kernel(constants.mu, radius, speed)


def branch_gamma(theta: float, vc_over_v: float, sign: int = +1) -> float:
    """Flight path angle produced by pitch ``theta`` on one branch.

    Args:
        theta: pitch angle (rad), inside the open pitch interval.
        vc_over_v: circular-speed ratio at the current radius.
        sign: +1 for the ascending branch, -1 for the descending one.

    Raises:
        ValueError: outside the branch domain.
    """
    if sign not in (-1, 1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    out = kernels.branch_gamma_kernel(theta, vc_over_v, float(sign))
    if math.isnan(out):
        raise ValueError(
            f"pitch {theta:.6g} rad is outside the branch domain")
    return out


def solve_pitch(radius: float, speed: float, flight_path_angle: float,
                constants: Constants = EARTH) -> float:
    """Invert the ascending branch: pitch angle for a given flight state.

    Bisection on the bracketed monotone branch, to 1e-12 rad.

    Raises:
        NoPitchSolution: if the flight path angle is outside the range the
            law can reach at this state.
    """
    if radius <= 0.0 or speed <= 0.0:
        raise ValueError("radius and speed must be positive")
    theta = kernels.solve_pitch_kernel(constants.mu, radius, speed,
                                       flight_path_angle)
    if math.isnan(theta):
        raise NoPitchSolution(
            f"flight path angle {flight_path_angle:.6g} rad unreachable at "
            f"radius {radius:.6g} m, speed {speed:.6g} m/s")
    return theta


def angular_rate(radius: float, speed: float, flight_path_angle: float,
                 theta: float, constants: Constants = EARTH) -> float:
    """Pitch rate for a consistent (state, pitch) pair.

    The rate follows from momentum balance across the thrust turn; a
    second expression follows from the law itself, and the two must agree.
    At theta = gamma = 0 the ratio degenerates and the negative root is
    taken, matching the ascending-branch limit.

    Raises:
        ConsistencyError: if the two expressions disagree by more than
            ``RATE_CONSISTENCY_TOL`` (relative), which means the pair did
            not come from the law.
    """
    mu = constants.mu
    omega = kernels.angular_rate_kernel(mu, radius, speed,
                                        flight_path_angle, theta)
    sq = 1.0 - 3.0 * math.sin(theta) ** 2
    if math.isnan(omega) or sq <= 0.0:
        raise ConsistencyError(
            f"pitch {theta:.6g} rad inconsistent with flight path angle "
            f"{flight_path_angle:.6g} rad")
    reference = math.sqrt(mu / radius**3 * sq)
    if abs(abs(omega) - reference) > RATE_CONSISTENCY_TOL * reference:
        raise ConsistencyError(
            f"angular rate {omega:.6g} rad/s disagrees with law value "
            f"{reference:.6g} rad/s")
    return omega


def pitch_solution(radius: float, speed: float, flight_path_angle: float,
                   constants: Constants = EARTH) -> PitchSolution:
    """Solve the law and bundle pitch, rate and bound for one state."""
    theta = solve_pitch(radius, speed, flight_path_angle, constants)
    omega = angular_rate(radius, speed, flight_path_angle, theta, constants)
    return PitchSolution(theta=theta, omega=omega,
                         theta_max=pitch_bound(radius, speed, constants))
