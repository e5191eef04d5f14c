"""Planar two-body state representations and osculating-element helpers.

All quantities are SI (m, m/s, kg, rad) unless a name says otherwise.
The flight frame is the inertial plane of motion; longitudes are measured
from the inertial x axis, which by convention points at the perigee of
the initial orbit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EscapeTrajectory


@dataclass(frozen=True)
class Constants:
    """Physical constants for the central body and thrust model.

    Attributes:
        mu: gravitational parameter (m^3/s^2).
        earth_radius: equatorial radius used for altitudes (m).
        g0: standard gravity for Isp conversion (m/s^2).
    """

    mu: float = 3.986005e14
    earth_radius: float = 6378137.0
    g0: float = 9.80665


EARTH = Constants()


@dataclass
class CartesianState:
    """Planar inertial state: position (m), velocity (m/s), mass (kg)."""

    position: np.ndarray
    velocity: np.ndarray
    mass: float

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.velocity = np.asarray(self.velocity, dtype=float)
        if self.position.shape != (2,) or self.velocity.shape != (2,):
            raise ValueError("position and velocity must be length-2 vectors")
        self.mass = float(self.mass)


@dataclass(frozen=True)
class PolarKinematics:
    """Point-mass kinematics in polar form.

    Attributes:
        radius: distance from the central body (m).
        speed: inertial speed (m/s).
        flight_path_angle: angle of the velocity above local horizontal (rad).
        longitude: angular position from the inertial x axis (rad).
    """

    radius: float
    speed: float
    flight_path_angle: float
    longitude: float


@dataclass(frozen=True)
class OrbitSpec:
    """Elliptic orbit given by apsis altitudes, plus an optional anomaly.

    Attributes:
        apogee_altitude: apogee height above ``earth_radius`` (m).
        perigee_altitude: perigee height above ``earth_radius`` (m); may be
            negative for suborbital coasts.
        true_anomaly: position on the orbit (rad), when one is meant.
    """

    apogee_altitude: float
    perigee_altitude: float
    true_anomaly: float | None = None


def gravity(position, constants: Constants = EARTH) -> np.ndarray:
    """Inverse-square acceleration at ``position``.

    Raises:
        ValueError: if the position is the origin.
    """
    p = np.asarray(position, dtype=float)
    r = math.hypot(p[0], p[1])
    if r == 0.0:
        raise ValueError("gravity undefined at zero radius")
    return -constants.mu / r**3 * p


def gravity_gradient(position, constants: Constants = EARTH) -> np.ndarray:
    """Jacobian of ``gravity`` with respect to position (2x2, symmetric)."""
    p = np.asarray(position, dtype=float)
    r = math.hypot(p[0], p[1])
    if r == 0.0:
        raise ValueError("gravity gradient undefined at zero radius")
    e = p / r
    return constants.mu / r**3 * (3.0 * np.outer(e, e) - np.eye(2))


def specific_energy(position, velocity, constants: Constants = EARTH) -> float:
    p = np.asarray(position, dtype=float)
    v = np.asarray(velocity, dtype=float)
    r = math.hypot(p[0], p[1])
    return 0.5 * (v[0] ** 2 + v[1] ** 2) - constants.mu / r


def osculating_apsides(position, velocity,
                       constants: Constants = EARTH) -> tuple[float, float]:
    """Apogee and perigee altitudes of the osculating orbit.

    Returns:
        (apogee_altitude, perigee_altitude) in meters.

    Raises:
        EscapeTrajectory: if the state is parabolic or hyperbolic.
    """
    p = np.asarray(position, dtype=float)
    v = np.asarray(velocity, dtype=float)
    mu = constants.mu
    r = math.hypot(p[0], p[1])
    if r == 0.0:
        raise ValueError("apsides undefined at zero radius")
    energy = 0.5 * (v[0] ** 2 + v[1] ** 2) - mu / r
    if energy >= 0.0:
        raise EscapeTrajectory(
            f"specific energy {energy:.6g} J/kg is not elliptic")
    sma = -mu / (2.0 * energy)
    h = abs(p[0] * v[1] - p[1] * v[0])
    ecc_sq = 1.0 + 2.0 * energy * h * h / (mu * mu)
    ecc = math.sqrt(ecc_sq) if ecc_sq > 0.0 else 0.0
    r_apo = sma * (1.0 + ecc)
    r_per = sma * (1.0 - ecc)
    return r_apo - constants.earth_radius, r_per - constants.earth_radius


def apsides_arrays(px, py, vx, vy, constants: Constants = EARTH):
    """Vectorized ``osculating_apsides`` over sample arrays.

    Raises:
        EscapeTrajectory: if any sample is non-elliptic, reporting the
            first offending index.
    """
    px = np.asarray(px, dtype=float)
    mu = constants.mu
    r = np.hypot(px, py)
    energy = 0.5 * (vx**2 + vy**2) - mu / r
    bad = np.flatnonzero(energy >= 0.0)
    if bad.size:
        raise EscapeTrajectory(
            f"sample {bad[0]} is not elliptic "
            f"(specific energy {energy[bad[0]]:.6g} J/kg)")
    sma = -mu / (2.0 * energy)
    h = np.abs(px * vy - py * vx)
    ecc = np.sqrt(np.maximum(1.0 + 2.0 * energy * h * h / (mu * mu), 0.0))
    re = constants.earth_radius
    return sma * (1.0 + ecc) - re, sma * (1.0 - ecc) - re


def state_from_orbit(spec: OrbitSpec,
                     constants: Constants = EARTH) -> PolarKinematics:
    """Kinematics on an elliptic orbit at a given true anomaly.

    Longitude is set equal to the true anomaly, which places the orbit's
    perigee on the x axis.

    Raises:
        ValueError: if the orbit is not an ellipse with positive apsis
            radii, or has no anomaly.
    """
    if spec.true_anomaly is None:
        raise ValueError("true_anomaly: required to place a state on the orbit")
    mu = constants.mu
    r_apo = constants.earth_radius + spec.apogee_altitude
    r_per = constants.earth_radius + spec.perigee_altitude
    if r_per <= 0.0 or r_apo < r_per:
        raise ValueError(
            f"apsis radii must satisfy 0 < perigee <= apogee, "
            f"got {r_per:.6g} and {r_apo:.6g} m")
    sma = 0.5 * (r_apo + r_per)
    ecc = (r_apo - r_per) / (r_apo + r_per)
    nu = spec.true_anomaly
    one_pec = 1.0 + ecc * math.cos(nu)
    semi_latus = sma * (1.0 - ecc * ecc)
    radius = semi_latus / one_pec
    speed = math.sqrt(mu * (2.0 / radius - 1.0 / sma))
    gamma = math.atan2(ecc * math.sin(nu), one_pec)
    return PolarKinematics(radius=radius, speed=speed,
                           flight_path_angle=gamma, longitude=nu)


def cartesian_from_polar(kin: PolarKinematics, mass: float) -> CartesianState:
    """Embed polar kinematics in the inertial plane (prograde motion)."""
    phi = kin.longitude
    position = kin.radius * np.array([math.cos(phi), math.sin(phi)])
    rel = kin.flight_path_angle - phi
    velocity = kin.speed * np.array([math.sin(rel), math.cos(rel)])
    return CartesianState(position=position, velocity=velocity, mass=mass)


def polar_from_cartesian(state: CartesianState) -> PolarKinematics:
    """Polar kinematics of a planar state.

    The flight path angle uses the unsigned angular momentum, so prograde
    and retrograde states report the same climb angle.
    """
    p, v = state.position, state.velocity
    radial = p[0] * v[0] + p[1] * v[1]
    cross = p[0] * v[1] - p[1] * v[0]
    return PolarKinematics(
        radius=math.hypot(p[0], p[1]),
        speed=math.hypot(v[0], v[1]),
        flight_path_angle=math.atan2(radial, abs(cross)),
        longitude=math.atan2(p[1], p[0]),
    )
