"""Flight dynamics and propagation for the thrusting stage.

Two systems are propagated over a burn of fixed duration:

* the closed-loop system, where the thrust direction comes from the
  pitch-law feedback at every integrator stage, and
* the extremal system, where state and costates are integrated together
  and thrust follows the velocity costate.

Both run through the compiled kernels. A generic adaptive integrator over
arbitrary Python right-hand sides is also provided for cross-checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .astro import EARTH, CartesianState, Constants, apsides_arrays
from .errors import (MassDepleted, NoPitchSolution, PropagationError,
                     SingularCostate)

# Absolute tolerances per component: position (m), velocity (m/s),
# mass (kg), and the three costate blocks at their working scales.
ATOL_STATE = np.array([1e-4, 1e-4, 1e-7, 1e-7, 1e-7])
ATOL_EXTREMAL = np.array([1e-4, 1e-4, 1e-7, 1e-7, 1e-7,
                          1e-12, 1e-12, 1e-9, 1e-9, 1e-10])

_STATUS_ERRORS = {
    kernels.STATUS_NO_PITCH: NoPitchSolution,
    kernels.STATUS_MASS_DEPLETED: MassDepleted,
    kernels.STATUS_SINGULAR_COSTATE: SingularCostate,
}


@dataclass(frozen=True)
class IntegratorSettings:
    """Integration controls.

    Attributes:
        method: "rk45" (adaptive, default) or "rk4" (fixed-step
            cross-check).
        rtol: relative tolerance of the adaptive error test.
        fixed_step: step size (s) for the "rk4" method.
        max_steps: step budget before the propagation is declared failed.
    """

    method: str = "rk45"
    rtol: float = 1e-10
    fixed_step: float = 0.1
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.method not in ("rk45", "rk4"):
            raise ValueError(f"method must be rk45 or rk4, got {self.method!r}")
        if self.rtol <= 0.0 or self.fixed_step <= 0.0:
            raise ValueError("rtol and fixed_step must be positive")


DEFAULT_SETTINGS = IntegratorSettings()


@dataclass
class Costate:
    """Adjoint variables: p_r (kg/m), p_v (kg/(m/s)), p_m (kg/kg)."""

    p_r: np.ndarray
    p_v: np.ndarray
    p_m: float

    def __post_init__(self):
        self.p_r = np.asarray(self.p_r, dtype=float)
        self.p_v = np.asarray(self.p_v, dtype=float)
        if self.p_r.shape != (2,) or self.p_v.shape != (2,):
            raise ValueError("p_r and p_v must be length-2 vectors")
        self.p_m = float(self.p_m)

    def to_array(self) -> np.ndarray:
        return np.array([self.p_r[0], self.p_r[1],
                         self.p_v[0], self.p_v[1], self.p_m])

    @classmethod
    def from_array(cls, arr) -> "Costate":
        arr = np.asarray(arr, dtype=float)
        return cls(p_r=arr[0:2].copy(), p_v=arr[2:4].copy(), p_m=arr[4])


@dataclass
class Trajectory:
    """Sampled burn arc, with optional costate history.

    ``states`` columns are (x, y, vx, vy, m); ``costates`` columns, when
    present, are (p_rx, p_ry, p_vx, p_vy, p_m).
    """

    times: np.ndarray
    states: np.ndarray
    thrust: float
    exhaust_velocity: float
    constants: Constants = field(default=EARTH)
    costates: np.ndarray | None = None

    @property
    def initial_state(self) -> CartesianState:
        return CartesianState(self.states[0, 0:2].copy(),
                              self.states[0, 2:4].copy(), self.states[0, 4])

    @property
    def final_state(self) -> CartesianState:
        return CartesianState(self.states[-1, 0:2].copy(),
                              self.states[-1, 2:4].copy(), self.states[-1, 4])

    @property
    def final_costate(self) -> Costate:
        if self.costates is None:
            raise ValueError("trajectory has no costate history")
        return Costate.from_array(self.costates[-1])

    def radius(self) -> np.ndarray:
        return np.hypot(self.states[:, 0], self.states[:, 1])

    def speed(self) -> np.ndarray:
        return np.hypot(self.states[:, 2], self.states[:, 3])

    def mass(self) -> np.ndarray:
        return self.states[:, 4]

    def longitude(self) -> np.ndarray:
        return np.arctan2(self.states[:, 1], self.states[:, 0])

    def flight_path_angle(self) -> np.ndarray:
        x, y, vx, vy = (self.states[:, 0], self.states[:, 1],
                        self.states[:, 2], self.states[:, 3])
        return np.arctan2(x * vx + y * vy, np.abs(x * vy - y * vx))

    def pitch(self) -> np.ndarray:
        """Pitch angle per sample.

        From the stored costates when present, otherwise by re-solving
        the closed-loop law at each sample.
        """
        if self.costates is not None:
            rel = np.arctan2(self.costates[:, 2], self.costates[:, 3])
            theta = rel + self.longitude()
            return (theta + np.pi) % (2.0 * np.pi) - np.pi
        mu = self.constants.mu
        r = self.radius()
        v = self.speed()
        gamma = self.flight_path_angle()
        out = np.empty(r.shape)
        for i in range(r.size):
            out[i] = kernels.solve_pitch_kernel(mu, r[i], v[i], gamma[i])
        if np.any(np.isnan(out)):
            raise NoPitchSolution("pitch law unsolvable at a stored sample")
        return out

    def apsides(self) -> tuple[np.ndarray, np.ndarray]:
        """Osculating apogee/perigee altitude (m) per sample."""
        s = self.states
        return apsides_arrays(s[:, 0], s[:, 1], s[:, 2], s[:, 3],
                              self.constants)

    def implied_costates(self) -> np.ndarray:
        """Costate history reconstructed from the closed-loop solution.

        Uses the constancy of the velocity-costate magnitude and of the
        mass-costate/mass product along an optimal burn: with the final
        mass as gauge, |p_v| = m_f / ve and p_m * m = m_f throughout.
        Valid only when the sampled arc actually is an optimal burn.
        """
        mu = self.constants.mu
        m_f = self.states[-1, 4]
        r = self.radius()
        v = self.speed()
        gamma = self.flight_path_angle()
        phi = self.longitude()
        n = self.times.size
        out = np.empty((n, 5))
        pv_mag = m_f / self.exhaust_velocity
        for i in range(n):
            theta = kernels.solve_pitch_kernel(mu, r[i], v[i], gamma[i])
            if math.isnan(theta):
                raise NoPitchSolution("pitch law unsolvable at a stored sample")
            omega = kernels.angular_rate_kernel(mu, r[i], v[i], gamma[i],
                                                theta)
            rel = theta - phi[i]
            s, c = math.sin(rel), math.cos(rel)
            out[i, 0] = -omega * pv_mag * c
            out[i, 1] = omega * pv_mag * s
            out[i, 2] = pv_mag * s
            out[i, 3] = pv_mag * c
            out[i, 4] = m_f / self.states[i, 4]
        return out

    def hamiltonian(self, costates: np.ndarray | None = None):
        """Per-sample (H, H0, H_T) from stored or supplied costates."""
        cs = costates if costates is not None else self.costates
        if cs is None:
            raise ValueError("no costates available; pass implied_costates()")
        s = self.states
        mu = self.constants.mu
        r = np.hypot(s[:, 0], s[:, 1])
        gx = -mu / r**3 * s[:, 0]
        gy = -mu / r**3 * s[:, 1]
        pv = np.hypot(cs[:, 2], cs[:, 3])
        h0 = (cs[:, 0] * s[:, 2] + cs[:, 1] * s[:, 3]
              + cs[:, 2] * gx + cs[:, 3] * gy)
        h_t = pv / s[:, 4] - cs[:, 4] / self.exhaust_velocity
        return h0 + self.thrust * h_t, h0, h_t


def state_rhs(state: CartesianState, direction, thrust: float,
              exhaust_velocity: float,
              constants: Constants = EARTH) -> np.ndarray:
    """Derivative of (position, velocity, mass) under a thrust direction.

    Args:
        direction: unit thrust vector in the inertial frame.

    Raises:
        MassDepleted: at non-positive mass.
        ValueError: if ``direction`` is not unit length (1e-9).
    """
    u = np.asarray(direction, dtype=float)
    if abs(math.hypot(u[0], u[1]) - 1.0) > 1e-9:
        raise ValueError("thrust direction must be a unit vector")
    if state.mass <= 0.0:
        raise MassDepleted(f"mass {state.mass:.6g} kg is not positive")
    mu = constants.mu
    p = state.position
    r = math.hypot(p[0], p[1])
    acc = thrust / state.mass
    out = np.empty(5)
    out[0:2] = state.velocity
    out[2:4] = -mu / r**3 * p + acc * u
    out[4] = -thrust / exhaust_velocity
    return out


def extremal_rhs(state: CartesianState, costate: Costate, thrust: float,
                 exhaust_velocity: float,
                 constants: Constants = EARTH) -> np.ndarray:
    """Derivative of the joint state/costate vector on an extremal.

    Thrust points along the velocity costate; the position costate is
    driven by the gravity gradient and the mass costate by the thrust
    torque on the mass flow.

    Raises:
        SingularCostate: if the velocity costate vanishes.
    """
    y = np.concatenate([state.position, state.velocity, [state.mass],
                        costate.to_array()])
    dy = np.empty(10)
    status = kernels.rhs(kernels.KIND_EXTREMAL, constants.mu, thrust,
                         exhaust_velocity, y, dy)
    if status != kernels.STATUS_OK:
        raise _STATUS_ERRORS[status]("extremal derivative undefined")
    return dy


def hamiltonian(state: CartesianState, costate: Costate, thrust: float,
                exhaust_velocity: float,
                constants: Constants = EARTH) -> tuple[float, float, float]:
    """Hamiltonian split (H, H0, H_T) with thrust direction optimized out.

    H = H0 + thrust * H_T, where H0 collects the coasting terms and H_T
    multiplies the thrust level; maximizing over the direction replaces
    the velocity-costate projection with its magnitude.
    """
    mu = constants.mu
    p, v = state.position, state.velocity
    r = math.hypot(p[0], p[1])
    g = -mu / r**3 * p
    pv = math.hypot(costate.p_v[0], costate.p_v[1])
    h0 = float(costate.p_r @ v + costate.p_v @ g)
    h_t = pv / state.mass - costate.p_m / exhaust_velocity
    return h0 + thrust * h_t, h0, h_t


def _run_kernel(kind, y0, burn_time, thrust, exhaust_velocity, constants,
                settings, sample_times):
    if burn_time <= 0.0:
        raise ValueError(f"burn_time must be positive, got {burn_time:.6g}")
    if sample_times is None:
        t_out = np.array([0.0, burn_time])
    else:
        t_out = np.asarray(sample_times, dtype=float)
    atol = ATOL_STATE if kind == kernels.KIND_CLOSED_LOOP else ATOL_EXTREMAL
    fixed = settings.fixed_step if settings.method == "rk4" else -1.0
    status, t_reached, out = kernels.propagate(
        kind, constants.mu, thrust, exhaust_velocity, y0, 0.0, t_out,
        settings.rtol, atol, fixed, settings.max_steps)
    if status != kernels.STATUS_OK:
        err = _STATUS_ERRORS.get(status)
        cause = err("propagation failure") if err else None
        raise PropagationError(
            f"propagation failed at t = {t_reached:.3f} s "
            f"({'step control' if err is None else err.__name__})",
            time=t_reached, cause=cause)
    return t_out, out


def default_sample_times(burn_time: float, cadence: float = 1.0) -> np.ndarray:
    """Sample grid at fixed cadence plus the exact final time."""
    n = int(math.floor(burn_time / cadence))
    grid = np.arange(n + 1, dtype=float) * cadence
    if grid[-1] < burn_time:
        grid = np.append(grid, burn_time)
    else:
        grid[-1] = burn_time
    return grid


def propagate_closed_loop(initial: CartesianState, thrust: float,
                          exhaust_velocity: float, burn_time: float,
                          constants: Constants = EARTH,
                          settings: IntegratorSettings = DEFAULT_SETTINGS,
                          sample_times=None) -> Trajectory:
    """Fly the burn with the pitch law re-solved at every stage.

    Args:
        sample_times: output grid (s); default is just {0, burn_time}.

    Raises:
        PropagationError: carrying the failure time, if the law becomes
            unsolvable or mass depletes mid-flight.
    """
    y0 = np.concatenate([initial.position, initial.velocity, [initial.mass]])
    t_out, out = _run_kernel(kernels.KIND_CLOSED_LOOP, y0, burn_time, thrust,
                             exhaust_velocity, constants, settings,
                             sample_times)
    return Trajectory(times=t_out, states=out, thrust=thrust,
                      exhaust_velocity=exhaust_velocity, constants=constants)


def propagate_extremal(initial: CartesianState, costate: Costate,
                       thrust: float, exhaust_velocity: float,
                       burn_time: float, constants: Constants = EARTH,
                       settings: IntegratorSettings = DEFAULT_SETTINGS,
                       sample_times=None) -> Trajectory:
    """Fly the burn along an extremal from the given initial costates."""
    y0 = np.concatenate([initial.position, initial.velocity, [initial.mass],
                         costate.to_array()])
    t_out, out = _run_kernel(kernels.KIND_EXTREMAL, y0, burn_time, thrust,
                             exhaust_velocity, constants, settings,
                             sample_times)
    return Trajectory(times=t_out, states=out[:, 0:5], thrust=thrust,
                      exhaust_velocity=exhaust_velocity, constants=constants,
                      costates=out[:, 5:10])


def integrate(rhs, y0, t_span, settings: IntegratorSettings = DEFAULT_SETTINGS,
              t_eval=None):
    """Generic adaptive 5(4) integration of ``dy = rhs(t, y)``.

    Shares the embedded tableau with the compiled drivers; exists for
    cross-checks against systems the kernels do not cover.

    Returns:
        (times, states) with one row per requested output time.
    """
    y0 = np.asarray(y0, dtype=float)
    t0, t_end = float(t_span[0]), float(t_span[1])
    if t_eval is None:
        t_out = np.array([t0, t_end])
    else:
        t_out = np.asarray(t_eval, dtype=float)
    n = y0.size
    out = np.empty((t_out.size, n))
    atol = np.full(n, 1e-9)
    k = kernels
    a = ((k._A21,), (k._A31, k._A32), (k._A41, k._A42, k._A43),
         (k._A51, k._A52, k._A53, k._A54),
         (k._A61, k._A62, k._A63, k._A64, k._A65))
    b = np.array([k._B1, 0.0, k._B3, k._B4, k._B5, k._B6])
    e = np.array([k._E1, 0.0, k._E3, k._E4, k._E5, k._E6, k._E7])

    y = y0.copy()
    t = t0
    iout = 0
    while iout < t_out.size and t_out[iout] <= t0:
        out[iout] = y
        iout += 1
    span = t_end - t0
    h = min(span * 1e-3, 10.0)
    stages = np.empty((7, n))
    stages[0] = rhs(t, y)
    steps = 0
    while iout < t_out.size:
        if steps >= settings.max_steps or h < 1e-12 * span:
            raise PropagationError("step control failure", time=t)
        clamped = False
        h_use = h
        if t + h_use >= t_out[iout]:
            h_use = t_out[iout] - t
            clamped = True
        for i, row in enumerate(a):
            yi = y + h_use * sum(cij * stages[j] for j, cij in enumerate(row))
            stages[i + 1] = rhs(t + h_use * sum(row), yi)
        ynew = y + h_use * (b @ stages[:6])
        stages[6] = rhs(t + h_use, ynew)
        steps += 1
        scale = atol + settings.rtol * np.maximum(np.abs(y), np.abs(ynew))
        err = math.sqrt(float(np.mean((h_use * (e @ stages) / scale) ** 2)))
        if not math.isfinite(err):
            h = 0.25 * h_use
            continue
        if err <= 1.0:
            t = t_out[iout] if clamped else t + h_use
            y = ynew
            stages[0] = stages[6]
            while iout < t_out.size and t_out[iout] <= t:
                out[iout] = y
                iout += 1
            factor = k._MAX_FACTOR if err == 0.0 else min(
                k._MAX_FACTOR, max(k._MIN_FACTOR, k._SAFETY * err**-0.2))
            h = max(h, h_use * factor) if clamped else h_use * factor
        else:
            h = h_use * max(0.1, k._SAFETY * err**-0.2)
    return t_out, out
