"""Indirect shooting for off-optimal fixed thrust levels.

At thrust levels away from the optimum the closed-loop law cannot meet
both apsis targets, so the full boundary value problem is solved instead:
six unknowns (initial costates and burn time) against the two apsis
constraints, transversality of the final costates, the mass-costate
normalization, and a vanishing final Hamiltonian. A thrust sweep marches
the solution across a grid, warm-starting each level from its neighbor
and seeded at the optimum by the analytic costates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .astro import CartesianState, osculating_apsides
from .config import MissionConfig
from .dynamics import (Costate, default_sample_times, hamiltonian,
                       propagate_extremal)
from .errors import (ConvergenceError, EscapeTrajectory, MassDepleted,
                     NoPitchSolution, PropagationError, SingularCostate)
from .optimizer import Solution, dv_loss_of, optimize_thrust

#: Central-difference steps for the constraint gradients.
GRAD_STEP_POSITION = 1.0      # m
GRAD_STEP_VELOCITY = 1e-3    # m/s

#: Forward-difference step for the shooting Jacobian.
JAC_REL_STEP = 1e-6
JAC_ABS_FLOOR = 1e-9

#: Burn-time clamp shared with the thrust optimizer.
MIN_BURN_TIME = 10.0

#: Bisections allowed when a sweep point fails from its warm start.
SWEEP_BISECTIONS = 4

_EVAL_FAILURES = (PropagationError, EscapeTrajectory, NoPitchSolution,
                  MassDepleted, SingularCostate)


@dataclass
class ShootingUnknowns:
    """Unknown vector of the boundary value problem."""

    costate: Costate
    burn_time: float

    def to_array(self) -> np.ndarray:
        return np.append(self.costate.to_array(), self.burn_time)

    @classmethod
    def from_array(cls, arr) -> "ShootingUnknowns":
        arr = np.asarray(arr, dtype=float)
        return cls(costate=Costate.from_array(arr[:5]), burn_time=arr[5])


@dataclass
class SweepRecord:
    """One thrust level of a sweep."""

    thrust: float
    converged: bool
    burn_time: float = math.nan
    final_mass: float = math.nan
    dv_loss: float = math.nan
    h0_initial: float = math.nan
    thrust_ht_initial: float = math.nan
    ht_relative: float = math.nan
    residual_norm: float = math.nan
    iterations: int = 0
    unknowns: ShootingUnknowns | None = None


@dataclass
class SweepResult:
    """Sweep records in grid order, plus the optimum they bracket."""

    records: list[SweepRecord]
    base: Solution

    def converged_records(self) -> list[SweepRecord]:
        return [r for r in self.records if r.converged]


def constraint_gradients(position, velocity, constants) -> np.ndarray:
    """Gradients of the apsis-altitude constraints at a state.

    Central finite differences over the stacked (position, velocity)
    space; steps of 1 m and 1e-3 m/s.

    Returns:
        4x2 matrix whose columns are the apogee and perigee gradients.
    """
    position = np.asarray(position, dtype=float)
    velocity = np.asarray(velocity, dtype=float)
    out = np.empty((4, 2))
    for i in range(4):
        dp = np.zeros(2)
        dv = np.zeros(2)
        if i < 2:
            step = GRAD_STEP_POSITION
            dp[i] = step
        else:
            step = GRAD_STEP_VELOCITY
            dv[i - 2] = step
        apo_hi, per_hi = osculating_apsides(position + dp, velocity + dv,
                                            constants)
        apo_lo, per_lo = osculating_apsides(position - dp, velocity - dv,
                                            constants)
        out[i, 0] = (apo_hi - apo_lo) / (2.0 * step)
        out[i, 1] = (per_hi - per_lo) / (2.0 * step)
    return out


def _complement_basis(grad: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of two gradients.

    Gram-Schmidt over the gradient columns, then over the identity seeds,
    with a second orthogonalization pass for accuracy.
    """
    basis = []
    for col in grad.T:
        w = col.astype(float)
        for b in basis:
            w = w - (w @ b) * b
        norm = np.linalg.norm(w)
        if norm > 1e-12 * np.linalg.norm(col):
            basis.append(w / norm)
    if len(basis) != 2:
        raise ValueError("constraint gradients are degenerate")
    comp = []
    for i in range(4):
        w = np.zeros(4)
        w[i] = 1.0
        for _ in range(2):
            for b in basis + comp:
                w = w - (w @ b) * b
        norm = np.linalg.norm(w)
        if norm > 1e-10:
            comp.append(w / norm)
        if len(comp) == 2:
            break
    if len(comp) != 2:
        raise ValueError("could not build a complement basis")
    return np.column_stack(comp)


def _terminal_point(unknowns: ShootingUnknowns, thrust: float,
                    config: MissionConfig) -> tuple[CartesianState, Costate]:
    traj = propagate_extremal(
        config.initial_state(), unknowns.costate, thrust,
        config.exhaust_velocity, unknowns.burn_time,
        constants=config.constants, settings=config.integrator_settings())
    return traj.final_state, traj.final_costate


def _terminal_basis(final: CartesianState,
                    config: MissionConfig) -> np.ndarray:
    grad = constraint_gradients(final.position, final.velocity,
                                config.constants)
    return _complement_basis(grad)


def _assemble_residuals(final: CartesianState, final_costate: Costate,
                        basis: np.ndarray, thrust: float,
                        config: MissionConfig) -> np.ndarray:
    ve = config.exhaust_velocity
    m0 = config.initial_mass
    apo, per = osculating_apsides(final.position, final.velocity,
                                  config.constants)
    target_apo, target_per = config.target_altitudes()
    stacked = np.concatenate([final_costate.p_r, final_costate.p_v])
    v0 = config.initial_kinematics().speed
    h_final, _, _ = hamiltonian(final, final_costate, thrust, ve,
                                config.constants)
    res = np.empty(6)
    res[0] = (apo - target_apo) / 1e3
    res[1] = (per - target_per) / 1e3
    res[2:4] = (basis.T @ stacked) * (ve / m0)
    res[4] = final_costate.p_m - 1.0
    res[5] = h_final * ve / (m0 * v0)
    return res


def shooting_residuals(unknowns: ShootingUnknowns, thrust: float,
                       config: MissionConfig,
                       basis: np.ndarray | None = None) -> np.ndarray:
    """Six-component residual of the boundary value problem.

    Components: apogee and perigee miss (km); projection of the stacked
    final (position, velocity) costate onto the orthogonal complement of
    the constraint-gradient span, scaled by ve/m0 (two components); final
    mass costate minus one; final Hamiltonian scaled by ve/(m0 v0).

    ``basis`` overrides the complement basis; by default it is rebuilt
    from this trajectory's own final state. The solver passes a basis
    frozen at the current iterate so that finite differencing sees the
    costate physics rather than the rotation of the basis itself.
    """
    final, final_costate = _terminal_point(unknowns, thrust, config)
    if basis is None:
        basis = _terminal_basis(final, config)
    return _assemble_residuals(final, final_costate, basis, thrust, config)


def _newton_step(jac: np.ndarray, res: np.ndarray) -> np.ndarray:
    """Equilibrated least-squares Newton step.

    Residual rows span ten orders of magnitude, so the raw system is too
    ill-conditioned for a direct solve once finite-difference noise is
    present; row/column equilibration plus a truncated-SVD solve keeps
    the step inside the numerically trustworthy subspace.
    """
    row = 1.0 / np.maximum(np.linalg.norm(jac, axis=1), 1e-300)
    scaled = jac * row[:, None]
    col = 1.0 / np.maximum(np.linalg.norm(scaled, axis=0), 1e-300)
    scaled *= col[None, :]
    step, *_ = np.linalg.lstsq(scaled, -(res * row), rcond=1e-11)
    return step * col


def solve_shooting(thrust: float, seed: ShootingUnknowns,
                   config: MissionConfig) -> Solution:
    """Damped Newton solve of the six-unknown boundary value problem.

    Forward-difference Jacobian (relative step 1e-6, absolute floor
    1e-9), step halving on failed or non-decreasing trials, burn time
    clamped above 10 s. Converged when the residual 2-norm falls below
    the configured gate; iteration continues below the gate while it
    keeps improving, for headroom in downstream identities.

    Raises:
        ConvergenceError: carrying the best unknowns found.
    """
    tol = config.solver.shooting_tol
    tight = max(tol * 1e-3, 1e-12)
    max_iter = config.solver.shooting_max_iter

    z = seed.to_array().copy()
    z[5] = max(z[5], MIN_BURN_TIME)

    def terminal(vec) -> tuple[CartesianState, Costate]:
        return _terminal_point(ShootingUnknowns.from_array(vec), thrust,
                               config)

    try:
        final, final_costate = terminal(z)
        basis = _terminal_basis(final, config)
        res = _assemble_residuals(final, final_costate, basis, thrust,
                                  config)
    except (_EVAL_FAILURES + (ValueError,)) as exc:
        raise ConvergenceError(
            f"shooting seed failed at thrust {thrust:.1f} N: {exc}",
            best=seed, residual_norm=math.inf) from exc
    norm = float(np.linalg.norm(res))
    best_z, best_res, best_norm = z.copy(), res.copy(), norm
    iterations = 0

    while norm >= tight and iterations < max_iter:
        iterations += 1
        jac = np.empty((6, 6))
        try:
            for i in range(6):
                step = max(JAC_REL_STEP * abs(z[i]), JAC_ABS_FLOOR)
                z_step = z.copy()
                z_step[i] += step
                f_i, c_i = terminal(z_step)
                jac[:, i] = (_assemble_residuals(f_i, c_i, basis, thrust,
                                                 config) - res) / step
        except _EVAL_FAILURES as exc:
            raise ConvergenceError(
                f"shooting Jacobian failed at thrust {thrust:.1f} N: {exc}",
                best=ShootingUnknowns.from_array(best_z),
                residual_norm=best_norm) from exc
        delta = _newton_step(jac, res)
        if not np.all(np.isfinite(delta)):
            raise ConvergenceError(
                f"singular shooting Jacobian at thrust {thrust:.1f} N",
                best=ShootingUnknowns.from_array(best_z),
                residual_norm=best_norm)

        alpha = 1.0
        accepted = False
        for _ in range(9):
            z_try = z + alpha * delta
            z_try[5] = max(z_try[5], MIN_BURN_TIME)
            try:
                f_try, c_try = terminal(z_try)
                res_try = _assemble_residuals(f_try, c_try, basis, thrust,
                                              config)
            except _EVAL_FAILURES:
                alpha *= 0.5
                continue
            norm_try = float(np.linalg.norm(res_try))
            if norm_try < norm:
                z, final, final_costate = z_try, f_try, c_try
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
        # Refresh the basis at the accepted iterate; the residual is then
        # self-consistent with its own terminal state again.
        try:
            basis = _terminal_basis(final, config)
        except (_EVAL_FAILURES + (ValueError,)):
            pass
        res = _assemble_residuals(final, final_costate, basis, thrust,
                                  config)
        norm = float(np.linalg.norm(res))
        if norm < best_norm:
            best_z, best_res, best_norm = z.copy(), res.copy(), norm

    if best_norm >= tol:
        raise ConvergenceError(
            f"shooting did not converge at thrust {thrust:.1f} N "
            f"(residual norm {best_norm:.3g} after {iterations} iterations)",
            best=ShootingUnknowns.from_array(best_z),
            residual_norm=best_norm)

    unknowns = ShootingUnknowns.from_array(best_z)
    trajectory = propagate_extremal(
        config.initial_state(), unknowns.costate, thrust,
        config.exhaust_velocity, unknowns.burn_time,
        constants=config.constants, settings=config.integrator_settings(),
        sample_times=default_sample_times(unknowns.burn_time,
                                          config.solver.sample_dt_s))
    return Solution(
        thrust=thrust, burn_time=unknowns.burn_time,
        final_mass=float(trajectory.states[-1, 4]), costate=unknowns.costate,
        residuals=best_res[0:2] * 1e3, iterations=iterations,
        dv_loss=dv_loss_of(trajectory), trajectory=trajectory)


def _record_from_solution(sol: Solution, config: MissionConfig,
                          residual_norm: float) -> SweepRecord:
    state0 = config.initial_state()
    _, h0, h_t = hamiltonian(state0, sol.costate, sol.thrust,
                             config.exhaust_velocity, config.constants)
    pv0 = float(np.linalg.norm(sol.costate.p_v))
    return SweepRecord(
        thrust=sol.thrust, converged=True, burn_time=sol.burn_time,
        final_mass=sol.final_mass, dv_loss=sol.dv_loss, h0_initial=h0,
        thrust_ht_initial=sol.thrust * h_t,
        ht_relative=h_t * config.initial_mass / pv0,
        residual_norm=residual_norm, iterations=sol.iterations,
        unknowns=ShootingUnknowns(costate=sol.costate,
                                  burn_time=sol.burn_time))


def _residual_norm(sol: Solution, config: MissionConfig) -> float:
    unknowns = ShootingUnknowns(costate=sol.costate, burn_time=sol.burn_time)
    return float(np.linalg.norm(shooting_residuals(unknowns, sol.thrust,
                                                   config)))


def _march(goal: float, warm: ShootingUnknowns, warm_thrust: float,
           config: MissionConfig) -> Solution:
    """Solve at ``goal`` thrust, bisecting back toward a converged level.

    Up to ``SWEEP_BISECTIONS`` intermediate levels are inserted between
    the last converged thrust and the goal before giving up.
    """
    budget = SWEEP_BISECTIONS
    target = goal
    while True:
        try:
            sol = solve_shooting(target, warm, config)
        except ConvergenceError:
            if budget <= 0:
                raise
            budget -= 1
            target = 0.5 * (warm_thrust + target)
            continue
        if target == goal:
            return sol
        warm_thrust = target
        warm = ShootingUnknowns(costate=sol.costate, burn_time=sol.burn_time)
        target = goal


def shoot_at(config: MissionConfig, thrust: float,
             base: Solution | None = None) -> Solution:
    """Shooting solution at one thrust level, marched from the optimum.

    Walks from the closed-loop optimum toward ``thrust`` through anchor
    levels no farther apart than the configured sweep grid pitch,
    warm-starting each level from the previous one. A single jump far
    from the optimum fails because the warm burn time outlives the
    propellant at much higher thrust.
    """
    if thrust <= 0.0:
        raise ValueError("thrust must be positive")
    if base is None:
        base = optimize_thrust(config)
    s = config.sweep
    if s.points > 1:
        pitch = (s.t_max_kn - s.t_min_kn) * 1e3 / (s.points - 1)
    else:
        pitch = 5e3
    pitch = max(pitch, 1.0)
    warm = ShootingUnknowns(costate=base.costate, burn_time=base.burn_time)
    warm_thrust = base.thrust
    n = max(1, math.ceil(abs(thrust - base.thrust) / pitch))
    sol = None
    for k in range(1, n + 1):
        level = base.thrust + (thrust - base.thrust) * k / n
        sol = _march(level, warm, warm_thrust, config)
        warm = ShootingUnknowns(costate=sol.costate, burn_time=sol.burn_time)
        warm_thrust = level
    return sol


def sweep(config: MissionConfig, base: Solution | None = None,
          t_min: float | None = None, t_max: float | None = None,
          points: int | None = None) -> SweepResult:
    """Shooting solutions over a uniform thrust grid.

    The march starts at the grid point nearest the closed-loop optimum,
    seeded with its analytic costates, and proceeds outward in both
    directions warm-starting each level from its converged neighbor.
    Failed levels are recorded as such; the sweep continues past them
    from the last converged level.
    """
    if base is None:
        base = optimize_thrust(config)
    t_min = config.sweep.t_min_kn * 1e3 if t_min is None else t_min
    t_max = config.sweep.t_max_kn * 1e3 if t_max is None else t_max
    points = config.sweep.points if points is None else points
    grid = np.linspace(t_min, t_max, points)

    seed = ShootingUnknowns(costate=base.costate, burn_time=base.burn_time)
    start = int(np.argmin(np.abs(grid - base.thrust)))
    records: dict[int, SweepRecord] = {}

    for direction in (+1, -1):
        warm = seed
        warm_thrust = base.thrust
        idx = start if direction == +1 else start - 1
        while 0 <= idx < points:
            try:
                sol = _march(float(grid[idx]), warm, warm_thrust, config)
            except ConvergenceError as exc:
                records[idx] = SweepRecord(
                    thrust=float(grid[idx]), converged=False,
                    residual_norm=exc.residual_norm)
            else:
                records[idx] = _record_from_solution(
                    sol, config, _residual_norm(sol, config))
                warm = records[idx].unknowns
                warm_thrust = float(grid[idx])
            idx += direction

    ordered = [records[i] for i in range(points)]
    return SweepResult(records=ordered, base=base)
