"""Minimum-fuel orbit insertion for a constantly thrusting upper stage.

The package solves the planar insertion problem three ways, in
increasing generality: a closed-loop pitch law that collapses the
optimal control problem to two unknowns (thrust level and burn time), an
analytic costate seed recovered from the converged closed-loop solution,
and an indirect shooting method that handles fixed off-optimal thrust
levels and thrust sweeps by homotopy.
"""
from .astro import (EARTH, CartesianState, Constants, OrbitSpec,
                    PolarKinematics, cartesian_from_polar, gravity,
                    gravity_gradient, osculating_apsides,
                    polar_from_cartesian, specific_energy, state_from_orbit)
from .config import (CONFIG_DIR_ENV, MissionConfig, OrbitConfig,
                     SolverConfig, SweepConfig, VehicleConfig,
                     config_from_mapping, load_config)
from .dynamics import (Costate, IntegratorSettings, Trajectory,
                       default_sample_times, extremal_rhs, hamiltonian,
                       integrate, propagate_closed_loop, propagate_extremal,
                       state_rhs)
from .errors import (ConfigError, ConsistencyError, ConvergenceError,
                     EscapeTrajectory, MassDepleted, NoPitchSolution,
                     PropagationError, SingularCostate, UpstageError)
from .optimizer import (InitialGuess, Solution, dv_loss_of, initial_costates,
                        initial_guess, optimize_thrust, velocity_losses)
from .pitchlaw import (PitchSolution, angular_rate, branch_gamma,
                       pitch_bound, pitch_solution, solve_pitch)
from .shooting import (ShootingUnknowns, SweepRecord, SweepResult,
                       constraint_gradients, shoot_at, shooting_residuals,
                       solve_shooting, sweep)

__version__ = "0.1.0"

__all__ = [
    "CONFIG_DIR_ENV", "CartesianState", "ConfigError", "ConsistencyError",
    "Constants", "ConvergenceError", "Costate", "EARTH", "EscapeTrajectory",
    "InitialGuess", "IntegratorSettings", "MassDepleted", "MissionConfig",
    "NoPitchSolution", "OrbitConfig", "OrbitSpec", "PitchSolution",
    "PolarKinematics", "PropagationError", "ShootingUnknowns",
    "SingularCostate", "Solution", "SolverConfig", "SweepConfig",
    "SweepRecord", "SweepResult", "Trajectory", "UpstageError",
    "VehicleConfig", "angular_rate", "branch_gamma", "cartesian_from_polar",
    "config_from_mapping", "constraint_gradients", "default_sample_times",
    "dv_loss_of", "extremal_rhs", "gravity", "gravity_gradient",
    "hamiltonian", "initial_costates", "initial_guess", "integrate",
    "load_config", "optimize_thrust", "osculating_apsides", "pitch_bound",
    "pitch_solution", "polar_from_cartesian", "propagate_closed_loop",
    "propagate_extremal", "shoot_at", "shooting_residuals", "solve_pitch",
    "solve_shooting", "specific_energy", "state_from_orbit", "state_rhs",
    "sweep", "velocity_losses",
]
