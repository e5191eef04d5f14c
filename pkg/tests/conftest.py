"""Shared fixtures: the reference mission solved once per session."""
import pytest

from upstage.config import load_config
from upstage.dynamics import default_sample_times, propagate_extremal
from upstage.optimizer import initial_guess, optimize_thrust
from upstage.shooting import ShootingUnknowns, solve_shooting, sweep


@pytest.fixture(scope="session")
def config():
    return load_config()


@pytest.fixture(scope="session")
def guess(config):
    return initial_guess(config)


@pytest.fixture(scope="session")
def optimum(config, guess):
    return optimize_thrust(config, guess)


@pytest.fixture(scope="session")
def analytic_unknowns(optimum):
    return ShootingUnknowns(costate=optimum.costate,
                            burn_time=optimum.burn_time)


@pytest.fixture(scope="session")
def extremal_at_optimum(config, optimum):
    """Costate-driven flight at the optimum, seeded analytically."""
    return propagate_extremal(
        config.initial_state(), optimum.costate, optimum.thrust,
        config.exhaust_velocity, optimum.burn_time,
        constants=config.constants, settings=config.integrator_settings(),
        sample_times=default_sample_times(optimum.burn_time,
                                          config.solver.sample_dt_s))


@pytest.fixture(scope="session")
def bvp_at_optimum(config, optimum, analytic_unknowns):
    """Converged shooting solution at the optimal thrust level."""
    return solve_shooting(optimum.thrust, analytic_unknowns, config)


@pytest.fixture(scope="session")
def sweep_result(config, optimum):
    return sweep(config, base=optimum)


def hamiltonian_scale(config) -> float:
    """Scale turning a Hamiltonian value dimensionless and O(1)."""
    return config.exhaust_velocity / (config.initial_mass
                                      * config.initial_kinematics().speed)
