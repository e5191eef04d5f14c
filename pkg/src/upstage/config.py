"""Mission configuration: defaults, file loading, validation.

Configs are YAML documents with five optional sections (constants,
vehicle, initial_orbit, target_orbit, solver, sweep). Any omitted field
falls back to the reference GTO insertion mission that the bundled
``gto_example`` config spells out in full. Angles are degrees, altitudes
km, thrust kN and mass kg at this boundary; everything becomes SI on the
way in.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .astro import (EARTH, CartesianState, Constants, OrbitSpec,
                    PolarKinematics, cartesian_from_polar, state_from_orbit)
from .dynamics import IntegratorSettings
from .errors import ConfigError

#: Environment variable naming the directory searched for bare config names.
CONFIG_DIR_ENV = "UPSTAGE_CONFIG_DIR"


@dataclass(frozen=True)
class VehicleConfig:
    """Stage mass and engine. Exactly one of isp_s / exhaust_velocity_ms."""

    initial_mass_kg: float = 40000.0
    isp_s: float | None = 350.0
    exhaust_velocity_ms: float | None = None


@dataclass(frozen=True)
class OrbitConfig:
    """Apsis altitudes (km) and, for the initial orbit, a true anomaly."""

    apogee_km: float
    perigee_km: float
    anomaly_deg: float | None = None


@dataclass(frozen=True)
class SolverConfig:
    integrator: str = "rk45"
    rtol: float = 1e-10
    fixed_step_s: float = 0.1
    newton_tol_m: float = 10.0
    newton_max_iter: int = 30
    shooting_tol: float = 1e-6
    shooting_max_iter: int = 50
    sample_dt_s: float = 1.0


@dataclass(frozen=True)
class SweepConfig:
    t_min_kn: float = 100.0
    t_max_kn: float = 230.0
    points: int = 27


@dataclass(frozen=True)
class MissionConfig:
    constants: Constants = field(default=EARTH)
    vehicle: VehicleConfig = field(default_factory=VehicleConfig)
    initial_orbit: OrbitConfig = field(
        default_factory=lambda: OrbitConfig(400.0, -5000.0, 169.0))
    target_orbit: OrbitConfig = field(
        default_factory=lambda: OrbitConfig(36000.0, 250.0))
    solver: SolverConfig = field(default_factory=SolverConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)

    @property
    def exhaust_velocity(self) -> float:
        v = self.vehicle
        if v.exhaust_velocity_ms is not None:
            return v.exhaust_velocity_ms
        return v.isp_s * self.constants.g0

    @property
    def initial_mass(self) -> float:
        return self.vehicle.initial_mass_kg

    def initial_kinematics(self) -> PolarKinematics:
        o = self.initial_orbit
        spec = OrbitSpec(apogee_altitude=o.apogee_km * 1e3,
                         perigee_altitude=o.perigee_km * 1e3,
                         true_anomaly=math.radians(o.anomaly_deg))
        return state_from_orbit(spec, self.constants)

    def initial_state(self) -> CartesianState:
        return cartesian_from_polar(self.initial_kinematics(),
                                    self.vehicle.initial_mass_kg)

    def target_altitudes(self) -> tuple[float, float]:
        """Target (apogee, perigee) altitudes in meters."""
        return self.target_orbit.apogee_km * 1e3, self.target_orbit.perigee_km * 1e3

    def target_perigee_speed(self) -> float:
        re = self.constants.earth_radius
        r_apo = re + self.target_orbit.apogee_km * 1e3
        r_per = re + self.target_orbit.perigee_km * 1e3
        sma = 0.5 * (r_apo + r_per)
        return math.sqrt(self.constants.mu * (2.0 / r_per - 1.0 / sma))

    def integrator_settings(self) -> IntegratorSettings:
        s = self.solver
        return IntegratorSettings(method=s.integrator, rtol=s.rtol,
                                  fixed_step=s.fixed_step_s)


def _require_number(section: str, key: str, value) -> float:
    # YAML 1.1 reads exponents without a sign (1e14) as strings.
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            pass
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key}: expected a number, "
                          f"got {value!r}")
    return float(value)


def _check_keys(section: str, data: dict, allowed: tuple[str, ...]):
    for key in data:
        if key not in allowed:
            raise ConfigError(f"{section}.{key}: unknown field")


def _parse_constants(data: dict) -> Constants:
    _check_keys("constants", data, ("mu_m3_s2", "earth_radius_m", "g0_m_s2"))
    mu = _require_number("constants", "mu_m3_s2",
                         data.get("mu_m3_s2", EARTH.mu))
    re = _require_number("constants", "earth_radius_m",
                         data.get("earth_radius_m", EARTH.earth_radius))
    g0 = _require_number("constants", "g0_m_s2", data.get("g0_m_s2", EARTH.g0))
    if mu <= 0 or re <= 0 or g0 <= 0:
        raise ConfigError("constants: mu_m3_s2, earth_radius_m and g0_m_s2 "
                          "must be positive")
    return Constants(mu=mu, earth_radius=re, g0=g0)


def _parse_vehicle(data: dict) -> VehicleConfig:
    _check_keys("vehicle", data,
                ("initial_mass_kg", "isp_s", "exhaust_velocity_ms"))
    m0 = _require_number("vehicle", "initial_mass_kg",
                         data.get("initial_mass_kg", 40000.0))
    if m0 <= 0:
        raise ConfigError(f"vehicle.initial_mass_kg: must be positive, got {m0}")
    isp = data.get("isp_s")
    ve = data.get("exhaust_velocity_ms")
    if "isp_s" not in data and "exhaust_velocity_ms" not in data:
        isp = 350.0
    if isp is not None and ve is not None:
        raise ConfigError("vehicle: give exactly one of isp_s and "
                          "exhaust_velocity_ms, not both")
    if isp is None and ve is None:
        raise ConfigError("vehicle: give exactly one of isp_s and "
                          "exhaust_velocity_ms")
    if isp is not None:
        isp = _require_number("vehicle", "isp_s", isp)
        if isp <= 0:
            raise ConfigError(f"vehicle.isp_s: must be positive, got {isp}")
    if ve is not None:
        ve = _require_number("vehicle", "exhaust_velocity_ms", ve)
        if ve <= 0:
            raise ConfigError(
                f"vehicle.exhaust_velocity_ms: must be positive, got {ve}")
    return VehicleConfig(initial_mass_kg=m0, isp_s=isp,
                         exhaust_velocity_ms=ve)


def _parse_orbit(section: str, data: dict, default: OrbitConfig,
                 needs_anomaly: bool, earth_radius: float) -> OrbitConfig:
    _check_keys(section, data, ("apogee_km", "perigee_km", "anomaly_deg"))
    apo = _require_number(section, "apogee_km",
                          data.get("apogee_km", default.apogee_km))
    per = _require_number(section, "perigee_km",
                          data.get("perigee_km", default.perigee_km))
    anomaly = data.get("anomaly_deg", default.anomaly_deg)
    if anomaly is not None:
        anomaly = _require_number(section, "anomaly_deg", anomaly)
    if per > apo:
        raise ConfigError(f"{section}.perigee_km: {per} exceeds apogee_km {apo}")
    if per * 1e3 + earth_radius <= 0:
        raise ConfigError(f"{section}.perigee_km: {per} puts perigee radius "
                          "at or below zero")
    if needs_anomaly and anomaly is None:
        raise ConfigError(f"{section}.anomaly_deg: required")
    return OrbitConfig(apogee_km=apo, perigee_km=per, anomaly_deg=anomaly)


def _parse_solver(data: dict) -> SolverConfig:
    d = SolverConfig()
    _check_keys("solver", data,
                ("integrator", "rtol", "fixed_step_s", "newton_tol_m",
                 "newton_max_iter", "shooting_tol", "shooting_max_iter",
                 "sample_dt_s"))
    integrator = data.get("integrator", d.integrator)
    if integrator not in ("rk45", "rk4"):
        raise ConfigError(
            f"solver.integrator: must be rk45 or rk4, got {integrator!r}")
    out = {}
    for key in ("rtol", "fixed_step_s", "newton_tol_m", "shooting_tol",
                "sample_dt_s"):
        out[key] = _require_number("solver", key, data.get(key, getattr(d, key)))
        if out[key] <= 0:
            raise ConfigError(f"solver.{key}: must be positive, got {out[key]}")
    for key in ("newton_max_iter", "shooting_max_iter"):
        val = data.get(key, getattr(d, key))
        if isinstance(val, bool) or not isinstance(val, int) or val < 1:
            raise ConfigError(
                f"solver.{key}: expected a positive integer, got {val!r}")
        out[key] = val
    return SolverConfig(integrator=integrator, **out)


def _parse_sweep(data: dict) -> SweepConfig:
    d = SweepConfig()
    _check_keys("sweep", data, ("t_min_kn", "t_max_kn", "points"))
    t_min = _require_number("sweep", "t_min_kn", data.get("t_min_kn", d.t_min_kn))
    t_max = _require_number("sweep", "t_max_kn", data.get("t_max_kn", d.t_max_kn))
    points = data.get("points", d.points)
    if t_min <= 0 or t_max <= t_min:
        raise ConfigError(
            f"sweep: need 0 < t_min_kn < t_max_kn, got {t_min} and {t_max}")
    if isinstance(points, bool) or not isinstance(points, int) or points < 2:
        raise ConfigError(f"sweep.points: expected an integer >= 2, got {points!r}")
    return SweepConfig(t_min_kn=t_min, t_max_kn=t_max, points=points)


def config_from_mapping(data: dict) -> MissionConfig:
    """Build and validate a MissionConfig from a parsed mapping."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"top level: expected a mapping, got {type(data).__name__}")
    _check_keys("top level", data,
                ("constants", "vehicle", "initial_orbit", "target_orbit",
                 "solver", "sweep"))
    for key in data:
        if data[key] is not None and not isinstance(data[key], dict):
            raise ConfigError(f"{key}: expected a mapping")
    constants = _parse_constants(data.get("constants") or {})
    defaults = MissionConfig()
    return MissionConfig(
        constants=constants,
        vehicle=_parse_vehicle(data.get("vehicle") or {}),
        initial_orbit=_parse_orbit("initial_orbit",
                                   data.get("initial_orbit") or {},
                                   defaults.initial_orbit, True,
                                   constants.earth_radius),
        target_orbit=_parse_orbit("target_orbit",
                                  data.get("target_orbit") or {},
                                  defaults.target_orbit, False,
                                  constants.earth_radius),
        solver=_parse_solver(data.get("solver") or {}),
        sweep=_parse_sweep(data.get("sweep") or {}),
    )


def _resolve_path(name: str) -> Path:
    p = Path(name)
    if p.exists():
        return p
    if os.sep not in name and "/" not in name:
        env_dir = os.environ.get(CONFIG_DIR_ENV)
        candidates = []
        if env_dir:
            candidates += [Path(env_dir) / name, Path(env_dir) / f"{name}.yaml"]
        data_dir = resources.files("upstage") / "data"
        candidates += [Path(str(data_dir / name)),
                       Path(str(data_dir / f"{name}.yaml"))]
        for cand in candidates:
            if cand.exists():
                return cand
    raise ConfigError(f"config not found: {name}")


def load_config(source: str | Path | None = None) -> MissionConfig:
    """Load a mission config.

    Args:
        source: filesystem path, or a bare name looked up first in
            ``$UPSTAGE_CONFIG_DIR`` and then among the bundled configs.
            None loads the bundled reference mission.

    Raises:
        ConfigError: unreadable file, parse error (with line info), or
            invalid field.
    """
    if source is None:
        source = "gto_example"
    path = _resolve_path(str(source))
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"parse error in {path}: {exc}") from exc
    return config_from_mapping(data)
