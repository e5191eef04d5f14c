"""Command-line interface: optimize, shoot, sweep, pitch-curves.

Every command reads one mission config, writes deterministic text
outputs into ``--out`` (summaries as YAML, tables as CSV with a one-line
header), and reports through exit codes: 0 success, 1 validation error,
2 solver non-convergence, 3 propagation or physics error. Output units:
angles in degrees, altitudes in km, thrust in kN, mass in kg.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .astro import osculating_apsides
from .config import MissionConfig, load_config
from .dynamics import (Trajectory, default_sample_times,
                       propagate_closed_loop)
from .errors import (ConfigError, ConsistencyError, ConvergenceError,
                     EscapeTrajectory, MassDepleted, NoPitchSolution,
                     PropagationError, SingularCostate)
from .optimizer import Solution, initial_guess, optimize_thrust
from .pitchlaw import branch_gamma
from .shooting import _residual_norm, shoot_at, sweep

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NO_CONVERGENCE = 2
EXIT_PHYSICS = 3

_PHYSICS_ERRORS = (PropagationError, EscapeTrajectory, NoPitchSolution,
                   MassDepleted, SingularCostate, ConsistencyError)

#: Fraction of sweep levels that must converge for a zero exit.
SWEEP_PASS_FRACTION = 0.8


def _num(x: float) -> str:
    """Fixed, locale-free float rendering shared by all writers."""
    return format(float(x), ".12g")


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with the validation code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def _write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _trajectory_csv(traj: Trajectory, constants) -> str:
    radius = traj.radius()
    apo, per = traj.apsides()
    pitch = np.degrees(traj.pitch())
    gamma = np.degrees(traj.flight_path_angle())
    phi = np.degrees(traj.longitude())
    speed = traj.speed()
    lines = ["time_s,x_km,y_km,vx_m_s,vy_m_s,mass_kg,altitude_km,"
             "speed_m_s,longitude_deg,flight_path_deg,pitch_deg,"
             "apogee_km,perigee_km"]
    for i, t in enumerate(traj.times):
        s = traj.states[i]
        cells = [t, s[0] / 1e3, s[1] / 1e3, s[2], s[3], s[4],
                 (radius[i] - constants.earth_radius) / 1e3, speed[i],
                 phi[i], gamma[i], pitch[i], apo[i] / 1e3, per[i] / 1e3]
        lines.append(",".join(_num(c) for c in cells))
    return "\n".join(lines) + "\n"


def _costate_block(costate, indent: str = "") -> str:
    """Costates in reference units (kg/km, kg/(m/s), kg/kg) and SI."""
    pr, pv, pm = costate.p_r, costate.p_v, costate.p_m
    return (
        f"{indent}costates_per_km:\n"
        f"{indent}  p_r: [{_num(pr[0] * 1e3)}, {_num(pr[1] * 1e3)}]\n"
        f"{indent}  p_v: [{_num(pv[0])}, {_num(pv[1])}]\n"
        f"{indent}  p_m: {_num(pm)}\n"
        f"{indent}costates_si:\n"
        f"{indent}  p_r: [{_num(pr[0])}, {_num(pr[1])}]\n"
        f"{indent}  p_v: [{_num(pv[0])}, {_num(pv[1])}]\n"
        f"{indent}  p_m: {_num(pm)}\n")


def _solution_summary(command: str, sol: Solution, config: MissionConfig,
                      extra: str = "") -> str:
    final = sol.trajectory.final_state
    apo, per = osculating_apsides(final.position, final.velocity,
                                  config.constants)
    return (
        f"command: {command}\n"
        f"status: converged\n"
        f"{extra}"
        f"thrust_kn: {_num(sol.thrust / 1e3)}\n"
        f"burn_time_s: {_num(sol.burn_time)}\n"
        f"final_mass_kg: {_num(sol.final_mass)}\n"
        f"dv_loss_m_s: {_num(sol.dv_loss)}\n"
        f"iterations: {sol.iterations}\n"
        f"residuals_m:\n"
        f"  apogee: {_num(sol.residuals[0])}\n"
        f"  perigee: {_num(sol.residuals[1])}\n"
        f"achieved_orbit_km:\n"
        f"  apogee: {_num(apo / 1e3)}\n"
        f"  perigee: {_num(per / 1e3)}\n"
        + _costate_block(sol.costate))


def _write_solution(out: Path, command: str, sol: Solution,
                    config: MissionConfig, extra: str = "") -> tuple[Path, Path]:
    summary_path = out / "summary.yaml"
    traj_path = out / "trajectory.csv"
    _write_text(summary_path,
                _solution_summary(command, sol, config, extra))
    _write_text(traj_path, _trajectory_csv(sol.trajectory, config.constants))
    return summary_path, traj_path


def cmd_optimize(args) -> int:
    config = load_config(args.config)
    out = Path(args.out)
    guess = initial_guess(config)
    if args.guess_only:
        if guess.degenerate:
            print("error: initial guess is degenerate (no velocity gain "
                  "required)", file=sys.stderr)
            return EXIT_VALIDATION
        traj = propagate_closed_loop(
            config.initial_state(), guess.thrust, config.exhaust_velocity,
            guess.burn_time, constants=config.constants,
            settings=config.integrator_settings(),
            sample_times=default_sample_times(guess.burn_time,
                                              config.solver.sample_dt_s))
        final = traj.final_state
        apo, per = osculating_apsides(final.position, final.velocity,
                                      config.constants)
        summary = (
            f"command: optimize --guess-only\n"
            f"thrust_kn: {_num(guess.thrust / 1e3)}\n"
            f"burn_time_s: {_num(guess.burn_time)}\n"
            f"final_mass_guess_kg: {_num(guess.final_mass)}\n"
            f"v_initial_m_s: {_num(guess.v_initial)}\n"
            f"v_target_m_s: {_num(guess.v_target)}\n"
            f"propagated_orbit_km:\n"
            f"  apogee: {_num(apo / 1e3)}\n"
            f"  perigee: {_num(per / 1e3)}\n")
        _write_text(out / "summary.yaml", summary)
        _write_text(out / "trajectory.csv",
                    _trajectory_csv(traj, config.constants))
        print(f"guess: T={guess.thrust / 1e3:.3f} kN  "
              f"t_f={guess.burn_time:.1f} s  "
              f"m_f={guess.final_mass:.1f} kg")
        print(f"wrote {out / 'summary.yaml'} and {out / 'trajectory.csv'}")
        return EXIT_OK
    sol = optimize_thrust(config, guess)
    _write_solution(out, "optimize", sol, config)
    print(f"optimum: T={sol.thrust / 1e3:.3f} kN  "
          f"t_f={sol.burn_time:.2f} s  m_f={sol.final_mass:.1f} kg")
    print(f"wrote {out / 'summary.yaml'} and {out / 'trajectory.csv'}")
    return EXIT_OK


def cmd_shoot(args) -> int:
    if args.thrust_kn <= 0.0:
        print("error: --thrust-kn must be positive", file=sys.stderr)
        return EXIT_VALIDATION
    config = load_config(args.config)
    out = Path(args.out)
    base = optimize_thrust(config)
    sol = shoot_at(config, args.thrust_kn * 1e3, base)
    norm = _residual_norm(sol, config)
    extra = (f"seeded_from_kn: {_num(base.thrust / 1e3)}\n"
             f"scaled_residual_norm: {_num(norm)}\n")
    _write_solution(out, "shoot", sol, config, extra)
    print(f"shoot: T={sol.thrust / 1e3:.3f} kN  "
          f"t_f={sol.burn_time:.2f} s  m_f={sol.final_mass:.1f} kg")
    print(f"wrote {out / 'summary.yaml'} and {out / 'trajectory.csv'}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = load_config(args.config)
    out = Path(args.out)
    result = sweep(config)
    scale = config.exhaust_velocity / (config.initial_mass
                                       * config.initial_kinematics().speed)
    lines = ["T_kn,converged,m_f,dv_loss,H0_t0,T_HT_t0,"
             "p_rx,p_ry,p_vx,p_vy,p_m"]
    for rec in result.records:
        if rec.converged:
            c = rec.unknowns.costate
            cells = [_num(rec.thrust / 1e3), "true",
                     _num(rec.final_mass), _num(rec.dv_loss),
                     _num(rec.h0_initial * scale),
                     _num(rec.thrust_ht_initial * scale),
                     _num(c.p_r[0] * 1e3), _num(c.p_r[1] * 1e3),
                     _num(c.p_v[0]), _num(c.p_v[1]), _num(c.p_m)]
        else:
            cells = [_num(rec.thrust / 1e3), "false"] + [""] * 9
        lines.append(",".join(cells))
    _write_text(out / "sweep.csv", "\n".join(lines) + "\n")
    n_total = len(result.records)
    n_conv = len(result.converged_records())
    print(f"sweep: {n_conv}/{n_total} levels converged")
    print(f"wrote {out / 'sweep.csv'}")
    if n_conv < SWEEP_PASS_FRACTION * n_total:
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def cmd_pitch_curves(args) -> int:
    try:
        ratios = [float(tok) for tok in args.ratios.split(",") if tok]
    except ValueError:
        print(f"error: --ratios must be comma-separated numbers, "
              f"got {args.ratios!r}", file=sys.stderr)
        return EXIT_VALIDATION
    if not ratios or any(r <= 0.0 for r in ratios):
        print("error: --ratios must be positive", file=sys.stderr)
        return EXIT_VALIDATION
    if args.samples < 2:
        print("error: --samples must be at least 2", file=sys.stderr)
        return EXIT_VALIDATION
    out = Path(args.out)
    lines = ["ratio_vc_v,theta_deg,gamma_plus_deg,gamma_minus_deg"]
    for ratio in ratios:
        theta_max = math.asin(1.0 / math.sqrt(3.0 + ratio * ratio))
        grid = np.linspace(-theta_max, theta_max, args.samples + 2)[1:-1]
        for theta in grid:
            row = [_num(ratio), _num(math.degrees(theta))]
            for sign in (+1, -1):
                try:
                    gamma = branch_gamma(float(theta), ratio, sign)
                except ValueError:
                    row.append("")
                else:
                    row.append(_num(math.degrees(gamma)))
            lines.append(",".join(row))
    _write_text(out / "pitch_curves.csv", "\n".join(lines) + "\n")
    print(f"wrote {out / 'pitch_curves.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="upstage",
                     description="Minimum-fuel orbit insertion for a "
                                 "constantly thrusting upper stage")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = _Parser(add_help=False)
    common.add_argument("--config", default=None,
                        help="config path or bare name resolved via "
                             "$UPSTAGE_CONFIG_DIR, then bundled configs "
                             "(default: bundled reference mission)")
    common.add_argument("--out", default="out",
                        help="output directory (default: %(default)s)")

    p = sub.add_parser("optimize", parents=[common],
                       help="solve for the optimal thrust level and "
                            "burn time under the closed-loop pitch law")
    p.add_argument("--guess-only", action="store_true",
                   help="emit the rocket-equation starting point and its "
                        "propagated orbit instead of solving")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("shoot", parents=[common],
                       help="solve the fixed-thrust boundary value "
                            "problem at a given thrust level")
    p.add_argument("--thrust-kn", type=float, required=True,
                   help="thrust level in kN")
    p.set_defaults(func=cmd_shoot)

    p = sub.add_parser("sweep", parents=[common],
                       help="solve the boundary value problem across the "
                            "configured thrust grid")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("pitch-curves", parents=[common],
                       help="tabulate both pitch-law branches over the "
                            "admissible pitch interval")
    p.add_argument("--ratios", default="0.7,1.0,1.5",
                   help="comma-separated circular-speed ratios "
                        "(default: %(default)s)")
    p.add_argument("--samples", type=int, default=201,
                   help="grid points per ratio (default: %(default)s)")
    p.set_defaults(func=cmd_pitch_curves)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except _PHYSICS_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PHYSICS


if __name__ == "__main__":
    sys.exit(main())
