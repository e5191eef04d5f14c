"""Benchmark the compiled kernels against the pure-python fallback.

Runs the two propagation workloads (closed-loop burn, extremal burn) in
this interpreter, then again in a subprocess with UPSTAGE_DISABLE_NUMBA=1,
and prints per-run times and the speedup. Invoke from the repository
root:

    python benchmarks/bench_propagation.py
"""
import os
import subprocess
import sys
import time


def _time_workloads(repeats: int) -> dict[str, float]:
    from upstage import kernels
    from upstage.config import load_config
    from upstage.dynamics import propagate_closed_loop, propagate_extremal
    from upstage.optimizer import initial_costates, initial_guess

    config = load_config()
    state0 = config.initial_state()
    guess = initial_guess(config)
    costate = initial_costates(config.initial_kinematics(),
                               guess.final_mass, config.initial_mass,
                               config.exhaust_velocity, config.constants)
    burn = 0.9 * guess.burn_time

    def closed_loop():
        propagate_closed_loop(state0, guess.thrust, config.exhaust_velocity,
                              burn, constants=config.constants,
                              settings=config.integrator_settings())

    def extremal():
        propagate_extremal(state0, costate, guess.thrust,
                           config.exhaust_velocity, burn,
                           constants=config.constants,
                           settings=config.integrator_settings())

    out = {"using_numba": float(kernels.USING_NUMBA)}
    for name, fn in (("closed_loop", closed_loop), ("extremal", extremal)):
        fn()  # warm up (JIT compile or cache load)
        best = min(_timed(fn) for _ in range(repeats))
        out[name] = best
    return out


def _timed(fn) -> float:
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


def main() -> int:
    if "--worker" in sys.argv:
        results = _time_workloads(repeats=5)
        for key, value in results.items():
            print(f"{key},{value:.9f}")
        return 0

    rows = {}
    for label, disable in (("numba", "0"), ("python", "1")):
        env = dict(os.environ, UPSTAGE_DISABLE_NUMBA=disable)
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--worker"],
            env=env, capture_output=True, text=True, check=True)
        parsed = dict(line.split(",") for line in proc.stdout.split())
        expected = 0.0 if disable == "1" else 1.0
        if float(parsed.pop("using_numba")) != expected:
            raise RuntimeError(f"worker {label!r} ran with the wrong backend")
        rows[label] = {k: float(v) for k, v in parsed.items()}

    print(f"{'workload':<14} {'numba (ms)':>12} {'python (ms)':>12} "
          f"{'speedup':>9}")
    for workload in ("closed_loop", "extremal"):
        fast = rows["numba"][workload]
        slow = rows["python"][workload]
        print(f"{workload:<14} {fast * 1e3:>12.2f} {slow * 1e3:>12.2f} "
              f"{slow / fast:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
