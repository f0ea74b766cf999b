"""Compiled vs interpreted kernel timings.

    python benchmarks/bench_kernels.py            # both modes, one subprocess each
    python benchmarks/bench_kernels.py --mode self  # whatever SLABRT_DISABLE_JIT says

The backend is fixed at import time by SLABRT_DISABLE_JIT, so each mode runs
in its own interpreter. Compilation is excluded by a warm-up call.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _timed(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_benchmarks(n_draws: int, n_particles: int, repeat: int) -> dict:
    from slabrt import CorrelationModel, InitialPulse, MediumSpec, SlabConfig, TallyLayout
    from slabrt._jit import USE_NUMBA, kernel
    from slabrt.oracle import unfolded_reference_run
    from slabrt.rng import next_uniform, seed_key
    from slabrt.transport import Problem, simulate

    @kernel
    def draw_loop(k0, k1, n, state, cache):
        # kernels run without the numba runtime, so buffers come from outside
        state[0] = 0
        acc = 0.0
        for _ in range(n):
            acc += next_uniform(k0, k1, 3, state, cache)
        return acc

    k0, k1 = seed_key(42)
    state = np.zeros(1, dtype=np.uint64)
    cache = np.zeros(1)
    spec = MediumSpec(1.0, CorrelationModel("gaussian", 1.0, 1.0))
    pulse = InitialPulse("gaussian", "gaussian", 2.0, 1.0, 1.0, 3.0)
    layout = TallyLayout(np.linspace(0, 4, 41), [0.0, 0.5, 1.0, 2.0, 4.0001], np.linspace(0, 1, 21),
                         np.linspace(-1, 1, 9), np.linspace(0, 8, 9), np.linspace(0, 8, 33))
    prob = Problem.build(spec, pulse, SlabConfig(1.0, "neumann-dirichlet", (0.0, 0.0, 0.4)), layout)

    draw_loop(k0, k1, 10, state, cache)
    simulate(prob, 2, 4.0, 1)
    unfolded_reference_run(prob, 2, 4.0, 1)

    t_rng = _timed(lambda: draw_loop(k0, k1, n_draws, state, cache), repeat)
    t_fold = _timed(lambda: simulate(prob, n_particles, 4.0, 7, chunk_size=n_particles), repeat)
    t_unf = _timed(lambda: unfolded_reference_run(prob, n_particles, 4.0, 7, chunk_size=n_particles), repeat)
    return {
        "backend": "numba" if USE_NUMBA else "python",
        "philox_draws_per_s": n_draws / t_rng,
        "folded_particles_per_s": n_particles / t_fold,
        "unfolded_particles_per_s": n_particles / t_unf,
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mode", choices=("both", "self"), default="both")
    ap.add_argument("--draws", type=int, default=200_000)
    ap.add_argument("--particles", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    if args.mode == "self":
        print(json.dumps(run_benchmarks(args.draws, args.particles, args.repeat)))
        return 0

    rows = []
    for flag in ("0", "1"):
        env = dict(os.environ, SLABRT_DISABLE_JIT=flag)
        cmd = [sys.executable, __file__, "--mode", "self", "--draws", str(args.draws),
               "--particles", str(args.particles), "--repeat", str(args.repeat)]
        out = subprocess.run(cmd, env=env, capture_output=True, text=True)
        if out.returncode != 0:
            sys.stderr.write(out.stderr)
            return out.returncode
        rows.append(json.loads(out.stdout.strip().splitlines()[-1]))

    keys = [k for k in rows[0] if k != "backend"]
    print(f"{'metric':28s}" + "".join(f"{r['backend']:>14s}" for r in rows) + f"{'speedup':>10s}")
    for k in keys:
        print(f"{k:28s}" + "".join(f"{r[k]:14.4g}" for r in rows) + f"{rows[0][k] / rows[1][k]:10.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
