"""Benchmark the JIT-compiled integrator kernel against the numpy fallback.

Runs the full designed three-pulse sequence for one enantiomer on each
available backend, times repeated propagations after a warmup pass (the
first numba call pays the compilation cost), and checks that the two
kernels agree on the final state to machine precision.

Usage:
    python scripts/benchmark_backends.py [--tau0 NS] [--repeats N]

The active backend for normal runs is chosen by the ESST_BACKEND
environment variable (auto | numba | numpy); this script bypasses it and
exercises every backend that is importable.
"""

import argparse
import statistics
import time

import numpy as np

from esst import (
    DesignSpec,
    Handedness,
    available_backends,
    designed_pulses,
    get_preset,
    norm_drift,
    propagate,
)


def time_backend(molecule, pulses, levels, backend, repeats):
    """Median wall time per trajectory, after one untimed warmup."""
    run = lambda: propagate(
        molecule, pulses, Handedness.LEFT, levels=levels, backend=backend
    )
    traj = run()  # warmup: JIT compilation / cache priming
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        traj = run()
        samples.append(time.perf_counter() - start)
    return statistics.median(samples), traj


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--tau0", type=float, default=35.0,
        help="pulse duration parameter in ns (default: 35)",
    )
    parser.add_argument(
        "--repeats", type=int, default=3,
        help="timed repetitions per backend (default: 3)",
    )
    args = parser.parse_args()

    backends = available_backends()
    if "numba" not in backends:
        print("numba not importable - timing the numpy fallback only")

    molecule = get_preset("cyclohexylmethanol")
    spec = DesignSpec(target="C", tau0=args.tau0)
    pulses = designed_pulses(molecule, spec)

    print(f"workload: designed 3-pulse sequence, tau0 = {args.tau0:g} ns")
    print(f"{'levels':>6} {'backend':>8} {'steps':>9} {'time/run':>10} "
          f"{'speedup':>8}")
    for levels in (3, 4):
        finals = {}
        baseline = None
        for backend in backends[::-1]:  # numpy first so speedup is vs numpy
            elapsed, traj = time_backend(
                molecule, pulses, levels, backend, args.repeats
            )
            finals[backend] = traj.final_state
            if backend == "numpy":
                baseline = elapsed
            speedup = f"{baseline / elapsed:7.2f}x" if baseline else "     n/a"
            print(f"{levels:>6} {backend:>8} {traj.grid.n_steps:>9} "
                  f"{elapsed * 1e3:>8.1f}ms {speedup}")
            if norm_drift(traj) > 1e-8:
                raise SystemExit(f"norm drift guard tripped on {backend}")
        if len(finals) == 2:
            gap = float(np.max(np.abs(finals["numba"] - finals["numpy"])))
            print(f"{'':>6} backend agreement: max |dpsi| = {gap:.2e}")
            if gap > 1e-12:
                raise SystemExit("backends disagree beyond 1e-12")


if __name__ == "__main__":
    main()
