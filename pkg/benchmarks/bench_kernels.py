#!/usr/bin/env python3
"""Benchmark the compiled RK4 kernel against the pure-NumPy fallback.

Usage: python benchmarks/bench_kernels.py [--steps 500] [--batch 32]
"""

import argparse
import math
import time

import numpy as np

from annealml.dynamics import AnnealSchedule, _stage_coefficients
from annealml.kernels import available_backends, get_backend


def run_once(backend, dim, batch, ax, bz, dt):
    psi = np.full((dim, batch), 1.0 / math.sqrt(dim), dtype=np.complex128)
    diag = np.ascontiguousarray(
        np.random.default_rng(0).normal(size=(dim, batch))
    )
    norms = np.empty(batch)
    start = time.perf_counter()
    bad = backend.rk4_evolve_batch(psi, diag, ax, bz, dt, norms)
    elapsed = time.perf_counter() - start
    assert bad == -1
    return elapsed, psi


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=500)
    parser.add_argument("--batch", type=int, default=32)
    args = parser.parse_args()

    schedule = AnnealSchedule.linear()
    ax, bz = _stage_coefficients(schedule, args.steps, 1.0)
    dt = 2.0 / args.steps

    names = available_backends()
    print(f"backends: {', '.join(names)}   "
          f"(steps={args.steps}, batch={args.batch})")
    header = f"{'n_qubits':>8} " + "".join(f"{n:>14}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print(header)

    for n_qubits in (6, 8, 10, 12):
        dim = 1 << n_qubits
        times = []
        states = []
        for name in names:
            elapsed, psi = run_once(get_backend(name), dim, args.batch, ax, bz, dt)
            times.append(elapsed)
            states.append(psi)
        if len(states) == 2:
            drift = np.max(np.abs(states[0] - states[1]))
            assert drift < 1e-12, f"backend mismatch: {drift}"
        row = f"{n_qubits:>8} " + "".join(
            f"{t / args.batch * 1e3:>11.2f} ms" for t in times
        )
        if len(times) == 2:
            row += f"{times[1] / times[0]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
