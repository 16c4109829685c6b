"""Compare the numba and numpy versions of the hot kernels.

Usage::

    python benchmarks/bench_kernels.py [--points 200000] [--repeat 5]

Prints best-of-``repeat`` wall times per kernel and the largest relative
difference between the two backends.  A full energy integral is timed in
two subprocesses, one per value of ``GROMOVDISC_NUMBA``.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from gromovdisc import _accel


def best_of(fn, repeat: int) -> float:
    fn()  # warm-up, includes jit compilation
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def rel_diff(a: np.ndarray, b: np.ndarray) -> float:
    scale = np.maximum(np.abs(a), 1e-300)
    return float(np.max(np.abs(a - b) / scale))


def kernel_table(n: int, repeat: int, seed: int) -> list[tuple[str, float, float, float]]:
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n) + 1j * rng.uniform(0.01, 2.0, n)
    num = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    den = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    nums = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    dens = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    cases = [
        ("horner", lambda: _accel._horner_numba(num, z)[0], lambda: _accel._horner_numpy(num, z)[0]),
        ("density_cp1", lambda: _accel._density_cp1_numba(num, den, z), lambda: _accel._density_cp1_numpy(num, den, z)),
        (
            "density_linear",
            lambda: _accel._density_linear_numba(nums, dens, z),
            lambda: _accel._density_linear_numpy(nums, dens, z),
        ),
    ]
    rows = []
    for name, fast, slow in cases:
        t_nb = best_of(fast, repeat)
        t_np = best_of(slow, repeat)
        rows.append((name, t_nb, t_np, rel_diff(fast(), slow())))
    return rows


_ENERGY_SNIPPET = """
import time
from gromovdisc.holomap import builtin_corpus
from gromovdisc.quadrature import energy
m = builtin_corpus()["sphere-bubble"].at(1000)
energy(m)
t0 = time.perf_counter()
q = energy(m)
print(time.perf_counter() - t0, q.value)
"""


def energy_timing(flag: str) -> tuple[float, float]:
    env = dict(os.environ, GROMOVDISC_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", _ENERGY_SNIPPET], env=env, capture_output=True, text=True, check=True)
    t, v = out.stdout.split()
    return float(t), float(v)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--skip-energy", action="store_true")
    args = ap.parse_args()

    if not _accel.NUMBA_AVAILABLE:
        sys.exit("numba is not importable; nothing to compare")
    print(f"{'kernel':<16}{'numba [s]':>12}{'numpy [s]':>12}{'speed-up':>10}{'max rel diff':>15}")
    for name, t_nb, t_np, d in kernel_table(args.points, args.repeat, args.seed):
        print(f"{name:<16}{t_nb:>12.4g}{t_np:>12.4g}{t_np / t_nb:>10.2f}{d:>15.3g}")
    if not args.skip_energy:
        t1, v1 = energy_timing("1")
        t0, v0 = energy_timing("0")
        print(f"{'energy (full)':<16}{t1:>12.4g}{t0:>12.4g}{t0 / t1:>10.2f}{abs(v1 - v0) / abs(v0):>15.3g}")


if __name__ == "__main__":
    main()
