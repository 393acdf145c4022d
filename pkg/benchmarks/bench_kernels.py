"""Time the numba kernels against the pure-numpy fallback.

Run: python3 benchmarks/bench_kernels.py [--points 20001] [--repeats 3]

The numpy column comes from a child process started with
DIRACWEYL_DISABLE_NUMBA=1, so every helper (expm, Van Loan, ...) runs as
plain Python there. Outputs of the two backends are compared entrywise,
relative to the largest entry.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from diracweyl import _kernels, backend
from diracweyl.core import SignatureLayout, uniform_grid
from diracweyl.gbdt import alpha_from_identity, make_gbdt, split_frame


def best_of(fn, args, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(points):
    rng = np.random.default_rng(7)
    m1, m2, n = 2, 1, 3
    S = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    sigma0 = S @ S.conj().T + n * np.eye(n)
    t1 = 0.5 * (rng.normal(size=(n, m1)) + 1j * rng.normal(size=(n, m1)))
    t2 = 0.5 * (rng.normal(size=(n, m2)) + 1j * rng.normal(size=(n, m2)))
    params = make_gbdt(SignatureLayout(m1, m2), alpha_from_identity(sigma0, t1, t2), sigma0, t1, t2)
    xs = uniform_grid(10.0, 10.0 / (points - 1))
    pot_args = (xs, *split_frame(params), 0.5 / (1 + np.linalg.norm(params.alpha, 2)))
    vs = _kernels.gbdt_potential_kernel(*pot_args)
    M = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    return {
        "expm 6x6": (_kernels.expm_kernel, (M,)),
        f"potential ({points} pts)": (_kernels.gbdt_potential_kernel, pot_args),
        f"propagate ({points} pts)": (_kernels.propagate_kernel, (xs, vs, 1.0 + 2.0j, m1, m2)),
    }


def measure(points, repeats):
    """{case: (seconds, flattened output)} for the backend of this process."""
    out = {}
    for name, (fn, fargs) in cases(points).items():
        fn(*fargs)  # compile outside the timed region
        t, res = best_of(fn, fargs, repeats)
        res = res if isinstance(res, tuple) else (res,)
        flat = np.concatenate([np.ravel(r) for r in res])
        out[name] = (t, [[c.real, c.imag] for c in flat.astype(complex)])
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=20001)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.child:
        json.dump(measure(args.points, args.repeats), sys.stdout)
        return

    fast = measure(args.points, args.repeats)
    env = dict(os.environ, DIRACWEYL_DISABLE_NUMBA="1")
    proc = subprocess.run([sys.executable, __file__, "--child", "--points", str(args.points),
                           "--repeats", str(args.repeats)], env=env, capture_output=True,
                          text=True, check=True)
    slow = json.loads(proc.stdout)

    print(f"backend: {backend()} vs numpy")
    print(f"{'kernel':<26}{backend() + ' [s]':>14}{'numpy [s]':>14}{'speedup':>10}{'rel diff':>12}")
    for name, (t_fast, a) in fast.items():
        t_slow, b = slow[name]
        a, b = np.asarray(a), np.asarray(b)
        diff = float(np.max(np.abs(a - b)) / max(np.max(np.abs(a)), 1e-300))
        print(f"{name:<26}{t_fast:>14.4f}{t_slow:>14.4f}{t_slow / t_fast:>10.1f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
