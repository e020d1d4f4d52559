"""Time the numba kernels against their numpy references.

Usage: python3 benchmarks/bench_kernels.py [--repeat 5] [--csv out.csv]
"""
import argparse
import csv
import sys
import timeit

import numpy as np

from lqdissip import _accel
from lqdissip.models import build_transport
from lqdissip.simulate import zoh_matrices


def cases(rng):
    b = build_transport(200)
    phi, gam = (np.ascontiguousarray(a) for a in zoh_matrices(b.sys.A, b.sys.B, 1e-3))
    x0 = np.sin(np.pi * (np.arange(200) + 0.5) / 200)
    v = np.zeros((2001, 1))
    z = rng.standard_normal((20001, 3))
    M = np.diag([2.0, 1.0, -1.0])
    grid = np.linspace(0, 1, 3201)
    vals = np.sin(np.pi * grid)
    ut = np.linspace(0, 2, 8001)
    uv = np.cos(ut)
    xi = (np.arange(400) + 0.5) / 400
    return [
        ("rollout n=200 steps=2000", _accel.rollout_numpy, _accel._rollout_jit, (phi, gam, x0, v)),
        ("quadform_trapz 20001x3", _accel.quadform_trapz_numpy, _accel._quadform_trapz_jit, (z, M, 1e-4)),
        ("sample_shift 400 points", _accel.sample_shift_numpy, _accel._sample_shift_jit,
         (grid, vals, ut, uv, xi, 0.3)),
    ]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--csv")
    args = p.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        print("numba unavailable or disabled; only the numpy path can be timed", file=sys.stderr)
    rows = []
    for name, ref, jit, call_args in cases(np.random.default_rng(0)):
        t_np = min(timeit.repeat(lambda: ref(*call_args), number=1, repeat=args.repeat))
        if _accel.HAVE_NUMBA:
            jit(*call_args)  # compile outside the timing
            t_nb = min(timeit.repeat(lambda: jit(*call_args), number=1, repeat=args.repeat))
            diff = float(np.max(np.abs(np.asarray(ref(*call_args)) - np.asarray(jit(*call_args)))))
        else:
            t_nb, diff = float("nan"), float("nan")
        rows.append((name, t_np, t_nb, t_np / t_nb, diff))
        print(f"{name:28s} numpy {t_np * 1e3:9.3f} ms  numba {t_nb * 1e3:9.3f} ms  "
              f"speedup {t_np / t_nb:6.1f}x  max|diff| {diff:.1e}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["kernel", "numpy_s", "numba_s", "speedup", "max_abs_diff"])
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
