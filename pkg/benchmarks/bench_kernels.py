"""Benchmark the jitted kernels against their plain-numpy references.

Run as `python3 benchmarks/bench_kernels.py`. The jitted bindings and
the `_np` references live side by side in the same process, so the
comparison needs no environment juggling; an optional end-to-end solver
timing runs each backend in a subprocess with LBREG_DISABLE_NUMBA set
accordingly.
"""

import argparse
import os
import subprocess
import sys
import timeit
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from lbreg import _kernels  # noqa: E402
from lbreg._rng import philox, raw_words  # noqa: E402

SOLVE_SNIPPET = """
import time
from lbreg.harness import SignalSpec, gen_gaussian_matrix, gen_signal
from lbreg.models import DenseVectorOp, Model
from lbreg.solvers import SolverOptions, lbreg_bb
from lbreg import _kernels

_kernels.warmup()
x0 = gen_signal(SignalSpec(n=512, k=50, kind="gaussian", seed=1))
A = gen_gaussian_matrix(256, 512, seed=2)
model = Model(DenseVectorOp(A), A @ x0, 10.0)
start = time.perf_counter()
trace = lbreg_bb(model, SolverOptions(tol=1e-6, max_iter=50000,
                                      record_iterates=False))
elapsed = time.perf_counter() - start
print(f"{_kernels.kernel_backend()} {trace.status} "
      f"{trace.iterations} {elapsed:.4f}")
"""


def time_pair(label, jitted, reference, args, repeat=5, number=20):
    fast = min(timeit.repeat(lambda: jitted(*args), repeat=repeat,
                             number=number)) / number
    slow = min(timeit.repeat(lambda: reference(*args), repeat=repeat,
                             number=number)) / number
    ratio = slow / fast if fast > 0 else float("inf")
    print(f"{label:22s} numba {fast * 1e6:10.1f} us   "
          f"numpy {slow * 1e6:10.1f} us   speedup {ratio:5.2f}x")


def bench_kernels():
    print(f"active backend: {_kernels.kernel_backend()}")
    _kernels.warmup()
    gen = np.random.Generator(np.random.Philox(0))

    v = gen.standard_normal(1_000_000) * 2.0
    time_pair("shrink 1e6", _kernels.shrink_vec, _kernels.shrink_vec_np,
              (v, 1.0))

    m, n = 256, 512
    A = np.ascontiguousarray(gen.standard_normal((m, n)))
    At = np.ascontiguousarray(A.T)
    b = gen.standard_normal(m)
    y = gen.standard_normal(m)
    time_pair(f"dense_point {m}x{n}", _kernels.dense_point,
              _kernels.dense_point_np, (A, At, b, y, 10.0))
    time_pair(f"dual_objective {m}x{n}", _kernels.dual_objective_dense,
              _kernels.dual_objective_dense_np, (At, b, y, 10.0))

    d = gen.standard_normal(512)
    vv = gen.uniform(-1.5, 1.5, size=512)
    time_pair("kick_jump 512", _kernels.kick_jump, _kernels.kick_jump_np,
              (vv, d, 1e-3))

    pg = philox(1)
    w = raw_words(pg, 1_000_000).reshape(500_000, 2)
    w1 = np.ascontiguousarray(w[:, 0])
    w2 = np.ascontiguousarray(w[:, 1])
    time_pair("box_muller 5e5 pairs", _kernels.box_muller,
              _kernels.box_muller_np, (w1, w2))


def bench_solver():
    print("\nend-to-end BB solve, 256x512, k=50 gaussian signal:")
    src = str(Path(__file__).resolve().parents[1] / "src")
    for flag in ("0", "1"):
        env = dict(os.environ, LBREG_DISABLE_NUMBA=flag,
                   PYTHONPATH=src + os.pathsep
                   + os.environ.get("PYTHONPATH", ""))
        proc = subprocess.run([sys.executable, "-c", SOLVE_SNIPPET],
                              env=env, capture_output=True, text=True)
        if proc.returncode != 0:
            print(f"  backend run failed: {proc.stderr.strip()}")
            continue
        backend, status, iters, secs = proc.stdout.split()
        print(f"  {backend:6s} {status} in {iters} iterations, {secs}s")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--skip-solver", action="store_true",
                        help="kernel microbenchmarks only")
    opts = parser.parse_args()
    bench_kernels()
    if not opts.skip_solver:
        bench_solver()


if __name__ == "__main__":
    main()
