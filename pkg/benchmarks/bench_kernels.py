"""Time the compiled kernels against their pure-Python twins.

    python benchmarks/bench_kernels.py [--repeat N]

Prints one line per kernel with the median time of each backend and the
speedup.  Both backends are checked to agree before timing.
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from tracepoly import _pykernels

try:
    from tracepoly import _core
except ImportError:
    _core = None


def _time(fn, repeat: int) -> float:
    runs = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        runs.append(time.perf_counter() - t0)
    return statistics.median(runs)


def _cases(rng: np.random.Generator):
    A = rng.normal(size=(8, 8))
    sym = A + A.T
    yield "jacobi_eigh 8x8", "jacobi_eigh", (sym,), lambda a, b: np.allclose(a[0], b[0], atol=1e-10)

    lam = np.array([0.2, 0.3, 0.5 - 1e-7])
    lam = lam / lam.sum()
    yield (
        "scan_denominators 3 weights",
        "scan_denominators",
        (lam, 0.5, 1e-5, 1, 10**6),
        lambda a, b: a[0] == b[0] and np.array_equal(a[1], b[1]),
    )

    exps = rng.integers(0, 4, size=(30, 6)).astype(np.int64)
    coeffs = rng.normal(size=30)
    pts = rng.normal(size=(20_000, 6))
    yield "eval_points 30 terms x 20k", "eval_points", (exps, coeffs, pts), lambda a, b: np.allclose(a, b)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=7)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if _core is None:
        print("compiled extension not built; only the Python backend is available")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':32s} {'python':>12s} {'cython':>12s} {'speedup':>8s}")
    for label, name, inputs, same in _cases(rng):
        py = getattr(_pykernels, name)
        t_py = _time(lambda: py(*inputs), args.repeat)
        if _core is None:
            print(f"{label:32s} {t_py * 1e3:10.3f}ms {'-':>12s} {'-':>8s}")
            continue
        cy = getattr(_core, name)
        if not same(py(*inputs), cy(*inputs)):
            print(f"{label}: backends disagree")
            return 1
        t_cy = _time(lambda: cy(*inputs), args.repeat)
        print(f"{label:32s} {t_py * 1e3:10.3f}ms {t_cy * 1e3:10.3f}ms {t_py / t_cy:7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
