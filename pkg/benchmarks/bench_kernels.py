"""Compare the compiled and the numpy kernels on representative workloads.

Run with ``python benchmarks/bench_kernels.py [--repeat N]``. Both backends
are imported directly, so the comparison does not depend on
``QESURF_PURE_PYTHON``. Outputs are also checked for agreement.
"""

import argparse
import timeit

import numpy as np

from qesurf.chart import stencil_table
from qesurf.kernels import _pykernels

try:
    from qesurf.kernels import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def _stencil_case(n_rows, n, precision="double"):
    dtype = np.longdouble if precision == "extended" else np.float64
    weights, starts = stencil_table(n, 2, 8, precision)
    rng = np.random.default_rng(0)
    values = rng.standard_normal((n_rows, n)).astype(dtype)
    return (np.ascontiguousarray(values), np.ascontiguousarray(weights, dtype=dtype),
            np.ascontiguousarray(starts, dtype=np.int64))


def _series_case(n):
    rng = np.random.default_rng(1)
    z = 0.9 * np.sqrt(rng.uniform(size=n)) * np.exp(2j * np.pi * rng.uniform(size=n))
    return (1.0, 1.0, 1.0), (2.0, 1.5), z


def _time(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not available; only the numpy backend can run")
    cases = [
        ("stencil d2, 129x129, double", "stencil", _stencil_case(129, 129)),
        ("stencil d2, 257x257, double", "stencil", _stencil_case(257, 257)),
        ("stencil d2, 129x129, extended", "stencil", _stencil_case(129, 129, "extended")),
        ("3F2 series, 10k points |z|<0.9", "series", _series_case(10_000)),
    ]
    print(f"{'case':36s} {'numpy [ms]':>11s} {'cython [ms]':>12s} {'speedup':>8s} {'max diff':>10s}")
    for label, kind, data in cases:
        if kind == "stencil":
            def py():
                return _pykernels.apply_stencil_axis(*data)

            def cy():
                return _ckernels.apply_stencil_axis(*data)
        else:
            a, b, z = data

            def py():
                return _pykernels.hyp3f2_series(a, b, z)[0]

            def cy():
                return _ckernels.hyp3f2_series(a, b, z)[0]
        tp = _time(py, args.repeat)
        if _ckernels is None:
            print(f"{label:36s} {1e3 * tp:11.2f} {'-':>12s}")
            continue
        tc = _time(cy, args.repeat)
        diff = float(np.max(np.abs(np.asarray(py()) - np.asarray(cy()))))
        print(f"{label:36s} {1e3 * tp:11.2f} {1e3 * tc:12.2f} {tp / tc:8.1f} {diff:10.1e}")


if __name__ == "__main__":
    main()
