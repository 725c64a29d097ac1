"""Hot numerical kernels with a compiled core and a numpy fallback.

The compiled extension is used when it was built and importable; setting
``QESURF_PURE_PYTHON=1`` forces the fallback. ``BACKEND`` records the
choice made at import time.
"""

import os

import numpy as np

from . import _pykernels

_impl = _pykernels
BACKEND = "python"
if os.environ.get("QESURF_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels


def hyp3f2_series(a, b, z, rtol=1e-14, max_terms=500):
    """Batch 3F2 partial sums; see :func:`_pykernels.hyp3f2_series`."""
    return _impl.hyp3f2_series(a, b, z, rtol, max_terms)


def apply_stencil_axis(values, weights, starts):
    """Apply per-node stencils along the last axis.

    Works for float64 and long double data, real or complex; the weights
    are cast to the real dtype of ``values``.
    """
    values = np.asarray(values)
    shape = values.shape
    flat = values.reshape(-1, shape[-1])
    real = np.longdouble if flat.real.dtype == np.longdouble else np.float64
    weights = np.ascontiguousarray(weights, dtype=real)
    starts = np.ascontiguousarray(starts, dtype=np.int64)

    def run(part):
        return _impl.apply_stencil_axis(np.ascontiguousarray(part, dtype=real), weights, starts)

    if np.iscomplexobj(flat):
        out = run(flat.real) + 1j * run(flat.imag)
    else:
        out = run(flat)
    return out.reshape(shape)


__all__ = ["BACKEND", "hyp3f2_series", "apply_stencil_axis"]
