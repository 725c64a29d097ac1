"""Pure-Python (numpy) versions of the hot kernels."""

import numpy as np


def hyp3f2_series(a, b, z, rtol=1e-14, max_terms=500):
    """Sum the 3F2 series for every entry of ``z``.

    Parameters
    ----------
    a : sequence of 3 complex
        Numerator parameters.
    b : sequence of 2 complex
        Denominator parameters.
    z : ndarray of complex
        Arguments, all with ``|z| < 1`` (or a terminating series).
    rtol : float
        Stop once the last term is below ``rtol`` times the partial sum.
    max_terms : int
        Hard cap on the number of terms.

    Returns
    -------
    values : ndarray of complex
    nterms : ndarray of int
        Terms used per entry; ``-1`` flags non-convergence.
    """
    z = np.asarray(z, dtype=complex).ravel()
    a1, a2, a3 = (complex(v) for v in a)
    b1, b2 = (complex(v) for v in b)
    total = np.ones_like(z)
    term = np.ones_like(z)
    nterms = np.full(z.shape, -1, dtype=np.int64)
    active = np.ones(z.shape, dtype=bool)
    for n in range(max_terms):
        ratio = (a1 + n) * (a2 + n) * (a3 + n) / ((b1 + n) * (b2 + n) * (n + 1))
        term = np.where(active, term * ratio * z, 0.0)
        total = total + term
        small = np.abs(term) <= rtol * np.abs(total)
        # a vanishing ratio means the series terminated
        done = active & (small | (ratio == 0))
        nterms[done] = n + 1
        active &= ~done
        if not active.any():
            break
    return total, nterms


def apply_stencil_axis(values, weights, starts):
    """Apply per-row stencils along the last axis.

    Parameters
    ----------
    values : ndarray, shape (m, n), float
    weights : ndarray, shape (n, w), float
        Stencil weights for output node ``i``.
    starts : ndarray, shape (n,), int
        First input node of the stencil for output node ``i``.

    Returns
    -------
    ndarray, shape (m, n)
    """
    w = weights.shape[1]
    idx = starts[:, None] + np.arange(w)[None, :]
    return np.einsum("mnk,nk->mn", values[:, idx], weights)
