"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The backend is chosen once at import time from the ``CAUSALBANDITS_BACKEND``
environment variable (``numba`` or ``numpy``).  Unset, numba is used when it
imports cleanly.  Both implementations are exercised against each other in
the test suite and compared in ``benchmarks/kernel_bench.py``.
"""

from __future__ import annotations

import os

import numpy as np

_requested = os.environ.get("CAUSALBANDITS_BACKEND", "").strip().lower()
if _requested not in ("", "numba", "numpy"):
    raise ValueError(
        f"CAUSALBANDITS_BACKEND={_requested!r}: expected 'numba' or 'numpy'"
    )

_njit = None
if _requested in ("", "numba"):
    try:
        from numba import njit as _njit
    except ImportError:
        if _requested == "numba":
            raise
        _njit = None

_BACKEND = "numba" if _njit is not None else "numpy"


def active_backend() -> str:
    return _BACKEND


def _factorization_sum_py(keys, vals, prob):
    """Sum over enumerated assignments of the product of per-node conditionals.

    keys[j, e] indexes row e's conditioning cell for node j in the flat
    ``prob`` table; vals[j, e] is node j's value in assignment e.
    """
    n_nodes, n_enum = keys.shape
    total = 0.0
    for e in range(n_enum):
        term = 1.0
        for j in range(n_nodes):
            term *= prob[keys[j, e], vals[j, e]]
            if term == 0.0:
                break
        total += term
    return total


def _factorization_sum_np(keys, vals, prob):
    return float(prob[keys, vals].prod(axis=0).sum())


def _factorization_sum_batch_py(keys, vals, probs):
    """Batched variant: probs has a trailing slice axis, returns one sum per slice."""
    n_nodes, n_enum = keys.shape
    n_slices = probs.shape[2]
    out = np.zeros(n_slices)
    for s in range(n_slices):
        total = 0.0
        for e in range(n_enum):
            term = 1.0
            for j in range(n_nodes):
                term *= probs[keys[j, e], vals[j, e], s]
                if term == 0.0:
                    break
            total += term
        out[s] = total
    return out


def _factorization_sum_batch_np(keys, vals, probs):
    return probs[keys, vals, :].prod(axis=0).sum(axis=0)


if _BACKEND == "numba":
    factorization_sum = _njit(cache=True)(_factorization_sum_py)
    factorization_sum_batch = _njit(cache=True)(_factorization_sum_batch_py)
else:
    factorization_sum = _factorization_sum_np
    factorization_sum_batch = _factorization_sum_batch_np

# Reference implementations kept importable for cross-backend tests and the
# benchmark regardless of the active backend.
factorization_sum_numpy = _factorization_sum_np
factorization_sum_batch_numpy = _factorization_sum_batch_np
