"""float64 hot kernels: batched Horner evaluation and lattice row sums.

Each kernel has a numba @njit build and a pure-numpy fallback.  Selection:
the environment variable EISCRIT_NO_NUMBA=1 forces the numpy path; if numba
is unavailable the fallback is used silently.  `IMPL` records the choice.
"""
from __future__ import annotations

import os

import numpy as np

_FORCE_NUMPY = os.environ.get("EISCRIT_NO_NUMBA", "").strip() in ("1", "true", "yes")

try:
    if _FORCE_NUMPY:
        raise ImportError("numba disabled by EISCRIT_NO_NUMBA")
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:
    njit = None
    _HAVE_NUMBA = False


# ---------------------------------------------------------------- numpy path

def horner_numpy(coef: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Evaluate sum_n coef[n] * q**n at each q (coef[0] is the constant)."""
    out = np.zeros_like(q)
    for c in coef[::-1]:
        out = out * q + c
    return out


def horner_abs_numpy(coef_abs: np.ndarray, absq: np.ndarray) -> np.ndarray:
    """Accumulated absolute mass sum_n |coef[n]| |q|**n, for error estimates."""
    out = np.zeros_like(absq)
    for c in coef_abs[::-1]:
        out = out * absq + c
    return out


def lattice_row_numpy(w0: complex, d_lo: int, d_hi: int, s: int):
    """sum_{d=d_lo..d_hi} (w0 + d)^(-s) and the corresponding absolute mass."""
    ds = np.arange(d_lo, d_hi + 1, dtype=np.float64)
    t = (w0 + ds) ** (-s)
    return complex(t.sum()), float(np.abs(t).sum())


# ---------------------------------------------------------------- numba path

if _HAVE_NUMBA:

    @njit(cache=True)
    def _horner_nb(coef, q):  # pragma: no cover - exercised via wrapper
        out = np.zeros(q.shape[0], dtype=np.complex128)
        for j in range(q.shape[0]):
            acc = 0.0 + 0.0j
            for i in range(coef.shape[0] - 1, -1, -1):
                acc = acc * q[j] + coef[i]
            out[j] = acc
        return out

    @njit(cache=True)
    def _horner_abs_nb(coef_abs, absq):  # pragma: no cover
        out = np.zeros(absq.shape[0], dtype=np.float64)
        for j in range(absq.shape[0]):
            acc = 0.0
            for i in range(coef_abs.shape[0] - 1, -1, -1):
                acc = acc * absq[j] + coef_abs[i]
            out[j] = acc
        return out

    @njit(cache=True)
    def _lattice_row_nb(w0, d_lo, d_hi, s):  # pragma: no cover
        acc = 0.0 + 0.0j
        mass = 0.0
        for d in range(d_lo, d_hi + 1):
            t = (w0 + d) ** (-s)
            acc += t
            mass += abs(t)
        return acc, mass

    def horner_numba(coef, q):
        return _horner_nb(np.ascontiguousarray(coef, dtype=np.complex128),
                          np.ascontiguousarray(q, dtype=np.complex128))

    def horner_abs_numba(coef_abs, absq):
        return _horner_abs_nb(np.ascontiguousarray(coef_abs, dtype=np.float64),
                              np.ascontiguousarray(absq, dtype=np.float64))

    def lattice_row_numba(w0, d_lo, d_hi, s):
        acc, mass = _lattice_row_nb(complex(w0), int(d_lo), int(d_hi), int(s))
        return complex(acc), float(mass)

    horner = horner_numba
    horner_abs = horner_abs_numba
    lattice_row = lattice_row_numba
    IMPL = "numba"
else:
    horner = horner_numpy
    horner_abs = horner_abs_numpy
    lattice_row = lattice_row_numpy
    IMPL = "numpy"
