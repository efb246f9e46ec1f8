"""float64 batch evaluation of the weight-k series and its z-derivatives.

Used for bulk sampling along curves (argument tracking, locus tracing,
boundary tables) where per-sample certified evaluation would dominate the
runtime.  Every batch can report a conservative error estimate combining
the series tail at the least imaginary part with a cancellation-aware
rounding term; callers fall back to the certified mpmath path whenever a
value is not clearly separated from that estimate.

Valid only for Im z >= im_min (default 0.78, below the fundamental-domain
arc minus detour slack); points below that must use eiscrit.series.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from . import kernels
from .exact import fourier_prefactor, sigma_table
from .types import DomainError

_EPS64 = 2.0 ** -52
_LOG_FLOAT_MAX = math.log(1e300)


class FastSeries:
    """Fourier coefficient tables for one weight, orders r = 0, 1, 2."""

    def __init__(self, k: int, im_min: float = 0.78):
        if k % 2 != 0 or k < 2:
            raise DomainError(f"FastSeries requires even k >= 2, got {k}")
        if im_min < 0.5:
            raise DomainError("float64 fast path needs im_min >= 0.5")
        self.k = k
        self.im_min = im_min
        pref = fourier_prefactor(k)
        logq0 = -2 * math.pi * im_min

        # series length: continue past the envelope peak until terms are
        # negligible relative to the peak, capping before float64 overflow
        p = k + 1  # envelope power covering sigma growth and one 2*pi*n factor
        logpeak = 0.0
        n = 1
        while True:
            logterm = p * math.log(n) + n * logq0
            logpeak = max(logpeak, logterm)
            if logterm < logpeak - 46 * math.log(10) and n > -p / logq0:
                break
            if p * math.log(n + 1) > _LOG_FLOAT_MAX:
                break
            if n > 5000:
                break
            n += 1

        sig = sigma_table(n, k - 1)
        a = np.zeros(n + 1, dtype=np.complex128)
        a[0] = 1.0
        for i in range(1, n + 1):
            try:
                a[i] = float(pref * sig[i - 1])
            except OverflowError:
                n = i - 1
                a = a[:n + 1]
                break
        self.n_terms = n
        ns = np.arange(n + 1, dtype=np.float64)
        tpin = 2j * np.pi * ns
        self._coef = {0: a, 1: a * tpin, 2: a * tpin ** 2}
        self._coef_abs = {r: np.abs(c) for r, c in self._coef.items()}
        # dominator constants for the analytic tail past n_terms
        # (math.log accepts arbitrarily large ints, so no float overflow here)
        log_abs_pref = math.log(abs(pref.numerator)) - math.log(pref.denominator)
        self._dom_logK = {r: math.log(2.0) + log_abs_pref + r * math.log(2 * math.pi)
                          for r in (0, 1, 2)}
        self._dom_p = {r: (k - 1 if k >= 3 else 2) + r for r in (0, 1, 2)}

    def _q(self, zs: np.ndarray) -> np.ndarray:
        zs = np.asarray(zs, dtype=np.complex128)
        if zs.ndim == 0:
            zs = zs[None]
        if np.any(zs.imag < self.im_min - 1e-12):
            raise DomainError(
                f"fast path valid for Im z >= {self.im_min}, got {zs.imag.min():.4f}")
        return np.exp(2j * np.pi * zs)

    def ek(self, zs, r: int = 0) -> np.ndarray:
        """E_k^{(r)} at an array of points (r = 0, 1, 2)."""
        q = self._q(zs)
        return kernels.horner(self._coef[r], q)

    def ek_with_err(self, zs, r: int = 0):
        """Values plus a conservative per-point error estimate."""
        q = self._q(zs)
        vals = kernels.horner(self._coef[r], q)
        mass = kernels.horner_abs(self._coef_abs[r], np.abs(q))
        nn = self.n_terms + 1
        logtail = (self._dom_logK[r] + self._dom_p[r] * math.log(nn)
                   + nn * np.log(np.abs(q)))
        tail = 2.0 * np.exp(np.maximum(logtail, -700.0))
        errs = 8.0 * _EPS64 * mass + tail
        return vals, errs

    def phi_values(self, zs) -> np.ndarray:
        """z + k E/E' at an array of points (no pole handling)."""
        zs = np.asarray(zs, dtype=np.complex128)
        q = self._q(zs)
        E = kernels.horner(self._coef[0], q)
        Ep = kernels.horner(self._coef[1], q)
        with np.errstate(divide="ignore", invalid="ignore"):
            return zs + self.k * E / Ep

    def phi_deriv(self, zs) -> np.ndarray:
        """phi' = ((k+1) E'^2 - k E E'') / E'^2."""
        q = self._q(zs)
        E = kernels.horner(self._coef[0], q)
        Ep = kernels.horner(self._coef[1], q)
        Epp = kernels.horner(self._coef[2], q)
        with np.errstate(divide="ignore", invalid="ignore"):
            return ((self.k + 1) * Ep * Ep - self.k * E * Epp) / (Ep * Ep)

    def fk_numerator(self, zs) -> np.ndarray:
        """(k+1) E'^2 - k E E'', the numerator of phi' (weight 2k+4 form)."""
        q = self._q(zs)
        E = kernels.horner(self._coef[0], q)
        Ep = kernels.horner(self._coef[1], q)
        Epp = kernels.horner(self._coef[2], q)
        return (self.k + 1) * Ep * Ep - self.k * E * Epp


@lru_cache(maxsize=None)
def get_fast(k: int, im_min: float = 0.78) -> FastSeries:
    return FastSeries(k, im_min)
