"""Truncated lattice-sum oracles, independent of the q-expansion route.

Both sums are organized by rows of constant c.  Within a row the window of
d values is centered on the real part of -c z and truncated with an
integral-comparison bound; whole rows beyond the cutoff are bounded through
geometric domination of the row values, valid once c Im(z) is large enough.
Values are accumulated in float64 (numpy or numba kernels); the returned
tail bound includes truncation and a float rounding allowance.
"""
from __future__ import annotations

import math

import mpmath as mp

from . import kernels
from .types import (DEFAULT_BUDGET, CertificationError, DomainError, EvalBudget,
                    EvalResult, HalfPlanePoint)

_EPS64 = 2.0 ** -52


def _coerce(z) -> complex:
    if isinstance(z, HalfPlanePoint):
        return z.as_complex()
    zc = complex(z)
    if not zc.imag > 0:
        raise DomainError("lattice sums require Im z > 0")
    return zc


def _row_window(c: int, z: complex, s: int, per_row_tail: float) -> tuple[int, int, float]:
    """d-window [lo, hi] and certified tail for sum_d |cz+d|^{-s} outside it."""
    x = -c * z.real
    # outside a half-width D, |cz + d| >= D - 1/2, so the remainder is below
    # 2 * integral_{D-3/2}^inf t^{-s} dt = 2 (D-3/2)^{1-s} / (s-1)
    D = (2.0 / ((s - 1) * max(per_row_tail, 1e-300))) ** (1.0 / (s - 1)) + 2.0
    D = max(D, 4.0 * (1.0 + c * z.imag))
    if D > 5e7:
        raise CertificationError(
            f"lattice row window {D:.1e} for c={c} beyond practical budget")
    Di = int(math.ceil(D))
    lo, hi = round(x) - Di, round(x) + Di
    tail = 2.0 * (Di - 1.5) ** (1 - s) / (s - 1)
    return lo, hi, tail


def _row_bound_scale(s: int, ct: float) -> float:
    """Bound |sum_d (w+d)^{-s}| <= scale * e^{-2 pi ct}, needs 2^s e^{-2 pi ct} < 1/2.

    Certificate from the exponential-sum form of the row: the row equals
    (+-)(2 pi)^s/(s-1)! * sum_n n^{s-1} x^n with x = e^{2 pi i c z}, whose
    terms are geometrically dominated under the stated condition.
    """
    if 2.0 ** s * math.exp(-2 * math.pi * ct) >= 0.5:
        return math.inf
    log_scale = s * math.log(2 * math.pi) - math.lgamma(s)
    return 2.0 * math.exp(log_scale)


# float64 oracle: a tighter default target than the 128-bit series budget
LATTICE_BUDGET = EvalBudget(working_precision_bits=53, target_abs_error=1e-10,
                            max_terms=20_000_000)


def eval_hk_lattice(k: int, z, budget: EvalBudget | None = None) -> EvalResult:
    """Oracle for eval_hk via the double sum (2 pi)^{-k-1} k! sum_c sum_d c ((cz+d)/i)^{-k-1}."""
    if k < 2:
        raise DomainError(f"eval_hk_lattice requires k >= 2, got {k}")
    budget = budget or LATTICE_BUDGET
    zc = _coerce(z)
    s = k + 1
    t = zc.imag
    eps = budget.target_abs_error
    log_pref = math.lgamma(k + 1) - s * math.log(2 * math.pi)
    pref = math.exp(log_pref) if log_pref < 700 else math.inf
    if not math.isfinite(pref):
        raise CertificationError(f"float64 lattice oracle overflows for k={k}")

    # choose the row cutoff so the certified row-tail is below eps/4
    c_min = int(math.ceil((s * math.log(2) + math.log(2)) / (2 * math.pi * t)))
    x = math.exp(-2 * math.pi * t)
    C = max(c_min, 2)
    while True:
        scale = _row_bound_scale(s, (C + 1) * t)
        # sum_{c>C} c x^c <= x^{C+1}(C+2)/(1-x)^2
        ctail = pref * scale * x ** (C + 1) * (C + 2) / (1 - x) ** 2
        if ctail <= eps / 4 or C > 10_000:
            break
        C += 1
    if ctail > eps / 4:
        raise CertificationError(f"lattice row cutoff cannot meet target {eps:.3e}")

    total = 0.0 + 0.0j
    mass = 0.0
    dtail = 0.0
    nterms = 0
    per_row = eps / (4 * pref * C * max(C, 1))  # tail alloc per row, before c factor
    rot = 1j ** (s % 4)  # ((cz+d)/i)^{-s} = i^s (cz+d)^{-s}
    for c in range(1, C + 1):
        lo, hi, rtail = _row_window(c, zc, s, per_row)
        w0 = complex(c * zc.real, c * zc.imag)
        row, rmass = kernels.lattice_row(w0, lo, hi, s)
        total += c * rot * row
        mass += c * rmass
        dtail += pref * c * rtail
        nterms += hi - lo + 1
    value = pref * total
    rounding = 8.0 * _EPS64 * pref * mass * math.log2(max(nterms, 2))
    tail = ctail + dtail + rounding
    if tail > eps:
        raise CertificationError(
            f"lattice certificate {tail:.3e} exceeds target {eps:.3e}",
            best=EvalResult(mp.mpc(value), tail, nterms))
    return EvalResult(mp.mpc(value), tail, nterms)


def eval_Gk_lattice(k: int, z, budget: EvalBudget | None = None) -> EvalResult:
    """Oracle for 2 zeta(k) E_k via the sum of (cz+d)^{-k} over (c,d) != (0,0)."""
    if k % 2 != 0 or k < 4:
        raise DomainError(f"eval_Gk_lattice requires even k >= 4, got {k}")
    budget = budget or LATTICE_BUDGET
    zc = _coerce(z)
    t = zc.imag
    eps = budget.target_abs_error

    c_min = int(math.ceil((k * math.log(2) + math.log(2)) / (2 * math.pi * t)))
    x = math.exp(-2 * math.pi * t)
    C = max(c_min, 2)
    while True:
        scale = _row_bound_scale(k, (C + 1) * t)
        ctail = 2.0 * scale * x ** (C + 1) / (1 - x)
        if ctail <= eps / 4 or C > 10_000:
            break
        C += 1
    if ctail > eps / 4:
        raise CertificationError(f"lattice row cutoff cannot meet target {eps:.3e}")

    # c = 0 row: 2 zeta(k), summed directly with an integral tail
    total = 0.0 + 0.0j
    mass = 0.0
    dtail = 0.0
    nterms = 0
    per_row = eps / (8 * max(C, 1))
    Dz = int(math.ceil((2.0 / ((k - 1) * per_row)) ** (1.0 / (k - 1)))) + 2
    dsum = sum(2.0 * d ** (-k) for d in range(1, Dz + 1))
    total += dsum
    mass += dsum
    dtail += 2.0 * (Dz - 0.5) ** (1 - k) / (k - 1)
    nterms += 2 * Dz
    # c >= 1 rows, doubled by the (c,d) -> (-c,-d) symmetry (k even)
    for c in range(1, C + 1):
        lo, hi, rtail = _row_window(c, zc, k, per_row)
        w0 = complex(c * zc.real, c * zc.imag)
        row, rmass = kernels.lattice_row(w0, lo, hi, k)
        total += 2.0 * row
        mass += 2.0 * rmass
        dtail += 2.0 * rtail
        nterms += hi - lo + 1
    rounding = 8.0 * _EPS64 * mass * math.log2(max(nterms, 2))
    tail = ctail + dtail + rounding
    if tail > eps:
        raise CertificationError(
            f"lattice certificate {tail:.3e} exceeds target {eps:.3e}",
            best=EvalResult(mp.mpc(total), tail, nterms))
    return EvalResult(mp.mpc(total), tail, nterms)
