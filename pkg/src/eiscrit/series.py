"""Certified q-expansion evaluators for the weight-k series and companions.

Evaluation happens in mpmath at the budget's working precision (plus guard
bits).  Truncation certificates follow a single rule: the terms of each
series are dominated by K * n^p * |q|^n, whose consecutive-term ratio
(1 + 1/n)^p |q| is decreasing in n; once that certified ratio drops below
1/2 the tail is geometrically dominated and bounded by twice the current
dominator.  A rounding allowance proportional to the accumulated absolute
mass is added on top, so the reported bound stays honest at the float level.
"""
from __future__ import annotations

import math
import threading

import mpmath as mp

from .exact import fourier_prefactor, sigma_table
from .types import (DEFAULT_BUDGET, CertificationError, DomainError, EvalBudget,
                    EvalResult, HalfPlanePoint)

_GUARD_BITS = 16

_lock = threading.Lock()
_sigma_mpf_cache: dict[tuple[int, int], list] = {}


def _sigma_mpfs(e: int, N: int, prec: int) -> list:
    """sigma_e(1..N) rounded to prec bits, cached (underlying values exact)."""
    with _lock:
        key = (e, prec)
        tab = _sigma_mpf_cache.get(key, [])
        if len(tab) < N:
            ints = sigma_table(N, e)
            with mp.workprec(prec):
                tab = tab + [mp.mpf(v) for v in ints[len(tab):N]]
            _sigma_mpf_cache[key] = tab
        return tab


class _SigmaCoeffs:
    """Growable view over the cached sigma_e table at one precision."""

    def __init__(self, e: int, prec: int, presize: int):
        self.e = e
        self.prec = prec
        self.tab = _sigma_mpfs(e, max(presize, 32), prec)

    def __call__(self, n: int):
        if n > len(self.tab):
            self.tab = _sigma_mpfs(self.e, max(2 * n, 64), self.prec)
        return self.tab[n - 1]


def _abs1(w) -> mp.mpf:
    # cheap norm upper bound, avoids a square root per term
    return abs(mp.re(w)) + abs(mp.im(w))


def _to_mpc(z):
    """Convert to mpc at the *current* working precision; validate domain."""
    if isinstance(z, HalfPlanePoint):
        return mp.mpc(z.re, z.im)
    return mp.mpc(z)


def _sum_series(coeff, dom_K, dom_p, prefactor, const_term, z,
                budget: EvalBudget) -> EvalResult:
    prec = budget.working_precision_bits + _GUARD_BITS
    with mp.workprec(prec):
        eps = mp.mpf(budget.target_abs_error)
        zv = _to_mpc(z)
        q = mp.expjpi(2 * zv)
        absq = abs(q)
        if not absq < 1:
            raise DomainError("evaluation point must have positive imaginary part")
        s = mp.mpc(0)
        qn = mp.mpc(1)
        abs_mass = mp.mpf(0)
        pref_mag = _abs1(prefactor)
        two = mp.mpf(2)
        n = 0
        tail = None
        dom = mp.inf
        rounding = mp.mpf(0)
        while n < budget.max_terms:
            n += 1
            qn = qn * q
            term = coeff(n) * qn
            s += term
            abs_mass += _abs1(term)
            dom = dom_K * mp.mpf(n) ** dom_p * absq ** n
            ratio = (1 + mp.mpf(1) / n) ** dom_p * absq
            rounding = (n + 4) * (abs_mass * pref_mag + _abs1(const_term)) * two ** (2 - prec)
            if ratio < 0.5:
                if 2 * dom + rounding <= eps:
                    tail = 2 * dom + rounding
                    break
                if dom < (abs_mass * pref_mag + _abs1(const_term)) * two ** (-prec - 8):
                    # below this precision's rounding floor; more terms cannot
                    # improve the certificate, report what was achieved
                    tail = 2 * dom + rounding
                    break
        value = prefactor * s + const_term
        if tail is None or tail > eps:
            achieved = float(tail if tail is not None else 2 * dom + rounding)
            raise CertificationError(
                f"series certificate {achieved:.3e} exceeds target {float(eps):.3e}",
                best=EvalResult(value, achieved, n))
        return EvalResult(value, float(tail), n)


def _nterms_hint(k: int, budget: EvalBudget) -> int:
    digits = max(10.0, -math.log10(budget.target_abs_error))
    return min(int(k + 3.3 * digits) + 32, budget.max_terms)


def eval_Ek(k: int, z, budget: EvalBudget = DEFAULT_BUDGET) -> EvalResult:
    """Certified value of the normalized weight-k series (k even >= 2)."""
    if k % 2 != 0 or k < 2:
        raise DomainError(f"eval_Ek requires even k >= 2, got {k}")
    return _eval_ek_family(k, z, 0, budget)


def eval_Ek_deriv(k: int, z, r: int = 1, budget: EvalBudget = DEFAULT_BUDGET) -> EvalResult:
    """Certified r-th z-derivative: each Fourier term picks up (2 pi i n)^r."""
    if k % 2 != 0 or k < 2:
        raise DomainError(f"eval_Ek_deriv requires even k >= 2, got {k}")
    if r < 1:
        raise DomainError("derivative order must be >= 1")
    return _eval_ek_family(k, z, r, budget)


def _eval_ek_family(k: int, z, r: int, budget: EvalBudget) -> EvalResult:
    prec = budget.working_precision_bits + _GUARD_BITS
    pref = fourier_prefactor(k)
    sig = _SigmaCoeffs(k - 1, prec, _nterms_hint(k, budget))
    with mp.workprec(prec):
        pref_mp = mp.mpf(pref.numerator) / pref.denominator
        if r > 0:
            pref_mp = pref_mp * (2j * mp.pi) ** r
            coeff = lambda n: sig(n) * n ** r
        else:
            coeff = sig
        # sigma_{k-1}(n) <= 2 n^{k-1} for k >= 3; sigma_1(n) <= n(1+ln n) <= n^2
        dom_p = (k - 1 if k >= 3 else 2) + r
        dom_K = 2 * _abs1(pref_mp)
        const = mp.mpf(1) if r == 0 else mp.mpf(0)
    return _sum_series(coeff, dom_K, dom_p, pref_mp, const, z, budget)


def eval_hk(k: int, z, budget: EvalBudget = DEFAULT_BUDGET) -> EvalResult:
    """Certified value of sum_n n^k q^n/(1-q^n)^2 = sum_n n sigma_{k-1}(n) q^n.

    Any integer k >= 2 is allowed; parity is unrestricted.
    """
    if k < 2:
        raise DomainError(f"eval_hk requires k >= 2, got {k}")
    prec = budget.working_precision_bits + _GUARD_BITS
    sig = _SigmaCoeffs(k - 1, prec, _nterms_hint(k, budget))
    coeff = lambda n: sig(n) * n
    with mp.workprec(prec):
        dom_K = mp.mpf(2)
        one = mp.mpf(1)
        zero = mp.mpf(0)
    dom_p = k if k >= 3 else 3
    return _sum_series(coeff, dom_K, dom_p, one, zero, z, budget)


def eval_fk_gk(k: int, theta: float, budget: EvalBudget = DEFAULT_BUDGET):
    """The real arc profile f_k and its companion g_k at angle theta.

    f_k(theta) = e^{k i theta/2} E_k(e^{i theta}) is real for 0 < theta < pi;
    g_k(theta) = i e^{(k+2) i theta/2} E_k'(e^{i theta}), which equals
    f_k'(theta) - (k i/2) f_k(theta).  Returns (f, g) as EvalResults, f real.
    """
    if k % 2 != 0 or k < 4:
        raise DomainError(f"eval_fk_gk requires even k >= 4, got {k}")
    prec = budget.working_precision_bits + _GUARD_BITS
    with mp.workprec(prec):
        th = mp.mpf(theta)
        if not 0 < th < mp.pi:
            raise DomainError("theta must lie in ]0, pi[")
        zv = mp.expj(th)
        E = eval_Ek(k, zv, budget)
        Ep = eval_Ek_deriv(k, zv, 1, budget)
        f = mp.expj(k * th / 2) * E.value
        g = 1j * mp.expj((k + 2) * th / 2) * Ep.value
        f_bound = E.tail_bound + float(_abs1(f)) * 2.0 ** (6 - prec)
        if abs(mp.im(f)) > f_bound:
            raise CertificationError(
                f"arc value expected real: Im={float(mp.im(f)):.3e} exceeds {f_bound:.3e}",
                best=EvalResult(f, f_bound, E.terms_used))
        g_bound = Ep.tail_bound + float(_abs1(g)) * 2.0 ** (6 - prec)
        return (EvalResult(mp.re(f), f_bound, E.terms_used),
                EvalResult(g, g_bound, Ep.terms_used))


def eval_Delta(z, budget: EvalBudget = DEFAULT_BUDGET) -> EvalResult:
    """Certified discriminant value via the product q * prod (1-q^n)^24."""
    prec = budget.working_precision_bits + _GUARD_BITS
    with mp.workprec(prec):
        eps = budget.target_abs_error
        zv = _to_mpc(z)
        q = mp.expjpi(2 * zv)
        absq = abs(q)
        if not absq < 1:
            raise DomainError("evaluation point must have positive imaginary part")
        prod = mp.mpc(1)
        qn = mp.mpc(1)
        n = 0
        while n < budget.max_terms:
            n += 1
            qn = qn * q
            prod *= (1 - qn) ** 24
            L = 24 * absq ** (n + 1) / ((1 - absq) * (1 - absq ** (n + 1)))
            if L < 0.5:
                value = q * prod
                tail = float(_abs1(value) * (mp.expm1(L) + (n + 8) * mp.mpf(2) ** (4 - prec)))
                if tail <= eps:
                    return EvalResult(value, tail, n)
                if absq ** (n + 1) < mp.mpf(2) ** (-prec - 8):
                    raise CertificationError(
                        f"product certificate {tail:.3e} exceeds target {eps:.3e}",
                        best=EvalResult(value, tail, n))
        value = q * prod
        raise CertificationError("term budget exhausted for product",
                                 best=EvalResult(value, float("inf"), n))


def escalating(fn, budget: EvalBudget = DEFAULT_BUDGET, max_bits: int = 8192):
    """Run fn(budget), doubling precision and terms on certification failure."""
    b = budget
    last: CertificationError | None = None
    while b.working_precision_bits <= max_bits:
        try:
            return fn(b)
        except CertificationError as exc:
            last = exc
            b = b.escalated()
    assert last is not None
    raise last


FLOOR_TARGET = 1e-300  # unreachable: evaluation runs to its rounding floor


def _best_effort(fn, budget: EvalBudget) -> EvalResult:
    try:
        return fn(budget)
    except CertificationError as exc:
        return exc.best


def eval_separated(fn, start_bits: int = 128, max_bits: int = 16384) -> EvalResult:
    """Escalate until |value| exceeds twice the certificate (nonzero witness)."""
    bits = start_bits
    while bits <= max_bits:
        res = _best_effort(fn, EvalBudget(bits, FLOOR_TARGET))
        if abs(res.value) > 2 * res.tail_bound:
            return res
        bits *= 2
    raise CertificationError("value not separable from zero at max precision",
                             best=res)


def eval_to_target(fn, target: float, start_bits: int = 128,
                   max_bits: int = 16384) -> EvalResult:
    """Escalate until the certificate meets an absolute target."""
    bits = start_bits
    while bits <= max_bits:
        res = _best_effort(fn, EvalBudget(bits, max(target, FLOOR_TARGET)))
        if res.tail_bound <= target:
            return res
        bits *= 2
    raise CertificationError(f"certificate cannot reach {target:.3e}", best=res)
