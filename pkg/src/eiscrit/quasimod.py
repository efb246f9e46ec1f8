"""Exact algebra of quasi-modular forms as isobaric polynomials.

The three generators X, Y, Z carry weights 2, 4, 6 and stand for the
weight-2, weight-4 and weight-6 series; a polynomial P maps to the function
psi_P by substituting them.  Coefficients are exact rationals throughout.
The derivation D raises weight by 2 and acts on generators by
    D X = (X^2 - Y)/12,   D Y = (X Y - Z)/3,   D Z = (X Z - Y^2)/2,
matching q d/dq on q-expansions; d/dX lowers weight by 2.
"""
from __future__ import annotations

import json
from fractions import Fraction
from typing import Iterable, Mapping

import mpmath as mp

from .exact import sigma_table
from .series import eval_Ek
from .types import (DEFAULT_BUDGET, DomainError, EvalBudget, EvalResult)

Monomial = tuple[int, int, int]

_GEN_WEIGHTS = (2, 4, 6)


class IsobaricPoly:
    """Immutable polynomial in X, Y, Z with exact rational coefficients.

    Zero coefficients are never stored.  `weight` is the common weight
    2a + 4b + 6c of all monomials, or the string "mixed".
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Monomial, Fraction] | Iterable = ()):
        clean = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for mono, coeff in items:
            a, b, c = mono
            if a < 0 or b < 0 or c < 0:
                raise DomainError(f"negative exponent in monomial {mono}")
            coeff = Fraction(coeff)
            if coeff != 0:
                key = (int(a), int(b), int(c))
                clean[key] = clean.get(key, Fraction(0)) + coeff
        self._terms = {m: c for m, c in clean.items() if c != 0}

    @property
    def terms(self) -> dict[Monomial, Fraction]:
        return dict(self._terms)

    @property
    def weight(self):
        ws = {2 * a + 4 * b + 6 * c for (a, b, c) in self._terms}
        if not ws:
            return 0
        return ws.pop() if len(ws) == 1 else "mixed"

    @property
    def is_isobaric(self) -> bool:
        return self.weight != "mixed"

    @property
    def is_x_free(self) -> bool:
        return all(a == 0 for (a, _, _) in self._terms)

    def __bool__(self):
        return bool(self._terms)

    def __eq__(self, other):
        return isinstance(other, IsobaricPoly) and self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __add__(self, other):
        other = _as_poly(other)
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return IsobaricPoly(out)

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __neg__(self):
        return IsobaricPoly({m: -c for m, c in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return IsobaricPoly({m: c * other for m, c in self._terms.items()})
        other = _as_poly(other)
        out: dict[Monomial, Fraction] = {}
        for (a1, b1, c1), v1 in self._terms.items():
            for (a2, b2, c2), v2 in other._terms.items():
                key = (a1 + a2, b1 + b2, c1 + c2)
                out[key] = out.get(key, Fraction(0)) + v1 * v2
        return IsobaricPoly(out)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            raise DomainError("negative power")
        out = ONE
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def sorted_terms(self):
        """Graded-lexicographic order in (a, b, c); canonical for printing."""
        return sorted(self._terms.items(),
                      key=lambda mc: (2 * mc[0][0] + 4 * mc[0][1] + 6 * mc[0][2], mc[0]))

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for (a, b, c), coeff in self.sorted_terms():
            gens = "".join(f" {g}^{e}" for g, e in zip("XYZ", (a, b, c)) if e)
            parts.append(f"{coeff}{gens}" if gens else f"{coeff}")
        return " + ".join(parts)

    __repr__ = __str__


def _as_poly(p) -> IsobaricPoly:
    if isinstance(p, IsobaricPoly):
        return p
    if isinstance(p, (int, Fraction)):
        return IsobaricPoly({(0, 0, 0): Fraction(p)})
    raise TypeError(f"cannot coerce {type(p)} to IsobaricPoly")


X = IsobaricPoly({(1, 0, 0): 1})
Y = IsobaricPoly({(0, 1, 0): 1})
Z = IsobaricPoly({(0, 0, 1): 1})
ONE = IsobaricPoly({(0, 0, 0): 1})
DELTA = Fraction(1, 1728) * (Y ** 3 - Z ** 2)

_D_OF_GEN = (
    Fraction(1, 12) * (X * X - Y),
    Fraction(1, 3) * (X * Y - Z),
    Fraction(1, 2) * (X * Z - Y * Y),
)


def apply_D(p: IsobaricPoly) -> IsobaricPoly:
    """The weight-raising derivation (q d/dq on q-expansions)."""
    p = _as_poly(p)
    out = IsobaricPoly()
    for (a, b, c), coeff in p.terms.items():
        for idx, e in enumerate((a, b, c)):
            if e == 0:
                continue
            mono = [a, b, c]
            mono[idx] -= 1
            out = out + (coeff * e) * IsobaricPoly({tuple(mono): 1}) * _D_OF_GEN[idx]
    return out


def apply_dE2(p: IsobaricPoly) -> IsobaricPoly:
    """Partial derivative in the weight-2 generator; lowers weight by 2."""
    p = _as_poly(p)
    out = {}
    for (a, b, c), coeff in p.terms.items():
        if a >= 1:
            out[(a - 1, b, c)] = out.get((a - 1, b, c), Fraction(0)) + coeff * a
    return IsobaricPoly(out)


def check_bracket(p: IsobaricPoly) -> bool:
    """Whether (d/dX) D P - D (d/dX) P = (w/12) P as exact polynomials."""
    p = _as_poly(p)
    w = p.weight
    if w == "mixed":
        raise DomainError("bracket check requires an isobaric polynomial")
    lhs = apply_dE2(apply_D(p)) - apply_D(apply_dE2(p))
    return lhs == Fraction(w, 12) * p


def check_lemma_weights(f: IsobaricPoly, r: int, j: int) -> bool:
    """Whether (d/dX)^j D^r f = prod_{i=1..j} ((w+r-i)(r-i+1)/12) D^{r-j} f.

    Requires f X-free and isobaric, or f = X (weight 2), with 0 <= j <= r.
    """
    f = _as_poly(f)
    if not (0 <= j <= r):
        raise DomainError("need 0 <= j <= r")
    if not f.is_isobaric:
        raise DomainError("f must be isobaric")
    if not (f.is_x_free or f == X):
        raise DomainError("f must be X-free, or the generator X itself")
    w = f.weight
    lhs = f
    for _ in range(r):
        lhs = apply_D(lhs)
    for _ in range(j):
        lhs = apply_dE2(lhs)
    coeff = Fraction(1)
    for i in range(1, j + 1):
        coeff *= Fraction((w + r - i) * (r - i + 1), 12)
    rhs = f
    for _ in range(r - j):
        rhs = apply_D(rhs)
    return lhs == coeff * rhs


# spec operation name
check_lemma17 = check_lemma_weights


def build_Ff(f: IsobaricPoly) -> IsobaricPoly:
    """The normalized weight-(2w+4) form (w+1)(Df)^2 - w f D^2 f.

    The analytic counterpart (w+1) f'^2 - w f f'' equals (2 pi i)^2 times
    this polynomial's function; the scalar is kept out so coefficients stay
    rational.
    """
    f = _as_poly(f)
    w = f.weight
    if w == "mixed":
        raise DomainError("build_Ff requires an isobaric polynomial")
    df = apply_D(f)
    return (w + 1) * (df * df) - w * (f * apply_D(df))


class QExpansion:
    """Exact rational q-expansion up to a truncation order."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[Fraction]):
        self.coeffs = [Fraction(c) for c in coeffs]

    @property
    def truncation_order(self) -> int:
        return len(self.coeffs) - 1

    def __eq__(self, other):
        n = min(len(self.coeffs), len(other.coeffs))
        return self.coeffs[:n] == other.coeffs[:n]

    def __getitem__(self, i):
        return self.coeffs[i]

    def __add__(self, other):
        n = min(len(self.coeffs), len(other.coeffs))
        return QExpansion([self.coeffs[i] + other.coeffs[i] for i in range(n)])

    def __mul__(self, other):
        n = min(len(self.coeffs), len(other.coeffs))
        out = [Fraction(0)] * n
        for i, ci in enumerate(self.coeffs[:n]):
            if ci == 0:
                continue
            for j in range(n - i):
                out[i + j] += ci * other.coeffs[j]
        return QExpansion(out)

    def differentiated(self) -> "QExpansion":
        """Term-wise q d/dq."""
        return QExpansion([n * c for n, c in enumerate(self.coeffs)])

    def to_json(self) -> str:
        return json.dumps([f"{c.numerator}/{c.denominator}" for c in self.coeffs])

    def __repr__(self):
        head = ", ".join(str(c) for c in self.coeffs[:6])
        return f"QExpansion([{head}, ...], N={self.truncation_order})"


def generator_qexp(idx: int, N: int) -> QExpansion:
    """Exact expansion of the weight-(2,4,6) generator up to order N."""
    scale, e = ((-24, 1), (240, 3), (-504, 5))[idx]
    sig = sigma_table(N, e)
    return QExpansion([Fraction(1)] + [Fraction(scale * s) for s in sig[:N]])


def q_expand(p: IsobaricPoly, N: int) -> QExpansion:
    """Exact q-expansion of psi_P to order N by polynomial composition."""
    if N < 0:
        raise DomainError("truncation order must be >= 0")
    p = _as_poly(p)
    gens = [generator_qexp(i, N) for i in range(3)]
    out = [Fraction(0)] * (N + 1)
    for (a, b, c), coeff in p.terms.items():
        term = QExpansion([coeff] + [Fraction(0)] * N)
        for e, g in zip((a, b, c), gens):
            for _ in range(e):
                term = term * g
        for i in range(N + 1):
            out[i] += term.coeffs[i]
    return QExpansion(out)


def psi_eval(p: IsobaricPoly, z, budget: EvalBudget = DEFAULT_BUDGET) -> EvalResult:
    """Evaluate P at the three generator values with a propagated bound."""
    p = _as_poly(p)
    prec = budget.working_precision_bits
    with mp.workprec(prec + 16):
        vals = {}
        errs = {}
        for w, name in ((2, 0), (4, 1), (6, 2)):
            r = eval_Ek(w, z, budget)
            vals[name] = r.value
            errs[name] = mp.mpf(r.tail_bound)
        total = mp.mpc(0)
        bound = mp.mpf(0)
        terms_used = 0
        for (a, b, c), coeff in p.terms.items():
            cm = mp.mpf(coeff.numerator) / coeff.denominator
            prod = cm
            hi = abs(cm)
            for name, e in ((0, a), (1, b), (2, c)):
                prod *= vals[name] ** e
                hi *= (abs(vals[name]) + errs[name]) ** e
            total += prod
            # first-order-free bound: |prod(x+dx) - prod(x)| <= prod(|x|+dx) - prod(|x|)
            lo = abs(cm)
            for name, e in ((0, a), (1, b), (2, c)):
                lo *= abs(vals[name]) ** e
            bound += hi - lo
            terms_used += 1
        rounding = (len(p.terms) + 4) * abs(total) * mp.mpf(2) ** (4 - prec)
        return EvalResult(total, float(bound + rounding), terms_used)


def multiple_zero_scan(p: IsobaricPoly, points, tol: float = 1e-8,
                       budget: EvalBudget = DEFAULT_BUDGET) -> list:
    """Flag sample points where psi_P and psi_DP are simultaneously small.

    An empty list is the expected outcome for square-free P: coprime
    polynomials with algebraic coefficients share no zeros, so a flagged
    point witnesses either a multiple factor or a tolerance artifact.
    """
    p = _as_poly(p)
    dp = apply_D(p)
    flagged = []
    for z in points:
        a = psi_eval(p, z, budget)
        b = psi_eval(dp, z, budget)
        if abs(a.value) < tol and abs(b.value) < tol:
            flagged.append(z)
    return flagged


def eisenstein_isobaric(k: int) -> IsobaricPoly:
    """The weight-k series written exactly in the modular generators Y, Z.

    Determined by matching exact q-expansions; the linear system over the
    monomial basis of weight k has a unique solution.
    """
    if k % 2 != 0 or k < 4:
        raise DomainError(f"eisenstein_isobaric requires even k >= 4, got {k}")
    monos = [(0, b, c) for b in range(k // 4 + 1) for c in range(k // 6 + 1)
             if 4 * b + 6 * c == k]
    nvar = len(monos)
    N = nvar + 1
    cols = [q_expand(IsobaricPoly({m: 1}), N).coeffs for m in monos]
    from .exact import fourier_prefactor
    pref = fourier_prefactor(k)
    sig = sigma_table(N, k - 1)
    target = [Fraction(1)] + [pref * s for s in sig[:N]]
    M = [[cols[j][i] for j in range(nvar)] + [target[i]] for i in range(nvar)]
    for col in range(nvar):
        piv = next(r for r in range(col, nvar) if M[r][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        pv = M[col][col]
        M[col] = [x / pv for x in M[col]]
        for r in range(nvar):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [x - f * y for x, y in zip(M[r], M[col])]
    sol = IsobaricPoly({monos[i]: M[i][nvar] for i in range(nvar)})
    # consistency row beyond the solved block
    if q_expand(sol, N).coeffs != target:
        raise DomainError(f"no isobaric representation found for k={k}")
    return sol
