"""Critical points on the vertical line Re = 1/2, arc zeros, and sign tables.

The restriction of the weight-k derivative to the line Re = 1/2 is purely
imaginary, and i E_k'(1/2 + i t) is a positive multiple of B_k * h_k there,
so sign-based bisection runs on certified signs of h_k.  Bracket endpoints
t_m = cot(m pi/(k+1))/2 carry certified alternating signs; a bracket whose
endpoint signs fail to alternate raises ContradictionError, as would any
falsified count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath as mp
import numpy as np

from .fastpath import get_fast
from .lattice import eval_hk_lattice
from .series import (FLOOR_TARGET, eval_Ek, eval_Ek_deriv, eval_fk_gk,
                     eval_hk, eval_separated, eval_to_target)
from .types import (CertificationError, ContradictionError, DomainError,
                    EvalBudget, HalfPlanePoint)

SQRT3_2 = math.sqrt(3.0) / 2.0
_MAX_BITS = 16384
_FLOOR = FLOOR_TARGET

_eval_sep = eval_separated
_eval_abs = eval_to_target


@dataclass(frozen=True)
class BracketTable:
    """Separating intervals for the line zeros above the corner."""

    k: int
    M: int
    t_values: tuple[float, ...]          # t_1 > t_2 > ... > t_M
    includes_base_interval: bool

    @property
    def brackets(self) -> list[tuple[float, float]]:
        out = [(self.t_values[m], self.t_values[m - 1]) for m in range(1, self.M)]
        if self.includes_base_interval:
            out.append((SQRT3_2, self.t_values[self.M - 1]))
        return out


@dataclass(frozen=True)
class CriticalPointRecord:
    k: int
    location: HalfPlanePoint
    bracket: tuple[float, float]
    residual: float
    simplicity_margin: float
    classification: str  # "trivial" | "nontrivial"


@dataclass(frozen=True)
class ArcZeroRecord:
    k: int
    theta: float
    f_residual: float
    g_sign: int


@dataclass(frozen=True)
class LineZeroScan:
    k: int
    records: tuple[CriticalPointRecord, ...]
    endpoint_is_zero: bool
    endpoint_residual: float


@dataclass(frozen=True)
class ArcZeroScan:
    k: int
    interior: tuple[ArcZeroRecord, ...]
    endpoint_order: int          # order of the arc-end zeros: 0, 1 or 2
    endpoint_records: tuple[ArcZeroRecord, ...]


def bracket_table(k: int) -> BracketTable:
    if k % 2 != 0 or k < 4:
        raise DomainError(f"bracket_table requires even k >= 4, got {k}")
    M = k // 6
    ts = tuple(0.5 / math.tan(m * math.pi / (k + 1)) for m in range(1, M + 1))
    if any(ts[i] <= ts[i + 1] for i in range(len(ts) - 1)) or (ts and ts[-1] <= SQRT3_2):
        raise ContradictionError(f"bracket ordinates not decreasing for k={k}")
    return BracketTable(k, M, ts, includes_base_interval=(k % 6 == 4 and k != 4))


def t_ordinate(k: int, m: int) -> float:
    """t_m = cot(m pi/(k+1))/2."""
    return 0.5 / math.tan(m * math.pi / (k + 1))


def certified_hk_sign(k: int, t: float):
    """Certified sign of h_k(1/2 + i t); returns (sign, EvalResult)."""
    res = _eval_sep(lambda b: eval_hk(k, mp.mpc(0.5, t), b))
    v = mp.re(res.value)
    if abs(mp.im(res.value)) > 2 * res.tail_bound + abs(v) * 1e-20:
        raise CertificationError(f"h_{k} not real on the line at t={t}")
    return (1 if v > 0 else -1), res


def _bk_sign(k: int) -> int:
    # +1 for k = 2 mod 4, -1 for k = 0 mod 4
    return 1 if k % 4 == 2 else -1


def _fast_line_sign(k: int, t: float):
    """float64 sign of h_k on the line through i E_k', or None if ambiguous."""
    F = get_fast(k)
    v, e = F.ek_with_err(0.5 + 1j * t, 1)
    x = (1j * complex(v[0])).real
    if abs(x) > 64 * float(e[0]):
        return (1 if x > 0 else -1) * _bk_sign(k)
    return None


def _line_sign(k: int, t: float) -> int:
    s = _fast_line_sign(k, t)
    if s is None:
        s, _ = certified_hk_sign(k, t)
    return s


def proposition1_sign(k: int, m: int, route: str = "series") -> int:
    """Certified sign of h_k(1/2 + i t_m); asserted equal to (-1)^m.

    Any integer k >= 2 with 1 <= m <= floor((k+1)/6).  route="lattice"
    checks through the lattice oracle instead of the q-expansion.
    """
    if k < 2:
        raise DomainError(f"proposition1_sign requires k >= 2, got {k}")
    if not 1 <= m <= (k + 1) // 6:
        raise DomainError(f"m={m} outside 1..floor((k+1)/6) for k={k}")
    t = t_ordinate(k, m)
    if route == "series":
        sign, _ = certified_hk_sign(k, t)
    elif route == "lattice":
        z = complex(0.5, t)
        res = None
        for target in (1e-8, 1e-5, 1e-2, 10.0):
            try:
                res = eval_hk_lattice(k, z, EvalBudget(53, target, 50_000_000))
            except CertificationError:
                continue
            if abs(float(mp.re(res.value))) > 2 * res.tail_bound:
                break
        if res is None or abs(float(mp.re(res.value))) <= 2 * res.tail_bound:
            raise CertificationError(f"lattice sign unattainable for k={k}, m={m}")
        sign = 1 if float(mp.re(res.value)) > 0 else -1
    else:
        raise DomainError(f"unknown route {route!r}")
    if sign != (-1) ** m:
        raise ContradictionError(
            f"sign of h_{k} at t_{m} is {sign}, expected {(-1) ** m}")
    return sign


def _assert_single_change(k: int, lo: float, hi: float) -> None:
    """Exactly one sign change on a 64-point scan of the bracket."""
    ts = np.linspace(lo, hi, 64)
    signs = [_line_sign(k, float(t)) for t in ts]
    changes = sum(1 for i in range(63) if signs[i] != signs[i + 1])
    if changes != 1:
        raise ContradictionError(
            f"bracket ({lo:.6f}, {hi:.6f}) for k={k} shows {changes} sign changes")


def _newton_polish(k: int, t0: float, lo: float, hi: float, steps: int = 5):
    """Damped Newton on E_k' in the complex variable, clamped to the bracket."""
    z = mp.mpc(0.5, t0)
    width = hi - lo
    for _ in range(steps):
        d2 = _eval_sep(lambda b: eval_Ek_deriv(k, z, 2, b))
        scale = float(abs(d2.value))
        d1 = _eval_abs(lambda b: eval_Ek_deriv(k, z, 1, b),
                       target=scale * max(width, 1e-13) * 1e-4)
        step = -d1.value / d2.value
        if abs(step) > 0.5 * width:
            step = step / abs(step) * 0.5 * width
        z = z + step
        z = mp.mpc(0.5, min(max(float(mp.im(z)), lo), hi))
        if abs(step) < 1e-16 * max(1.0, t0):
            break
    return z


@lru_cache(maxsize=None)
def locate_line_zeros(k: int, width: float = 1e-12) -> LineZeroScan:
    """All zeros of E_k' on Re = 1/2 above the corner, one per bracket.

    Bisection runs on the certified sign of i E_k' (through h_k), followed
    by a damped Newton polish; each record carries residual |E_k'| and
    simplicity margin |E_k''|.  Also reports whether the corner ordinate
    sqrt(3)/2 itself is a zero (expected iff k = 2 mod 6).
    """
    table = bracket_table(k)
    records = []
    for (lo, hi) in table.brackets:
        s_lo, _ = certified_hk_sign(k, lo)
        s_hi, _ = certified_hk_sign(k, hi)
        if s_lo == s_hi:
            raise ContradictionError(
                f"no sign change in bracket ({lo:.6f}, {hi:.6f}) for k={k}")
        a, b = lo, hi
        while b - a > width:
            mid = 0.5 * (a + b)
            if _line_sign(k, mid) == s_lo:
                a = mid
            else:
                b = mid
        z = _newton_polish(k, 0.5 * (a + b), a, b)
        d2 = _eval_sep(lambda bb: eval_Ek_deriv(k, z, 2, bb))
        margin = float(abs(d2.value))
        # residual target scaled to the margin so the certificate does not
        # swamp a genuinely tiny |E_k'| at large k
        rtarget = min(1e-20, margin * max(hi - lo, 1e-12) * 1e-8)
        res = _eval_abs(lambda bb: eval_Ek_deriv(k, z, 1, bb), target=max(rtarget, 1e-280))
        residual = float(abs(res.value)) + res.tail_bound
        if margin <= 1e3 * (residual / max(hi - lo, 1e-300)):
            raise ContradictionError(
                f"zero at {float(mp.im(z)):.12f} fails the scale-aware simplicity test")
        records.append(CriticalPointRecord(
            k=k,
            location=HalfPlanePoint(0.5, float(mp.im(z))),
            bracket=(lo, hi),
            residual=residual,
            simplicity_margin=margin,
            classification="nontrivial",
        ))
    if len(records) != (k - 4) // 6:
        raise ContradictionError(
            f"found {len(records)} line zeros for k={k}, expected {(k - 4) // 6}")
    corner = mp.mpc(0.5, mp.sqrt(3) / 2)
    rc = _eval_abs(lambda bb: eval_Ek_deriv(k, corner, 1, bb), target=1e-20)
    endpoint_res = float(abs(rc.value)) + rc.tail_bound
    endpoint_is_zero = endpoint_res <= 1e-9
    if endpoint_is_zero != (k % 6 == 2):
        raise ContradictionError(
            f"corner zero flag {endpoint_is_zero} contradicts k mod 6 = {k % 6}")
    return LineZeroScan(k, tuple(records), endpoint_is_zero, endpoint_res)


def _certified_f_sign(k: int, theta: float):
    """Certified sign of the real arc profile f_k(theta)."""
    bits = 128
    while bits <= _MAX_BITS:
        try:
            f, _g = eval_fk_gk(k, theta, EvalBudget(bits, _FLOOR))
        except CertificationError as exc:
            f = exc.best
        v = mp.re(f.value) if isinstance(f.value, mp.mpc) else f.value
        if abs(v) > 2 * f.tail_bound:
            return (1 if v > 0 else -1), f
        bits *= 2
    raise CertificationError(f"could not separate f_{k}({theta}) from zero")


def _fast_f(k: int, thetas):
    F = get_fast(k)
    th = np.asarray(thetas, dtype=float)
    zs = np.exp(1j * th)
    E, err = F.ek_with_err(zs, 0)
    f = np.exp(0.5j * k * th) * E
    return f.real, err


def _expected_arc_interior(k: int) -> int:
    rem = k % 6
    if rem == 4:
        return (k - 4) // 6
    if rem == 0:
        return k // 6
    return (k - 8) // 6


def _f_sign_at(k: int, theta: float) -> int:
    fv, fe = _fast_f(k, [theta])
    if abs(fv[0]) > 64 * fe[0]:
        return 1 if fv[0] > 0 else -1
    s, _ = _certified_f_sign(k, theta)
    return s


@lru_cache(maxsize=None)
def locate_arc_zeros(k: int, width: float = 1e-12) -> ArcZeroScan:
    """Zeros of the arc profile f_k on [pi/3, 2pi/3] with the sign table.

    Interior zeros come from sign-scanning a 4k-point grid refined by
    bisection; arc-end zeros (simple for k = 4 mod 6, order 2 for
    k = 2 mod 6) are classified by magnitude plus a one-sided power fit.
    """
    if k % 2 != 0 or k < 4:
        raise DomainError(f"locate_arc_zeros requires even k >= 4, got {k}")
    lo, hi = math.pi / 3, 2 * math.pi / 3
    n = max(4 * k, 48)
    pad = (hi - lo) * 1e-4
    grid = np.linspace(lo + pad, hi - pad, n)
    fvals, errs = _fast_f(k, grid)
    signs = np.where(fvals > 0, 1, -1)
    for i in np.nonzero(np.abs(fvals) <= 64 * errs)[0]:
        s, _ = _certified_f_sign(k, float(grid[i]))
        signs[i] = s
    interior = []
    for i in range(n - 1):
        if signs[i] != signs[i + 1]:
            a, b = float(grid[i]), float(grid[i + 1])
            sa = int(signs[i])
            while b - a > width:
                midt = 0.5 * (a + b)
                if _f_sign_at(k, midt) == sa:
                    a = midt
                else:
                    b = midt
            theta = 0.5 * (a + b)
            fr, gr = eval_fk_gk(k, theta, EvalBudget(128, _FLOOR).with_target(1e-20))
            g_re = float(mp.re(gr.value))
            if abs(mp.im(gr.value)) > abs(g_re) / 8 + 8 * gr.tail_bound:
                raise CertificationError(f"companion value not real enough at {theta}")
            interior.append(ArcZeroRecord(k, theta, float(abs(fr.value)),
                                          1 if g_re > 0 else -1))
    if len(interior) != _expected_arc_interior(k):
        raise ContradictionError(
            f"arc interior count {len(interior)} for k={k}, "
            f"expected {_expected_arc_interior(k)}")
    _check_arc_sign_pattern(k, interior)
    order, endpoints = _classify_endpoints(k)
    return ArcZeroScan(k, tuple(interior), order, tuple(endpoints))


def _check_arc_sign_pattern(k: int, interior: list[ArcZeroRecord]) -> None:
    N = len(interior)
    if N == 0:
        return
    rem = k % 6
    # interior theta_j (1-indexed): sign (-1)^{N-j} for k = 0, 2 mod 6;
    # for k = 4 mod 6 (ends counted as j = 0 and N+1): (-1)^{N+1-j}
    if rem == 4:
        expected = [(-1) ** (N + 1 - j) for j in range(1, N + 1)]
    else:
        expected = [(-1) ** (N - j) for j in range(1, N + 1)]
    got = [r.g_sign for r in interior]
    if got != expected:
        raise ContradictionError(
            f"companion sign pattern {got} differs from expected {expected} at k={k}")


def _f_at(k: int, theta: float) -> float:
    f, _ = eval_fk_gk(k, theta, EvalBudget(128, 1e-30))
    return float(f.value)


def _classify_endpoints(k: int):
    """Order of the arc-end zeros at pi/3 and 2pi/3, with endpoint records."""
    rem = k % 6
    theta0, theta1 = math.pi / 3, 2 * math.pi / 3
    if rem == 0:
        if abs(_f_at(k, theta0)) <= 1e-6:
            raise ContradictionError(f"arc end unexpectedly vanishes for k={k}")
        return 0, []
    deltas = [1e-3 / 2 ** j for j in range(4)]
    fs = [_f_at(k, theta1 - d) for d in deltas]
    r1 = [abs(f) / d for f, d in zip(fs, deltas)]
    r2 = [abs(f) / d ** 2 for f, d in zip(fs, deltas)]

    def stable(seq):
        return abs(seq[-1] - seq[-2]) <= 0.12 * abs(seq[-2])

    if rem == 4:
        if not (stable(r1) and not stable(r2)):
            raise ContradictionError(f"arc end for k={k} not a simple zero")
        order = 1
    else:
        if not stable(r2):
            raise ContradictionError(f"arc end for k={k} not an order-2 zero")
        order = 2
    recs = []
    for th in (theta0, theta1):
        fres = abs(_f_at(k, th))
        if rem == 4:
            g = eval_fk_gk(k, th, EvalBudget(128, 1e-30))[1]
            gs = 1 if float(mp.re(g.value)) > 0 else -1
        else:
            gs = 0  # companion vanishes together with f at an order-2 end
        recs.append(ArcZeroRecord(k, th, fres, gs))
    return order, recs


def e2_line_zero(box: tuple[float, float] = (0.4, 0.7),
                 width: float = 1e-13) -> CriticalPointRecord:
    """The zero of the weight-2 series on the imaginary axis, certified simple."""
    lo, hi = box
    if not (0 < lo < hi):
        raise DomainError("box must satisfy 0 < lo < hi")

    def sign_at(t: float) -> int:
        res = _eval_sep(lambda b: eval_Ek(2, mp.mpc(0, t), b))
        return 1 if mp.re(res.value) > 0 else -1

    s_lo, s_hi = sign_at(lo), sign_at(hi)
    if s_lo == s_hi:
        raise DomainError(f"no sign change of the weight-2 series in box {box}")
    a, b = lo, hi
    while b - a > width:
        mid = 0.5 * (a + b)
        if sign_at(mid) == s_lo:
            a = mid
        else:
            b = mid
    t = 0.5 * (a + b)
    res = _eval_abs(lambda bb: eval_Ek(2, mp.mpc(0, t), bb), target=1e-25)
    d1 = _eval_sep(lambda bb: eval_Ek_deriv(2, mp.mpc(0, t), 1, bb))
    return CriticalPointRecord(
        k=2,
        location=HalfPlanePoint(0.0, t),
        bracket=(lo, hi),
        residual=float(abs(res.value)) + res.tail_bound,
        simplicity_margin=float(abs(d1.value)),
        classification="nontrivial",
    )
