"""The equivariant map z + k E_k/E_k': counting, boundary tables, real locus.

The map commutes with the Moebius action of the modular group, sends the
line Re = 1/2 to itself, the unit circle to itself, and has simple poles
exactly at the nontrivial critical points on the line.  Counting solutions
of phi = lambda runs along two independent routes: root-finding on the
traced real-locus curves (where phi is monotone real), and the winding of
phi - lambda along the detoured fundamental-domain boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath as mp
import numpy as np

from .critzeros import locate_line_zeros
from .fastpath import get_fast
from .quasimod import build_Ff, eisenstein_isobaric, psi_eval
from .series import (FLOOR_TARGET, eval_Ek, eval_Ek_deriv, eval_separated,
                     eval_to_target)
from .types import (POLE, CertificationError, ContradictionError, DomainError,
                    EvalBudget, EvalResult, HalfPlanePoint, ZeroOnCurveError)
from .winding import Arc, Contour, Segment, arg_variation, boundary_contour, path_sampler

PI = math.pi
SQRT3_2 = math.sqrt(3.0) / 2.0
SQRT3_6 = math.sqrt(3.0) / 6.0
CORNER_EXCLUSION = 1e-3  # radius excluded around trivial zeros (k = 2 mod 6)


@dataclass(frozen=True)
class UnimodularMatrix:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.a * self.d - self.b * self.c != 1:
            raise DomainError(f"determinant must be 1: {self}")

    def apply(self, z):
        return (self.a * z + self.b) / (self.c * z + self.d)

    def __str__(self):
        return f"({self.a} {self.b}; {self.c} {self.d})"


@dataclass(frozen=True)
class PoleTable:
    """Poles b_m of the map on the half-line and stationary ordinates c_m.

    Strict interleaving c_1 > b_1 > c_2 > ... > c_n > b_n.
    """
    k: int
    b_values: tuple[float, ...]
    c_values: tuple[float, ...]

    def __post_init__(self):
        merged = []
        for c, b in zip(self.c_values, self.b_values):
            merged += [c, b]
        if any(x <= y for x, y in zip(merged, merged[1:])):
            raise ContradictionError(f"interleaving violated for k={self.k}")


@dataclass(frozen=True)
class LocusCurve:
    """One component of the real locus in the right half of the domain."""
    index: int
    polyline: np.ndarray          # complex points, from the circle inward
    start: complex                # u_j on the unit circle
    end: object                   # pole (complex) or the string "asymptote"
    phi_values: np.ndarray        # real values along the polyline


# ------------------------------------------------------------- certified map

def phi(k: int, z, budget: EvalBudget | None = None) -> EvalResult:
    """Certified value of the map; the point at infinity marks a pole."""
    if k % 2 != 0 or k < 4:
        raise DomainError(f"phi requires even k >= 4, got {k}")
    budget = budget or EvalBudget(128, 1e-25)
    E = eval_to_target(lambda b: eval_Ek(k, z, b), budget.target_abs_error,
                       budget.working_precision_bits)
    Ep = eval_to_target(lambda b: eval_Ek_deriv(k, z, 1, b), budget.target_abs_error,
                        budget.working_precision_bits)
    aE, aEp = abs(E.value), abs(Ep.value)
    if aEp <= 2 * Ep.tail_bound:
        if aE <= 2 * E.tail_bound:
            raise ContradictionError(
                f"derivative and value both vanish near {z}; excluded neighborhood")
        return EvalResult(POLE, float("inf"), E.terms_used + Ep.terms_used)
    zv = mp.mpc(z.re, z.im) if isinstance(z, HalfPlanePoint) else mp.mpc(z)
    value = zv + k * E.value / Ep.value
    ratio = float(aE) / float(aEp)
    den = float(aEp) - Ep.tail_bound
    bound = k * (E.tail_bound + ratio * Ep.tail_bound) / den
    return EvalResult(value, bound, E.terms_used + Ep.terms_used)


def phi_recip(k: int, z, budget: EvalBudget | None = None) -> EvalResult:
    """1/(phi - z) = E_k'/(k E_k): the stable near-pole formulation."""
    budget = budget or EvalBudget(128, 1e-25)
    E = eval_to_target(lambda b: eval_Ek(k, z, b), budget.target_abs_error,
                       budget.working_precision_bits)
    Ep = eval_to_target(lambda b: eval_Ek_deriv(k, z, 1, b), budget.target_abs_error,
                        budget.working_precision_bits)
    if abs(E.value) <= 2 * E.tail_bound:
        raise CertificationError("reciprocal form needs E_k nonzero", best=E)
    value = Ep.value / (k * E.value)
    ratio = float(abs(Ep.value)) / float(abs(E.value))
    den = k * (float(abs(E.value)) - E.tail_bound)
    bound = (Ep.tail_bound + ratio * E.tail_bound) / den
    return EvalResult(value, bound, E.terms_used + Ep.terms_used)


# --------------------------------------------------------------- fast sampler

def _phi_sampler(k: int, lam: complex = 0.0):
    """Vectorized phi - lambda with error estimates; certified fallback."""
    F = get_fast(k)

    def f(zs):
        zs = np.asarray(zs, dtype=complex)
        E, eE = F.ek_with_err(zs, 0)
        Ep, eEp = F.ek_with_err(zs, 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = zs + k * E / Ep - lam
            errs = k * (eE / np.abs(Ep) + np.abs(E) * eEp / np.abs(Ep) ** 2)
        bad = ~np.isfinite(vals) | (np.abs(vals) <= 8 * errs)
        for i in np.nonzero(bad)[0]:
            r = phi(k, complex(zs[i]), EvalBudget(192, 1e-20))
            if r.is_pole:
                raise ZeroOnCurveError(f"pole of the map on curve at {zs[i]}")
            vals[i] = complex(r.value) - lam
            errs[i] = r.tail_bound
        return vals, errs
    return f


# ----------------------------------------------------------------- pole table

def _pole_eps(bs: list[float]) -> float:
    pts = sorted(bs + [SQRT3_2])
    gaps = [b - a for a, b in zip(pts, pts[1:])] or [0.1]
    return min(0.05, min(gaps) / 2)


@lru_cache(maxsize=None)
def pole_table(k: int, crosscheck: bool = True) -> PoleTable:
    """Poles from the line-zero scan plus stationary ordinates in between.

    Each c_m is the unique sign change of d/dt Im phi(1/2 + i t) between
    consecutive poles (searching above the top pole for c_1), cross-checked
    as a zero of the weight-(2k+4) numerator form.
    """
    if k % 2 != 0 or k < 4:
        raise DomainError(f"pole_table requires even k >= 4, got {k}")
    bs = [r.location.im for r in locate_line_zeros(k).records]
    n = len(bs)
    if n == 0:
        return PoleTable(k, (), ())
    F = get_fast(k)

    def vprime_sign_changes(lo: float, hi: float, ngrid: int = 200):
        ts = np.linspace(lo, hi, ngrid)
        # v' = -numerator/|E'|^2 on the line; sign changes of v' are those
        # of the numerator form
        vals = F.fk_numerator(0.5 + 1j * ts)
        re = vals.real
        signs = np.where(re > 0, 1, -1)
        return [i for i in range(ngrid - 1) if signs[i] != signs[i + 1]], ts

    cs = []
    for m, b in enumerate(bs, start=1):
        upper = bs[m - 2] if m >= 2 else None
        margin = _pole_eps(bs)
        if upper is None:
            lo, hi = b + margin / 4, b + 4.0
        else:
            lo, hi = b + margin / 4, upper - margin / 4
        idx, ts = vprime_sign_changes(lo, hi)
        if len(idx) != 1:
            raise ContradictionError(
                f"{len(idx)} stationary candidates in ({lo:.4f}, {hi:.4f}) for k={k}")
        a, bb = float(ts[idx[0]]), float(ts[idx[0] + 1])
        sa = 1 if F.fk_numerator(0.5 + 1j * a).real[0] > 0 else -1
        while bb - a > 1e-12:
            mid = 0.5 * (a + bb)
            s = 1 if F.fk_numerator(0.5 + 1j * mid).real[0] > 0 else -1
            if s == sa:
                a = mid
            else:
                bb = mid
        cs.append(0.5 * (a + bb))
    if crosscheck:
        poly = build_Ff(eisenstein_isobaric(k))
        for c in cs:
            zc = mp.mpc(0.5, c)
            psi = psi_eval(poly, zc, EvalBudget(192, 1e-30))
            ep = eval_separated(lambda b: eval_Ek_deriv(k, zc, 1, b))
            scale = float(abs(ep.value)) ** 2
            if abs(psi.value) > 1e-6 * scale:
                raise ContradictionError(
                    f"stationary ordinate {c:.9f} fails the numerator-form check")
    return PoleTable(k, tuple(bs), tuple(cs))


# ------------------------------------------------------------ boundary tables

def v_value(k: int, t: float) -> float:
    """v_k(t) with phi(1/2 + i t) = 1/2 + i v_k(t); poles excluded."""
    if t < SQRT3_2:
        raise DomainError("v is defined for t >= sqrt(3)/2")
    f = _phi_sampler(k)
    val, err = f(np.array([0.5 + 1j * t]))
    v = complex(val[0])
    if abs(v.real - 0.5) > 1e-6 + 10 * err[0]:
        raise ContradictionError(f"map value off the line at t={t}: {v}")
    return float(v.imag)


@dataclass(frozen=True)
class WTable:
    """Continuous-argument table of the map along the unit arc."""
    k: int
    thetas: np.ndarray
    w: np.ndarray
    w_start: float
    w_end: float

    def crossing_count(self, residue: float) -> int:
        """Number of w-values = residue mod 2pi in the open range."""
        lo = math.floor((self.w_start - residue) / (2 * PI)) + 1
        hi = math.ceil((self.w_end - residue) / (2 * PI)) - 1
        return max(0, hi - lo + 1)

    def crossings(self, residue: float) -> list[float]:
        """Targets w = residue mod 2pi lying strictly inside the range."""
        out = []
        m = math.floor((self.w_start - residue) / (2 * PI)) + 1
        while residue + 2 * PI * m < self.w_end:
            if residue + 2 * PI * m > self.w_start:
                out.append(residue + 2 * PI * m)
            m += 1
        return out


def _w_anchor(k: int) -> float:
    return -PI / 3 if k % 6 == 0 else PI / 3


def expected_w_end(k: int) -> float:
    rem = k % 6
    if rem == 0:
        return (k - 2) * PI / 3
    if rem == 2:
        return k * PI / 3
    return (k + 4) * PI / 3


@lru_cache(maxsize=None)
def w_table(k: int, n0: int = 0) -> WTable:
    """Unwrapped argument of phi along the arc, anchored at the left corner.

    For k = 2 mod 6 the corners are excluded by a small radius and the end
    values recovered by Richardson extrapolation through certified samples.
    """
    if k % 2 != 0 or k < 4:
        raise DomainError(f"w_table requires even k >= 4, got {k}")
    n0 = n0 or max(4 * k, 64)
    trivial_corner = (k % 6 == 2)
    d0 = CORNER_EXCLUSION if trivial_corner else 0.0
    f = _phi_sampler(k)

    def along(ts):
        return f(np.exp(1j * np.asarray(ts)))

    trace = arg_variation(along, PI / 3 + d0, 2 * PI / 3 - d0, n0=n0, keep_trace=True)
    thetas = trace.parameter_samples
    anchor = _w_anchor(k)
    if not trivial_corner:
        w = trace.unwrapped_args - trace.unwrapped_args[0] + anchor
        return WTable(k, thetas, w, float(anchor), float(w[-1]))
    # the map extends through the trivial corner zeros with value = corner,
    # so the anchor transports by one principal step across the exclusion
    first = complex(trace.values[0])
    corner_val = complex(math.cos(PI / 3), math.sin(PI / 3))
    step_in = math.atan2((first / corner_val).imag, (first / corner_val).real)
    w = trace.unwrapped_args - trace.unwrapped_args[0] + anchor + step_in
    w_end = _extrapolate_w_end(k, float(w[-1]))
    return WTable(k, thetas, w, float(anchor), w_end)


def _extrapolate_w_end(k: int, w_at_cut: float) -> float:
    """Continue w through certified samples to the right corner (k = 2 mod 6)."""
    deltas = [CORNER_EXCLUSION / 4, 1e-4, 4e-5, 2e-5, 1e-5]
    prev_arg = None
    w = w_at_cut
    # chain principal steps from the cut at CORNER_EXCLUSION inward
    start = mp.expj(2 * mp.pi / 3 - CORNER_EXCLUSION)
    prev_val = phi(k, start, EvalBudget(160, 1e-22)).value
    samples = []
    for d in deltas:
        zv = mp.expj(2 * mp.pi / 3 - d)
        val = phi(k, zv, EvalBudget(160, 1e-22)).value
        step = float(mp.arg(val / prev_val))
        w += step
        prev_val = val
        samples.append((d, w))
    # linear-in-delta deviation; two Richardson levels on the last three
    (d2, w2), (d1, w1), (d0, w0) = samples[-3:]
    r1 = 2 * w0 - w1
    r0 = 2 * w1 - w2
    return (4 * r1 - r0) / 3


def w_values(k: int, thetas) -> np.ndarray:
    """w at given angles by local unwrap against the cached table."""
    tab = w_table(k)
    f = _phi_sampler(k)
    th = np.asarray(thetas, dtype=float)
    vals, _ = f(np.exp(1j * th))
    idx = np.searchsorted(tab.thetas, th)
    idx = np.clip(idx, 0, len(tab.thetas) - 1)
    base_th = tab.thetas[idx]
    base_w = tab.w[idx]
    ref, _ = f(np.exp(1j * base_th))
    step = np.angle(vals / ref)
    if np.any(np.abs(step) > PI / 2):
        raise DomainError("angle grid too coarse for local unwrapping")
    return base_w + step


def _w_cross_theta(k: int, target: float) -> float:
    """theta with w(theta) = target, by monotone bisection on the table."""
    tab = w_table(k)
    i = int(np.searchsorted(tab.w, target))
    if i <= 0 or i >= len(tab.w):
        raise DomainError(f"target {target} outside the w range for k={k}")
    lo, hi = float(tab.thetas[i - 1]), float(tab.thetas[i])
    wlo = float(tab.w[i - 1])
    f = _phi_sampler(k)
    vlo = complex(f(np.array([np.exp(1j * lo)]))[0][0])
    while hi - lo > 1e-13:
        mid = 0.5 * (lo + hi)
        vmid = complex(f(np.array([np.exp(1j * mid)]))[0][0])
        wmid = wlo + math.atan2((vmid / vlo).imag, (vmid / vlo).real)
        if wmid < target:
            lo, wlo, vlo = mid, wmid, vmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -------------------------------------------------------------- the real locus

@lru_cache(maxsize=None)
def trace_locus(k: int, step: float = 1e-2, cutoff: float = 6.0):
    """Components of the real locus in the right half-domain.

    Seeds are the arc points where the unwrapped argument hits multiples of
    pi on (pi/3, pi/2]; curves continue the level set Im phi = 0 by a
    tangent predictor and transverse Newton corrector, ending at a pole
    (snapped) or at the asymptote cutoff.
    """
    if k % 2 != 0 or k < 4:
        raise DomainError(f"trace_locus requires even k >= 4, got {k}")
    tab = w_table(k)
    wmid = w_values(k, [PI / 2])[0]
    targets = [t for t in tab.crossings(0.0) + tab.crossings(PI)
               if tab.w_start < t <= wmid + 1e-12]
    seeds = sorted((_w_cross_theta(k, t) for t in targets), reverse=True)
    n_expected = (k + 2) // 6
    if len(seeds) != n_expected:
        raise ContradictionError(
            f"{len(seeds)} locus seeds for k={k}, expected {n_expected}")
    poles = [0.5 + 1j * b for b in pole_table(k, crosscheck=False).b_values]
    F = get_fast(k)
    curves = []
    for j, th in enumerate(seeds):
        u = complex(math.cos(th), math.sin(th))
        expected_val = (-1) ** (k // 2 + j + 1)
        got = complex(F.phi_values(np.array([u]))[0])
        if abs(got - expected_val) > 1e-6:
            raise ContradictionError(
                f"map value at seed u_{j} is {got}, expected {expected_val}")
        poly, end = _continue_curve(k, F, u, poles, step, cutoff, target_pole=(
            poles[j - 1] if 1 <= j <= len(poles) else None))
        pv = F.phi_values(poly)
        probe = pv[:-1] if isinstance(end, complex) else pv  # snapped pole excluded
        rel_im = np.abs(probe.imag) / np.maximum(1.0, np.abs(probe))
        if np.max(rel_im[np.isfinite(rel_im)]) > 1e-6:
            raise ContradictionError(f"curve {j} leaves the real locus for k={k}")
        curves.append(LocusCurve(j, poly, u, end, pv.real))
    _locus_checks(k, curves, step)
    return curves


def _continue_curve(k, F, z0, poles, step, cutoff, target_pole=None):
    pts = [z0]
    z = z0
    d = complex(F.phi_deriv(np.array([z]))[0])
    direction = np.exp(-1j * np.angle(d))
    if abs(z0 + 0.001 * direction) < abs(z0):
        direction = -direction
    h = step
    snap_tol = 1e-3
    for _ in range(200_000):
        dist = min((abs(z - p) for p in poles), default=math.inf)
        if dist < 4 * h:
            h = max(dist / 3, 1e-5)  # poles are simple; enter radially
        d = complex(F.phi_deriv(np.array([z]))[0])
        tang = np.exp(-1j * np.angle(d))
        if (tang.real * direction.real + tang.imag * direction.imag) < 0:
            tang = -tang
        znew = z + h * tang
        ok = False
        for _ in range(12):
            p = complex(F.phi_values(np.array([znew]))[0])
            dd = complex(F.phi_deriv(np.array([znew]))[0])
            corr = -p.imag / abs(dd)
            znew = znew + 1j * np.exp(-1j * np.angle(dd)) * corr
            if abs(corr) < 1e-11:
                ok = True
                break
        if not ok:
            h = h / 2
            if h < 1e-5:
                raise ContradictionError("corrector failure on the locus curve")
            continue
        direction = np.exp(1j * np.angle(znew - z))
        z = znew
        pts.append(z)
        if z.imag > cutoff:
            if abs(z.real - 0.25) >= 0.02:
                raise ContradictionError(
                    f"asymptote exits at Re={z.real:.4f}, outside 1/4 +- 0.02")
            return np.array(pts), "asymptote"
        for p in poles:
            if abs(z - p) < snap_tol:
                if target_pole is not None and abs(p - target_pole) > 1e-9:
                    raise ContradictionError("curve reached an unexpected pole")
                pts.append(p)
                return np.array(pts), p
        h = min(step, h * 1.4)
    raise ContradictionError("locus continuation exceeded the step budget")


def _angle_between(v1: complex, v2: complex) -> float:
    """Unsigned angle between directions, mod pi, in degrees."""
    a = abs(math.atan2((v1 / v2).imag, (v1 / v2).real))
    a = min(a, PI - a)
    return math.degrees(a)


def _locus_checks(k: int, curves, step: float) -> None:
    for cur in curves:
        tangent0 = cur.polyline[1] - cur.polyline[0]
        if _angle_between(tangent0, cur.start) > 2.0:
            raise ContradictionError(f"curve {cur.index} not orthogonal to the circle")
        if isinstance(cur.end, complex):
            tangent1 = cur.polyline[-1] - cur.polyline[-2]
            if _angle_between(tangent1, 1.0) > 2.0:
                raise ContradictionError(f"curve {cur.index} not orthogonal to the line")
        s = 1.0 if cur.phi_values[0] > 0 else -1.0
        vals = s * cur.phi_values[:-1] if isinstance(cur.end, complex) else s * cur.phi_values
        if vals[0] < 1 - 1e-9 or np.any(np.diff(vals) <= 0):
            raise ContradictionError(f"map not monotone along curve {cur.index}")
    for i in range(len(curves)):
        for j in range(i + 1, len(curves)):
            da = curves[i].polyline
            db = curves[j].polyline
            dmin = np.min(np.abs(da[:, None] - db[None, :]))
            if dmin < step / 2:
                raise ContradictionError(f"curves {i} and {j} collide at resolution")


# ------------------------------------------------------------------- counting

def _phi_boundary_contour(k: int, eps: float | None = None) -> Contour:
    bs = [r.location.im for r in locate_line_zeros(k).records]
    eps = eps or _pole_eps(bs)
    T = (max(bs) + 1.0) if bs else 2.5
    corner_radius = CORNER_EXCLUSION if k % 6 == 2 else None
    return boundary_contour(k, T, eps, bs, right_outside=False,
                            corner_radius=corner_radius)


def winding_count(k: int, lam: float, eps: float | None = None) -> float:
    """(1/2pi) x argument variation of phi - lambda along the boundary."""
    contour = _phi_boundary_contour(k, eps)
    f = _phi_sampler(k, lam)
    total = sum(arg_variation(path_sampler(lambda zs: f(zs), p), n0=96)
                for p in contour.parts)
    return total / (2 * PI)


def solve_phi_eq(k: int, lam, verify: bool = True) -> list[complex]:
    """All solutions of phi = lambda in the fundamental domain (lambda real).

    Empty for |lambda| < 1; floor((k+2)/6) points on the open arc for
    |lambda| = 1 and in the interior for |lambda| > 1.  The curve-route
    count is verified against the winding route (or against zero winding
    when empty).
    """
    if k % 2 != 0 or k < 4:
        raise DomainError(f"solve_phi_eq requires even k >= 4, got {k}")
    lam = float(Fraction(lam)) if isinstance(lam, str) else float(lam)
    expected = (k + 2) // 6
    if abs(lam) < 1:
        if verify:
            wc = winding_count(k, lam)
            if abs(wc) > 1e-6:
                raise ContradictionError(f"winding {wc} nonzero for |lambda|<1")
        return []
    if abs(lam) == 1:
        residue = 0.0 if lam > 0 else PI
        tab = w_table(k)
        thetas = [_w_cross_theta(k, t) for t in tab.crossings(residue)]
        pts = [complex(math.cos(t), math.sin(t)) for t in thetas]
        if len(pts) != expected:
            raise ContradictionError(
                f"{len(pts)} arc solutions for lambda={lam}, expected {expected}")
        return sorted(pts, key=lambda z: z.real)
    curves = trace_locus(k)
    roots = []
    for cur in curves:
        s = 1.0 if cur.phi_values[0] > 0 else -1.0
        if s * lam >= 1:
            roots.append(_root_on_curve(k, cur, lam))
        if -s * lam >= 1:
            r = _root_on_curve(k, cur, -lam)
            roots.append(-r.conjugate())
    for r in roots:
        if not (abs(r.real) < 0.5 - 1e-9 and abs(r) > 1 + 1e-12):
            raise ContradictionError(f"root {r} not interior for lambda={lam}")
    if len(roots) != expected:
        raise ContradictionError(
            f"curve route found {len(roots)} roots for lambda={lam}, expected {expected}")
    if verify:
        wc = winding_count(k, lam)
        if abs(wc - expected) > 1e-6:
            raise ContradictionError(
                f"winding {wc} disagrees with curve count {expected}")
    return sorted(roots, key=lambda z: (z.real, z.imag))


def _root_on_curve(k: int, cur: LocusCurve, lam: float) -> complex:
    """The unique curve point with phi = lam (|lam| > 1, sign matching)."""
    F = get_fast(k)
    s = 1.0 if cur.phi_values[0] > 0 else -1.0
    vals = s * cur.phi_values
    target = s * lam
    poly = cur.polyline
    if isinstance(cur.end, complex):
        vals = vals[:-1]  # snapped pole point carries no finite value
    idx = None
    for i in range(len(vals) - 1):
        if (vals[i] - target) * (vals[i + 1] - target) <= 0:
            idx = i
            break
    if idx is None:
        if not isinstance(cur.end, complex):
            raise ContradictionError(f"lambda={lam} beyond the asymptote samples")
        z = _approach_pole(k, F, complex(cur.end), complex(poly[len(vals) - 1]), abs(lam))
    else:
        z = complex(poly[idx])
    # Newton on the entire function k E + (z - lam) E', which vanishes
    # exactly at the solutions and stays regular near the poles
    for _ in range(60):
        E = complex(F.ek(np.array([z]), 0)[0])
        Ep = complex(F.ek(np.array([z]), 1)[0])
        Epp = complex(F.ek(np.array([z]), 2)[0])
        g = k * E + (z - lam) * Ep
        dg = (k + 1) * Ep + (z - lam) * Epp
        dz = -g / dg
        z += dz
        if abs(dz) < 1e-14:
            break
    pv = complex(F.phi_values(np.array([z]))[0])
    if abs(pv - lam) > 1e-8 * max(1.0, abs(lam)):
        raise ContradictionError(f"root polish failed: phi({z}) = {pv} != {lam}")
    return z


def _approach_pole(k, F, pole: complex, z_from: complex, target_abs: float) -> complex:
    """Walk the curve toward a pole until |phi| passes the target."""
    z = z_from
    for _ in range(200):
        z = pole + (z - pole) * 0.5
        # transverse correction back onto Im phi = 0
        for _ in range(8):
            p = complex(F.phi_values(np.array([z]))[0])
            dd = complex(F.phi_deriv(np.array([z]))[0])
            z = z + 1j * np.exp(-1j * np.angle(dd)) * (-p.imag / abs(dd))
        if abs(p) > abs(target_abs):
            return z
    raise ContradictionError("pole approach did not reach the target value")


def zeros_in_gamma_D(k: int, gamma: UnimodularMatrix,
                     residual_tol: float = 1e-8) -> list[complex]:
    """Nontrivial critical points inside the transported domain (c != 0).

    Empty when |d| < |c|; floor((k+2)/6) points otherwise, interior for
    |d| > |c| and on the transported arc (a vertical segment) for |d| = |c|.
    Every transported point is certified by |E_k'(gamma tau)| <= residual_tol.
    """
    if gamma.c == 0:
        raise DomainError("transport counting requires c != 0")
    lam = Fraction(-gamma.d, gamma.c)
    sols = solve_phi_eq(k, float(lam))
    if abs(gamma.d) < abs(gamma.c):
        if sols:
            raise ContradictionError("nonempty transport for |d| < |c|")
        return []
    out = []
    for tau in sols:
        w = gamma.apply(complex(tau))
        res = eval_to_target(lambda b: eval_Ek_deriv(k, mp.mpc(w), 1, b),
                             target=residual_tol / 10)
        if abs(res.value) + res.tail_bound > residual_tol:
            raise ContradictionError(
                f"transported point {w} has residual {abs(res.value)}")
        out.append(w)
    if len(out) != (k + 2) // 6:
        raise ContradictionError(
            f"transport count {len(out)} differs from {(k + 2) // 6}")
    if abs(gamma.d) == abs(gamma.c):
        r = round(out[0].real - 0.5)
        for w in out:
            if abs(w.real - (r + 0.5)) > 1e-9 or not (SQRT3_6 < w.imag < SQRT3_2):
                raise ContradictionError(
                    f"|d| = |c| image {w} off the vertical segment")
    return out


def total_line_count(k: int) -> int:
    """Total number of critical points with real part 1/2, all heights.

    Assembles the count above the corner, the transported band count in
    (sqrt(3)/6, sqrt(3)/2), and the two endpoint zeros when k = 2 mod 6;
    the result must equal 1 + 2 floor((k-2)/6).
    """
    if k % 2 != 0 or k < 4:
        raise DomainError(f"total_line_count requires even k >= 4, got {k}")
    scan = locate_line_zeros(k)
    upper = len(scan.records)
    tab = w_table(k)
    band = len(tab.crossings(PI))  # solutions of phi = -1 on the arc
    if band != (k + 2) // 6:
        raise ContradictionError(
            f"band count {band} differs from {(k + 2) // 6} for k={k}")
    endpoints = 2 if k % 6 == 2 else 0
    total = upper + band + endpoints
    if total != 1 + 2 * ((k - 2) // 6):
        raise ContradictionError(
            f"assembled line count {total} differs from {1 + 2 * ((k - 2) // 6)}")
    return total


# ------------------------------------------------------------------ exports

def delta_trajectory(k: int, eps: float | None = None, points_per_part: int = 400):
    """Samples of the map along the low boundary path (vertical-arc-vertical).

    Returns (params, z, phi(z)) suitable for a closed-trajectory plot data
    file; the path runs down the left edge from just below the lowest pole,
    along the arc, and back up the right edge.
    """
    bs = [r.location.im for r in locate_line_zeros(k).records]
    eps = eps or _pole_eps(bs)
    top = (min(bs) - eps) if bs else 2.5
    d0 = CORNER_EXCLUSION if k % 6 == 2 else 0.0
    parts = []
    parts.append(Segment(-0.5 + 1j * top, -0.5 + 1j * (SQRT3_2 + d0)))
    if d0:
        dth = 2 * math.asin(d0 / 2)
        cL = complex(math.cos(2 * PI / 3), math.sin(2 * PI / 3))
        cR = complex(math.cos(PI / 3), math.sin(PI / 3))
        thL, thR = 2 * PI / 3 - dth, PI / 3 + dth
        endL = complex(math.cos(thL), math.sin(thL))
        startR = complex(math.cos(thR), math.sin(thR))
        parts.append(Arc(cL, d0, PI / 2, math.atan2((endL - cL).imag, (endL - cL).real)))
        parts.append(Arc(0, 1.0, thL, thR))
        parts.append(Arc(cR, d0, math.atan2((startR - cR).imag, (startR - cR).real), PI / 2))
    else:
        parts.append(Arc(0, 1.0, 2 * PI / 3, PI / 3))
    parts.append(Segment(0.5 + 1j * (SQRT3_2 + d0), 0.5 + 1j * top))
    contour = Contour(tuple(parts))
    f = _phi_sampler(k)
    params, zs, phis = [], [], []
    t0 = 0.0
    for p in contour.parts:
        ts = np.linspace(0, 1, points_per_part)
        z = p.at(ts)
        vals, _ = f(z)
        params.append(t0 + ts)
        zs.append(z)
        phis.append(vals)
        t0 += 1.0
    return np.concatenate(params), np.concatenate(zs), np.concatenate(phis)
