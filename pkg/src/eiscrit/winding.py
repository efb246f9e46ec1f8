"""Continuous-argument tracking along curves and contour zero counts.

The tracker refines a parameter grid until consecutive argument steps stay
below pi/2; for a holomorphic nonvanishing function this pins the branch,
so the summed principal differences equal the true variation exactly (up
to float rounding), and closed-contour counts come out at integers without
quadrature error.  Samples whose magnitude is not clearly above the
evaluator's error estimate abort with ZeroOnCurveError.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .critzeros import locate_line_zeros
from .fastpath import get_fast
from .types import ContradictionError, DomainError, ZeroOnCurveError

PI = math.pi
CORNER_R = complex(math.cos(PI / 3), math.sin(PI / 3))
CORNER_L = complex(math.cos(2 * PI / 3), math.sin(2 * PI / 3))
MAX_SAMPLES = 2 ** 20


# ------------------------------------------------------------------- paths

@dataclass(frozen=True)
class Segment:
    """Straight segment from z0 to z1 (vertical/horizontal in practice)."""
    z0: complex
    z1: complex

    def at(self, ts):
        ts = np.asarray(ts, dtype=float)
        return self.z0 + ts * (self.z1 - self.z0)

    @property
    def start(self):
        return self.z0

    @property
    def end(self):
        return self.z1


@dataclass(frozen=True)
class Arc:
    """Circular arc; the unit arc has center 0, detours a small radius."""
    center: complex
    radius: float
    ang0: float
    ang1: float

    def at(self, ts):
        ts = np.asarray(ts, dtype=float)
        return self.center + self.radius * np.exp(1j * (self.ang0 + ts * (self.ang1 - self.ang0)))

    @property
    def start(self):
        return self.center + self.radius * np.exp(1j * self.ang0)

    @property
    def end(self):
        return self.center + self.radius * np.exp(1j * self.ang1)


@dataclass(frozen=True)
class Contour:
    """Chained segments; construction checks endpoint continuity."""
    parts: tuple

    def __post_init__(self):
        for a, b in zip(self.parts, self.parts[1:]):
            if abs(a.end - b.start) > 1e-9:
                raise DomainError(f"contour breaks between {a.end} and {b.start}")

    @property
    def closed(self) -> bool:
        return abs(self.parts[-1].end - self.parts[0].start) <= 1e-9


@dataclass
class ArgTrace:
    """Sampled curve with an unwrapped continuous argument."""
    parameter_samples: np.ndarray
    values: np.ndarray
    unwrapped_args: np.ndarray = field(init=False)

    def __post_init__(self):
        steps = np.angle(self.values[1:] / self.values[:-1])
        if steps.size and np.max(np.abs(steps)) >= PI / 2:
            raise DomainError("trace violates the pi/2 refinement contract")
        start = math.atan2(self.values[0].imag, self.values[0].real)
        self.unwrapped_args = start + np.concatenate([[0.0], np.cumsum(steps)])

    @property
    def total_variation(self) -> float:
        return float(self.unwrapped_args[-1] - self.unwrapped_args[0])


# ---------------------------------------------------------------- tracking

def _refine(f, t0: float, t1: float, n0: int, max_samples: int):
    """Sample f over [t0, t1] until consecutive argument steps < pi/2."""
    ts = np.linspace(t0, t1, max(n0, 8))
    vals, errs = f(ts)
    bad_mag = np.abs(vals) <= 8 * errs
    if bad_mag.any():
        i = int(np.nonzero(bad_mag)[0][0])
        raise ZeroOnCurveError(
            f"sample at t={ts[i]:.6g} not separated from zero "
            f"(|f|={abs(vals[i]):.3e}, err={errs[i]:.3e})")
    while True:
        dphi = np.angle(vals[1:] / vals[:-1])
        bad = np.abs(dphi) >= PI / 2
        if not bad.any():
            return ts, vals
        tmid = 0.5 * (ts[:-1][bad] + ts[1:][bad])
        if ts.size + tmid.size > max_samples:
            raise ZeroOnCurveError("refinement cap exceeded; function may vanish on curve")
        vmid, emid = f(tmid)
        bm = np.abs(vmid) <= 8 * emid
        if bm.any():
            i = int(np.nonzero(bm)[0][0])
            raise ZeroOnCurveError(
                f"sample at t={tmid[i]:.6g} not separated from zero")
        idx = np.searchsorted(ts, tmid)
        ts = np.insert(ts, idx, tmid)
        vals = np.insert(vals, idx, vmid)


def arg_variation(f, t0: float = 0.0, t1: float = 1.0, n0: int = 64,
                  max_samples: int = MAX_SAMPLES, keep_trace: bool = False):
    """Variation of a continuous argument of f over [t0, t1].

    f maps a parameter array to (values, error_estimates).  Returns a float,
    or an ArgTrace when keep_trace is set.
    """
    ts, vals = _refine(f, t0, t1, n0, max_samples)
    if keep_trace:
        return ArgTrace(ts, vals)
    return float(np.sum(np.angle(vals[1:] / vals[:-1])))


def path_sampler(f_z, path):
    """Adapt a point function to a parameter function along a path."""
    def f(ts):
        return f_z(path.at(ts))
    return f


def contour_variation(f_z, contour: Contour, n0: int = 64):
    """Total argument variation of f_z along a contour, with per-part values."""
    parts = [arg_variation(path_sampler(f_z, p), n0=n0) for p in contour.parts]
    return sum(parts), parts


# ------------------------------------------------------- headline quantities

def _ek_deriv_sampler(k: int):
    F = get_fast(k)

    def f(zs):
        return F.ek_with_err(np.asarray(zs, dtype=complex), 1)
    return f


def _gk_sampler(k: int):
    F = get_fast(k)

    def f(thetas):
        th = np.asarray(thetas, dtype=float)
        vals, errs = F.ek_with_err(np.exp(1j * th), 1)
        return 1j * np.exp(0.5j * (k + 2) * th) * vals, errs
    return f


def _eta_limit(value_at, tol: float, jmax: int = 11):
    """Limit of value_at(eta) over eta_j = 1e-2 / 2^j by Richardson extrapolation.

    The end deviation is smooth in eta with a linear leading term, so two
    extrapolation levels (2v_{j+1} - v_j, then (4r_{j+1} - r_j)/3) leave an
    O(eta^3) remainder; the first second-level pair agreeing within tol/2
    is accepted.
    """
    vals: list[float] = [value_at(1e-2), value_at(1e-2 / 2), value_at(1e-2 / 4)]
    prev_r2 = None
    for j in range(3, jmax + 1):
        vals.append(value_at(1e-2 / 2 ** j))
        r1 = [2 * b - a for a, b in zip(vals[-3:], vals[-2:])]
        r2 = (4 * r1[1] - r1[0]) / 3
        if prev_r2 is not None and abs(r2 - prev_r2) < tol / 2:
            return r2
        prev_r2 = r2
    raise ContradictionError("eta-limit did not stabilize within tolerance")


def compute_A(k: int, tol: float = 1e-6) -> float:
    """Variation of the argument of E_k' along the unit arc [pi/3, 2pi/3].

    For k = 2 mod 6 the ends are zeros, so the value is the eta-limit over
    shrinking symmetric exclusions, accelerated by Richardson extrapolation.
    """
    if k % 2 != 0 or k < 4:
        raise DomainError(f"compute_A requires even k >= 4, got {k}")
    f_z = _ek_deriv_sampler(k)
    arc = lambda eta: path_sampler(f_z, Arc(0, 1.0, 2 * PI / 3 - eta, PI / 3 + eta))
    n0 = max(4 * k, 64)
    if k % 6 != 2:
        # orientation of the tracked quantity is theta increasing
        return -arg_variation(arc(0.0), n0=n0)
    return _eta_limit(lambda eta: -arg_variation(arc(eta), n0=n0), tol)


def compute_B(k: int, tol: float = 1e-6) -> float:
    """Variation of the argument of g_k along [pi/3, 2pi/3] (eta-limit as in A)."""
    if k % 2 != 0 or k < 4:
        raise DomainError(f"compute_B requires even k >= 4, got {k}")
    g = _gk_sampler(k)
    n0 = max(4 * k, 64)
    if k % 6 != 2:
        return arg_variation(g, PI / 3, 2 * PI / 3, n0=n0)
    return _eta_limit(
        lambda eta: arg_variation(g, PI / 3 + eta, 2 * PI / 3 - eta, n0=n0), tol)


def expected_A(k: int) -> float:
    return -(k + 2) * PI / 3 if k % 6 == 4 else -k * PI / 3


def expected_B(k: int) -> float:
    return -(k + 2) * PI / 6 if k % 6 == 4 else -(k - 2) * PI / 6


# ------------------------------------------------------------ the contour I

def default_epsilon(k: int, bs: list[float]) -> float:
    """Half the minimum pairwise gap among boundary zeros and corners, <= 0.05."""
    pts = sorted(bs + [math.sqrt(3) / 2])
    gaps = [b - a for a, b in zip(pts, pts[1:])] or [0.1]
    return min(0.05, min(gaps) / 2)


def line_zero_ordinates(k: int) -> list[float]:
    return [r.location.im for r in locate_line_zeros(k).records]


def boundary_contour(k: int, T: float, eps: float, bs: list[float],
                     right_outside: bool, corner_radius: float | None) -> Contour:
    """Boundary of the truncated fundamental domain with detour arcs.

    Right-edge detours pass outside (Re > 1/2) when right_outside, else
    inside; left-edge detours always pass inside (Re > -1/2).  A corner
    radius adds one-sixth detours at the two unit-circle corners.
    """
    s32 = math.sqrt(3) / 2
    cr = corner_radius or 0.0
    parts: list = []
    cur = 0.5 + 1j * (s32 + cr)
    for b in sorted(bs):
        parts.append(Segment(cur, 0.5 + 1j * (b - eps)))
        if right_outside:
            parts.append(Arc(0.5 + 1j * b, eps, -PI / 2, PI / 2))
        else:
            parts.append(Arc(0.5 + 1j * b, eps, -PI / 2, -3 * PI / 2))
        cur = 0.5 + 1j * (b + eps)
    parts.append(Segment(cur, 0.5 + 1j * T))
    parts.append(Segment(0.5 + 1j * T, -0.5 + 1j * T))
    cur = -0.5 + 1j * T
    for b in sorted(bs, reverse=True):
        parts.append(Segment(cur, -0.5 + 1j * (b + eps)))
        parts.append(Arc(-0.5 + 1j * b, eps, PI / 2, -PI / 2))
        cur = -0.5 + 1j * (b - eps)
    parts.append(Segment(cur, -0.5 + 1j * (s32 + cr)))
    if cr > 0:
        dth = 2 * math.asin(cr / 2)
        thL = 2 * PI / 3 - dth
        endL = complex(math.cos(thL), math.sin(thL))
        parts.append(Arc(CORNER_L, cr, PI / 2, math.atan2((endL - CORNER_L).imag,
                                                          (endL - CORNER_L).real)))
        thR = PI / 3 + dth
        startR = complex(math.cos(thR), math.sin(thR))
        parts.append(Arc(0, 1.0, thL, thR))
        parts.append(Arc(CORNER_R, cr, math.atan2((startR - CORNER_R).imag,
                                                  (startR - CORNER_R).real), PI / 2))
    else:
        parts.append(Arc(0, 1.0, 2 * PI / 3, PI / 3))
    return Contour(tuple(parts))


def contour_count_I(k: int, T: float | None = None, eps: float | None = None,
                    known_boundary_zeros: list[float] | None = None,
                    return_parts: bool = False):
    """Winding count of E_k' along the detoured fundamental-domain boundary.

    Detours pass outside the domain around the right-edge zeros (enclosing
    them) and inside around left-edge zeros and, for k = 2 mod 6, the two
    corner zeros; the result must come out within tolerance of
    floor((k-4)/6).
    """
    if k % 2 != 0 or k < 4:
        raise DomainError(f"contour_count_I requires even k >= 4, got {k}")
    bs = known_boundary_zeros if known_boundary_zeros is not None else line_zero_ordinates(k)
    if eps is None:
        eps = default_epsilon(k, list(bs))
    if T is None:
        T = (max(bs) + 1.0) if bs else 2.5
    if bs and T < max(bs) + 1.0:
        raise DomainError("T must exceed the largest line-zero ordinate by >= 1")
    corner_radius = eps if k % 6 == 2 else None
    contour = boundary_contour(k, T, eps, list(bs), right_outside=True,
                               corner_radius=corner_radius)
    total, parts = contour_variation(_ek_deriv_sampler(k), contour, n0=max(2 * k, 48))
    count = total / (2 * PI)
    if return_parts:
        return count, contour, parts
    return count


def vertical_edge_cancellation(k: int, T: float | None = None,
                               eps: float | None = None) -> float:
    """|sum of right-edge and left-edge contributions|; periodicity makes it ~0."""
    count, contour, parts = contour_count_I(k, T, eps, return_parts=True)
    right = left = 0.0
    for p, v in zip(contour.parts, parts):
        if isinstance(p, Segment) and abs(p.z0.real - p.z1.real) < 1e-12:
            if abs(p.z0.real - 0.5) < 1e-9:
                right += v
            elif abs(p.z0.real + 0.5) < 1e-9:
                left += v
        elif isinstance(p, Arc) and p.radius < 0.45 and abs(abs(p.center) - 1.0) > 1e-9:
            # detour semicircles at the line zeros; corner arcs excluded
            if abs(p.center.real - 0.5) < 1e-9:
                right += v
            elif abs(p.center.real + 0.5) < 1e-9:
                left += v
    return abs(right + left)
