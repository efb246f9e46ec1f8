"""Shared domain types: points, budgets, certified results, error classes."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import mpmath as mp

ComplexLike = Union[complex, "HalfPlanePoint", mp.mpc]


class DomainError(ValueError):
    """An argument lies outside the operation's mathematical domain."""


class CertificationError(RuntimeError):
    """The requested error bound could not be met within the budget.

    Carries the best result achieved so it can be inspected or escalated.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ContradictionError(RuntimeError):
    """A numerically verified count or sign contradicts a proved statement.

    Raised instead of silently returning wrong data; must never occur on
    correct inputs.
    """


class ZeroOnCurveError(RuntimeError):
    """Argument tracking hit a point where the function is not certifiably nonzero."""


@dataclass(frozen=True)
class HalfPlanePoint:
    """A point of the open upper half-plane."""

    re: float
    im: float

    def __post_init__(self):
        if not self.im > 0:
            raise DomainError(f"upper half-plane requires im > 0, got {self.im}")

    @classmethod
    def coerce(cls, z: ComplexLike) -> "HalfPlanePoint":
        if isinstance(z, HalfPlanePoint):
            return z
        return cls(float(mp.re(z)), float(mp.im(z)))

    def as_complex(self) -> complex:
        return complex(self.re, self.im)

    def as_mpc(self) -> mp.mpc:
        return mp.mpc(self.re, self.im)


@dataclass(frozen=True)
class EvalBudget:
    """Resource and accuracy contract for a certified evaluation."""

    working_precision_bits: int = 128
    target_abs_error: float = 1e-30
    max_terms: int = 200_000

    def __post_init__(self):
        if self.working_precision_bits < 8:
            raise DomainError("working_precision_bits must be >= 8")
        if not self.target_abs_error > 0:
            raise DomainError("target_abs_error must be > 0")
        if self.max_terms < 1:
            raise DomainError("max_terms must be >= 1")

    def escalated(self) -> "EvalBudget":
        """Same target, doubled precision and term budget."""
        return EvalBudget(2 * self.working_precision_bits,
                          self.target_abs_error,
                          2 * self.max_terms)

    def with_target(self, target: float) -> "EvalBudget":
        return EvalBudget(self.working_precision_bits, target, self.max_terms)


DEFAULT_BUDGET = EvalBudget()


@dataclass(frozen=True)
class EvalResult:
    """A computed value together with a certified truncation/rounding bound.

    ``tail_bound`` is an upper bound on |true value - value| under the
    truncation rule used by the evaluator (geometric domination once the
    certified term ratio drops below 1/2, plus a rounding allowance).
    """

    value: object  # mp.mpc, mp.mpf, or complex
    tail_bound: float
    terms_used: int

    def __post_init__(self):
        if self.tail_bound < 0:
            raise DomainError("tail_bound must be non-negative")

    @property
    def is_pole(self) -> bool:
        return self.value == mp.inf

    def as_complex(self) -> complex:
        return complex(self.value)


POLE = mp.inf
