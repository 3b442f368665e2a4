"""Interval censoring of random variables and clamped-sum machinery.

Censoring clamps a value into a closed interval [a, b]; unlike truncation
(zeroing outside the interval) it is a contraction, which is what the
downstream error bounds rely on.  The two fixed intervals used throughout are
[-1, 1] for the linear summands and [-1/2, 1/2] for remainder terms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .distributions import DiscreteDistribution
from .enumeration import enumerate_expectation
from .errors import DomainError, PreconditionError


@dataclass(frozen=True)
class CensorInterval:
    """Closed interval [a, b]; infinite endpoints allowed."""

    a: float = -math.inf
    b: float = math.inf

    def __post_init__(self):
        if math.isnan(self.a) or math.isnan(self.b):
            raise DomainError("interval endpoints cannot be NaN")
        if self.a > self.b:
            raise DomainError(f"invalid interval [{self.a}, {self.b}]")


XI_INTERVAL = CensorInterval(-1.0, 1.0)
REMAINDER_INTERVAL = CensorInterval(-0.5, 0.5)


def censor(y, iv: CensorInterval):
    """Clamp y into [iv.a, iv.b].  Exact on Fractions with finite endpoints."""
    if y < iv.a:
        return iv.a
    if y > iv.b:
        return iv.b
    return y


def _clamp_exact(y, lo: Fraction, hi: Fraction):
    if y < lo:
        return lo
    if y > hi:
        return hi
    return y


def censor_xi(xi):
    """Clamp a linear summand into [-1, 1]; Fractions stay exact."""
    if isinstance(xi, Fraction):
        return _clamp_exact(xi, Fraction(-1), Fraction(1))
    return censor(xi, XI_INTERVAL)


def censor_remainder(d):
    """Clamp a remainder term into [-1/2, 1/2]; Fractions stay exact."""
    if isinstance(d, Fraction):
        return _clamp_exact(d, Fraction(-1, 2), Fraction(1, 2))
    return censor(d, REMAINDER_INTERVAL)


def truncate(y, iv: CensorInterval):
    """Zero outside [a, b].  Kept only to demonstrate it is not a contraction."""
    return y if iv.a <= y <= iv.b else type(y)(0)


# ---------------------------------------------------------------------------
# Clamped-sum summaries of a realized sample.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CensoredSummandSet:
    """A sample of linear summands together with their clamped versions."""

    values: tuple
    censored: tuple

    @classmethod
    def from_values(cls, values: Sequence) -> "CensoredSummandSet":
        vals = tuple(values)
        return cls(values=vals, censored=tuple(censor_xi(v) for v in vals))

    @property
    def w_n(self):
        return sum(self.values)

    @property
    def w_b(self):
        return sum(self.censored)

    def w_b_loo(self, i: int):
        return self.w_b - self.censored[i]

    def w_n_loo(self, i: int):
        return self.w_n - self.values[i]


def beta2(dists: Sequence[DiscreteDistribution]) -> Fraction:
    """Sum over coordinates of E[xi^2 I(|xi| > 1)], exact."""
    return sum(
        (d.expect(lambda v: v**2 if abs(v) > 1 else Fraction(0)) for d in dists),
        Fraction(0),
    )


def beta3(dists: Sequence[DiscreteDistribution]) -> Fraction:
    """Sum over coordinates of E[xi^3 I(|xi| <= 1)], exact (signed)."""
    return sum(
        (d.expect(lambda v: v**3 if abs(v) <= 1 else Fraction(0)) for d in dists),
        Fraction(0),
    )


def beta3_abs(dists: Sequence[DiscreteDistribution]) -> Fraction:
    """Sum over coordinates of E[|xi|^3 I(|xi| <= 1)], exact.

    This absolute version is what the small-increment mass derivation for
    the concentration-inequality defaults actually controls.
    """
    return sum(
        (
            d.expect(lambda v: abs(v) ** 3 if abs(v) <= 1 else Fraction(0))
            for d in dists
        ),
        Fraction(0),
    )


def abs_third_moment_sum(dists: Sequence[DiscreteDistribution]) -> Fraction:
    return sum((d.abs_moment(3) for d in dists), Fraction(0))


# ---------------------------------------------------------------------------
# Exact inequality checks.
# ---------------------------------------------------------------------------


def censored_mean_bound_check(
    dist: DiscreteDistribution,
) -> tuple[Fraction, Fraction, bool]:
    """|E[clamped xi]| <= E[xi^2 I(|xi| > 1)] for a mean-zero xi, exactly."""
    if dist.mean() != 0:
        raise PreconditionError(f"distribution has mean {dist.mean()}, need 0")
    lhs = abs(dist.expect(censor_xi))
    rhs = dist.expect(lambda v: v**2 if abs(v) > 1 else Fraction(0))
    return lhs, rhs, lhs <= rhs


def bennett_mgf_check(
    xi_dists: Sequence[DiscreteDistribution],
    t: float,
    slack: float = 1e-12,
) -> tuple[float, float, bool]:
    """Check E[e^{t W_b}] <= exp(e^{2t}/4 - 1/4 + t/2) by exact enumeration.

    Preconditions (verified exactly): every summand has mean zero and the
    second moments sum to at most one.  The left side enumerates the product
    space with exact probabilities; only the exponential is evaluated in
    floating point.
    """
    if t < 0:
        raise DomainError(f"need t >= 0, got {t}")
    total_second = Fraction(0)
    for dist in xi_dists:
        if dist.mean() != 0:
            raise PreconditionError("all summand distributions must have mean zero")
        total_second += dist.moment(2)
    if total_second > 1:
        raise PreconditionError(f"sum of second moments is {total_second} > 1")
    lhs = enumerate_expectation(
        xi_dists,
        lambda vals: math.exp(t * math.fsum(float(censor_xi(v)) for v in vals)),
    )
    rhs = math.exp(math.exp(2.0 * t) / 4.0 - 0.25 + t / 2.0)
    return float(lhs), rhs, float(lhs) <= rhs + slack
