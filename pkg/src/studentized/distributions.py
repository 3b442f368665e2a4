"""Finite discrete distributions with exact rational probabilities.

These are the substrate of every exact-enumeration check in the package:
probabilities are `fractions.Fraction` and must sum to exactly one, and atom
values are stored as Fractions so that moments, censoring thresholds and
indicator events can be evaluated without rounding.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import InvalidDistributionError

Rational = Fraction | int


def as_fraction(x) -> Fraction:
    """Convert ints, Fractions, floats and 'p/q' strings to an exact Fraction.

    Floats convert to their exact binary value, so `as_fraction(0.1)` is not
    1/10; pass the string "1/10" when the decimal value is meant.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise InvalidDistributionError("booleans are not numeric atoms")
    if isinstance(x, (int, float, str)):
        return Fraction(x)
    raise InvalidDistributionError(f"cannot interpret {x!r} as a rational")


@dataclass(frozen=True)
class DiscreteDistribution:
    """Atoms ``(value, probability)`` with exact probabilities summing to 1."""

    atoms: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        if not self.atoms:
            raise InvalidDistributionError("distribution needs at least one atom")
        total = Fraction(0)
        seen = set()
        for value, prob in self.atoms:
            if not isinstance(value, Fraction) or not isinstance(prob, Fraction):
                raise InvalidDistributionError("atoms must hold Fractions")
            if prob <= 0:
                raise InvalidDistributionError(f"probability {prob} is not positive")
            if value in seen:
                raise InvalidDistributionError(f"duplicate atom value {value}")
            seen.add(value)
            total += prob
        if total != 1:
            raise InvalidDistributionError(
                f"probabilities sum to {total}, not 1; refusing to renormalize"
            )

    # -- exact moments -------------------------------------------------

    def expect(self, f: Callable[[Fraction], Rational]) -> Fraction:
        return sum((Fraction(f(v)) * p for v, p in self.atoms), Fraction(0))

    def mean(self) -> Fraction:
        return self.expect(lambda v: v)

    def moment(self, k: int) -> Fraction:
        return self.expect(lambda v: v**k)

    def abs_moment(self, k: int) -> Fraction:
        return self.expect(lambda v: abs(v) ** k)

    def variance(self) -> Fraction:
        mu = self.mean()
        return self.expect(lambda v: (v - mu) ** 2)

    def size(self) -> int:
        return len(self.atoms)

    # -- float views for sampling / vectorized work --------------------

    def values_float(self) -> np.ndarray:
        return np.array([float(v) for v, _ in self.atoms])

    def probs_float(self) -> np.ndarray:
        p = np.array([float(q) for _, q in self.atoms])
        return p / p.sum()

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return rng.choice(self.values_float(), size=size, p=self.probs_float())

    def sample_atoms(self, rng: np.random.Generator, size: int) -> list:
        """Draw atom values themselves (exact objects, not floats)."""
        idx = rng.choice(len(self.atoms), size=size, p=self.probs_float())
        return [self.atoms[i][0] for i in np.atleast_1d(idx)]

    def scale(self, c: Rational) -> "DiscreteDistribution":
        c = Fraction(c)
        if c == 0:
            raise InvalidDistributionError("scaling by zero collapses atoms")
        return DiscreteDistribution(tuple((v * c, p) for v, p in self.atoms))

    def shift(self, c: Rational) -> "DiscreteDistribution":
        c = Fraction(c)
        return DiscreteDistribution(tuple((v + c, p) for v, p in self.atoms))


def from_pairs(pairs: Iterable[tuple]) -> DiscreteDistribution:
    """Build a distribution from (value, probability) pairs of mixed types."""
    return DiscreteDistribution(
        tuple((as_fraction(v), as_fraction(p)) for v, p in pairs)
    )


def uniform(values: Sequence) -> DiscreteDistribution:
    vals = [as_fraction(v) for v in values]
    p = Fraction(1, len(vals))
    return DiscreteDistribution(tuple((v, p) for v in vals))


# ---------------------------------------------------------------------------
# JSON file format: {"atoms": [{"value": "1/3", "prob": "1/2"}, ...]}.
# Probabilities must be "p/q" strings or integers; a non-normalized list is an
# error, never silently rescaled.
# ---------------------------------------------------------------------------


def parse_distribution(spec: dict) -> DiscreteDistribution:
    if "atoms" not in spec:
        raise InvalidDistributionError("distribution JSON needs an 'atoms' list")
    pairs = []
    for entry in spec["atoms"]:
        try:
            pairs.append((entry["value"], entry["prob"]))
        except (TypeError, KeyError) as exc:
            raise InvalidDistributionError(
                "each atom needs 'value' and 'prob' fields"
            ) from exc
    return from_pairs(pairs)


def load_distribution(path: str) -> DiscreteDistribution:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_distribution(json.load(handle))


def dump_distribution(dist: DiscreteDistribution, path: str) -> None:
    doc = {
        "atoms": [
            {"value": str(v), "prob": str(p)} for v, p in dist.atoms
        ]
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, indent=2)
        handle.write("\n")


# ---------------------------------------------------------------------------
# Named example distributions used throughout the CLI and the test corpus.
# ---------------------------------------------------------------------------


def builtin(name: str) -> DiscreteDistribution:
    try:
        return _BUILTINS[name]()
    except KeyError:
        raise InvalidDistributionError(
            f"unknown distribution {name!r}; choose from {sorted(_BUILTINS)}"
        ) from None


_BUILTINS: dict[str, Callable[[], DiscreteDistribution]] = {
    # symmetric three-point law; the workhorse of the exact U-statistic corpus
    "uniform3": lambda: uniform([-1, 0, 1]),
    "uniform5": lambda: uniform([-2, -1, 0, 1, 2]),
    "pm1": lambda: uniform([-1, 1]),
    # mean zero with unit second moment and a heavy atom above the clamp level
    "asym": lambda: from_pairs([(3, "1/10"), ("-1/3", "9/10")]),
    # mildly skewed bounded law
    "skew4": lambda: from_pairs(
        [(2, "1/10"), (0, "2/5"), ("-1/2", "2/5"), (-1, "1/10")]
    ),
}


def builtin_names() -> list[str]:
    return sorted(_BUILTINS)


# ---------------------------------------------------------------------------
# Randomized mean-zero configurations (exact arithmetic throughout) for the
# inequality corpora.
# ---------------------------------------------------------------------------


def rational_sqrt_floor(x: Fraction, digits: int = 12) -> Fraction:
    """Largest Fraction r with denominator 10**digits such that r*r <= x."""
    if x < 0:
        raise InvalidDistributionError("negative argument")
    scale = 10**digits
    r = Fraction(math.isqrt((x.numerator * scale * scale) // x.denominator), scale)
    while r * r > x:  # guard against isqrt flooring on the scaled numerator
        r -= Fraction(1, scale)
    return r


def random_mean_zero(
    rng: random.Random, n_atoms: int = 3, value_span: int = 4, denom: int = 12
) -> DiscreteDistribution:
    """A random mean-zero distribution with small rational atoms."""
    while True:
        values = set()
        while len(values) < n_atoms:
            values.add(
                Fraction(rng.randint(-value_span * denom, value_span * denom), denom)
            )
        weights = [rng.randint(1, 9) for _ in range(n_atoms)]
        total = sum(weights)
        probs = [Fraction(w, total) for w in weights]
        dist = DiscreteDistribution(tuple(zip(sorted(values), probs)))
        centered = dist.shift(-dist.mean())
        if len({v for v, _ in centered.atoms}) == n_atoms:
            return centered


def random_mean_zero_config(
    rng: random.Random,
    n_vars: int,
    variance_budget: Fraction = Fraction(1),
    n_atoms: int = 3,
) -> list[DiscreteDistribution]:
    """Independent mean-zero distributions with sum of variances <= budget.

    The common rational scaling factor is rounded down so the exact sum of
    second moments never exceeds the budget.
    """
    dists = [random_mean_zero(rng, n_atoms=n_atoms) for _ in range(n_vars)]
    total = sum(d.moment(2) for d in dists)
    r = rational_sqrt_floor(variance_budget / total)
    return [d.scale(r) for d in dists]
