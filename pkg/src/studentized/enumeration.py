"""Brute-force expectations over products of discrete distributions.

Probabilities stay exact rationals throughout.  When the integrand returns
Fractions the result is an exact Fraction; when it returns floats the atom
values are combined in a fixed order with compensated summation, so the only
rounding is the final double-precision representation of each term.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Callable, Iterator, Sequence

from .config import DEFAULT
from .distributions import DiscreteDistribution
from .errors import EnumerationCapExceeded


def product_size(dists: Sequence[DiscreteDistribution]) -> int:
    size = 1
    for d in dists:
        size *= d.size()
    return size


def check_cap(dists: Sequence[DiscreteDistribution], cap: int | None = None) -> int:
    cap = DEFAULT.caps.enumeration_atoms if cap is None else cap
    size = product_size(dists)
    if size > cap:
        raise EnumerationCapExceeded(
            f"product space has {size} atoms, cap is {cap}"
        )
    return size


def iter_product(
    dists: Sequence[DiscreteDistribution], cap: int | None = None
) -> Iterator[tuple[tuple[Fraction, ...], Fraction]]:
    """Yield every outcome tuple with its exact probability."""
    check_cap(dists, cap)
    for combo in itertools.product(*(d.atoms for d in dists)):
        values = tuple(v for v, _ in combo)
        prob = Fraction(1)
        for _, p in combo:
            prob *= p
        yield values, prob


def enumerate_expectation(
    dists: Sequence[DiscreteDistribution],
    f: Callable[[tuple[Fraction, ...]], object],
    cap: int | None = None,
):
    """E[f(X_1, ..., X_n)] over the product law.

    Returns a Fraction when ``f`` yields exact values for every atom, a float
    otherwise.
    """
    exact_total = Fraction(0)
    float_terms: list[float] = []
    exact = True
    for values, prob in iter_product(dists, cap):
        out = f(values)
        if exact and isinstance(out, (Fraction, int)):
            exact_total += prob * out
        else:
            if exact:
                # switch mode, pushing the exact prefix into the float stream
                float_terms.append(float(exact_total))
                exact = False
            float_terms.append(float(prob) * float(out))
    if exact:
        return exact_total
    return math.fsum(float_terms)


_FSUM_BLOCK = 8192


def enumerate_functionals(
    dists: Sequence[DiscreteDistribution],
    f: Callable[[tuple[Fraction, ...]], Sequence[float]],
    n_out: int,
    cap: int | None = None,
) -> list[float]:
    """Expectations of several functionals in one pass over the atoms.

    Per-component terms are reduced blockwise with ``math.fsum`` in
    enumeration order, so results are deterministic and accurate to a few
    ulps regardless of the product-space size.
    """
    columns: list[list[float]] = [[] for _ in range(n_out)]
    for values, prob in iter_product(dists, cap):
        p = float(prob)
        out = f(values)
        for j in range(n_out):
            col = columns[j]
            col.append(p * float(out[j]))
            if len(col) >= _FSUM_BLOCK:
                columns[j] = [math.fsum(col)]
    return [math.fsum(col) for col in columns]
