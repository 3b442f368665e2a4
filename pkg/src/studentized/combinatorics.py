"""Exact big-integer verification of binomial-coefficient identities.

All comparisons are exact: integers throughout, and rational identities are
compared by cross-multiplication, never by floating division.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import PreconditionError


def comb0(n: int, k: int) -> int:
    """C(n, k) with the convention that out-of-range coefficients are 0."""
    if n < 0 or k < 0 or k > n:
        return 0
    return math.comb(n, k)


@dataclass
class BinomialTable:
    """Pascal-recurrence table of C(n, k) for n <= n_max, built once."""

    n_max: int
    rows: list[list[int]] = field(init=False, repr=False)

    def __post_init__(self):
        rows = [[1]]
        for n in range(1, self.n_max + 1):
            prev = rows[-1]
            row = [1]
            for k in range(1, n):
                row.append(prev[k - 1] + prev[k])
            row.append(1)
            rows.append(row)
        self.rows = rows

    def comb(self, n: int, k: int) -> int:
        if n < 0 or n > self.n_max:
            raise PreconditionError(f"n={n} outside table range 0..{self.n_max}")
        if k < 0 or k > n:
            return 0
        return self.rows[n][k]


def vandermonde_check(n1: int, n2: int, m: int) -> bool:
    """sum_k C(n1,k) C(n2,m-k) == C(n1+n2, m), exactly."""
    if min(n1, n2, m) < 0:
        raise PreconditionError("arguments must be non-negative")
    lhs = sum(comb0(n1, k) * comb0(n2, m - k) for k in range(m + 1))
    return lhs == comb0(n1 + n2, m)


def product_identity_check(n: int, m: int, k: int) -> bool:
    """C(n,k) C(n-k,m-k) == C(n,m) C(m,k), exactly."""
    if min(n, m, k) < 0 or k > m or m > n:
        raise PreconditionError("need 0 <= k <= m <= n")
    return comb0(n, k) * comb0(n - k, m - k) == comb0(n, m) * comb0(m, k)


def difference_bound_check(a: int, b: int, e: int) -> bool:
    """C(a,b) - C(a-e,b) <= C(a,b) * b*e / (a-b+1) for positive a,b,e, b+e <= a.

    Compared after multiplying both sides by (a-b+1), so the comparison is
    between exact integers.
    """
    if min(a, b, e) < 1:
        raise PreconditionError("a, b, e must be positive integers")
    if b + e > a:
        raise PreconditionError("need b + e <= a")
    lhs = (comb0(a, b) - comb0(a - e, b)) * (a - b + 1)
    rhs = comb0(a, b) * b * e
    return lhs <= rhs


def enum_equalities_check(n: int, m: int) -> bool:
    """Five exact rational reductions of shifted binomial coefficients.

    Each identity is checked by cross-multiplication whenever every
    coefficient involved is well-defined (all arguments in range).
    """
    checks = [
        # C(n-2, m-1) * (n-1) == C(n-1, m-1) * (n-m)
        (n - 2, m - 1, n - 1, n - m),
        # C(n-2, m-2) * (n-1) == C(n-1, m-1) * (m-1)
        (n - 2, m - 2, n - 1, m - 1),
        # C(n-3, m-2) * (n-1)(n-2) == C(n-1, m-1) * (m-1)(n-m)
        (n - 3, m - 2, (n - 1) * (n - 2), (m - 1) * (n - m)),
        # C(n-3, m-3) * (n-1)(n-2) == C(n-1, m-1) * (m-1)(m-2)
        (n - 3, m - 3, (n - 1) * (n - 2), (m - 1) * (m - 2)),
        # C(n-4, m-4) * (n-1)(n-2)(n-3) == C(n-1, m-1) * (m-1)(m-2)(m-3)
        (
            n - 4,
            m - 4,
            (n - 1) * (n - 2) * (n - 3),
            (m - 1) * (m - 2) * (m - 3),
        ),
    ]
    base = comb0(n - 1, m - 1)
    for top, low, mult_l, mult_r in checks:
        if top < 0 or low < 0 or low > top:
            continue  # coefficient not well-defined for this (n, m)
        if comb0(top, low) * mult_l != base * mult_r:
            return False
    return True


# ---------------------------------------------------------------------------
# Full sweeps.  Any False is a build-blocking failure.
# ---------------------------------------------------------------------------


def sweep_vandermonde(n_max: int = 30) -> bool:
    return all(
        vandermonde_check(n1, n - n1, m)
        for n in range(n_max + 1)
        for n1 in range(n + 1)
        for m in range(n + 1)
    )


def sweep_product_identity(n_max: int = 30) -> bool:
    return all(
        product_identity_check(n, m, k)
        for n in range(n_max + 1)
        for m in range(n + 1)
        for k in range(m + 1)
    )


def sweep_difference_bound(a_max: int = 40) -> bool:
    return all(
        difference_bound_check(a, b, e)
        for a in range(2, a_max + 1)
        for b in range(1, a)
        for e in range(1, a - b + 1)
    )


def sweep_enum_equalities(n_max: int = 60) -> bool:
    return all(
        enum_equalities_check(n, m)
        for n in range(2, n_max + 1)
        for m in range(1, n)
    )


def run_all_sweeps() -> dict[str, bool]:
    return {
        "vandermonde": sweep_vandermonde(),
        "product_identity": sweep_product_identity(),
        "difference_bound": sweep_difference_bound(),
        "enum_equalities": sweep_enum_equalities(),
    }
