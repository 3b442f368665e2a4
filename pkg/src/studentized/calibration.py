"""Calibrated absolute constants for inequality checks.

Several verified inequalities hold with an unspecified absolute constant.
Rather than guessing, each such constant is calibrated once as the largest
empirical ratio of left side to constant-free right side over a fixed
verification corpus, plus 10% headroom.  The frozen values below were
produced by ``calibrate_all`` on the corpus named in ``CORPUS_A``; the test
suite recalibrates on two disjoint corpora and asserts the values are stable.

Inequalities whose constants are fully explicit (the kernel moment bounds,
the clamped-sum moment bounds, the tail bridging bound) are checked with
constant 1 and are not listed here.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class CalibratedConstants:
    # |E f_x'(W_b^{(i)} + t)| <= C (e^{-x} + e^{-x+t})
    fprime_expectation: float
    # ||Pi_2||_2 <= C (||g||_3^3 + m ||g||_3 ||h||_3) / sqrt(n)
    pi2_norm: float
    # ||Pi_2 - Pi_2^{(i)}||_2 <= C (m ||g||_3 ||h||_3 + m^1.5 sqrt(||h||_2)) / n
    pi2_loo_norm: float
    # ||(1 + e^{W_b^{(i)}})(clamped D_1 difference)||_1 <= C ||D_1 - D_1^{(i)}||_2
    d1_chain_exp: float
    # ||xi_b (1 + e^{W_b^{(i)}/2})(clamped D_1 difference)||_1
    #     <= C ||xi||_2 ||D_1 - D_1^{(i)}||_2
    d1_chain_xi: float
    # KS distance <= C * (constant-free total of the main bound)
    ks_total_ratio: float


# Frozen from calibrate_all(corpus_a()); see tests/test_acceptance.py for the
# drift check against corpus_b().
CONSTANTS = CalibratedConstants(
    fprime_expectation=1.65,
    pi2_norm=0.62,
    pi2_loo_norm=0.25,
    d1_chain_exp=3.42,
    d1_chain_xi=2.72,
    ks_total_ratio=0.97,
)

HEADROOM = 1.1


def corpus_a() -> dict:
    """Primary calibration corpus: (kernel, distribution, n) combinations."""
    return {
        "fprime": [
            ("pm-sixth", 3, 1.0, 0.0),
            ("pm-sixth", 3, 2.0, 0.5),
            ("pm-sixth", 3, 1.0, -1.0),
            ("asym", 1, 1.5, 0.0),
            ("asym", 1, 8.0, 0.0),
            ("pm-quarter", 4, 4.0, 1.0),
        ],
        "ustat": [
            ("variance", "uniform3", 6),
            ("variance", "skew4", 6),
            ("mean", "uniform3", 6),
        ],
        "models": [
            ("variance", "uniform3", 6),
            ("mean", "uniform3", 5),
        ],
    }


def corpus_b() -> dict:
    """Disjoint corpus used only for the recalibration drift check."""
    return {
        "fprime": [
            ("pm-sixth", 3, 1.5, 0.25),
            ("pm-quarter", 4, 1.0, 0.0),
            ("pm-quarter", 4, 6.0, -0.5),
            ("asym", 1, 3.0, 1.0),
        ],
        "ustat": [
            ("variance", "uniform5", 7),
            ("mean", "skew4", 6),
            ("variance", "pm1", 7),
        ],
        "models": [
            ("variance", "uniform5", 5),
            ("mean", "skew4", 5),
        ],
    }


def _fprime_config(name: str, n: int):
    from fractions import Fraction

    from .distributions import builtin, from_pairs

    if name == "pm-sixth":
        dist = from_pairs([(1, Fraction(1, 6)), (-1, Fraction(1, 6)), (0, Fraction(2, 3))])
        return [dist] * n
    if name == "pm-quarter":
        dist = from_pairs(
            [(1, Fraction(1, 8)), (-1, Fraction(1, 8)), (0, Fraction(3, 4))]
        )
        return [dist] * n
    if name == "asym":
        return [builtin("asym")] * n
    raise KeyError(name)


def calibrate_fprime(cases) -> float:
    from .stein import expected_fprime_bound_check

    worst = 0.0
    for name, n, x, t in cases:
        dists = _fprime_config(name, n)
        lhs, rhs, _ = expected_fprime_bound_check(x, t, dists, constant=1.0)
        worst = max(worst, lhs / rhs)
    return worst * HEADROOM


def calibrate_pi2(cases) -> tuple[float, float]:
    from .distributions import builtin
    from .ustat import builtin_kernel, hoeffding, pi2_norm_ratios

    worst_norm = 0.0
    worst_loo = 0.0
    for kernel_name, dist_name, n in cases:
        dist = builtin(dist_name)
        comp = hoeffding(builtin_kernel(kernel_name), dist)
        r_norm, r_loo = pi2_norm_ratios(comp, n)
        worst_norm = max(worst_norm, r_norm)
        worst_loo = max(worst_loo, r_loo)
    return worst_norm * HEADROOM, worst_loo * HEADROOM


def calibrate_d1_chain(cases) -> tuple[float, float]:
    from .distributions import builtin
    from .nonlinear import d1_chain_ratios, tsn_censored_model
    from .ustat import builtin_kernel, hoeffding

    worst_exp = 0.0
    worst_xi = 0.0
    for kernel_name, dist_name, n in cases:
        dist = builtin(dist_name)
        comp = hoeffding(builtin_kernel(kernel_name), dist)
        model = tsn_censored_model(comp, n)
        r_exp, r_xi = d1_chain_ratios(model)
        worst_exp = max(worst_exp, r_exp)
        worst_xi = max(worst_xi, r_xi)
    return worst_exp * HEADROOM, worst_xi * HEADROOM


def calibrate_ks_ratio(cases) -> float:
    from .distributions import builtin
    from .nonlinear import bound_theorem_main, ks_distance, tsn_censored_model
    from .ustat import builtin_kernel, hoeffding

    worst = 0.0
    for kernel_name, dist_name, n in cases:
        dist = builtin(dist_name)
        comp = hoeffding(builtin_kernel(kernel_name), dist)
        model = tsn_censored_model(comp, n)
        report = bound_theorem_main(model, estimator="exact")
        ks = ks_distance(model, estimator="exact")
        worst = max(worst, ks / report.total_theorem1)
    return worst * HEADROOM


def calibrate_all(corpus: dict) -> CalibratedConstants:
    pi2_norm, pi2_loo = calibrate_pi2(corpus["ustat"])
    d1_exp, d1_xi = calibrate_d1_chain(corpus["models"])
    return CalibratedConstants(
        fprime_expectation=calibrate_fprime(corpus["fprime"]),
        pi2_norm=pi2_norm,
        pi2_loo_norm=pi2_loo,
        d1_chain_exp=d1_exp,
        d1_chain_xi=d1_xi,
        ks_total_ratio=calibrate_ks_ratio(corpus["models"]),
    )
