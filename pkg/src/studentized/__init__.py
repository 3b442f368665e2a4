"""Normal-approximation error machinery for Studentized statistics.

The package evaluates Studentized (self-normalized) nonlinear statistics and
Studentized U-statistics, computes the constant-free totals of their uniform
normal-approximation error bounds, and verifies every supporting inequality
(kernel envelopes, clamped-sum concentration, counting identities, moment
bounds) by exact enumeration over discrete distributions at desk scale.
"""
from __future__ import annotations

__version__ = "0.1.0"

from .censoring import (
    CensorInterval,
    CensoredSummandSet,
    censor,
    censor_remainder,
    censor_xi,
)
from .distributions import DiscreteDistribution, builtin, from_pairs, uniform
from .stein import (
    KernelEvaluation,
    normal_cdf,
    normal_sf,
    normal_tail_bounds,
    stein_f,
    stein_f_prime,
    stein_g,
    stein_residual,
)

__all__ = [
    "CensorInterval",
    "CensoredSummandSet",
    "DiscreteDistribution",
    "KernelEvaluation",
    "builtin",
    "censor",
    "censor_remainder",
    "censor_xi",
    "from_pairs",
    "normal_cdf",
    "normal_sf",
    "normal_tail_bounds",
    "stein_f",
    "stein_f_prime",
    "stein_g",
    "stein_residual",
    "uniform",
]
