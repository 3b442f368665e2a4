"""Convergence-rate study for Studentized U-statistics.

For a grid of sample sizes, estimates the Kolmogorov distance of T_n and
T_n^* from the standard normal by vectorized Monte Carlo, next to the
constant-free error-bound bracket, so the root-n decay is visible in one
table.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import DiscreteDistribution
from .errors import CostCapExceeded, DomainError
from .config import DEFAULT
from .montecarlo import dkw_envelope, ks_statistic_vs_normal, run_chunks
from .ustat import (
    HoeffdingComponents,
    SymmetricKernel,
    batch_t_statistics,
    be_bound_ustat,
    bridging_check,
    center_kernel,
    hoeffding,
    moment_report,
    studentized,
)


@dataclass(frozen=True)
class ScalingRow:
    n: int
    m: int
    reps: int
    ks_t: float
    ks_t_star: float
    bound: float
    ratio: float
    sqrt_n_ks: float
    ks_se: float
    bridging_sup: float

    def as_record(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "reps": self.reps,
            "ks_t": self.ks_t,
            "ks_t_star": self.ks_t_star,
            "bound": self.bound,
            "ratio": self.ratio,
            "sqrt_n_ks": self.sqrt_n_ks,
            "ks_se": self.ks_se,
            "bridging_sup": self.bridging_sup,
        }


def bridging_sup(n: int, m: int, x_max: float = 40.0, points: int = 400) -> float:
    """Largest value of the tail-difference envelope over a threshold grid."""
    grid = np.linspace(0.0, x_max, points + 1)
    return max(bridging_check(float(x), n, m).rhs for x in grid)


def _sample_t_pair(
    kernel: SymmetricKernel,
    dist: DiscreteDistribution,
    n: int,
    reps: int,
    seed: int,
    workers: int,
) -> tuple[np.ndarray, np.ndarray]:
    if kernel.batch_q_u is not None:

        def task(index, rng, count):
            x = dist.sample(rng, (count, n))
            return batch_t_statistics(kernel, x)

    else:
        calls = reps * math.comb(n, kernel.degree)
        if calls > DEFAULT.caps.kernel_calls:
            raise CostCapExceeded(
                f"{calls} kernel calls for the generic path exceed the cap; "
                "use a kernel with a vectorized path or reduce reps"
            )

        def task(index, rng, count):
            ts = np.empty(count)
            t_stars = np.empty(count)
            for r in range(count):
                data = dist.sample_atoms(rng, n)
                ts[r], t_stars[r] = studentized(kernel, data)
            return ts, t_stars

    parts = run_chunks(reps, seed, task, workers)
    t = np.concatenate([p[0] for p in parts])
    t_star = np.concatenate([p[1] for p in parts])
    return t, t_star


def scaling_study(
    kernel: SymmetricKernel,
    dist: DiscreteDistribution,
    n_grid: tuple[int, ...],
    reps: int,
    seed: int,
    workers: int = 1,
) -> list[ScalingRow]:
    """One row per sample size: KS estimates, the bound bracket, their ratio.

    The kernel is centered to exact mean zero under ``dist`` first; the
    Studentized statistics are scale invariant, so no variance normalization
    is needed for sampling.
    """
    kernel = center_kernel(kernel, dist)
    comp: HoeffdingComponents = hoeffding(kernel, dist)
    moments = moment_report(comp)
    m = kernel.degree
    rows = []
    for idx, n in enumerate(n_grid):
        if 2 * m >= n:
            raise DomainError(f"need 2m < n for every grid point; n={n}, m={m}")
        t, t_star = _sample_t_pair(kernel, dist, n, reps, seed + idx, workers)
        ks_t = ks_statistic_vs_normal(t)
        ks_star = ks_statistic_vs_normal(t_star)
        bound = be_bound_ustat(moments, n, m)
        rows.append(
            ScalingRow(
                n=n,
                m=m,
                reps=reps,
                ks_t=ks_t,
                ks_t_star=ks_star,
                bound=bound,
                ratio=ks_t / bound,
                sqrt_n_ks=math.sqrt(n) * ks_t,
                ks_se=0.5 / math.sqrt(reps),
                bridging_sup=bridging_sup(n, m),
            )
        )
    return rows


def rate_summary(rows: list[ScalingRow]) -> dict:
    """Spread of sqrt(n) * KS and the worst monotonicity violation."""
    sqrt_n_ks = [r.sqrt_n_ks for r in rows]
    worst_increase = 0.0
    for prev, cur in zip(rows, rows[1:]):
        worst_increase = max(worst_increase, cur.ks_t - prev.ks_t)
    return {
        "sqrt_n_ks_max_over_min": max(sqrt_n_ks) / min(sqrt_n_ks),
        "worst_ks_increase": worst_increase,
        "dkw_envelope": dkw_envelope(rows[0].reps) if rows else 0.0,
    }
