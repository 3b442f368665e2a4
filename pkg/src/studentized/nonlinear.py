"""Studentized nonlinear statistics and their error-bound evaluators.

A statistic of the form (W_n + D_1) / sqrt(1 + D_2), with W_n a sum of
mean-zero unit-total-variance summands and D_1, D_2 vanishing remainders, is
described by a :class:`NonlinearStatisticModel`.  The evaluators below
compute every expectation entering the two uniform normal-approximation
error bounds (the primitive one with clamped remainders and exponential
weights, and the user-friendly second-moment form available when the
denominator remainder has the centered-square-plus-rest shape), either by
exact enumeration over discrete product laws or by common-random-number
Monte Carlo with per-term standard errors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .censoring import censor_remainder, censor_xi
from .combinatorics import comb0
from .config import DEFAULT
from .distributions import DiscreteDistribution
from .enumeration import check_cap, enumerate_functionals, iter_product
from .errors import DomainError, ModelContractError, PreconditionError
from .montecarlo import (
    MomentAccumulator,
    MonteCarloConfig,
    exact_ks_vs_normal,
    ks_statistic_vs_normal,
    run_chunks,
)
from .stein import stein_f
from .ustat import HoeffdingComponents, _subset_sums

Sample = tuple


@dataclass
class NonlinearStatisticModel:
    """A Studentized nonlinear statistic as data-space callables.

    ``xi(i, x)`` maps coordinate i's raw datum to its linear summand; the
    remainder callables receive the full sample, and the leave-one-out
    variants additionally receive the dropped index and must not read that
    coordinate.  ``pi2``/``pi2_loo`` are required only when the denominator
    remainder has the centered-square-plus-rest shape.  ``dists`` enables
    exact enumeration; ``sampler`` (or ``dists`` as a fallback) enables
    Monte Carlo.
    """

    n: int
    xi: Callable[[int, object], float]
    d1: Callable[[Sample], float]
    d2: Callable[[Sample], float]
    d1_loo: Callable[[int, Sample], float] | None = None
    d2_loo: Callable[[int, Sample], float] | None = None
    pi2: Callable[[Sample], float] | None = None
    pi2_loo: Callable[[int, Sample], float] | None = None
    dists: list[DiscreteDistribution] | None = None
    sampler: Callable[[np.random.Generator], Sample] | None = None
    name: str = ""

    def draw(self, rng: np.random.Generator) -> Sample:
        if self.sampler is not None:
            return tuple(self.sampler(rng))
        if self.dists is not None:
            return tuple(d.sample_atoms(rng, 1)[0] for d in self.dists)
        raise ModelContractError("model has neither a sampler nor distributions")

    def xi_values(self, sample: Sample) -> list[float]:
        return [float(self.xi(i, sample[i])) for i in range(self.n)]


def evaluate_tsn(model: NonlinearStatisticModel, sample: Sequence) -> float:
    """(W_n + D_1) / sqrt(1 + D_2) with the degenerate-denominator convention.

    When 1 + D_2 is zero the statistic is 0, +inf or -inf according to the
    sign of the numerator.
    """
    sample = tuple(sample)
    if len(sample) != model.n:
        raise DomainError(f"sample has length {len(sample)}, model.n={model.n}")
    w_n = math.fsum(model.xi_values(sample))
    d2v = float(model.d2(sample))
    if d2v < -1.0:
        raise ModelContractError(f"D_2 = {d2v} < -1 violates the model contract")
    numerator = w_n + float(model.d1(sample))
    denom = 1.0 + d2v
    if denom == 0.0:
        if numerator > 0:
            return math.inf
        if numerator < 0:
            return -math.inf
        return 0.0
    return numerator / math.sqrt(denom)


def validate_model(
    model: NonlinearStatisticModel, tol: float = 1e-9, reps: int = 2000, seed: int = 0
) -> None:
    """Check mean-zero and unit-total-variance of the linear summands."""
    if model.dists is not None:
        mean_gap = 0.0
        total_sq = 0.0
        for i, dist in enumerate(model.dists):
            vals = [(float(p), float(model.xi(i, v))) for v, p in dist.atoms]
            mean_gap = max(mean_gap, abs(math.fsum(p * x for p, x in vals)))
            total_sq += math.fsum(p * x * x for p, x in vals)
    else:
        rng = np.random.default_rng(seed)
        sums = np.zeros(model.n)
        sums_sq = np.zeros(model.n)
        for _ in range(reps):
            xs = model.xi_values(model.draw(rng))
            sums += xs
            sums_sq += np.square(xs)
        mean_gap = float(np.max(np.abs(sums / reps)))
        total_sq = float(np.sum(sums_sq) / reps)
        tol = max(tol, 6.0 / math.sqrt(reps))
    if mean_gap > tol:
        raise ModelContractError(f"summand means deviate from 0 by {mean_gap:.2e}")
    if abs(total_sq - 1.0) > tol:
        raise ModelContractError(
            f"total summand variance is {total_sq:.12f}, need 1"
        )


# ---------------------------------------------------------------------------
# Term evaluation shared by the exact and Monte Carlo paths.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundReport:
    """Every constant-free term of the primitive error bound.

    ``total_theorem1`` adds the two remainder tail probabilities and the
    braced terms with multiplier one; no unknown absolute constant is folded
    in (the corpus-calibrated values live in :mod:`studentized.calibration`).
    """

    estimator: str
    reps: int
    beta2: float
    beta3: float
    d1_norm: float
    exp_weighted_d2_sq: float
    sup_x_term: float
    sup_x_argmax: float
    tail_probs: tuple[float, float]
    loo_exp_terms: tuple[float, float]
    loo_xi_terms: tuple[float, float]
    total_theorem1: float
    total_theorem2_brace: float | None
    se: dict[str, float] = field(default_factory=dict)

    def term_rows(self) -> list[tuple[str, float, float]]:
        rows = [
            ("beta2", self.beta2, self.se.get("beta2", 0.0)),
            ("beta3", self.beta3, self.se.get("beta3", 0.0)),
            ("d1_norm", self.d1_norm, self.se.get("d1_norm", 0.0)),
            (
                "exp_weighted_d2_sq",
                self.exp_weighted_d2_sq,
                self.se.get("exp_weighted_d2_sq", 0.0),
            ),
            ("sup_x_term", self.sup_x_term, self.se.get("sup_x_term", 0.0)),
            ("tail_prob_d1", self.tail_probs[0], self.se.get("tail_prob_d1", 0.0)),
            ("tail_prob_d2", self.tail_probs[1], self.se.get("tail_prob_d2", 0.0)),
            ("loo_exp_d1", self.loo_exp_terms[0], self.se.get("loo_exp_d1", 0.0)),
            ("loo_exp_d2", self.loo_exp_terms[1], self.se.get("loo_exp_d2", 0.0)),
            ("loo_xi_d1", self.loo_xi_terms[0], self.se.get("loo_xi_d1", 0.0)),
            ("loo_xi_d2", self.loo_xi_terms[1], self.se.get("loo_xi_d2", 0.0)),
            ("total_theorem1", self.total_theorem1, 0.0),
        ]
        if self.total_theorem2_brace is not None:
            rows.append(("total_theorem2_brace", self.total_theorem2_brace, 0.0))
        return rows


class _TermLayout:
    """Index map for the flat per-sample integrand vector."""

    def __init__(self, n: int, grid: np.ndarray, with_pi2: bool):
        self.n = n
        self.grid = grid
        self.with_pi2 = with_pi2
        g = grid.size
        self.i_tail1 = 0
        self.i_tail2 = 1
        self.i_beta2 = 2
        self.i_beta3 = 3
        self.i_d1b_sq = 4
        self.i_wexp_d2 = 5
        self.i_fx = 6
        self.i_loo_exp = 6 + g  # 2 * n entries, j-major
        self.i_loo_xi = self.i_loo_exp + 2 * n
        self.i_xib_sq = self.i_loo_xi + 2 * n  # n entries
        self.i_abs_xi3 = self.i_xib_sq + n
        self.i_d1_sq = self.i_abs_xi3 + 1
        self.i_xi_sq = self.i_d1_sq + 1  # n entries
        self.i_d1_diff_sq = self.i_xi_sq + n  # n entries
        base = self.i_d1_diff_sq + n
        if with_pi2:
            self.i_pi2_sq = base
            self.i_pi2_diff_sq = base + 1  # n entries
            self.size = base + 1 + n
        else:
            self.size = base


def _require_loo(model: NonlinearStatisticModel) -> None:
    if model.d1_loo is None or model.d2_loo is None:
        raise PreconditionError(
            "bound evaluation needs the leave-one-out remainder functions"
        )


def _integrand(model: NonlinearStatisticModel, layout: _TermLayout, sample: Sample) -> np.ndarray:
    n = model.n
    out = np.zeros(layout.size)
    xi = model.xi_values(sample)
    xib = [censor_xi(v) for v in xi]
    w_b = math.fsum(xib)
    d1v = float(model.d1(sample))
    d2v = float(model.d2(sample))
    if d2v < -1.0:
        raise ModelContractError(f"D_2 = {d2v} < -1 violates the model contract")
    d1b = censor_remainder(d1v)
    d2b = censor_remainder(d2v)

    out[layout.i_tail1] = 1.0 if abs(d1v) > 0.5 else 0.0
    out[layout.i_tail2] = 1.0 if abs(d2v) > 0.5 else 0.0
    out[layout.i_beta2] = math.fsum(v * v for v in xi if abs(v) > 1.0)
    out[layout.i_beta3] = math.fsum(v**3 for v in xi if abs(v) <= 1.0)
    out[layout.i_d1b_sq] = d1b * d1b
    out[layout.i_wexp_d2] = (1.0 + math.exp(w_b)) * d2b * d2b
    out[layout.i_fx : layout.i_fx + layout.grid.size] = d2b * np.asarray(
        stein_f(layout.grid, w_b)
    )

    for i in range(n):
        w_b_i = w_b - xib[i]
        exp_full = math.exp(w_b_i)
        exp_half = math.exp(0.5 * w_b_i)
        for j, (dv, db, loo) in enumerate(
            (
                (d1v, d1b, model.d1_loo),
                (d2v, d2b, model.d2_loo),
            )
        ):
            loo_v = float(loo(i, sample))
            diff_bar = abs(db - censor_remainder(loo_v))
            out[layout.i_loo_exp + j * n + i] = (1.0 + exp_full) * diff_bar
            out[layout.i_loo_xi + j * n + i] = (
                abs(xib[i]) * (1.0 + exp_half) * diff_bar
            )
            if j == 0:
                out[layout.i_d1_diff_sq + i] = (d1v - loo_v) ** 2
        out[layout.i_xib_sq + i] = xib[i] * xib[i]
        out[layout.i_xi_sq + i] = xi[i] * xi[i]

    out[layout.i_abs_xi3] = math.fsum(abs(v) ** 3 for v in xi)
    out[layout.i_d1_sq] = d1v * d1v

    if layout.with_pi2:
        pi2v = float(model.pi2(sample))
        out[layout.i_pi2_sq] = pi2v * pi2v
        for i in range(n):
            diff = pi2v - float(model.pi2_loo(i, sample))
            out[layout.i_pi2_diff_sq + i] = diff * diff
    return out


def _evaluate_terms(
    model: NonlinearStatisticModel,
    mc: MonteCarloConfig | None,
    estimator: str,
    x_grid: np.ndarray | None,
) -> tuple[_TermLayout, np.ndarray, np.ndarray, str, int]:
    """(layout, means, standard errors, mode, reps) for all bound terms."""
    _require_loo(model)
    grid = DEFAULT.sup_x.values() if x_grid is None else np.asarray(x_grid, float)
    with_pi2 = model.pi2 is not None and model.pi2_loo is not None
    layout = _TermLayout(model.n, grid, with_pi2)

    if estimator == "auto":
        estimator = "exact" if model.dists is not None else "mc"
    if estimator == "exact":
        if model.dists is None:
            raise PreconditionError("exact evaluation needs model.dists")
        check_cap(model.dists)
        means = np.array(
            enumerate_functionals(
                model.dists, lambda values: _integrand(model, layout, values), layout.size
            )
        )
        return layout, means, np.zeros(layout.size), "exact", 0
    if estimator != "mc":
        raise DomainError(f"unknown estimator {estimator!r}")
    if mc is None:
        raise PreconditionError("Monte Carlo evaluation needs a MonteCarloConfig")

    def task(index: int, rng: np.random.Generator, count: int) -> MomentAccumulator:
        acc = MomentAccumulator(layout.size)
        for _ in range(count):
            acc.add(_integrand(model, layout, model.draw(rng)))
        return acc

    total = MomentAccumulator(layout.size)
    for part in run_chunks(mc.reps, mc.seed, task, mc.workers, mc.chunk):
        total.merge(part)
    return layout, total.mean(), total.se(), "mc", mc.reps


def _sqrt_with_se(mean: float, se: float) -> tuple[float, float]:
    root = math.sqrt(max(mean, 0.0))
    return root, (se / (2.0 * root) if root > 0.0 else math.sqrt(se))


def bound_theorem_main(
    model: NonlinearStatisticModel,
    mc: MonteCarloConfig | None = None,
    estimator: str = "auto",
    x_grid: np.ndarray | None = None,
) -> BoundReport:
    """Every term of the primitive uniform error bound, with standard errors.

    All expectations share one stream of replicates (common random numbers)
    in Monte Carlo mode; in exact mode they share one enumeration pass.
    """
    layout, means, ses, mode, reps = _evaluate_terms(model, mc, estimator, x_grid)
    n = model.n

    d1_norm, d1_norm_se = _sqrt_with_se(means[layout.i_d1b_sq], ses[layout.i_d1b_sq])
    fx_means = means[layout.i_fx : layout.i_fx + layout.grid.size]
    fx_ses = ses[layout.i_fx : layout.i_fx + layout.grid.size]
    sup_values = np.abs(layout.grid * fx_means)
    sup_idx = int(np.argmax(sup_values))

    exi_b_sq = means[layout.i_xib_sq : layout.i_xib_sq + n]
    loo_exp = [0.0, 0.0]
    loo_xi = [0.0, 0.0]
    loo_exp_se = [0.0, 0.0]
    loo_xi_se = [0.0, 0.0]
    for j in (0, 1):
        s = slice(layout.i_loo_exp + j * n, layout.i_loo_exp + (j + 1) * n)
        loo_exp[j] = float(np.sum(exi_b_sq * means[s]))
        loo_exp_se[j] = float(np.sqrt(np.sum((exi_b_sq * ses[s]) ** 2)))
        s = slice(layout.i_loo_xi + j * n, layout.i_loo_xi + (j + 1) * n)
        loo_xi[j] = float(np.sum(means[s]))
        loo_xi_se[j] = float(np.sqrt(np.sum(ses[s] ** 2)))

    tail = (float(means[layout.i_tail1]), float(means[layout.i_tail2]))
    total = (
        tail[0]
        + tail[1]
        + float(means[layout.i_beta2])
        + float(means[layout.i_beta3])
        + d1_norm
        + float(means[layout.i_wexp_d2])
        + float(sup_values[sup_idx])
        + sum(loo_exp)
        + sum(loo_xi)
    )

    brace2 = None
    if layout.with_pi2:
        brace2 = _theorem2_brace(layout, means)

    return BoundReport(
        estimator=mode,
        reps=reps,
        beta2=float(means[layout.i_beta2]),
        beta3=float(means[layout.i_beta3]),
        d1_norm=d1_norm,
        exp_weighted_d2_sq=float(means[layout.i_wexp_d2]),
        sup_x_term=float(sup_values[sup_idx]),
        sup_x_argmax=float(layout.grid[sup_idx]),
        tail_probs=tail,
        loo_exp_terms=(loo_exp[0], loo_exp[1]),
        loo_xi_terms=(loo_xi[0], loo_xi[1]),
        total_theorem1=total,
        total_theorem2_brace=brace2,
        se={
            "beta2": float(ses[layout.i_beta2]),
            "beta3": float(ses[layout.i_beta3]),
            "d1_norm": d1_norm_se,
            "exp_weighted_d2_sq": float(ses[layout.i_wexp_d2]),
            "sup_x_term": float(layout.grid[sup_idx] * fx_ses[sup_idx]),
            "tail_prob_d1": float(ses[layout.i_tail1]),
            "tail_prob_d2": float(ses[layout.i_tail2]),
            "loo_exp_d1": loo_exp_se[0],
            "loo_exp_d2": loo_exp_se[1],
            "loo_xi_d1": loo_xi_se[0],
            "loo_xi_d2": loo_xi_se[1],
        },
    )


def _theorem2_brace(layout: _TermLayout, means: np.ndarray) -> float:
    n = layout.n
    xi_norms = np.sqrt(np.maximum(means[layout.i_xi_sq : layout.i_xi_sq + n], 0.0))
    d1_diffs = np.sqrt(
        np.maximum(means[layout.i_d1_diff_sq : layout.i_d1_diff_sq + n], 0.0)
    )
    pi2_diffs = np.sqrt(
        np.maximum(means[layout.i_pi2_diff_sq : layout.i_pi2_diff_sq + n], 0.0)
    )
    return (
        float(means[layout.i_abs_xi3])
        + math.sqrt(max(means[layout.i_d1_sq], 0.0))
        + math.sqrt(max(means[layout.i_pi2_sq], 0.0))
        + float(np.sum(xi_norms * d1_diffs))
        + float(np.sum(xi_norms * pi2_diffs))
    )


def bound_theorem_main2(
    model: NonlinearStatisticModel,
    mc: MonteCarloConfig | None = None,
    estimator: str = "auto",
) -> float:
    """Braced total of the second-moment (user-friendly) error bound.

    Requires the centered-square-plus-rest shape of the denominator
    remainder, i.e. the model must supply ``pi2`` and ``pi2_loo``.
    """
    if model.pi2 is None or model.pi2_loo is None:
        raise PreconditionError(
            "the second-moment bound needs pi2 and pi2_loo on the model"
        )
    layout, means, _, _, _ = _evaluate_terms(model, mc, estimator, np.array([0.0]))
    return _theorem2_brace(layout, means)


# ---------------------------------------------------------------------------
# Kolmogorov distance of the statistic from the standard normal.
# ---------------------------------------------------------------------------


def ks_distance(
    model: NonlinearStatisticModel,
    estimator: str = "exact",
    mc: MonteCarloConfig | None = None,
) -> float:
    """sup_x |P(T <= x) - Phi(x)|, exactly or from replicates."""
    if estimator == "exact":
        if model.dists is None:
            raise PreconditionError("exact KS needs model.dists")
        atoms: dict[float, Fraction] = {}
        for values, prob in iter_product(model.dists):
            t = evaluate_tsn(model, values)
            atoms[t] = atoms.get(t, Fraction(0)) + prob
        return exact_ks_vs_normal([(t, float(p)) for t, p in atoms.items()])
    if estimator != "mc":
        raise DomainError(f"unknown estimator {estimator!r}")
    if mc is None:
        raise PreconditionError("Monte Carlo KS needs a MonteCarloConfig")

    def task(index: int, rng: np.random.Generator, count: int) -> np.ndarray:
        return np.array(
            [evaluate_tsn(model, model.draw(rng)) for _ in range(count)]
        )

    samples = np.concatenate(run_chunks(mc.reps, mc.seed, task, mc.workers, mc.chunk))
    return ks_statistic_vs_normal(samples)


# ---------------------------------------------------------------------------
# Models built from U-statistic components.
# ---------------------------------------------------------------------------


class _UStatSampleCache:
    """One-slot memo of per-sample subset sums shared by the model callables."""

    def __init__(self, comp: HoeffdingComponents, n: int):
        self.comp = comp
        self.n = n
        self._key: Sample | None = None
        self._value: dict | None = None

    def get(self, sample: Sample) -> dict:
        key = tuple(sample)
        if key != self._key:
            self._value = self._compute(key)
            self._key = key
        return self._value

    def _compute(self, sample: Sample) -> dict:
        comp, n = self.comp, self.n
        m = comp.m
        root_n = math.sqrt(n)
        xi = np.array([comp.g(x) / root_n for x in sample])
        xi_b = np.array([censor_xi(v) for v in xi])
        psi_sums, pair_sums = _subset_sums(comp, sample)
        total_hbar = float(np.sum(psi_sums)) / m
        coef = 2.0 * (n - 1) / ((n - m) * comb0(n - 1, m - 1) * root_n)
        delta2b = coef * float(np.sum(xi_b * psi_sums))
        delta2b_loo = np.empty(n)
        for i in range(n):
            inner = psi_sums - pair_sums[:, i]
            inner[i] = 0.0
            delta2b_loo[i] = coef * float(np.sum(xi_b * inner))
        return {
            "xi": xi,
            "xi_b": xi_b,
            "psi_sums": psi_sums,
            "total_hbar": total_hbar,
            "delta2b": delta2b,
            "delta2b_loo": delta2b_loo,
        }


def tsn_censored_model(
    comp: HoeffdingComponents,
    n: int,
    variant: str = "with_rootn",
    name: str = "",
) -> NonlinearStatisticModel:
    """The clamped-denominator representation of the starred Studentizer.

    The denominator remainder is max(-1, V_b^2 - 1 + shift + delta_2b) with
    the clamped summand squares, which has the centered-square-plus-rest
    shape; ``pi2``/``pi2_loo`` and all leave-one-out functions are provided.
    ``variant`` controls the n^{-1/2} cushion ("with_rootn" or "without").
    """
    if variant not in ("with_rootn", "without"):
        raise DomainError(f"unknown variant {variant!r}")
    m = comp.m
    if 2 * m >= n:
        raise DomainError(f"need 2m < n, got n={n}, m={m}")
    root_n = math.sqrt(n)
    shift = 1.0 / root_n if variant == "with_rootn" else 0.0
    c_choose = comb0(n - 1, m - 1)
    cache = _UStatSampleCache(comp, n)

    exi_b_sq = math.fsum(
        float(p) * censor_xi(comp.g(v) / root_n) ** 2 for v, p in comp.dist.atoms
    )
    tail_const = math.fsum(
        float(p) * (comp.g(v) ** 2 / n - 1.0)
        for v, p in comp.dist.atoms
        if abs(comp.g(v)) / root_n > 1.0
    )

    def d1(sample):
        return cache.get(sample)["total_hbar"] / (root_n * c_choose)

    def d1_loo(i, sample):
        ctx = cache.get(sample)
        return (ctx["total_hbar"] - ctx["psi_sums"][i]) / (root_n * c_choose)

    def d2(sample):
        ctx = cache.get(sample)
        v_b_sq = float(np.sum(ctx["xi_b"] ** 2))
        return max(-1.0, v_b_sq - 1.0 + shift + ctx["delta2b"])

    def pi2(sample):
        return cache.get(sample)["delta2b"] + shift - n * tail_const

    def pi2_loo(i, sample):
        ctx = cache.get(sample)
        return ctx["delta2b_loo"][i] + shift - (n - 1) * tail_const

    def d2_loo(i, sample):
        ctx = cache.get(sample)
        xi_b = ctx["xi_b"]
        pi1_loo = float(np.sum(xi_b**2) - xi_b[i] ** 2) - (n - 1) * exi_b_sq
        return max(-1.0, pi1_loo + pi2_loo(i, sample))

    return NonlinearStatisticModel(
        n=n,
        xi=lambda i, x: comp.g(x) / root_n,
        d1=d1,
        d2=d2,
        d1_loo=d1_loo,
        d2_loo=d2_loo,
        pi2=pi2,
        pi2_loo=pi2_loo,
        dists=[comp.dist] * n,
        name=name or f"ustat-{comp.kernel.name}-{variant}",
    )


def tsn_star_model(
    comp: HoeffdingComponents, n: int, name: str = ""
) -> NonlinearStatisticModel:
    """Exact representation of the starred Studentizer as a T_SN model.

    The denominator is the full starred jackknife scale, so
    ``evaluate_tsn`` reproduces T_n^* exactly; leave-one-out functions drop
    every term involving the left-out coordinate.
    """
    m = comp.m
    if 2 * m >= n:
        raise DomainError(f"need 2m < n, got n={n}, m={m}")
    root_n = math.sqrt(n)
    c_choose = comb0(n - 1, m - 1)
    cache = _UStatSampleCache(comp, n)
    d_n_sq = n / (n - 1)

    def d1(sample):
        return cache.get(sample)["total_hbar"] / (root_n * c_choose)

    def d1_loo(i, sample):
        ctx = cache.get(sample)
        return (ctx["total_hbar"] - ctx["psi_sums"][i]) / (root_n * c_choose)

    def scale_sq(sample):
        ctx = cache.get(sample)
        xi = ctx["xi"]
        psi = ctx["psi_sums"] / root_n
        w_n = float(np.sum(xi))
        lambda_sq = float(np.sum(psi * psi))
        delta2 = 2.0 * (n - 1) / ((n - m) * c_choose) * float(np.sum(xi * psi))
        delta1 = (
            (n * (m - 1) ** 2 / (n - m) ** 2 + 2.0 * (m - 1) / (n - m)) * w_n**2
            + (n - 1) ** 2 / (c_choose**2 * (n - m) ** 2) * lambda_sq
            + 2.0
            * (n - 1)
            * (m - 1)
            / ((n - m) ** 2 * c_choose)
            * w_n
            * float(np.sum(psi))
        )
        return d_n_sq * (float(np.sum(xi * xi)) + delta1 + delta2)

    return NonlinearStatisticModel(
        n=n,
        xi=lambda i, x: comp.g(x) / root_n,
        d1=d1,
        d2=lambda sample: scale_sq(sample) - 1.0,
        d1_loo=d1_loo,
        d2_loo=None,
        dists=[comp.dist] * n,
        name=name or f"ustat-star-{comp.kernel.name}",
    )


def scaled_iid_model(
    dist: DiscreteDistribution, n: int, name: str = ""
) -> NonlinearStatisticModel:
    """Zero-remainder model: W_n alone, summands scaled to unit total variance."""
    scale = 1.0 / math.sqrt(n * float(dist.variance()))
    if dist.mean() != 0:
        raise PreconditionError("zero-remainder model needs a mean-zero law")
    zero = lambda sample: 0.0
    zero_loo = lambda i, sample: 0.0
    return NonlinearStatisticModel(
        n=n,
        xi=lambda i, x: float(x) * scale,
        d1=zero,
        d2=zero,
        d1_loo=zero_loo,
        d2_loo=zero_loo,
        pi2=None,
        pi2_loo=None,
        dists=[dist] * n,
        name=name or "zero-remainder",
    )


# ---------------------------------------------------------------------------
# Norm-chain ratios for the clamped first-order remainder (calibration).
# ---------------------------------------------------------------------------


def d1_chain_ratios(model: NonlinearStatisticModel) -> tuple[float, float]:
    """Empirical constants of the two exponential-weight norm chains.

    Computes, per coordinate, ||(1 + e^{W_b^{(i)}}) (clamped D_1 diff)||_1
    over ||D_1 - D_1^{(i)}||_2, and the xi-weighted analogue over
    ||xi_i||_2 ||D_1 - D_1^{(i)}||_2; returns the maxima over coordinates.
    """
    _require_loo(model)
    if model.dists is None:
        raise PreconditionError("chain ratios use exact enumeration")
    n = model.n

    def integrand(sample):
        xi = model.xi_values(sample)
        xib = [censor_xi(v) for v in xi]
        w_b = math.fsum(xib)
        d1v = float(model.d1(sample))
        d1b = censor_remainder(d1v)
        out = []
        for i in range(n):
            w_b_i = w_b - xib[i]
            loo = float(model.d1_loo(i, sample))
            diff_bar = abs(d1b - censor_remainder(loo))
            out.append((1.0 + math.exp(w_b_i)) * diff_bar)
            out.append(abs(xib[i]) * (1.0 + math.exp(0.5 * w_b_i)) * diff_bar)
            out.append((d1v - loo) ** 2)
            out.append(xi[i] * xi[i])
        return out

    sums = enumerate_functionals(model.dists, integrand, 4 * n)
    worst_exp = 0.0
    worst_xi = 0.0
    for i in range(n):
        exp_term, xi_term, diff_sq, xi_sq = sums[4 * i : 4 * i + 4]
        denom = math.sqrt(max(diff_sq, 0.0))
        if denom == 0.0:
            continue
        worst_exp = max(worst_exp, exp_term / denom)
        xi_norm = math.sqrt(max(xi_sq, 0.0))
        if xi_norm > 0.0:
            worst_xi = max(worst_xi, xi_term / (xi_norm * denom))
    return worst_exp, worst_xi
