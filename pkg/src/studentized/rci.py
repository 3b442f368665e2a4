"""Exponential concentration of a clamped sum over a random interval.

Verifies, by exact enumeration, that E[e^{lam W_b} I(D1 <= W_b <= D2)] is
controlled by a Gaussian-tail term plus interval-width and leave-one-out
perturbation terms, for interval endpoints that may depend on the sample.
Endpoint specifications come from a small registry so instances stay
serializable and reproducible.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .censoring import beta2, beta3_abs, censor_xi
from .distributions import DiscreteDistribution, from_pairs, random_mean_zero_config
from .enumeration import enumerate_functionals
from .errors import DomainError, PreconditionError


@dataclass(frozen=True)
class DeltaSpec:
    """Serializable interval-endpoint rule.

    kinds:
      "const":    D1 = a, D2 = b; leave-one-out versions identical.
      "xi_width": D1 = a, D2 = a + |xi_1|; dropping coordinate 0 removes
                  the width term.
      "window":   D1 = W_b - c, D2 = W_b + c; leave-one-out versions use
                  W_b^{(i)}.
    """

    kind: str
    params: tuple

    def endpoints(self, xi_b: Sequence, w_b) -> tuple:
        if self.kind == "const":
            return self.params
        if self.kind == "xi_width":
            (a,) = self.params
            return a, a + abs(xi_b[0])
        if self.kind == "window":
            (c,) = self.params
            return w_b - c, w_b + c
        raise DomainError(f"unknown endpoint rule {self.kind!r}")

    def endpoints_loo(self, i: int, xi_b: Sequence, w_b) -> tuple:
        if self.kind == "const":
            return self.params
        if self.kind == "xi_width":
            (a,) = self.params
            return (a, a) if i == 0 else (a, a + abs(xi_b[0]))
        if self.kind == "window":
            (c,) = self.params
            w_loo = w_b - xi_b[i]
            return w_loo - c, w_loo + c
        raise DomainError(f"unknown endpoint rule {self.kind!r}")


@dataclass(frozen=True)
class RciInstance:
    """One enumerable concentration-check instance.

    Moment conditions (verified exactly): the summands have mean zero, their
    second moments sum to at most c1, and the small-increment masses
    E[|xi| min(delta, |xi|/2)] sum to at least c2, with c1 > c2 > 0 and
    delta in (0, 1/2).
    """

    dists: tuple[DiscreteDistribution, ...]
    delta_spec: DeltaSpec
    lam: float
    delta: Fraction
    c1: Fraction
    c2: Fraction
    name: str = ""

    def __post_init__(self):
        if self.lam < 0:
            raise DomainError(f"need lambda >= 0, got {self.lam}")
        if not (0 < self.delta < Fraction(1, 2)):
            raise PreconditionError(f"delta={self.delta} outside (0, 1/2)")
        if not (self.c1 > self.c2 > 0):
            raise PreconditionError("need c1 > c2 > 0")
        second = Fraction(0)
        increment = Fraction(0)
        for dist in self.dists:
            if dist.mean() != 0:
                raise PreconditionError("summands must have exact mean zero")
            second += dist.moment(2)
            increment += dist.expect(
                lambda v: abs(v) * min(self.delta, abs(v) / 2)
            )
        if second > self.c1:
            raise PreconditionError(
                f"sum of second moments {second} exceeds c1={self.c1}"
            )
        if increment < self.c2:
            raise PreconditionError(
                f"small-increment mass {increment} below c2={self.c2}"
            )


def suggested_params(
    dists: Sequence[DiscreteDistribution],
) -> tuple[Fraction, Fraction, Fraction]:
    """Default (delta, c1, c2) valid when the total variance is exactly one
    and the clamp moments beta2 + beta3 are at most 1/2 (and positive).

    beta3 enters through its absolute version E[|xi|^3 I(|xi| <= 1)]; the
    small-increment lower bound 1/4 is derived from that quantity, and the
    signed version admits counterexamples.
    """
    total = sum((d.moment(2) for d in dists), Fraction(0))
    if total != 1:
        raise PreconditionError(f"defaults need total variance 1, got {total}")
    b23 = beta2(dists) + beta3_abs(dists)
    if not (0 < b23 <= Fraction(1, 2)):
        raise PreconditionError(
            f"defaults need clamp moments in (0, 1/2], got {b23}"
        )
    return b23 / 4, Fraction(1), Fraction(1, 4)


def rci_check(
    instance: RciInstance, slack: float = 1e-12
) -> tuple[float, float, bool]:
    """lhs = E[e^{lam W_b} I(D1 <= W_b <= D2)] vs the three-part right side.

    Probabilities and event membership are exact; exponentials are evaluated
    in double precision with compensated accumulation.
    """
    dists = list(instance.dists)
    n = len(dists)
    lam = instance.lam
    spec = instance.delta_spec

    two_delta = 2.0 * float(instance.delta)

    def integrand(values):
        xi_b = [censor_xi(v) for v in values]
        w_b = sum(xi_b)
        w_b_f = float(w_b)
        d1, d2 = spec.endpoints(xi_b, w_b)
        inside = d1 <= w_b <= d2
        exp_w = math.exp(lam * w_b_f)
        out = [exp_w if inside else 0.0, math.exp(2.0 * lam * w_b_f)]
        # interval width term
        out.append(abs(w_b_f) * exp_w * (abs(float(d2 - d1)) + two_delta))
        for i in range(n):
            w_loo = w_b_f - float(xi_b[i])
            d1_loo, d2_loo = spec.endpoints_loo(i, xi_b, w_b)
            exp_loo = math.exp(lam * w_loo)
            out.append(
                abs(float(xi_b[i]))
                * exp_loo
                * (abs(float(d1 - d1_loo)) + abs(float(d2 - d2_loo)))
            )
            out.append(exp_loo * (abs(float(d2_loo - d1_loo)) + two_delta))
        return out

    sums = enumerate_functionals(dists, integrand, 3 + 2 * n)
    lhs, exp_2w, width_term = sums[0], sums[1], sums[2]
    loo_pert = sums[3::2]
    loo_width = sums[4::2]

    censored_means = [abs(float(d.expect(censor_xi))) for d in dists]
    gauss = math.sqrt(max(exp_2w, 0.0)) * math.exp(
        -float(instance.c2) ** 2 / (16.0 * float(instance.c1) * float(instance.delta) ** 2)
    )
    bracket = (
        math.fsum(loo_pert)
        + width_term
        + math.fsum(cm * lw for cm, lw in zip(censored_means, loo_width))
    )
    rhs = gauss + 2.0 * math.exp(lam * float(instance.delta)) / float(instance.c2) * bracket
    return lhs, rhs, lhs <= rhs + slack


# ---------------------------------------------------------------------------
# Instance corpus.
# ---------------------------------------------------------------------------


def unit_variance_family(kind: str = "bounded") -> list[DiscreteDistribution]:
    """I.i.d.-style families with total variance exactly one and clamp
    moments in (0, 1/2], so the suggested default parameters apply.

    "bounded": four symmetric two-point laws at +-1/2 (clamp moments exactly
    1/2, the boundary case).  "heavy": one rescaled heavy-atom law plus eight
    bounded three-point laws, giving a strictly positive above-clamp mass.
    """
    if kind == "bounded":
        dist = from_pairs([(Fraction(1, 2), Fraction(1, 2)), (Fraction(-1, 2), Fraction(1, 2))])
        return [dist] * 4
    if kind == "heavy":
        heavy = from_pairs([(Fraction(3, 2), Fraction(1, 10)), (Fraction(-1, 6), Fraction(9, 10))])
        bounded = from_pairs(
            [
                (Fraction(1, 3), Fraction(27, 64)),
                (Fraction(-1, 3), Fraction(27, 64)),
                (Fraction(0), Fraction(5, 32)),
            ]
        )
        return [heavy] + [bounded] * 8
    raise DomainError(f"unknown family {kind!r}")


def default_instances() -> list[RciInstance]:
    """Hand-picked instances: default parameters, empty events, constant and
    sample-dependent endpoints, all lambda values of interest."""
    specs = (
        (DeltaSpec("const", (Fraction(-1, 2), Fraction(1, 2))), "const"),
        (DeltaSpec("const", (Fraction(10), Fraction(20))), "empty"),
        (DeltaSpec("xi_width", (Fraction(-3, 10),)), "xi-width"),
        (DeltaSpec("window", (Fraction(1),)), "window"),
    )
    instances = []
    for kind, spec_subset in (("bounded", specs), ("heavy", specs[:2])):
        family = unit_variance_family(kind)
        delta, c1, c2 = suggested_params(family)
        for lam in (0.0, 0.5, 1.0):
            for spec, tag in spec_subset:
                instances.append(
                    RciInstance(
                        dists=tuple(family),
                        delta_spec=spec,
                        lam=lam,
                        delta=delta,
                        c1=c1,
                        c2=c2,
                        name=f"defaults-{kind}-{tag}-lam{lam}",
                    )
                )
    return instances


def randomized_instances(count: int, seed: int) -> list[RciInstance]:
    """Randomized mean-zero configurations with explicitly derived
    (delta, c1, c2): c1 is one, delta is 1/4, and c2 is the exact
    small-increment mass (scaled down a notch to keep c2 < c1 strict)."""
    rng = random.Random(seed)
    out = []
    specs = [
        DeltaSpec("const", (Fraction(-1, 2), Fraction(1, 2))),
        DeltaSpec("xi_width", (Fraction(-1, 4),)),
        DeltaSpec("window", (Fraction(1, 2),)),
    ]
    lams = [0.0, 0.5, 1.0]
    attempts = 0
    while len(out) < count and attempts < 50 * count:
        attempts += 1
        n = rng.randint(2, 4)
        dists = random_mean_zero_config(rng, n)
        delta = Fraction(1, 4)
        mass = sum(
            (d.expect(lambda v: abs(v) * min(delta, abs(v) / 2)) for d in dists),
            Fraction(0),
        )
        if mass <= 0:
            continue
        out.append(
            RciInstance(
                dists=tuple(dists),
                delta_spec=specs[len(out) % len(specs)],
                lam=lams[len(out) % len(lams)],
                delta=delta,
                c1=Fraction(1),
                c2=mass,
                name=f"random-{len(out)}",
            )
        )
    if len(out) < count:
        raise PreconditionError("could not build enough admissible instances")
    return out


def corpus(seed: int = 20240601, randomized: int = 20) -> list[RciInstance]:
    return default_instances() + randomized_instances(randomized, seed)
