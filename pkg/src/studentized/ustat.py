"""Studentized U-statistics: jackknife Studentizers, Hoeffding components,
the exact decomposition algebra, and brute-force checks of the supporting
moment bounds.

All conditional-expectation tables are computed exactly in rational
arithmetic when the kernel is exact on rational atoms; scale normalization to
unit canonical variance introduces the only irrational factor and is applied
in double precision.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .combinatorics import comb0
from .distributions import DiscreteDistribution
from .enumeration import enumerate_functionals, iter_product
from .errors import (
    CostCapExceeded,
    DegenerateKernelError,
    DomainError,
    PreconditionError,
)
from .censoring import censor_xi
from .config import DEFAULT
from .stein import SQRT_2PI, normal_sf

Atom = object  # Fraction or tuple of Fractions


@dataclass(frozen=True)
class SymmetricKernel:
    """A kernel symmetric in its ``degree`` arguments.

    ``batch_q_u``, when provided, maps a (replicates, n) float array to the
    per-row U-statistic and jackknife pseudo-sums and is used by the
    vectorized Monte Carlo paths.
    """

    name: str
    degree: int
    fn: Callable
    batch_q_u: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]] | None = None

    def eval(self, *args):
        if len(args) != self.degree:
            raise DomainError(
                f"kernel {self.name} has degree {self.degree}, got {len(args)} args"
            )
        return self.fn(*args)

    def shifted(self, c) -> "SymmetricKernel":
        """Subtract a constant (exact when c is a Fraction)."""
        fn = self.fn
        batch = None
        if self.batch_q_u is not None:
            inner = self.batch_q_u
            cf = float(c)

            def batch(x: np.ndarray):
                u, q = inner(x)
                return u - cf, q - cf

        return SymmetricKernel(
            name=f"{self.name}-centered",
            degree=self.degree,
            fn=lambda *args: fn(*args) - c,
            batch_q_u=batch,
        )


def _mean_batch(x: np.ndarray):
    return x.mean(axis=1), x


def _variance_batch(x: np.ndarray):
    n = x.shape[1]
    s1 = x.sum(axis=1)
    s2 = (x * x).sum(axis=1)
    u = (n * s2 - s1 * s1) / (n * (n - 1))
    q = (n * x * x - 2.0 * x * s1[:, None] + s2[:, None]) / (2.0 * (n - 1))
    return u, q


def _sign(v) -> int:
    return (v > 0) - (v < 0)


_KERNELS: dict[str, Callable[[], SymmetricKernel]] = {
    "mean": lambda: SymmetricKernel("mean", 1, lambda x: x, batch_q_u=_mean_batch),
    "variance": lambda: SymmetricKernel(
        "variance",
        2,
        lambda x, y: (x - y) ** 2 / 2,
        batch_q_u=_variance_batch,
    ),
    "product": lambda: SymmetricKernel("product", 2, lambda x, y: x * y),
    # concordance sign for paired observations (u, v)
    "kendall-sign": lambda: SymmetricKernel(
        "kendall-sign",
        2,
        lambda a, b: _sign((a[0] - b[0]) * (a[1] - b[1])),
    ),
}


def builtin_kernel(name: str) -> SymmetricKernel:
    try:
        return _KERNELS[name]()
    except KeyError:
        raise DomainError(
            f"unknown kernel {name!r}; choose from {sorted(_KERNELS)}"
        ) from None


def kernel_names() -> list[str]:
    return sorted(_KERNELS)


def center_kernel(kernel: SymmetricKernel, dist: DiscreteDistribution) -> SymmetricKernel:
    """Shift a kernel so its mean under ``dist`` is exactly zero."""
    mean = _expect_kernel(kernel, dist)
    return kernel.shifted(mean) if mean != 0 else kernel


def _expect_kernel(kernel: SymmetricKernel, dist: DiscreteDistribution):
    total = Fraction(0)
    exact = True
    acc = 0.0
    for values, prob in iter_product([dist] * kernel.degree):
        out = kernel.fn(*values)
        if exact and isinstance(out, (Fraction, int)):
            total += prob * out
        else:
            if exact:
                acc = float(total)
                exact = False
            acc += float(prob) * float(out)
    return total if exact else acc


# ---------------------------------------------------------------------------
# Plain sample-level statistics.
# ---------------------------------------------------------------------------


def _check_cost(n: int, m: int, cap: int | None) -> None:
    cap = DEFAULT.caps.kernel_calls if cap is None else cap
    if comb0(n, m) > cap:
        raise CostCapExceeded(
            f"C({n},{m}) = {comb0(n, m)} kernel calls exceeds cap {cap}"
        )


def u_statistic(kernel: SymmetricKernel, data: Sequence, cap: int | None = None) -> float:
    """Binomial-normalized symmetric sum of the kernel over all m-subsets."""
    n, m = len(data), kernel.degree
    if n <= m:
        raise DomainError(f"need n > m, got n={n}, m={m}")
    _check_cost(n, m, cap)
    total = math.fsum(
        float(kernel.fn(*(data[i] for i in combo)))
        for combo in itertools.combinations(range(n), m)
    )
    return total / comb0(n, m)


@dataclass(frozen=True)
class JackknifeResult:
    q: np.ndarray
    u_n: float
    s_n_sq: float
    s_star_sq: float


def jackknife(kernel: SymmetricKernel, data: Sequence, cap: int | None = None) -> JackknifeResult:
    """Pseudo-values q_i and the two jackknife variance estimators.

    q_i averages the kernel over all subsets containing observation i;
    s_n^2 centers at U_n while the starred version does not.
    """
    n, m = len(data), kernel.degree
    if n <= m:
        raise DomainError(f"need n > m, got n={n}, m={m}")
    if 2 * m >= n:
        raise DomainError(f"need 2m < n, got n={n}, m={m}")
    _check_cost(n, m, cap)
    q_sums = [[] for _ in range(n)]
    totals = []
    for combo in itertools.combinations(range(n), m):
        hv = float(kernel.fn(*(data[i] for i in combo)))
        totals.append(hv)
        for i in combo:
            q_sums[i].append(hv)
    u_n = math.fsum(totals) / comb0(n, m)
    q = np.array([math.fsum(s) / comb0(n - 1, m - 1) for s in q_sums])
    factor = (n - 1) / (n - m) ** 2
    s_n_sq = factor * float(np.sum((q - u_n) ** 2))
    s_star_sq = factor * float(np.sum(q * q))
    return JackknifeResult(q=q, u_n=u_n, s_n_sq=s_n_sq, s_star_sq=s_star_sq)


def _ratio_with_conventions(num: float, denom: float) -> float:
    """num / denom with the self-normalized conventions at denom = 0."""
    if denom > 0.0:
        return num / denom
    if num > 0.0:
        return math.inf
    if num < 0.0:
        return -math.inf
    return 0.0


def studentized(kernel: SymmetricKernel, data: Sequence, cap: int | None = None) -> tuple[float, float]:
    """(T_n, T_n^*): root-n U_n over degree times each jackknife scale."""
    jk = jackknife(kernel, data, cap)
    n, m = len(data), kernel.degree
    num = math.sqrt(n) * jk.u_n / m
    return (
        _ratio_with_conventions(num, math.sqrt(max(jk.s_n_sq, 0.0))),
        _ratio_with_conventions(num, math.sqrt(max(jk.s_star_sq, 0.0))),
    )


def event_equivalence_check(x: float, n: int, m: int, t_n: float, t_star: float) -> bool:
    """The exceedance events of T_n and T_n^* coincide after rescaling x.

    {T_n > x} must equal {T_n^* > x / sqrt(1 + b_n x^2)} with
    b_n = m^2 (n-1) / (n-m)^2.
    """
    b_n = m * m * (n - 1) / (n - m) ** 2
    threshold = x / math.sqrt(1.0 + b_n * x * x)
    return (t_n > x) == (t_star > threshold)


def batch_t_statistics(kernel: SymmetricKernel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized (T_n, T_n^*) for a (replicates, n) sample matrix."""
    if kernel.batch_q_u is None:
        raise DomainError(f"kernel {kernel.name} has no vectorized path")
    n = x.shape[1]
    m = kernel.degree
    if 2 * m >= n:
        raise DomainError(f"need 2m < n, got n={n}, m={m}")
    u, q = kernel.batch_q_u(x)
    factor = (n - 1) / (n - m) ** 2
    s_sq = factor * ((q - u[:, None]) ** 2).sum(axis=1)
    s_star_sq = factor * (q * q).sum(axis=1)
    num = math.sqrt(n) * u / m
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(s_sq > 0.0, num / np.sqrt(s_sq), np.sign(num) * np.inf)
        t_star = np.where(
            s_star_sq > 0.0, num / np.sqrt(s_star_sq), np.sign(num) * np.inf
        )
    t = np.where(np.isnan(t), 0.0, t)
    t_star = np.where(np.isnan(t_star), 0.0, t_star)
    return t, t_star


# ---------------------------------------------------------------------------
# Hoeffding components: exact conditional-expectation tables.
# ---------------------------------------------------------------------------


def _sorted_key(args: Sequence) -> tuple:
    return tuple(sorted(args))


@dataclass
class HoeffdingComponents:
    """Conditional kernels h_k, canonical function g and their moments.

    Raw tables are exact (Fractions) whenever the kernel is exact on the
    atoms; ``sigma`` is the raw standard deviation of g, and all
    ``*_norm`` accessors are rescaled so the canonical function has unit
    variance.
    """

    kernel: SymmetricKernel
    dist: DiscreteDistribution
    tables_raw: list[dict]  # index k-1 -> {sorted k-tuple: h_k value}
    sigma_sq_raw: Fraction | float
    exact: bool
    sigma: float = field(init=False)
    _g_norm: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.sigma = math.sqrt(float(self.sigma_sq_raw))
        self._g_norm = {
            key[0]: float(v) / self.sigma for key, v in self.tables_raw[0].items()
        }

    @property
    def m(self) -> int:
        return self.kernel.degree

    # raw (unnormalized) accessors -------------------------------------

    def g_raw(self, x):
        return self.tables_raw[0][(x,)]

    def h_k_raw(self, args: Sequence):
        return self.tables_raw[len(args) - 1][_sorted_key(args)]

    def hbar_k_raw(self, args: Sequence):
        return self.h_k_raw(args) - sum(self.g_raw(x) for x in args)

    # unit-variance accessors -------------------------------------------

    def g(self, x) -> float:
        return self._g_norm[x]

    def h_norm(self, args: Sequence) -> float:
        return float(self.h_k_raw(args)) / self.sigma

    def hbar_norm(self, args: Sequence) -> float:
        return float(self.h_k_raw(args)) / self.sigma - math.fsum(
            self._g_norm[x] for x in args
        )

    def xi(self, x, n: int) -> float:
        return self._g_norm[x] / math.sqrt(n)

    def moment_norm(self, k: int, p: int, absolute: bool = True) -> float:
        """E[|h_k|^p] (or signed for absolute=False) at unit canonical scale."""
        raw = self.moment_raw(k, p, absolute)
        return float(raw) / self.sigma**p

    def moment_raw(self, k: int, p: int, absolute: bool = True):
        table = self.tables_raw[k - 1]
        total = Fraction(0) if self.exact else 0.0
        for values, prob in iter_product([self.dist] * k):
            v = table[_sorted_key(values)]
            term = (abs(v) if absolute else v) ** p
            total = total + (prob * term if self.exact else float(prob) * float(term))
        return total

    def hbar_moment_raw(self, k: int, p: int):
        total = Fraction(0) if self.exact else 0.0
        for values, prob in iter_product([self.dist] * k):
            v = abs(self.hbar_k_raw(values)) ** p
            total = total + (prob * v if self.exact else float(prob) * float(v))
        return total


def hoeffding(
    kernel: SymmetricKernel, dist: DiscreteDistribution, cap: int | None = None
) -> HoeffdingComponents:
    """Exact conditional-expectation tables h_1 .. h_m with degeneracy check.

    The kernel must have exact mean zero under the product law; center it
    first with :func:`center_kernel` if needed.
    """
    m = kernel.degree
    if m < 1:
        raise DomainError("kernel degree must be >= 1")
    atoms = dist.atoms
    cap = DEFAULT.caps.enumeration_atoms if cap is None else cap
    if dist.size() ** m > cap:
        raise CostCapExceeded("conditional tables exceed the enumeration cap")

    mean = _expect_kernel(kernel, dist)
    exact_mean = isinstance(mean, (Fraction, int))
    if (exact_mean and mean != 0) or (not exact_mean and abs(mean) > 1e-12):
        raise PreconditionError(
            f"kernel mean under the distribution is {mean}, need 0; "
            "use center_kernel first"
        )

    # h_m table: plain kernel values on sorted tuples
    tables: list[dict] = [dict() for _ in range(m)]
    for combo in itertools.combinations_with_replacement(atoms, m):
        values = tuple(v for v, _ in combo)
        tables[m - 1][_sorted_key(values)] = kernel.fn(*values)

    exact = all(
        isinstance(v, (Fraction, int)) for v in tables[m - 1].values()
    )

    # integrate out one argument at a time: h_k(x_1..x_k) = E[h_{k+1}(x.., X)]
    for k in range(m - 1, 0, -1):
        upper = tables[k]
        for combo in itertools.combinations_with_replacement(atoms, k):
            values = tuple(v for v, _ in combo)
            if exact:
                total = Fraction(0)
                for av, ap in atoms:
                    total += ap * upper[_sorted_key(values + (av,))]
            else:
                total = math.fsum(
                    float(ap) * float(upper[_sorted_key(values + (av,))])
                    for av, ap in atoms
                )
            tables[k - 1][_sorted_key(values)] = total

    if exact:
        sigma_sq = Fraction(0)
        for av, ap in atoms:
            sigma_sq += ap * tables[0][(av,)] ** 2
    else:
        sigma_sq = math.fsum(
            float(ap) * float(tables[0][(av,)]) ** 2 for av, ap in atoms
        )
    if sigma_sq == 0:
        raise DegenerateKernelError(
            f"kernel {kernel.name} is degenerate under this distribution "
            "(canonical function has zero variance)"
        )
    return HoeffdingComponents(
        kernel=kernel,
        dist=dist,
        tables_raw=tables,
        sigma_sq_raw=sigma_sq,
        exact=exact,
    )


# ---------------------------------------------------------------------------
# Moment report and the Berry-Esseen bracket.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentReport:
    """Unit-variance kernel moments entering the error bound."""

    e_abs_g3: float
    e_h2: float
    g_norm3: float
    h_norm3: float
    h_norm2: float


def moment_report(comp: HoeffdingComponents) -> MomentReport:
    """Kernel moments at unit canonical scale, with the exact moment
    inequalities (monotonicity in k for p in {2, 3}, and degree times the
    canonical variance below the kernel's second moment) verified on the raw
    tables."""
    m = comp.m
    # monotone chain in k, exact on the raw tables (scale cancels)
    for p in (2, 3):
        prev = None
        for k in range(1, m + 1):
            cur = comp.moment_raw(k, p)
            if prev is not None and prev > cur:
                raise PreconditionError(
                    f"conditional moment chain violated at p={p}, k={k}"
                )
            prev = cur
    if m * comp.moment_raw(1, 2) > comp.moment_raw(m, 2):
        raise PreconditionError("m E[g^2] <= E[h^2] violated on raw tables")
    e_abs_g3 = comp.moment_norm(1, 3)
    e_h2 = comp.moment_norm(m, 2)
    return MomentReport(
        e_abs_g3=e_abs_g3,
        e_h2=e_h2,
        g_norm3=e_abs_g3 ** (1.0 / 3.0),
        h_norm3=comp.moment_norm(m, 3) ** (1.0 / 3.0),
        h_norm2=math.sqrt(e_h2),
    )


def be_bound_ustat(moments: MomentReport, n: int, m: int) -> float:
    """Constant-free bracket (E|g|^3 + m(E[h^2] + ||g||_3 ||h||_3)) / sqrt n."""
    if 2 * m >= n:
        raise DomainError(f"need 2m < n, got n={n}, m={m}")
    return (
        moments.e_abs_g3 + m * (moments.e_h2 + moments.g_norm3 * moments.h_norm3)
    ) / math.sqrt(n)


# ---------------------------------------------------------------------------
# Decomposition of the starred Studentizer.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StudentizedUResult:
    u_n: float
    q: np.ndarray
    s_n_sq: float
    s_star_sq: float
    t_n: float
    t_n_star: float
    w_n: float
    d1: float
    psi: np.ndarray
    lambda_sq: float
    v_sq: float
    delta1: float
    delta2: float
    d_n_sq: float
    scale_identity_gap: float
    numerator_identity_gap: float


def decomposition_terms(
    comp: HoeffdingComponents,
    data: Sequence,
    cap: int | None = None,
    tol: float | None = None,
) -> StudentizedUResult:
    """All pieces of the algebraic split of the starred Studentizer.

    Verifies the two exact identities (the starred scale equals
    d_n^2 (V^2 + delta_1 + delta_2), and root-n U_n / m equals W_n + D_1)
    to the configured relative tolerance.
    """
    n, m = len(data), comp.m
    if 2 * m >= n:
        raise DomainError(f"need 2m < n, got n={n}, m={m}")
    _check_cost(n, m, cap)
    tol = DEFAULT.tol.identity_rel if tol is None else tol
    root_n = math.sqrt(n)
    g_vals = np.array([comp.g(x) for x in data])
    xi = g_vals / root_n
    w_n = float(xi.sum())

    c_choose = comb0(n - 1, m - 1)
    q_sums = np.zeros(n)
    psi_sums = np.zeros(n)
    total_h = []
    total_hbar = []
    for combo in itertools.combinations(range(n), m):
        hv = comp.h_norm([data[i] for i in combo])
        hbar = hv - math.fsum(g_vals[i] for i in combo)
        total_h.append(hv)
        total_hbar.append(hbar)
        for i in combo:
            q_sums[i] += hv
            psi_sums[i] += hbar

    u_n = math.fsum(total_h) / comb0(n, m)
    d1 = math.fsum(total_hbar) / (root_n * c_choose)
    q = q_sums / c_choose
    psi = psi_sums / root_n

    factor = (n - 1) / (n - m) ** 2
    s_n_sq = factor * float(np.sum((q - u_n) ** 2))
    s_star_sq = factor * float(np.sum(q * q))
    num = root_n * u_n / m
    t_n = _ratio_with_conventions(num, math.sqrt(max(s_n_sq, 0.0)))
    t_n_star = _ratio_with_conventions(num, math.sqrt(max(s_star_sq, 0.0)))

    lambda_sq = float(np.sum(psi * psi))
    v_sq = float(np.sum(xi * xi))
    delta2 = 2.0 * (n - 1) / ((n - m) * c_choose) * float(np.sum(xi * psi))
    delta1 = (
        (n * (m - 1) ** 2 / (n - m) ** 2 + 2.0 * (m - 1) / (n - m)) * w_n * w_n
        + (n - 1) ** 2 / (c_choose**2 * (n - m) ** 2) * lambda_sq
        + 2.0
        * (n - 1)
        * (m - 1)
        / ((n - m) ** 2 * c_choose)
        * w_n
        * float(np.sum(psi))
    )
    d_n_sq = n / (n - 1)

    recomposed = d_n_sq * (v_sq + delta1 + delta2)
    scale_gap = abs(s_star_sq - recomposed) / max(1.0, abs(s_star_sq))
    numerator_gap = abs(num - (w_n + d1)) / max(1.0, abs(num))
    if scale_gap > tol or numerator_gap > tol:
        raise PreconditionError(
            f"decomposition identities violated: scale gap {scale_gap:.3e}, "
            f"numerator gap {numerator_gap:.3e}"
        )
    return StudentizedUResult(
        u_n=u_n,
        q=q,
        s_n_sq=s_n_sq,
        s_star_sq=s_star_sq,
        t_n=t_n,
        t_n_star=t_n_star,
        w_n=w_n,
        d1=d1,
        psi=psi,
        lambda_sq=lambda_sq,
        v_sq=v_sq,
        delta1=delta1,
        delta2=delta2,
        d_n_sq=d_n_sq,
        scale_identity_gap=scale_gap,
        numerator_identity_gap=numerator_gap,
    )


# ---------------------------------------------------------------------------
# The clamped second-order remainder and its leave-one-out versions.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Pi2Terms:
    pi2: float
    pi2_loo: np.ndarray
    delta2b: float
    delta2b_loo: np.ndarray


def _clamp_tail_constant(comp: HoeffdingComponents, n: int) -> float:
    """E[(xi^2 - 1) I(|xi| > 1)] for one coordinate, xi = g(X)/sqrt(n)."""
    total = 0.0
    for av, ap in comp.dist.atoms:
        gv = comp.g(av)
        if abs(gv) / math.sqrt(n) > 1.0:
            total += float(ap) * (gv * gv / n - 1.0)
    return total


def _subset_sums(comp: HoeffdingComponents, data: Sequence):
    """Per-index and per-pair clamped-remainder sums over all m-subsets.

    Returns (psi_sums, pair_sums) where psi_sums[j] adds the centered kernel
    over subsets containing j, and pair_sums[i][j] over subsets containing
    both i and j.
    """
    n, m = len(data), comp.m
    g_vals = [comp.g(x) for x in data]
    psi_sums = np.zeros(n)
    pair_sums = np.zeros((n, n))
    for combo in itertools.combinations(range(n), m):
        hbar = comp.h_norm([data[i] for i in combo]) - math.fsum(
            g_vals[i] for i in combo
        )
        for a_idx, i in enumerate(combo):
            psi_sums[i] += hbar
            for j in combo[a_idx + 1 :]:
                pair_sums[i, j] += hbar
                pair_sums[j, i] += hbar
    return psi_sums, pair_sums


def pi2_terms(
    comp: HoeffdingComponents,
    data: Sequence,
    variant: str = "with_rootn",
    cap: int | None = None,
) -> Pi2Terms:
    """Second-order remainder of the clamped denominator, both variants.

    ``variant`` selects whether the n^{-1/2} cushion enters the remainder
    ("with_rootn") or not ("without"); the two results differ by exactly
    n^{-1/2}.
    """
    if variant not in ("with_rootn", "without"):
        raise DomainError(f"unknown variant {variant!r}")
    n, m = len(data), comp.m
    if 2 * m >= n:
        raise DomainError(f"need 2m < n, got n={n}, m={m}")
    _check_cost(n, m, cap)
    root_n = math.sqrt(n)
    shift = 1.0 / root_n if variant == "with_rootn" else 0.0
    xi_b = np.array([censor_xi(comp.g(x) / root_n) for x in data])
    psi_sums, pair_sums = _subset_sums(comp, data)

    coef = 2.0 * (n - 1) / ((n - m) * comb0(n - 1, m - 1) * root_n)
    delta2b = coef * float(np.sum(xi_b * psi_sums))
    tail_const = _clamp_tail_constant(comp, n)

    delta2b_loo = np.empty(n)
    for i in range(n):
        inner = psi_sums - pair_sums[:, i]
        inner[i] = 0.0
        delta2b_loo[i] = coef * float(np.sum(xi_b * inner) - xi_b[i] * inner[i])
    pi2 = delta2b + shift - n * tail_const
    pi2_loo = delta2b_loo + shift - (n - 1) * tail_const
    return Pi2Terms(
        pi2=pi2, pi2_loo=pi2_loo, delta2b=delta2b, delta2b_loo=delta2b_loo
    )


# ---------------------------------------------------------------------------
# Brute-force checks of the moment bounds.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundCheck:
    name: str
    lhs: float
    rhs: float
    ok: bool

    @property
    def ratio(self) -> float:
        if self.rhs == 0.0:
            return 0.0 if self.lhs == 0.0 else math.inf
        return self.lhs / self.rhs


def _float_le(lhs: float, rhs: float, rel: float = 1e-9) -> bool:
    return lhs <= rhs + rel * max(1.0, abs(rhs))


def kernel_bound_check(
    comp: HoeffdingComponents,
    n: int,
    case: str,
    index_sets: tuple[tuple[int, ...], tuple[int, ...]] | None = None,
) -> list[BoundCheck]:
    """Exact checks of the four kernel moment bounds.

    Cases "i" and "ii" compare exact rational quantities (scale invariant, so
    raw tables are used).  Cases "iii" and "iv" evaluate the cross-moment of
    two clamped summands against centered conditional kernels on explicit
    index patterns; ``index_sets`` overrides the built-in representative
    patterns.
    """
    m = comp.m
    if case == "i":
        checks = []
        e_h2 = comp.moment_raw(m, 2)
        for k in range(1, m + 1):
            hbar_sq = comp.hbar_moment_raw(k, 2)
            h_sq = comp.moment_raw(k, 2)
            ub = Fraction(k, m) * e_h2 if comp.exact else k / m * float(e_h2)
            checks.append(
                BoundCheck(
                    f"conditional-moment-k{k}",
                    float(hbar_sq),
                    float(ub),
                    hbar_sq <= h_sq <= ub,
                )
            )
        return checks
    if case == "ii":
        lhs = _loo_hbar_square_moment(comp, n)
        rhs = (
            Fraction(2 * (m - 1) ** 2, n * (n - m + 1))
            * comb0(n - 1, m - 1)
            * comb0(n, m)
            * comp.moment_raw(m, 2)
        )
        ok = lhs <= rhs if comp.exact else _float_le(float(lhs), float(rhs))
        return [BoundCheck("loo-kernel-sum-square", float(lhs), float(rhs), ok)]
    if case in ("iii", "iv"):
        return _cross_moment_checks(comp, n, case, index_sets)
    raise DomainError(f"unknown case {case!r}")


def _loo_hbar_square_moment(comp: HoeffdingComponents, n: int):
    """E[(sum over (m-1)-subsets avoiding 0 of hbar_m(X_0, subset))^2], raw."""
    m = comp.m
    if m == 1:
        return Fraction(0) if comp.exact else 0.0
    dists = [comp.dist] * n
    total = Fraction(0) if comp.exact else 0.0
    for values, prob in iter_product(dists):
        inner = None
        for combo in itertools.combinations(range(1, n), m - 1):
            term = comp.hbar_k_raw((values[0],) + tuple(values[i] for i in combo))
            inner = term if inner is None else inner + term
        sq = inner * inner
        total = total + (prob * sq if comp.exact else float(prob) * float(sq))
    return total


def default_cross_patterns(m: int, case: str) -> list[tuple[tuple, tuple]]:
    """Representative index-set pairs (I, J) with varying overlap counts.

    Indices are 1-based sample labels; the clamped summands always sit at
    coordinates 1 and 2.  For case "iv" neither 1 in J nor 2 in I is allowed.
    """
    patterns = []
    for d in range(0, m):
        shared = tuple(range(3, 3 + d))
        set_i = (1,) + shared
        set_j = (2,) + shared
        extra = 3 + d
        while len(set_i) < m:
            set_i = set_i + (extra,)
            extra += 1
        while len(set_j) < m:
            set_j = set_j + (extra,)
            extra += 1
        patterns.append((set_i, set_j))
    if case == "iii" and m >= 2:
        # overlap through the clamped coordinates themselves
        set_i = tuple(range(1, m + 1))  # contains 1 and 2
        set_j = (2,) + tuple(range(m + 1, 2 * m))
        patterns.append((set_i, set_j))
    return patterns


def _cross_moment_checks(comp, n, case, index_sets) -> list[BoundCheck]:
    m = comp.m
    if 2 * m >= n:
        raise DomainError(f"need 2m < n, got n={n}, m={m}")
    mom = moment_report(comp)
    patterns = [index_sets] if index_sets is not None else default_cross_patterns(m, case)
    root_n = math.sqrt(n)
    checks = []
    for set_i, set_j in patterns:
        if not set_i or not set_j:
            raise DomainError("index sets must be non-empty")
        if len(set(set_i)) != len(set_i) or len(set(set_j)) != len(set_j):
            raise DomainError("index sets must not repeat indices")
        if max(len(set_i), len(set_j)) > m:
            raise DomainError("index sets cannot exceed the kernel degree")
        if case == "iv" and (1 in set_j or 2 in set_i):
            raise DomainError("case iv requires 1 not in J and 2 not in I")
        d = len((set(set_i) & set(set_j)) - {1, 2})
        variables = sorted(set((1, 2)) | set(set_i) | set(set_j))
        pos = {label: idx for idx, label in enumerate(variables)}
        dists = [comp.dist] * len(variables)

        def integrand(values):
            xi1 = censor_xi(comp.g(values[pos[1]]) / root_n)
            xi2 = censor_xi(comp.g(values[pos[2]]) / root_n)
            hb_i = comp.hbar_norm([values[pos[t]] for t in set_i])
            hb_j = comp.hbar_norm([values[pos[t]] for t in set_j])
            return (xi1 * xi2 * hb_i * hb_j,)

        (value,) = enumerate_functionals(dists, integrand, 1)
        lhs = abs(value)
        tail = n if case == "iii" else n**1.5
        rhs = 9.5 * mom.g_norm3**2 * mom.h_norm3**2 / n + 2.0 * d * mom.h_norm2 / tail
        checks.append(
            BoundCheck(
                f"cross-moment-{case}-I{set_i}-J{set_j}",
                lhs,
                rhs,
                _float_le(lhs, rhs),
            )
        )
    return checks


def d1_bound_check(comp: HoeffdingComponents, n: int) -> list[BoundCheck]:
    """Exact second-moment bounds for the first-order remainder.

    Compares E[D_1^2] against (m-1)^2 E[h^2] / (m(n-m+1)) and the
    leave-one-out difference against twice that over n, all in rational
    arithmetic (the canonical scale cancels).
    """
    m = comp.m
    if 2 * m >= n:
        raise DomainError(f"need 2m < n, got n={n}, m={m}")
    c_sq = comb0(n - 1, m - 1) ** 2
    e_h2 = comp.moment_raw(m, 2)
    if m == 1:
        return [
            BoundCheck("d1-norm", 0.0, 0.0, True),
            BoundCheck("d1-loo-diff", 0.0, 0.0, True),
        ]

    dists = [comp.dist] * n
    total_sq = Fraction(0) if comp.exact else 0.0
    loo_sq = Fraction(0) if comp.exact else 0.0
    for values, prob in iter_product(dists):
        full = None
        first = None  # sum over subsets containing index 0
        for combo in itertools.combinations(range(n), m):
            term = comp.hbar_k_raw([values[i] for i in combo])
            full = term if full is None else full + term
            if combo[0] == 0:
                first = term if first is None else first + term
        if comp.exact:
            total_sq += prob * full * full
            loo_sq += prob * first * first
        else:
            total_sq += float(prob) * float(full) ** 2
            loo_sq += float(prob) * float(first) ** 2

    lhs1_sq = total_sq / (n * c_sq)
    rhs1_sq = Fraction((m - 1) ** 2, m * (n - m + 1)) * e_h2
    lhs2_sq = loo_sq / (n * c_sq)
    rhs2_sq = Fraction(2 * (m - 1) ** 2, n * m * (n - m + 1)) * e_h2
    if comp.exact:
        ok1, ok2 = lhs1_sq <= rhs1_sq, lhs2_sq <= rhs2_sq
    else:
        ok1 = _float_le(float(lhs1_sq), float(rhs1_sq))
        ok2 = _float_le(float(lhs2_sq), float(rhs2_sq))
    return [
        BoundCheck(
            "d1-norm", math.sqrt(float(lhs1_sq)), math.sqrt(float(rhs1_sq)), ok1
        ),
        BoundCheck(
            "d1-loo-diff", math.sqrt(float(lhs2_sq)), math.sqrt(float(rhs2_sq)), ok2
        ),
    ]


def pi2_norm_ratios(
    comp: HoeffdingComponents, n: int, variant: str = "with_rootn"
) -> tuple[float, float]:
    """(||Pi_2||_2, max_i ||Pi_2 - Pi_2^{(i)}||_2) over their constant-free
    bounds, for calibration and the lemma checks."""
    m = comp.m
    mom = moment_report(comp)
    dists = [comp.dist] * n

    def integrand(values):
        terms = pi2_terms(comp, values, variant)
        out = [terms.pi2 * terms.pi2]
        out.extend((terms.pi2 - loo) ** 2 for loo in terms.pi2_loo)
        return out

    sums = enumerate_functionals(dists, integrand, 1 + n)
    pi2_norm = math.sqrt(max(sums[0], 0.0))
    loo_norm = math.sqrt(max(max(sums[1:]), 0.0))
    rhs_norm = (mom.g_norm3**3 + m * mom.g_norm3 * mom.h_norm3) / math.sqrt(n)
    rhs_loo = (m * mom.g_norm3 * mom.h_norm3 + m**1.5 * math.sqrt(mom.h_norm2)) / n
    return pi2_norm / rhs_norm, loo_norm / rhs_loo


def bridging_check(x: float, n: int, m: int) -> BoundCheck:
    """Tail-difference bound used to pass between the two Studentizers.

    With a = (1 + b_n x^2)^{-1/2}, checks |PhiBar(x a) - PhiBar(x)| against
    min(m^2 (n-1) x^3 / (sqrt(2 pi) (n-m)^2), 2 / max(2, sqrt(2 pi) x a))
    times exp(-x^2 a^2 / 2), in double precision.
    """
    if x < 0:
        raise DomainError(f"need x >= 0, got {x}")
    if 2 * m >= n:
        raise DomainError(f"need 2m < n, got n={n}, m={m}")
    b_n = m * m * (n - 1) / (n - m) ** 2
    a = 1.0 / math.sqrt(1.0 + b_n * x * x)
    lhs = abs(float(normal_sf(x * a)) - float(normal_sf(x)))
    envelope = math.exp(-0.5 * (x * a) ** 2)
    rhs = (
        min(
            m * m * (n - 1) * x**3 / (SQRT_2PI * (n - m) ** 2),
            2.0 / max(2.0, SQRT_2PI * x * a),
        )
        * envelope
    )
    return BoundCheck(f"bridging-x{x}-n{n}-m{m}", lhs, rhs, lhs <= rhs + 1e-15)
