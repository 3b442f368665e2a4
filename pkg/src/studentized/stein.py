"""Standard-normal primitives and the Stein-equation kernel.

The kernel solving f'(w) - w f(w) = I(w <= x) - Phi(x) is

    f_x(w) = sqrt(2 pi) e^{w^2/2} Phi(w) PhiBar(x)   for w <= x,
             sqrt(2 pi) e^{w^2/2} Phi(x) PhiBar(w)   for w >  x,

together with its derivative and g_x(w) = (w f_x(w))'.  The factor
e^{w^2/2} PhiBar(w) is never formed as a product of exponentials: it equals
erfcx(w / sqrt 2) / 2, the scaled complementary error function, which keeps
every intermediate finite for |w| <= 700.  In the regime where even erfcx
overflows (the CDF factor at |w| > ~37), the two exponentials are fused
through exp((w-x)(w+x)/2), whose argument is non-positive there.

At the jump w = x the derivative is defined as x f_x(x) + PhiBar(x), which
equals the left branch formula, so the differential identity holds for all w.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.special import erfcx, ndtr

from . import calibration
from .censoring import censor_xi
from .config import DEFAULT, SteinGrid
from .distributions import DiscreteDistribution
from .enumeration import enumerate_expectation
from .errors import DomainError, PreconditionError

SQRT_2PI = math.sqrt(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)
# e^{w^2/2} Phi(w) = erfcx(-w/sqrt2)/2 overflows past ~37.6; switch forms there
_ERFCX_SAFE = 37.0


def _validate_finite(name: str, value) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return arr


def normal_cdf(w):
    """Standard normal distribution function."""
    return ndtr(_validate_finite("w", w))


def normal_sf(w):
    """Upper tail 1 - Phi(w)."""
    return ndtr(-_validate_finite("w", w))


def normal_tail_bounds(w: float) -> tuple[float, float]:
    """Classical sandwich for the upper tail at w > 0.

    Returns (w e^{-w^2/2} / ((1+w^2) sqrt(2 pi)),
             min(1/2, 1/(w sqrt(2 pi))) e^{-w^2/2}).
    """
    if not (w > 0):
        raise DomainError(f"tail bounds need w > 0, got {w}")
    density_scale = math.exp(-0.5 * w * w)
    lower = w * density_scale / ((1.0 + w * w) * SQRT_2PI)
    upper = min(0.5, 1.0 / (w * SQRT_2PI)) * density_scale
    return lower, upper


def _scaled_cdf(w: np.ndarray) -> np.ndarray:
    """e^{w^2/2} Phi(w), finite for w <= ~37.6."""
    return 0.5 * erfcx(-w / _SQRT2)


def _scaled_sf(w: np.ndarray) -> np.ndarray:
    """e^{w^2/2} PhiBar(w), finite for w >= ~-37.6."""
    return 0.5 * erfcx(w / _SQRT2)


def _broadcast(x, w) -> tuple[np.ndarray, np.ndarray, bool]:
    x_arr = _validate_finite("x", x)
    w_arr = _validate_finite("w", w)
    scalar = x_arr.ndim == 0 and w_arr.ndim == 0
    x_arr, w_arr = np.broadcast_arrays(x_arr, w_arr)
    return np.asarray(x_arr, dtype=float), np.asarray(w_arr, dtype=float), scalar


def _as_output(arr: np.ndarray, scalar: bool):
    return float(arr) if scalar else arr


def stein_f(x, w):
    """Solution of the Stein differential identity at threshold x."""
    x_arr, w_arr, scalar = _broadcast(x, w)
    out = np.empty_like(w_arr)

    lower = w_arr <= x_arr
    safe = lower & (w_arr <= _ERFCX_SAFE)
    if np.any(safe):
        out[safe] = SQRT_2PI * _scaled_cdf(w_arr[safe]) * ndtr(-x_arr[safe])
    extreme = lower & ~safe
    if np.any(extreme):
        we, xe = w_arr[extreme], x_arr[extreme]
        out[extreme] = (
            SQRT_2PI
            * ndtr(we)
            * _scaled_sf(xe)
            * np.exp(0.5 * (we - xe) * (we + xe))
        )

    upper = ~lower
    safe = upper & (w_arr >= -_ERFCX_SAFE)
    if np.any(safe):
        out[safe] = SQRT_2PI * ndtr(x_arr[safe]) * _scaled_sf(w_arr[safe])
    extreme = upper & ~safe
    if np.any(extreme):
        we, xe = w_arr[extreme], x_arr[extreme]
        out[extreme] = (
            SQRT_2PI
            * ndtr(-we)
            * _scaled_cdf(xe)
            * np.exp(0.5 * (we - xe) * (we + xe))
        )
    return _as_output(out, scalar)


def stein_f_prime(x, w):
    """Derivative of the kernel; at w = x the value is x f_x(x) + PhiBar(x)."""
    x_arr, w_arr, scalar = _broadcast(x, w)
    out = np.empty_like(w_arr)

    lower = w_arr <= x_arr  # includes the jump point, matching the convention
    safe = lower & (w_arr <= _ERFCX_SAFE)
    if np.any(safe):
        ws = w_arr[safe]
        out[safe] = (SQRT_2PI * ws * _scaled_cdf(ws) + 1.0) * ndtr(-x_arr[safe])
    extreme = lower & ~safe
    if np.any(extreme):
        out[extreme] = w_arr[extreme] * np.asarray(
            stein_f(x_arr[extreme], w_arr[extreme])
        ) + ndtr(-x_arr[extreme])

    upper = ~lower
    safe = upper & (w_arr >= -_ERFCX_SAFE)
    if np.any(safe):
        ws = w_arr[safe]
        out[safe] = (SQRT_2PI * ws * _scaled_sf(ws) - 1.0) * ndtr(x_arr[safe])
    extreme = upper & ~safe
    if np.any(extreme):
        out[extreme] = w_arr[extreme] * np.asarray(
            stein_f(x_arr[extreme], w_arr[extreme])
        ) - ndtr(x_arr[extreme])
    return _as_output(out, scalar)


def stein_g(x, w):
    """g_x(w) = (w f_x(w))' = f_x(w) + w f_x'(w); non-negative everywhere."""
    x_arr, w_arr, scalar = _broadcast(x, w)
    out = np.empty_like(w_arr)

    lower = w_arr <= x_arr
    safe = lower & (w_arr <= _ERFCX_SAFE)
    if np.any(safe):
        ws, xs = w_arr[safe], x_arr[safe]
        sf_x = ndtr(-xs)
        out[safe] = SQRT_2PI * sf_x * (1.0 + ws * ws) * _scaled_cdf(ws) + ws * sf_x
    extreme = lower & ~safe
    if np.any(extreme):
        ws, xs = w_arr[extreme], x_arr[extreme]
        out[extreme] = (1.0 + ws * ws) * np.asarray(stein_f(xs, ws)) + ws * ndtr(-xs)

    upper = ~lower
    safe = upper & (w_arr >= -_ERFCX_SAFE)
    if np.any(safe):
        ws, xs = w_arr[safe], x_arr[safe]
        cdf_x = ndtr(xs)
        out[safe] = SQRT_2PI * cdf_x * (1.0 + ws * ws) * _scaled_sf(ws) - ws * cdf_x
    extreme = upper & ~safe
    if np.any(extreme):
        ws, xs = w_arr[extreme], x_arr[extreme]
        out[extreme] = (1.0 + ws * ws) * np.asarray(stein_f(xs, ws)) - ws * ndtr(xs)
    return _as_output(out, scalar)


def stein_residual(x, w):
    """f_x'(w) - w f_x(w) - (I(w <= x) - Phi(x)); zero up to roundoff."""
    x_arr, w_arr, scalar = _broadcast(x, w)
    indicator = (w_arr <= x_arr).astype(float)
    res = (
        np.asarray(stein_f_prime(x_arr, w_arr))
        - w_arr * np.asarray(stein_f(x_arr, w_arr))
        - (indicator - ndtr(x_arr))
    )
    return _as_output(res, scalar)


@dataclass(frozen=True)
class KernelEvaluation:
    """One (w, f, f', g) sample of the kernel at a fixed threshold."""

    w: float
    f: float
    f_prime: float
    g: float


def evaluate_kernel(x: float, w: float) -> KernelEvaluation:
    return KernelEvaluation(
        w=float(w),
        f=stein_f(x, w),
        f_prime=stein_f_prime(x, w),
        g=stein_g(x, w),
    )


# ---------------------------------------------------------------------------
# Grid checkers for every stated envelope of f, f' and g.  Each returns the
# worst signed violation (positive means the bound failed by that much).
# ---------------------------------------------------------------------------


def residual_grid_max(grid: SteinGrid = DEFAULT.stein) -> float:
    xs = grid.x_values()[:, None]
    ws = grid.w_values()[None, :]
    return float(np.max(np.abs(stein_residual(xs, ws))))


def uniform_bound_violations(grid: SteinGrid = DEFAULT.stein) -> dict[str, float]:
    """Worst violations of the uniform envelopes over the grid.

    Checked: 0 < f <= 0.63, |f'| <= 1, g >= 0 for all (x, w); additionally
    g <= 2.3 whenever x is in [0, 1].
    """
    xs = grid.x_values()[:, None]
    ws = grid.w_values()[None, :]
    f = np.asarray(stein_f(xs, ws))
    fp = np.asarray(stein_f_prime(xs, ws))
    g = np.asarray(stein_g(xs, ws))
    unit_x = (xs >= 0.0) & (xs <= 1.0)
    return {
        "f_upper": float(np.max(f - 0.63)),
        "f_positive": float(np.max(-f)),
        "f_prime_abs": float(np.max(np.abs(fp) - 1.0)),
        "g_nonneg": float(np.max(-g)),
        "g_unit_x": float(np.max(np.where(unit_x, g - 2.3, -np.inf))),
    }


def piecewise_bound_violations(grid: SteinGrid = DEFAULT.stein) -> dict[str, float]:
    """Worst violations of the nonuniform envelopes for thresholds x >= 1."""
    xs = grid.piecewise_x_values()[:, None]
    ws = grid.w_values()[None, :]
    f = np.asarray(stein_f(xs, ws))
    fp = np.abs(np.asarray(stein_f_prime(xs, ws)))
    g = np.asarray(stein_g(xs, ws))

    far_left = ws <= xs - 1.0
    near_left = (ws > xs - 1.0) & (ws <= xs)
    right = ws > xs

    def worst(mask, excess):
        return float(np.max(np.where(mask, excess, -np.inf)))

    out = {
        "f_far_left": worst(far_left, f - 1.7 * np.exp(-xs)),
        "f_near_left": worst(near_left, f - 1.0 / xs),
        "f_right": worst(right, f - 1.0 / np.maximum(ws, 1e-300)),
        "fp_far_left": worst(far_left, fp - np.exp(0.5 - xs)),
        "fp_near_left": worst(near_left, fp - 1.0),
        "fp_right": worst(right, fp - 1.0 / (1.0 + xs * xs)),
        "g_left_tail": worst(ws <= 0.0, g - 1.6 * ndtr(-xs)),
        "g_right": worst(right, g - 1.0 / np.maximum(ws, 1e-300)),
    }
    x_col = grid.piecewise_x_values()
    out["g_at_x_minus_1"] = float(
        np.max(np.asarray(stein_g(x_col, x_col - 1.0)) - x_col * np.exp(0.5 - x_col))
    )
    out["g_at_x"] = float(np.max(np.asarray(stein_g(x_col, x_col)) - (x_col + 2.0)))
    return out


def g_monotonicity_violation(grid: SteinGrid = DEFAULT.stein) -> float:
    """Worst decrease of g_x along w in [0, x] for thresholds x >= 1."""
    worst = -math.inf
    ws_full = grid.w_values()
    for x in grid.piecewise_x_values():
        ws = ws_full[(ws_full >= 0.0) & (ws_full <= x)]
        if ws.size < 2:
            continue
        g = np.asarray(stein_g(x, ws))
        worst = max(worst, float(np.max(g[:-1] - g[1:])))
    return worst


def fd_derivative_gap(grid: SteinGrid = DEFAULT.stein) -> float:
    """Worst |f' - central difference of f| away from the jump point."""
    xs = grid.x_values()[:, None]
    ws = grid.w_values()[None, :]
    h = grid.fd_step
    interior = np.abs(ws - xs) > 10.0 * h
    fd = (np.asarray(stein_f(xs, ws + h)) - np.asarray(stein_f(xs, ws - h))) / (
        2.0 * h
    )
    gap = np.abs(fd - np.asarray(stein_f_prime(xs, ws)))
    return float(np.max(np.where(interior, gap, 0.0)))


# ---------------------------------------------------------------------------
# Exact-enumeration check of the derivative-expectation decay bound.
# ---------------------------------------------------------------------------


def expected_fprime_bound_check(
    x: float,
    t: float,
    xi_dists: Sequence[DiscreteDistribution],
    drop_index: int = 0,
    constant: float | None = None,
) -> tuple[float, float, bool]:
    """Check |E f_x'(W_b^{(i)} + t)| <= C (e^{-x} + e^{-x+t}) by enumeration.

    ``W_b^{(i)}`` is the clamped sum over all coordinates except
    ``drop_index``.  The distributions must have exact mean zero, and their
    total variance may not exceed one (the regime in which the sum's moment
    generating function is uniformly controlled).  C is the corpus-calibrated
    constant from :mod:`studentized.calibration`.
    """
    if not x >= 1:
        raise DomainError(f"decay bound stated for x >= 1, got x={x}")
    if not 0 <= drop_index < len(xi_dists):
        raise PreconditionError("drop_index out of range")
    total_second = Fraction(0)
    for dist in xi_dists:
        if dist.mean() != 0:
            raise PreconditionError("all summand distributions must have mean zero")
        total_second += dist.moment(2)
    if total_second > 1:
        raise PreconditionError(
            f"sum of second moments is {total_second} > 1"
        )
    kept = [d for i, d in enumerate(xi_dists) if i != drop_index]
    if kept:
        value = enumerate_expectation(
            kept,
            lambda vals: stein_f_prime(
                x, math.fsum(float(censor_xi(v)) for v in vals) + t
            ),
        )
    else:
        value = stein_f_prime(x, t)
    c = calibration.CONSTANTS.fprime_expectation if constant is None else constant
    lhs = abs(float(value))
    rhs = c * (math.exp(-x) + math.exp(-x + t))
    return lhs, rhs, lhs <= rhs
