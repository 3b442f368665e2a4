"""Fixed numeric configuration shared by the verification suites.

Every grid step, tolerance and cost cap used by the checkers lives here so
that runs are reproducible from a single record.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SteinGrid:
    """Evaluation grids and slacks for the Stein-kernel checks."""

    x_min: float = -5.0
    x_max: float = 5.0
    w_min: float = -10.0
    w_max: float = 10.0
    step: float = 0.01
    residual_tol: float = 1e-12
    bound_slack: float = 1e-12
    # piecewise envelope checks run on thresholds >= 1 only
    piecewise_x_min: float = 1.0
    piecewise_x_max: float = 10.0
    fd_step: float = 1e-5
    fd_tol: float = 1e-6

    def x_values(self) -> np.ndarray:
        n = int(round((self.x_max - self.x_min) / self.step))
        return self.x_min + self.step * np.arange(n + 1)

    def w_values(self) -> np.ndarray:
        n = int(round((self.w_max - self.w_min) / self.step))
        return self.w_min + self.step * np.arange(n + 1)

    def piecewise_x_values(self) -> np.ndarray:
        n = int(round((self.piecewise_x_max - self.piecewise_x_min) / self.step))
        return self.piecewise_x_min + self.step * np.arange(n + 1)


@dataclass(frozen=True)
class SupXGrid:
    """Grid of non-negative thresholds for sup_x style terms.

    A dense linear part where the integrands live, plus logarithmic points
    covering the exponentially decaying tail.
    """

    linear_max: float = 10.0
    linear_step: float = 0.05
    log_max: float = 40.0
    log_points: int = 25

    def values(self) -> np.ndarray:
        n = int(round(self.linear_max / self.linear_step))
        lin = self.linear_step * np.arange(n + 1)
        log = np.geomspace(self.linear_max, self.log_max, self.log_points + 1)[1:]
        return np.concatenate([lin, log])


@dataclass(frozen=True)
class Caps:
    """Hard cost limits; exceeding one raises instead of silently sampling."""

    enumeration_atoms: int = 2_000_000
    kernel_calls: int = 10_000_000


@dataclass(frozen=True)
class McDefaults:
    min_reps: int = 1_000
    chunk: int = 4_096
    workers: int = 1


@dataclass(frozen=True)
class Tolerances:
    identity_rel: float = 1e-10
    exact_check_slack: float = 1e-12
    float_check_rel: float = 1e-9


@dataclass(frozen=True)
class Config:
    stein: SteinGrid = field(default_factory=SteinGrid)
    sup_x: SupXGrid = field(default_factory=SupXGrid)
    caps: Caps = field(default_factory=Caps)
    mc: McDefaults = field(default_factory=McDefaults)
    tol: Tolerances = field(default_factory=Tolerances)


DEFAULT = Config()
