"""Shared trajectory records produced by the controller and the baselines."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass
class StepRecord:
    """Snapshot of one feedback step.

    ``attention`` is the 0-based internal bus position (bus label minus
    one); ``alpha_s`` is the penalty weight at that bus for the barrier
    method and the largest dual variable for the primal-dual baseline.
    """

    step: int
    u: np.ndarray
    x: np.ndarray
    max_x: float
    attention: int
    alpha_s: float
    saturation_event: bool = False
    switch_event: bool = False


@dataclass
class Trajectory:
    """An ordered run of step records plus terminal bookkeeping."""

    records: list[StepRecord]
    status: str  # "converged" | "max-iters" | "static"
    wall_time: float
    method: str = ""
    x_limit: np.ndarray | None = None
    final_state: Any = None

    @property
    def steps(self) -> int:
        """Index of the last recorded step."""
        return self.records[-1].step if self.records else 0

    @property
    def final_max_x(self) -> float:
        return self.records[-1].max_x if self.records else float("nan")

    @property
    def final_u(self) -> np.ndarray:
        return self.records[-1].u

    def violations(self, start: int = 0, tol: float = 1e-9) -> int:
        """Number of recorded steps (from ``start`` on) above any limit."""
        if self.x_limit is None:
            raise ValueError("trajectory has no limits attached")
        count = 0
        for rec in self.records:
            if rec.step < start:
                continue
            if float(np.max(rec.x - self.x_limit)) > tol:
                count += 1
        return count
