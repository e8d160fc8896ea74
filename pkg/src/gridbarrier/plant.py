"""The simulated grid side: exact measurements and inexact model estimates.

The controller never sees the true sensitivity matrix. It receives a
perturbed copy plus a bound on the perturbation's spectral norm; the plant
itself always answers measurements with the true linear model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .netmodel import RadialNetwork, SensitivityModel


@dataclass(frozen=True)
class InverterLimits:
    """Actuator box ``lower <= u <= upper`` over stacked (active, reactive) blocks."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionMismatch("limit vectors must be 1-D and equally sized")
        if np.any(lo > hi):
            raise ValueError("lower limit exceeds upper limit")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @classmethod
    def from_network(
        cls,
        net: RadialNetwork,
        reactive_fraction: float = 0.4,
        upper_zero: bool = False,
    ) -> "InverterLimits":
        """Per-bus boxes: curtailment in ``[-p_avail, 0]``, reactive power in
        ``[-f*p_avail, f*p_avail]`` (or ``[-f*p_avail, 0]`` when ``upper_zero``
        forces the whole upper limit to zero). Buses without inverters get
        ``[0, 0]`` in both blocks.
        """
        if reactive_fraction < 0.0:
            raise ValueError("reactive_fraction must be nonnegative")
        span = reactive_fraction * net.p_avail
        lower = np.concatenate([-net.p_avail, -span])
        upper = np.concatenate([np.zeros(net.n), np.zeros(net.n) if upper_zero else span])
        return cls(lower, upper)


class LinearGridPlant:
    """Answers voltage measurements from the true linearized model."""

    def __init__(self, model: SensitivityModel):
        self.model = model

    @property
    def n(self) -> int:
        return self.model.n

    def measure(self, u: np.ndarray) -> np.ndarray:
        """Voltage deviations at control ``u``: ``B @ u + e``, noise-free."""
        u = np.asarray(u, dtype=float)
        if u.shape != (2 * self.n,):
            raise DimensionMismatch(f"control must have shape ({2 * self.n},), got {u.shape}")
        return self.model.b_matrix @ u + self.model.drop


@dataclass(frozen=True)
class ModelEstimate:
    """A perturbed sensitivity matrix plus the realized error norms."""

    b_hat: np.ndarray
    eps_b: float
    relative_error: float


def spectral_norm(m: np.ndarray, rtol: float = 1e-8, max_iter: int = 10_000) -> float:
    """Largest singular value via power iteration on ``m.T @ m``.

    The start vector is deterministic (a fixed ramp), so results are
    reproducible. Converges when the Rayleigh estimate is stable to
    ``rtol`` relatively.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise DimensionMismatch("spectral_norm expects a 2-D array")
    if m.size == 0 or not np.any(m):
        return 0.0
    cols = m.shape[1]
    v = 1.0 + np.arange(cols) / max(cols, 1)
    v /= np.linalg.norm(v)
    last = 0.0
    for _ in range(max_iter):
        w = m.T @ (m @ v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        est = np.sqrt(norm)  # ||M^T M v|| -> sigma^2 once v settles
        if abs(est - last) <= rtol * est:
            return float(est)
        last = est
    return float(last)


def _symmetrize_blocks(b: np.ndarray) -> np.ndarray:
    n = b.shape[0]
    r = b[:, :n]
    x = b[:, n:]
    return np.hstack([(r + r.T) / 2.0, (x + x.T) / 2.0])


def perturb_model(
    b: np.ndarray,
    kind: str,
    magnitude: float,
    seed: int,
) -> ModelEstimate:
    """Derive an inexact estimate of the sensitivity matrix ``b`` (n x 2n).

    - ``parametric``: every entry scaled by ``1 + delta`` with i.i.d.
      ``delta ~ U[-magnitude, magnitude]``; blocks are then re-symmetrized.
    - ``topological``: one random bus transposition applied simultaneously
      to rows and to the matching columns inside each block, emulating a
      mislabeled pair of buses (``magnitude`` is ignored).
    - ``both``: parametric first, then the transposition.

    ``eps_b`` is the realized spectral norm of the perturbation, not an
    assumed bound.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if b.shape != (n, 2 * n):
        raise DimensionMismatch(f"expected shape ({n}, {2 * n}), got {b.shape}")
    if kind not in ("parametric", "topological", "both"):
        raise ValueError(f"unknown perturbation kind {kind!r}")
    if magnitude < 0.0:
        raise ValueError("magnitude must be nonnegative")
    rng = np.random.default_rng(seed)
    b_hat = b.copy()
    if kind in ("parametric", "both"):
        # draw even at magnitude 0 so the transposition of "both" is the
        # same whether or not a parametric stage precedes it
        factors = 1.0 + rng.uniform(-magnitude, magnitude, size=b.shape)
        if magnitude > 0.0:
            b_hat = _symmetrize_blocks(b_hat * factors)
    if kind in ("topological", "both") and n >= 2:
        i, j = (int(k) for k in rng.choice(n, size=2, replace=False))
        b_hat[[i, j]] = b_hat[[j, i]]
        b_hat[:, [i, j]] = b_hat[:, [j, i]]
        b_hat[:, [n + i, n + j]] = b_hat[:, [n + j, n + i]]
    # the reported error is a safety bound, so it must never undershoot;
    # the exact SVD norm is cheap at these sizes
    eps_b = float(np.linalg.norm(b - b_hat, 2))
    base = float(np.linalg.norm(b, 2))
    return ModelEstimate(b_hat, eps_b, eps_b / base if base else 0.0)


def tune_perturbation(
    b: np.ndarray,
    kind: str,
    target_relative_error: float,
    seed: int,
    tol: float = 0.01,
    max_bisect: int = 60,
) -> tuple[float, ModelEstimate]:
    """Find a ``magnitude`` whose realized relative error hits a target.

    Bisects on the parametric magnitude (the transposition part of
    ``both`` is fixed by the seed). Returns ``(magnitude, estimate)``
    with ``|relative_error - target| <= tol`` when attainable.
    """
    if kind == "topological":
        raise ValueError("a pure transposition has no magnitude to tune")
    lo, hi = 0.0, 1.0
    est_hi = perturb_model(b, kind, hi, seed)
    while est_hi.relative_error < target_relative_error and hi < 8.0:
        hi *= 2.0
        est_hi = perturb_model(b, kind, hi, seed)
    if est_hi.relative_error < target_relative_error:
        return hi, est_hi  # saturated: report the closest attainable point
    for _ in range(max_bisect):
        mid = (lo + hi) / 2.0
        est = perturb_model(b, kind, mid, seed)
        if abs(est.relative_error - target_relative_error) <= tol:
            return mid, est
        if est.relative_error < target_relative_error:
            lo = mid
        else:
            hi = mid
    return mid, est
