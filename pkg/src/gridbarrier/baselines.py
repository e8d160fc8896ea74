"""Reference methods the barrier controller is measured against.

``solve_lcqp`` is the offline oracle: an exact primal active-set solve of
the linearly constrained QP (quadratic action cost, voltage rows, actuator
box). ``run_primal_dual`` is the online baseline: projected primal descent
plus a regularized dual ascent on measured violations.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import DimensionMismatch, Infeasible, MaxPivots, SingularMatrix
from .plant import InverterLimits, LinearGridPlant
from .trajectory import StepRecord, Trajectory

_STEP_TOL = 1e-11
_DROP_TOL = -1e-10
_FEAS_TOL = 1e-9


@dataclass(frozen=True)
class QpSolution:
    """Optimum of the constrained QP with its certificates.

    ``multipliers`` covers the voltage rows; box multipliers are split by
    bound. ``active_set`` uses stacked row indices: ``0..n-1`` voltage,
    ``n..3n-1`` upper box, ``3n..5n-1`` lower box.
    """

    u_star: np.ndarray
    multipliers: np.ndarray
    upper_multipliers: np.ndarray
    lower_multipliers: np.ndarray
    active_set: tuple[int, ...]
    objective: float


def solve_lcqp(
    q: np.ndarray,
    b: np.ndarray,
    e: np.ndarray,
    x_limit: np.ndarray,
    limits: InverterLimits,
    max_pivots: int | None = None,
) -> QpSolution:
    """Minimize ``0.5 * u^T Q u`` s.t. ``B u + e <= x_limit`` and box limits.

    Primal active-set method started at the lower corner of the box (the
    pointwise argmin of every voltage row -- voltage coefficients must be
    nonnegative, which holds for the sensitivity models used here). Bland's
    smallest-index rule picks both entering and leaving rows, with
    ``-1e-10`` as the drop threshold on multipliers. Raises
    :class:`Infeasible` when even full curtailment violates a voltage row
    and :class:`MaxPivots` when the pivot budget runs out.
    """
    q = np.asarray(q, dtype=float)
    b = np.asarray(b, dtype=float)
    e = np.asarray(e, dtype=float)
    x_limit = np.asarray(x_limit, dtype=float)
    n = b.shape[0]
    d = 2 * n
    if q.ndim == 1:
        q = np.diag(q)
    if q.shape != (d, d) or b.shape != (n, d) or e.shape != (n,) or x_limit.shape != (n,):
        raise DimensionMismatch("inconsistent QP shapes")
    if limits.dim != d:
        raise DimensionMismatch("limits do not match the QP dimension")
    lower, upper = limits.lower, limits.upper
    if np.any(b < -1e-12):
        raise ValueError("voltage rows must have nonnegative coefficients")

    fixed = (upper - lower) <= 1e-15
    free = ~fixed
    v_fix = lower[fixed]
    f = int(np.sum(free))
    rhs_v = x_limit - e - b[:, fixed] @ v_fix
    b_f = b[:, free]
    # the lower corner minimizes every voltage row (nonnegative coefficients)
    if np.any(b_f @ lower[free] > rhs_v + _FEAS_TOL):
        raise Infeasible("voltage limits violated even at full curtailment")

    u_full = np.array(lower, dtype=float)
    if f == 0:
        return _package(q, b, e, x_limit, limits, u_full, np.zeros(n), {}, {})

    q_ff = q[np.ix_(free, free)]
    c_lin = q[np.ix_(free, fixed)] @ v_fix
    lo_f, hi_f = lower[free], upper[free]
    # internal stacked rows: voltage, then upper box, then lower box (free coords)
    g = np.vstack([b_f, np.eye(f), -np.eye(f)])
    h = np.concatenate([rhs_v, hi_f, -lo_f])
    rows_total = n + 2 * f

    x = lo_f.copy()
    working = list(range(n + f, n + 2 * f))  # every lower row active at the corner
    budget = max_pivots if max_pivots is not None else 100 + 30 * rows_total
    lam_w = np.zeros(0)
    for _ in range(budget):
        k = len(working)
        kkt = np.zeros((f + k, f + k))
        kkt[:f, :f] = q_ff
        if k:
            g_w = g[working]
            kkt[:f, f:] = g_w.T
            kkt[f:, :f] = g_w
        rhs_full = np.concatenate([-c_lin, h[working]])
        try:
            sol = linalg.solve_linear(kkt, rhs_full)
        except SingularMatrix as exc:
            raise MaxPivots(f"working set became degenerate: {exc}") from exc
        x_hat, lam_w = sol[:f], sol[f:]
        if float(np.max(np.abs(x_hat - x))) <= _STEP_TOL * (1.0 + float(np.max(np.abs(x)))):
            negatives = [ri for ri, lam in zip(working, lam_w) if lam < _DROP_TOL]
            if not negatives:
                break
            working.remove(min(negatives))
            continue
        p = x_hat - x
        alpha = 1.0
        blocking = None
        in_w = set(working)
        for r in range(rows_total):
            if r in in_w:
                continue
            gp = float(g[r] @ p)
            if gp <= 1e-13:
                continue
            ratio = (h[r] - float(g[r] @ x)) / gp
            if ratio < alpha - 1e-13:
                alpha = max(ratio, 0.0)
                blocking = r
        x = x + alpha * p
        if blocking is None:
            x = x_hat
        else:
            working = sorted(working + [blocking])
    else:
        raise MaxPivots(f"no optimum after {budget} pivots")

    u_full[free] = x
    mu = np.zeros(n)
    upper_active: dict[int, float] = {}
    lower_active: dict[int, float] = {}
    free_idx = np.flatnonzero(free)
    for ri, lam in zip(working, lam_w):
        lam = float(lam)
        if ri < n:
            mu[ri] = lam
        elif ri < n + f:
            upper_active[int(free_idx[ri - n])] = lam
        else:
            lower_active[int(free_idx[ri - n - f])] = lam
    return _package(q, b, e, x_limit, limits, u_full, mu, upper_active, lower_active)


def _package(
    q: np.ndarray,
    b: np.ndarray,
    e: np.ndarray,
    x_limit: np.ndarray,
    limits: InverterLimits,
    u: np.ndarray,
    mu: np.ndarray,
    upper_active: dict[int, float],
    lower_active: dict[int, float],
) -> QpSolution:
    """Assemble the solution, fill in fixed-coordinate multipliers, verify KKT."""
    n = b.shape[0]
    d = 2 * n
    nu = np.zeros(d)
    xi = np.zeros(d)
    for j, lam in upper_active.items():
        nu[j] = lam
    for j, lam in lower_active.items():
        xi[j] = lam
    residual = q @ u + b.T @ mu
    fixed = (limits.upper - limits.lower) <= 1e-15
    for j in np.flatnonzero(fixed):
        if residual[j] >= 0.0:
            xi[j] = residual[j]
        else:
            nu[j] = -residual[j]

    active = [i for i in range(n) if mu[i] != 0.0 or (b[i] @ u + e[i]) >= x_limit[i] - 1e-10]
    active += [n + j for j in range(d) if nu[j] != 0.0]
    active += [n + d + j for j in range(d) if xi[j] != 0.0]

    scale = 1.0 + float(np.max(np.abs(residual)))
    stationarity = residual + nu - xi
    feas_v = b @ u + e - x_limit
    if (
        float(np.max(np.abs(stationarity))) > 1e-8 * scale
        or float(np.max(feas_v)) > 1e-8
        or float(np.max(u - limits.upper)) > 1e-8
        or float(np.max(limits.lower - u)) > 1e-8
        or min(float(np.min(mu)), float(np.min(nu)), float(np.min(xi))) < _DROP_TOL
    ):
        raise MaxPivots("solver terminated without a verified KKT point")
    return QpSolution(
        u_star=u,
        multipliers=mu,
        upper_multipliers=nu,
        lower_multipliers=xi,
        active_set=tuple(sorted(active)),
        objective=0.5 * float(u @ (q @ u)),
    )


# ---------------------------------------------------------------------------
# online primal-dual baseline
# ---------------------------------------------------------------------------


@dataclass
class PrimalDualConfig:
    eta_primal: float = 0.01
    eta_dual: float = 0.01
    regularization: float = 1e-4
    kappa: float = 0.6
    max_steps: int = 20_000
    convergence_tol: float = 1e-8


@dataclass
class PrimalDualState:
    u: np.ndarray
    lam: np.ndarray
    step_count: int = 0


def primal_dual_step(
    state: PrimalDualState,
    q_diag: np.ndarray,
    b_hat: np.ndarray,
    x_measured: np.ndarray,
    x_limit: np.ndarray,
    limits: InverterLimits,
    cfg: PrimalDualConfig,
) -> PrimalDualState:
    """One projected primal descent / clipped dual ascent pair.

    Both updates read the same pre-step measurement. The dual step carries
    a small regularization so the pair has a well-defined fixed point
    under model error.
    """
    grad = q_diag * state.u + b_hat.T @ state.lam
    state.u = np.clip(state.u - cfg.eta_primal * grad, limits.lower, limits.upper)
    state.lam = np.maximum(
        0.0,
        state.lam + cfg.eta_dual * (x_measured - x_limit - cfg.regularization * state.lam),
    )
    state.step_count += 1
    return state


def run_primal_dual(
    plant: LinearGridPlant,
    b_hat: np.ndarray,
    q_diag: np.ndarray,
    x_limit: np.ndarray,
    limits: InverterLimits,
    cfg: PrimalDualConfig | None = None,
) -> Trajectory:
    """Drive the plant with the primal-dual baseline from the safe start.

    Starts from the same curtailed action as the barrier controller
    (``(kappa - 1) * p_avail``, zero reactive) with zero duals, so step
    counts are comparable.
    """
    cfg = cfg or PrimalDualConfig()
    n = x_limit.shape[0]
    t0 = time.perf_counter()
    p_avail = -limits.lower[:n]
    u0 = np.concatenate([(cfg.kappa - 1.0) * p_avail, np.zeros(n)])
    state = PrimalDualState(
        u=np.clip(u0, limits.lower, limits.upper), lam=np.zeros(n)
    )
    x = plant.measure(state.u)
    records = [_pd_record(state, x, x_limit)]
    status = "max-iters"
    for _ in range(cfg.max_steps):
        u_prev = state.u
        lam_prev = state.lam
        primal_dual_step(state, q_diag, b_hat, x, x_limit, limits, cfg)
        x = plant.measure(state.u)
        records.append(_pd_record(state, x, x_limit))
        du = float(np.max(np.abs(state.u - u_prev)))
        dlam = float(np.max(np.abs(state.lam - lam_prev)))
        if du < cfg.convergence_tol and dlam < cfg.convergence_tol:
            status = "converged"
            break
    return Trajectory(
        records=records,
        status=status,
        wall_time=time.perf_counter() - t0,
        method="primal-dual",
        x_limit=np.asarray(x_limit, dtype=float).copy(),
        final_state=state,
    )


def _pd_record(state: PrimalDualState, x: np.ndarray, x_limit: np.ndarray) -> StepRecord:
    margins = x - x_limit
    return StepRecord(
        step=state.step_count,
        u=state.u.copy(),
        x=np.asarray(x, dtype=float).copy(),
        max_x=float(np.max(x)),
        attention=int(np.argmax(margins)),
        alpha_s=float(np.max(state.lam)) if state.lam.size else 0.0,
    )
