"""Online exponential-barrier voltage controller.

The controller regulates inverter setpoints ``u`` (stacked active and
reactive blocks) against measured voltage deviations ``x`` so that the
worst deviation settles at or below its limit, while a quadratic cost on
``u`` keeps the intervention minimal. It works from an *inexact*
sensitivity estimate ``b_hat`` plus a spectral-norm bound ``eps_b`` on the
estimation error:

1.  When some measured deviation reaches its limit, curtail generation to
    a fixed fraction ``kappa`` as a safe starting action.
2.  Pick the *attention* bus (largest margin ``x_i - limit_i``) and size a
    single exponential penalty for it. The nominal weight comes from a
    two-block saddle system over the currently unsaturated actions; a
    safety increment proportional to ``eps_b`` is added so that, with the
    whole upper actuator limit at zero, the settled deviation cannot end
    up above the limit even though the model is wrong.
3.  Descend the penalized cost using measured voltages in place of model
    predictions, projecting onto the actuator box each step.
4.  Whenever an action saturates/unsaturates or the attention bus changes,
    recompute the weight, the step size, and the curvature headroom.

All heavy lifting is plain dense algebra; state is kept explicit so the
loop can be driven externally (the plant is only ever queried through
``measure``).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import (
    DegenerateConstraint,
    DimensionMismatch,
    NotActivated,
    SingularKKT,
    SingularMatrix,
)
from .plant import InverterLimits, LinearGridPlant
from .trajectory import StepRecord, Trajectory

#: Exponents are clamped here to keep weights finite during transients.
EXPONENT_CAP = 30.0


@dataclass
class BarrierConfig:
    """Tunables for the barrier controller.

    ``beta`` sets the curvature of the exponential penalty per bus (larger
    means a harder wall), ``kappa`` the safe-curtailment fraction used at
    start-up, ``q_diag`` the diagonal of the quadratic action cost, and
    ``x_limit`` the per-bus deviation limits. ``eta_override`` bypasses the
    curvature-derived step size.
    """

    beta: np.ndarray
    kappa: float
    q_diag: np.ndarray
    x_limit: np.ndarray
    max_steps: int = 3000
    eta_override: float | None = None
    convergence_tol: float = 1e-8

    def __post_init__(self):
        self.beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        self.q_diag = np.asarray(self.q_diag, dtype=float)
        self.x_limit = np.atleast_1d(np.asarray(self.x_limit, dtype=float))
        n = self.x_limit.shape[0]
        if self.beta.shape == (1,) and n != 1:
            self.beta = np.full(n, float(self.beta[0]))
        if self.beta.shape != (n,):
            raise DimensionMismatch("beta must match the number of buses")
        if self.q_diag.shape != (2 * n,):
            raise DimensionMismatch("q_diag must have one entry per action")
        if np.any(self.beta <= 0.0):
            raise ValueError("beta must be positive")
        if np.any(self.q_diag <= 0.0):
            raise ValueError("action costs must be positive")
        if not (0.0 < self.kappa <= 1.0):
            raise ValueError("kappa must lie in (0, 1]")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")


@dataclass
class ControllerState:
    """Mutable controller state between feedback steps."""

    u: np.ndarray
    attention: int
    unsaturated: np.ndarray
    alpha_s: np.ndarray
    alpha_hat: float = 0.0
    gamma_s: float = 0.0
    eta: float = 0.0
    sigma: float = 1.0
    step_count: int = 0
    last_saturation: bool = False
    last_switch: bool = False
    weights_ready: bool = field(default=False, repr=False)


def solve_kkt_weights(
    q: np.ndarray, rows: np.ndarray, rhs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Solve the saddle system pairing the action cost with active rows.

        [ Q   rows^T ] [ u ]   [ 0   ]
        [ rows   0   ] [ w ] = [ rhs ]

    ``q`` may be a full matrix or just its diagonal. Returns the candidate
    action ``u`` and the constraint weights ``w``. Raises
    :class:`SingularKKT` when the rows are dependent (or the system is
    otherwise rank-deficient).
    """
    q = np.asarray(q, dtype=float)
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
    d = rows.shape[1]
    m = rows.shape[0]
    if q.ndim == 1:
        q = np.diag(q)
    if q.shape != (d, d):
        raise DimensionMismatch("cost matrix does not match the row width")
    if rhs.shape != (m,):
        raise DimensionMismatch("one right-hand side entry per row required")
    kkt = np.zeros((d + m, d + m))
    kkt[:d, :d] = q
    kkt[:d, d:] = rows.T
    kkt[d:, :d] = rows
    full_rhs = np.concatenate([np.zeros(d), rhs])
    try:
        sol = linalg.solve_linear(kkt, full_rhs)
    except SingularMatrix as exc:
        raise SingularKKT(str(exc)) from exc
    return sol[:d], sol[d:]


def compute_attention_weight(
    q_diag: np.ndarray,
    b_hat: np.ndarray,
    attention: int,
    unsaturated: np.ndarray,
    u: np.ndarray,
    e_hat: np.ndarray,
    x_limit: np.ndarray,
) -> tuple[float, np.ndarray]:
    """Nominal barrier weight for the attention bus.

    Reduces the problem to the unsaturated actions: saturated actions stay
    pinned at their current (bound) values in ``u``, and their contribution
    ``b_hat[i, j] * u_j`` is folded into the effective baseline deviation
    before solving the single-row saddle system

        [ Q_au      b_au ] [ u_au ]   [ 0                     ]
        [ b_au^T    0    ] [ a    ] = [ limit_i - e_effective ].

    Returns ``(weight, candidate actions on the unsaturated set)``.
    """
    au = np.asarray(unsaturated, dtype=bool)
    if not np.any(au):
        raise DegenerateConstraint("no unsaturated action available")
    e_eff = float(e_hat[attention] + b_hat[attention, ~au] @ np.asarray(u, dtype=float)[~au])
    rhs = float(x_limit[attention]) - e_eff
    u_cand, weights = solve_kkt_weights(
        np.asarray(q_diag, dtype=float)[au], b_hat[attention, au], [rhs]
    )
    return float(weights[0]), u_cand


def compute_safety_factor(
    eps_b: float,
    q_diag: np.ndarray,
    b_hat_row: np.ndarray,
    u_lower: np.ndarray,
    alpha_hat: float,
) -> float:
    """Safety increment on the barrier weight covering model error.

    All quantities are restricted to the unsaturated actions. Scales with
    the error bound and with how strongly the (estimated) attention row
    couples into the cost geometry.
    """
    q_diag = np.asarray(q_diag, dtype=float)
    b_hat_row = np.asarray(b_hat_row, dtype=float)
    coupling = float(b_hat_row @ (b_hat_row / q_diag))
    if abs(coupling) < 1e-14:
        raise DegenerateConstraint("attention row has no coupling to free actions")
    reach = float(np.linalg.norm(b_hat_row / q_diag))
    return (eps_b / abs(coupling)) * (float(np.linalg.norm(u_lower)) + reach * abs(alpha_hat))


def compute_step_size(
    q_diag: np.ndarray,
    alpha_s_i: float,
    beta_i: float,
    b_hat_row: np.ndarray,
    eps_b: float,
    sigma: float,
    eta_override: float | None = None,
) -> float:
    """Step size from the curvature bound of the penalized cost.

    ``sigma`` bounds the exponential factor along the trajectory; the
    returned step is the inverse of the resulting smoothness constant
    (always inside the stable interval, which extends to twice that).
    """
    norm_b = float(np.linalg.norm(b_hat_row))
    smoothness = float(np.max(q_diag)) + sigma * alpha_s_i * beta_i * norm_b * (norm_b + eps_b)
    if eta_override is not None:
        return float(eta_override)
    return 1.0 / smoothness


class BarrierController:
    """Drives inverter setpoints with a measurement-fed exponential penalty."""

    def __init__(
        self,
        config: BarrierConfig,
        limits: InverterLimits,
        b_hat: np.ndarray,
        eps_b: float = 0.0,
    ):
        b_hat = np.asarray(b_hat, dtype=float)
        n = config.x_limit.shape[0]
        if b_hat.shape != (n, 2 * n):
            raise DimensionMismatch(f"b_hat must have shape ({n}, {2 * n})")
        if limits.dim != 2 * n:
            raise DimensionMismatch("limits do not match the network size")
        if eps_b < 0.0:
            raise ValueError("eps_b must be nonnegative")
        self.config = config
        self.limits = limits
        self.b_hat = b_hat
        self.eps_b = float(eps_b)
        self.n = n

    # -- state construction -------------------------------------------------

    def initialize(self, x_observed: np.ndarray, u_current: np.ndarray | None = None) -> ControllerState:
        """Safe start-up action once a deviation reaches its limit.

        ``x_observed`` is the pre-control measurement (all controls at
        zero, generation at maximum); ``u_current`` is only sanity-checked.
        Active-power setpoints start at ``(kappa - 1) * p_avail`` --
        curtailment to the ``kappa`` fraction -- with ``p_avail`` read off
        the lower actuator limit; reactive setpoints start at zero.
        Weights stay unset until :meth:`compute_weights` runs.
        """
        x_observed = np.asarray(x_observed, dtype=float)
        if x_observed.shape != (self.n,):
            raise DimensionMismatch("measurement size does not match the network")
        if u_current is not None and np.asarray(u_current).shape != (2 * self.n,):
            raise DimensionMismatch("current action size does not match the network")
        margins = x_observed - self.config.x_limit
        if float(np.max(margins)) < 0.0:
            raise NotActivated(
                f"largest deviation margin {float(np.max(margins)):.3e} is below zero"
            )
        p_avail = -self.limits.lower[: self.n]
        u0 = np.concatenate([(self.config.kappa - 1.0) * p_avail, np.zeros(self.n)])
        u0 = np.clip(u0, self.limits.lower, self.limits.upper)
        return ControllerState(
            u=u0,
            attention=int(np.argmax(margins)),
            unsaturated=(self.limits.lower < u0) & (u0 < self.limits.upper),
            alpha_s=np.zeros(self.n),
        )

    # -- estimation and weights ----------------------------------------------

    def estimate_drop(self, x_measured: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Infer the baseline deviation from a measurement: ``x - b_hat @ u``."""
        return np.asarray(x_measured, dtype=float) - self.b_hat @ np.asarray(u, dtype=float)

    def compute_weights(self, state: ControllerState, x_measured: np.ndarray) -> None:
        """Size the attention penalty from the current measurement.

        Solves the reduced saddle system for the nominal weight, adds the
        model-error safety increment, refreshes the exponential headroom
        ``sigma`` and the step size. Saturated actions keep their pinned
        values and contribute through the effective baseline deviation. If
        every action is saturated there is nothing to size and the previous
        weights are kept.
        """
        cfg = self.config
        au = state.unsaturated
        if not np.any(au):
            return
        i = state.attention
        e_hat = self.estimate_drop(x_measured, state.u)
        try:
            state.alpha_hat, _ = compute_attention_weight(
                cfg.q_diag, self.b_hat, i, au, state.u, e_hat, cfg.x_limit
            )
            if self.eps_b > 0.0:
                state.gamma_s = compute_safety_factor(
                    self.eps_b, cfg.q_diag[au], self.b_hat[i, au],
                    self.limits.lower[au], state.alpha_hat,
                )
            else:
                state.gamma_s = 0.0
        except (SingularKKT, DegenerateConstraint):
            # The attention bus is momentarily uncontrollable from the free
            # actions (e.g. its whole branch saturated); keep the previous
            # weights until the next event re-opens a coupled action.
            return
        state.alpha_s = np.zeros(self.n)
        state.alpha_s[i] = max(state.alpha_hat + state.gamma_s, 0.0)
        margins = np.asarray(x_measured, dtype=float) - cfg.x_limit
        state.sigma = float(max(1.0, np.max(np.exp(np.minimum(cfg.beta * margins, EXPONENT_CAP)))))
        state.eta = compute_step_size(
            cfg.q_diag[au], state.alpha_s[i], cfg.beta[i], self.b_hat[i, au],
            self.eps_b, state.sigma, cfg.eta_override,
        )
        state.weights_ready = True

    # -- feedback loop -------------------------------------------------------

    def gradient_feedback(self, state: ControllerState, x_measured: np.ndarray) -> np.ndarray:
        """Descent direction with the measured margin in the exponent."""
        cfg = self.config
        i = state.attention
        margin = float(x_measured[i] - cfg.x_limit[i])
        weight = state.alpha_s[i] * np.exp(min(cfg.beta[i] * margin, EXPONENT_CAP))
        return cfg.q_diag * state.u + weight * self.b_hat[i]

    def step(self, state: ControllerState, x_measured: np.ndarray) -> ControllerState:
        """One projected descent step on the actuator box."""
        f = self.gradient_feedback(state, x_measured)
        state.u = np.clip(state.u - state.eta * f, self.limits.lower, self.limits.upper)
        state.step_count += 1
        return state

    def handle_events(self, state: ControllerState, x_measured: np.ndarray) -> ControllerState:
        """React to saturation changes and attention switches.

        Either event (or weights never having been sized) triggers a full
        weight recomputation at the current measurement.
        """
        new_unsat = (self.limits.lower < state.u) & (state.u < self.limits.upper)
        margins = np.asarray(x_measured, dtype=float) - self.config.x_limit
        new_attention = int(np.argmax(margins))
        state.last_saturation = bool(np.any(new_unsat != state.unsaturated))
        state.last_switch = new_attention != state.attention
        if state.last_saturation or state.last_switch or not state.weights_ready:
            state.unsaturated = new_unsat
            state.attention = new_attention
            self.compute_weights(state, x_measured)
        return state

    def run(self, plant: LinearGridPlant) -> Trajectory:
        """Drive the plant until the action settles or the budget runs out."""
        cfg = self.config
        t0 = time.perf_counter()
        x_pre = plant.measure(np.zeros(2 * self.n))
        state = self.initialize(x_pre)
        x = plant.measure(state.u)
        state.attention = int(np.argmax(x - cfg.x_limit))
        state.unsaturated = (self.limits.lower < state.u) & (state.u < self.limits.upper)
        self.compute_weights(state, x)
        records = [self._record(state, x)]
        status = "max-iters"
        for _ in range(cfg.max_steps):
            u_prev = state.u
            self.step(state, x)
            x = plant.measure(state.u)
            self.handle_events(state, x)
            records.append(self._record(state, x))
            if float(np.max(np.abs(state.u - u_prev))) < cfg.convergence_tol:
                status = "converged"
                break
        return Trajectory(
            records=records,
            status=status,
            wall_time=time.perf_counter() - t0,
            method="barrier",
            x_limit=cfg.x_limit.copy(),
            final_state=state,
        )

    def _record(self, state: ControllerState, x: np.ndarray) -> StepRecord:
        return StepRecord(
            step=state.step_count,
            u=state.u.copy(),
            x=np.asarray(x, dtype=float).copy(),
            max_x=float(np.max(x)),
            attention=state.attention,
            alpha_s=float(state.alpha_s[state.attention]),
            saturation_event=state.last_saturation,
            switch_event=state.last_switch,
        )
