"""Run every requested method on one scenario and collect comparable results."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..baselines import PrimalDualConfig, run_primal_dual, solve_lcqp
from ..controller import BarrierConfig, BarrierController
from ..errors import GridBarrierError, ValidationError
from ..netmodel import (
    RadialNetwork,
    SensitivityModel,
    generate_synthetic_feeder,
    read_network_csv,
)
from ..plant import InverterLimits, LinearGridPlant, ModelEstimate, perturb_model
from ..trajectory import StepRecord, Trajectory
from .scenario import Scenario

#: method execution order; also the reporting order
METHOD_ORDER = ("no-control", "lcqp-true", "lcqp-estimate", "barrier", "primal-dual")


@dataclass
class MethodResult:
    name: str
    trajectory: Trajectory | None = None
    status: str = "error"
    steps: int = 0
    final_max_x: float = float("nan")
    violations: int = 0
    violations_after_start: int = 0
    objective: float = float("nan")
    gap: float = float("nan")
    error: str | None = None


@dataclass
class ExperimentInputs:
    network: RadialNetwork
    model: SensitivityModel
    estimate: ModelEstimate
    limits: InverterLimits
    config: BarrierConfig
    plant: LinearGridPlant
    q_diag: np.ndarray
    x_limit: np.ndarray


@dataclass
class ExperimentResult:
    scenario: Scenario
    n: int
    eps_b: float
    relative_error: float
    methods: dict[str, MethodResult]


def build_inputs(scenario: Scenario, network: RadialNetwork | None = None) -> ExperimentInputs:
    """Materialize network, true model, inexact estimate and configs."""
    if network is None:
        path = scenario.resolve_network_file()
        if path is not None:
            network = read_network_csv(str(path))
        else:
            network = generate_synthetic_feeder(
                scenario.n,
                scenario.net_seed,
                scenario.overload_factor,
                limit=scenario.x_limit_pu,
            )
    model = SensitivityModel.from_network(network)
    if scenario.perturb_kind == "none":
        estimate = ModelEstimate(model.b_matrix.copy(), 0.0, 0.0)
    else:
        estimate = perturb_model(
            model.b_matrix, scenario.perturb_kind, scenario.magnitude, scenario.perturb_seed
        )
    n = network.n
    q_diag = np.concatenate([np.full(n, 2.0 * scenario.c_p), np.full(n, 2.0 * scenario.c_q)])
    x_limit = np.full(n, scenario.x_limit_pu)
    config = BarrierConfig(
        beta=np.full(n, scenario.beta),
        kappa=scenario.kappa,
        q_diag=q_diag,
        x_limit=x_limit,
        max_steps=scenario.max_steps,
        eta_override=scenario.eta,
        convergence_tol=scenario.convergence_tol,
    )
    limits = InverterLimits.from_network(
        network, reactive_fraction=scenario.reactive_fraction, upper_zero=scenario.upper_zero
    )
    return ExperimentInputs(
        network=network,
        model=model,
        estimate=estimate,
        limits=limits,
        config=config,
        plant=LinearGridPlant(model),
        q_diag=q_diag,
        x_limit=x_limit,
    )


def _static_trajectory(u: np.ndarray, x: np.ndarray, x_limit: np.ndarray, method: str) -> Trajectory:
    rec = StepRecord(
        step=0,
        u=np.asarray(u, dtype=float).copy(),
        x=np.asarray(x, dtype=float).copy(),
        max_x=float(np.max(x)),
        attention=int(np.argmax(x - x_limit)),
        alpha_s=0.0,
    )
    return Trajectory([rec], status="static", wall_time=0.0, method=method, x_limit=x_limit.copy())


def _summarize(name: str, traj: Trajectory, q_diag: np.ndarray) -> MethodResult:
    after = 1 if traj.records and traj.records[-1].step > 0 else 0
    u = traj.final_u
    return MethodResult(
        name=name,
        trajectory=traj,
        status=traj.status,
        steps=traj.steps,
        final_max_x=traj.final_max_x,
        violations=traj.violations(),
        violations_after_start=traj.violations(start=after),
        objective=0.5 * float(u @ (q_diag * u)),
    )


def run_experiment(scenario: Scenario, network: RadialNetwork | None = None) -> ExperimentResult:
    """Run all requested methods; an error in one never aborts the others."""
    inputs = build_inputs(scenario, network)
    plant, x_limit, q_diag = inputs.plant, inputs.x_limit, inputs.q_diag
    n = inputs.network.n
    methods: dict[str, MethodResult] = {}

    def guarded(name: str, fn) -> None:
        try:
            methods[name] = fn()
        except (GridBarrierError, ValueError) as exc:
            methods[name] = MethodResult(name=name, error=f"{type(exc).__name__}: {exc}")

    def no_control() -> MethodResult:
        u0 = np.zeros(2 * n)
        return _summarize("no-control", _static_trajectory(u0, plant.measure(u0), x_limit, "no-control"), q_diag)

    guarded("no-control", no_control)

    def lcqp(name: str, b_used: np.ndarray) -> MethodResult:
        sol = solve_lcqp(np.diag(q_diag), b_used, inputs.model.drop, x_limit, inputs.limits)
        traj = _static_trajectory(sol.u_star, plant.measure(sol.u_star), x_limit, name)
        result = _summarize(name, traj, q_diag)
        result.status = "solved"
        return result

    if scenario.with_lcqp:
        guarded("lcqp-true", lambda: lcqp("lcqp-true", inputs.model.b_matrix))
        guarded("lcqp-estimate", lambda: lcqp("lcqp-estimate", inputs.estimate.b_hat))

    def barrier() -> MethodResult:
        controller = BarrierController(
            inputs.config, inputs.limits, inputs.estimate.b_hat, inputs.estimate.eps_b
        )
        return _summarize("barrier", controller.run(plant), q_diag)

    guarded("barrier", barrier)

    if scenario.with_primal_dual:
        pd_cfg = PrimalDualConfig(
            eta_primal=scenario.pd_eta_primal,
            eta_dual=scenario.pd_eta_dual,
            regularization=scenario.pd_regularization,
            kappa=scenario.kappa,
            max_steps=scenario.pd_max_steps,
            convergence_tol=scenario.convergence_tol,
        )
        guarded(
            "primal-dual",
            lambda: _summarize(
                "primal-dual",
                run_primal_dual(plant, inputs.estimate.b_hat, q_diag, x_limit, inputs.limits, pd_cfg),
                q_diag,
            ),
        )

    reference = methods.get("lcqp-true")
    if reference is not None and reference.error is None:
        for result in methods.values():
            if result.error is None:
                result.gap = result.objective - reference.objective

    ordered = {name: methods[name] for name in METHOD_ORDER if name in methods}
    return ExperimentResult(
        scenario=scenario,
        n=n,
        eps_b=inputs.estimate.eps_b,
        relative_error=inputs.estimate.relative_error,
        methods=ordered,
    )


def run_sweep(
    scenario: Scenario,
    magnitudes: list[float],
    network: RadialNetwork | None = None,
) -> list[dict]:
    """Rerun the barrier controller across perturbation magnitudes.

    Each row reports the realized error, safety outcome and optimality gap
    against the exact-model QP solution of the same instance.
    """
    if scenario.perturb_kind == "none":
        raise ValidationError("sweep needs [perturbation] kind set (not 'none')")
    rows: list[dict] = []
    for magnitude in magnitudes:
        if magnitude < 0.0:
            raise ValidationError(f"sweep magnitude must be nonnegative, got {magnitude}")
        sub = replace(scenario, magnitude=float(magnitude), with_primal_dual=False)
        result = run_experiment(sub, network)
        barrier = result.methods.get("barrier")
        rows.append(
            {
                "magnitude": float(magnitude),
                "eps_b": result.eps_b,
                "relative_error": result.relative_error,
                "status": barrier.status if barrier.error is None else "error",
                "steps": barrier.steps,
                "final_max_x": barrier.final_max_x,
                "violations_after_start": barrier.violations_after_start,
                "objective": barrier.objective,
                "gap": barrier.gap,
                "error": barrier.error,
            }
        )
    return rows
