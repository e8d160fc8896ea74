"""FastAPI application wrapping the core package.

Scenario problems (parse/validation) map to 400; anything the numerical
core raises that a well-formed request should not trigger maps to 500.
Method-level failures inside an experiment are reported per method in the
response body, not as HTTP errors.
"""

from __future__ import annotations

import math

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..errors import GridBarrierError, ScenarioError
from ..harness.experiment import ExperimentResult, run_experiment, run_sweep
from ..harness.report import summary_table, svg_text, sweep_csv_text, sweep_table, trajectory_csv_text
from ..harness.scenario import apply_seed_override, parse_scenario
from ..netmodel import (
    SensitivityModel,
    generate_synthetic_feeder,
    network_csv_text,
    parse_network_csv,
)
from . import schemas


def _clean(value: float) -> float | None:
    """JSON has no NaN; absent metrics become null."""
    return float(value) if math.isfinite(value) else None


def _method_summaries(result: ExperimentResult) -> list[schemas.MethodSummary]:
    kv = result.scenario.nominal_kv
    out = []
    for m in result.methods.values():
        final_kv = kv * (1.0 + m.final_max_x) if math.isfinite(m.final_max_x) else None
        out.append(
            schemas.MethodSummary(
                name=m.name,
                status=m.status if m.error is None else "error",
                steps=m.steps,
                final_max_x=_clean(m.final_max_x),
                final_max_kv=final_kv,
                violations=m.violations,
                violations_after_start=m.violations_after_start,
                objective=_clean(m.objective),
                gap=_clean(m.gap),
                error=m.error,
            )
        )
    return out


def _experiment(payload: schemas.ScenarioRequest) -> ExperimentResult:
    scenario = apply_seed_override(parse_scenario(payload.scenario))
    network = None
    if payload.network_csv is not None:
        network = parse_network_csv(payload.network_csv, source="<attached network>")
    elif scenario.network_file is not None:
        raise ScenarioError(
            f"scenario references network file {scenario.network_file!r}; "
            "attach its content as 'network_csv'"
        )
    return run_experiment(scenario, network)


def create_app() -> FastAPI:
    app = FastAPI(
        title="gridbarrier",
        description="Safe inverter voltage control experiments on radial feeders.",
        version="0.1.0",
    )

    @app.exception_handler(ScenarioError)
    async def scenario_error(_: Request, exc: ScenarioError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(GridBarrierError)
    async def core_error(_: Request, exc: GridBarrierError) -> JSONResponse:
        return JSONResponse(
            status_code=500, content={"detail": f"{type(exc).__name__}: {exc}"}
        )

    @app.get("/health")
    async def health() -> dict:
        return {"status": "ok"}

    @app.post("/feeder/generate", response_model=schemas.FeederResponse)
    async def feeder_generate(req: schemas.FeederRequest) -> schemas.FeederResponse:
        net = generate_synthetic_feeder(
            req.n, req.seed, req.overload_factor, limit=req.limit_pct / 100.0
        )
        model = SensitivityModel.from_network(net)
        worst = float(np.max(model.drop))
        return schemas.FeederResponse(
            csv=network_csv_text(net),
            n=net.n,
            max_uncontrolled_deviation=worst,
            activated=worst >= req.limit_pct / 100.0,
        )

    @app.post("/experiment/run", response_model=schemas.RunResponse)
    async def experiment_run(req: schemas.ScenarioRequest) -> schemas.RunResponse:
        result = _experiment(req)
        trajectories = {
            m.name: trajectory_csv_text(m.trajectory)
            for m in result.methods.values()
            if m.trajectory is not None
        }
        series = {
            m.name: [(rec.step, rec.max_x) for rec in m.trajectory.records]
            for m in result.methods.values()
            if m.trajectory is not None and m.name in ("barrier", "primal-dual")
        }
        svg = svg_text(series, result.scenario.x_limit_pu, title="max deviation vs step")
        return schemas.RunResponse(
            n=result.n,
            eps_b=result.eps_b,
            relative_error=result.relative_error,
            methods=_method_summaries(result),
            table=summary_table(result),
            trajectories=trajectories,
            plot_svg=svg,
        )

    @app.post("/experiment/compare", response_model=schemas.CompareResponse)
    async def experiment_compare(req: schemas.ScenarioRequest) -> schemas.CompareResponse:
        result = _experiment(req)
        return schemas.CompareResponse(
            n=result.n,
            eps_b=result.eps_b,
            relative_error=result.relative_error,
            methods=_method_summaries(result),
            table=summary_table(result),
        )

    @app.post("/experiment/sweep", response_model=schemas.SweepResponse)
    async def experiment_sweep(req: schemas.SweepRequest) -> schemas.SweepResponse:
        scenario = apply_seed_override(parse_scenario(req.scenario))
        network = None
        if req.network_csv is not None:
            network = parse_network_csv(req.network_csv, source="<attached network>")
        elif scenario.network_file is not None:
            raise ScenarioError(
                f"scenario references network file {scenario.network_file!r}; "
                "attach its content as 'network_csv'"
            )
        rows = run_sweep(scenario, req.magnitudes, network)
        def clean_row(r: dict) -> schemas.SweepRow:
            if r["error"] is not None:
                return schemas.SweepRow(magnitude=r["magnitude"], status="error", error=r["error"])
            return schemas.SweepRow(
                magnitude=r["magnitude"],
                eps_b=r["eps_b"],
                relative_error=r["relative_error"],
                status=r["status"],
                steps=r["steps"],
                final_max_x=_clean(r["final_max_x"]),
                violations_after_start=r["violations_after_start"],
                objective=_clean(r["objective"]),
                gap=_clean(r["gap"]),
            )
        return schemas.SweepResponse(
            rows=[clean_row(r) for r in rows],
            table=sweep_table(rows),
            csv=sweep_csv_text(rows),
        )

    return app
