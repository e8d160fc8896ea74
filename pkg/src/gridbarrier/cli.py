"""Command-line client for the experiment service.

Every subcommand talks to the HTTP API. By default the app is mounted
in-process (no server needed, fully deterministic); ``--server`` points
the same commands at a remote instance instead. Exit codes: 0 success,
1 input/validation problems, 2 runtime failures.
"""

from __future__ import annotations

import sys
from importlib import resources
from pathlib import Path

import click
import httpx

from .errors import ScenarioError
from .harness.scenario import load_scenario

EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

_BUILTIN_PREFIX = "builtin:"


class ServiceClient:
    """Minimal JSON-over-HTTP client; in-process unless a server is given."""

    def __init__(self, server: str | None = None):
        if server:
            self._client = httpx.Client(base_url=server, timeout=600.0)
        else:
            from fastapi.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app(), raise_server_exceptions=False)

    def post(self, path: str, payload: dict) -> dict:
        try:
            response = self._client.post(path, json=payload)
        except httpx.HTTPError as exc:
            click.echo(f"error: cannot reach service: {exc}", err=True)
            sys.exit(EXIT_RUNTIME)
        if response.status_code in (400, 422):
            click.echo(f"error: {_detail(response)}", err=True)
            sys.exit(EXIT_VALIDATION)
        if response.status_code != 200:
            click.echo(f"error: service failed ({response.status_code}): {_detail(response)}", err=True)
            sys.exit(EXIT_RUNTIME)
        return response.json()


def _detail(response: httpx.Response) -> str:
    try:
        return str(response.json().get("detail"))
    except Exception:
        return response.text


def _scenario_payload(scenario_path: str) -> dict:
    """Read the scenario and inline the referenced network file, if any."""
    if scenario_path.startswith(_BUILTIN_PREFIX):
        name = scenario_path[len(_BUILTIN_PREFIX):]
        base = resources.files("gridbarrier.data")
        candidate = base / f"scenario_{name}.cfg"
        try:
            text = candidate.read_text(encoding="utf-8")
        except (FileNotFoundError, OSError):
            click.echo(f"error: no builtin scenario {name!r}", err=True)
            sys.exit(EXIT_VALIDATION)
        scenario = None
        payload = {"scenario": text}
        from .harness.scenario import parse_scenario

        try:
            scenario = parse_scenario(text, source=scenario_path)
        except ScenarioError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_VALIDATION)
        if scenario.network_file is not None:
            net_text = (base / scenario.network_file).read_text(encoding="utf-8")
            payload["network_csv"] = net_text
        return payload

    path = Path(scenario_path)
    if not path.is_file():
        click.echo(f"error: scenario file not found: {path}", err=True)
        sys.exit(EXIT_VALIDATION)
    try:
        scenario = load_scenario(path)
    except ScenarioError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    payload = {"scenario": path.read_text(encoding="utf-8")}
    net_path = scenario.resolve_network_file()
    if net_path is not None:
        if not net_path.is_file():
            click.echo(f"error: network file not found: {net_path}", err=True)
            sys.exit(EXIT_VALIDATION)
        payload["network_csv"] = net_path.read_text(encoding="utf-8")
    return payload


@click.group()
def main() -> None:
    """Safe inverter voltage control experiments."""


@main.command("gen-feeder")
@click.option("--n", type=int, default=56, show_default=True, help="Number of load buses.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--overload-factor", type=float, default=1.5, show_default=True)
@click.option("--limit-pct", type=float, default=5.0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Output network CSV.")
@click.option("--server", default=None, help="Remote service URL (default: in-process).")
def gen_feeder(n: int, seed: int, overload_factor: float, limit_pct: float, out: str, server: str | None) -> None:
    """Synthesize a radial feeder and write its network CSV."""
    client = ServiceClient(server)
    data = client.post(
        "/feeder/generate",
        {"n": n, "seed": seed, "overload_factor": overload_factor, "limit_pct": limit_pct},
    )
    Path(out).write_text(data["csv"], encoding="utf-8")
    click.echo(
        f"wrote {out}: n={data['n']}, max uncontrolled deviation "
        f"{data['max_uncontrolled_deviation']:.6g} pu, activated={data['activated']}"
    )


@main.command("run")
@click.option("--scenario", "scenario_path", required=True, help="Scenario file (or builtin:NAME).")
@click.option("--out", type=click.Path(file_okay=False), required=True, help="Output directory.")
@click.option("--server", default=None, help="Remote service URL (default: in-process).")
def run(scenario_path: str, out: str, server: str | None) -> None:
    """Run all methods on a scenario; write trajectories, plot and summary."""
    payload = _scenario_payload(scenario_path)
    data = ServiceClient(server).post("/experiment/run", payload)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, csv in sorted(data["trajectories"].items()):
        (out_dir / f"trajectory_{name}.csv").write_text(csv, encoding="utf-8")
    (out_dir / "comparison.svg").write_text(data["plot_svg"], encoding="utf-8")
    (out_dir / "summary.txt").write_text(data["table"], encoding="utf-8")
    click.echo(data["table"], nl=False)
    click.echo(f"artifacts written to {out_dir}")


@main.command("compare")
@click.option("--scenario", "scenario_path", required=True, help="Scenario file (or builtin:NAME).")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Also write the table here.")
@click.option("--server", default=None, help="Remote service URL (default: in-process).")
def compare(scenario_path: str, out: str | None, server: str | None) -> None:
    """Print the per-method comparison table for a scenario."""
    payload = _scenario_payload(scenario_path)
    data = ServiceClient(server).post("/experiment/compare", payload)
    click.echo(data["table"], nl=False)
    if out:
        Path(out).write_text(data["table"], encoding="utf-8")


@main.command("sweep")
@click.option("--scenario", "scenario_path", required=True, help="Scenario file (or builtin:NAME).")
@click.option("--magnitudes", required=True, help="Comma-separated perturbation magnitudes.")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Directory for sweep.csv.")
@click.option("--server", default=None, help="Remote service URL (default: in-process).")
def sweep(scenario_path: str, magnitudes: str, out: str | None, server: str | None) -> None:
    """Rerun the controller across model-error magnitudes."""
    try:
        values = [float(tok) for tok in magnitudes.split(",") if tok.strip()]
    except ValueError:
        click.echo(f"error: bad magnitude list {magnitudes!r}", err=True)
        sys.exit(EXIT_VALIDATION)
    if not values:
        click.echo("error: at least one magnitude required", err=True)
        sys.exit(EXIT_VALIDATION)
    payload = _scenario_payload(scenario_path)
    payload["magnitudes"] = values
    data = ServiceClient(server).post("/experiment/sweep", payload)
    click.echo(data["table"], nl=False)
    if out:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "sweep.csv").write_text(data["csv"], encoding="utf-8")
        (out_dir / "sweep.txt").write_text(data["table"], encoding="utf-8")
        click.echo(f"artifacts written to {out_dir}")


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host: str, port: int) -> None:
    """Start the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
