import pytest
from fastapi.testclient import TestClient

from gridbarrier.netmodel import parse_network_csv
from gridbarrier.service.app import create_app

INLINE_SCENARIO = """\
[network]
n = 5
seed = 2
overload_factor = 1.5
[perturbation]
kind = parametric
magnitude = 0.3
seed = 7
[controller]
max_steps = 5000
"""

FILE_SCENARIO = """\
[network]
file = net.csv
[controller]
max_steps = 5000
"""

SMALL_SCENARIO = """\
[network]
n = 3
seed = 2
overload_factor = 1.4
[perturbation]
kind = parametric
magnitude = 0.2
seed = 7
[controller]
max_steps = 4000
"""


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app()) as c:
        yield c


class TestHealth:
    def test_ok(self, client):
        resp = client.get("/health")
        assert resp.status_code == 200
        assert resp.json() == {"status": "ok"}


class TestFeederGenerate:
    def test_returns_parseable_csv(self, client):
        resp = client.post(
            "/feeder/generate", json={"n": 8, "seed": 1, "overload_factor": 1.5}
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["n"] == 8
        assert body["activated"] is True
        assert body["max_uncontrolled_deviation"] > 0.05
        net = parse_network_csv(body["csv"])
        assert net.n == 8

    def test_validates_parameters(self, client):
        assert client.post("/feeder/generate", json={"n": 0}).status_code == 422
        assert client.post("/feeder/generate", json={"limit_pct": 0}).status_code == 422


class TestExperimentRun:
    def test_inline_scenario(self, client):
        resp = client.post("/experiment/run", json={"scenario": INLINE_SCENARIO})
        assert resp.status_code == 200
        body = resp.json()
        assert body["n"] == 5
        assert body["relative_error"] > 0.0
        names = [m["name"] for m in body["methods"]]
        assert names == ["no-control", "lcqp-true", "lcqp-estimate", "barrier", "primal-dual"]
        barrier = next(m for m in body["methods"] if m["name"] == "barrier")
        assert barrier["status"] == "converged"
        assert barrier["final_max_x"] <= 0.05 + 1e-9
        assert body["trajectories"]["barrier"].startswith(
            "step,max_x,attention_bus,alpha_s,event,u_norm,violation"
        )
        assert body["plot_svg"].startswith("<svg")
        assert "barrier" in body["table"]

    def test_bad_scenario_is_400(self, client):
        resp = client.post("/experiment/run", json={"scenario": "[network]\nbogus = 1\n"})
        assert resp.status_code == 400
        assert "bogus" in resp.json()["detail"]

    def test_file_reference_needs_attachment(self, client):
        resp = client.post("/experiment/run", json={"scenario": FILE_SCENARIO})
        assert resp.status_code == 400
        assert "network_csv" in resp.json()["detail"]

    def test_attached_network_is_used(self, client):
        feeder = client.post(
            "/feeder/generate", json={"n": 4, "seed": 9, "overload_factor": 1.4}
        ).json()
        resp = client.post(
            "/experiment/run",
            json={"scenario": FILE_SCENARIO, "network_csv": feeder["csv"]},
        )
        assert resp.status_code == 200
        assert resp.json()["n"] == 4

    def test_malformed_network_is_400(self, client):
        resp = client.post(
            "/experiment/run",
            json={"scenario": FILE_SCENARIO, "network_csv": "not a network\n"},
        )
        assert resp.status_code == 400


class TestExperimentCompare:
    def test_summary_only(self, client):
        resp = client.post("/experiment/compare", json={"scenario": INLINE_SCENARIO})
        assert resp.status_code == 200
        body = resp.json()
        assert "trajectories" not in body
        assert "method" in body["table"]
        assert len(body["methods"]) == 5

    def test_seed_env_override_applies_server_side(self, client, monkeypatch):
        from gridbarrier.harness.scenario import SEED_ENV_VAR

        monkeypatch.delenv(SEED_ENV_VAR, raising=False)
        base = client.post("/experiment/compare", json={"scenario": SMALL_SCENARIO})
        explicit = client.post(
            "/experiment/compare",
            json={"scenario": SMALL_SCENARIO.replace("seed = 2", "seed = 123").replace("seed = 7", "seed = 124")},
        )
        monkeypatch.setenv(SEED_ENV_VAR, "123")
        overridden = client.post("/experiment/compare", json={"scenario": SMALL_SCENARIO})
        assert overridden.json()["table"] == explicit.json()["table"]
        assert overridden.json()["table"] != base.json()["table"]

    def test_bad_seed_env_override_is_400(self, client, monkeypatch):
        from gridbarrier.harness.scenario import SEED_ENV_VAR

        monkeypatch.setenv(SEED_ENV_VAR, "not-a-number")
        resp = client.post("/experiment/compare", json={"scenario": SMALL_SCENARIO})
        assert resp.status_code == 400
        assert SEED_ENV_VAR in resp.json()["detail"]


class TestExperimentSweep:
    def test_rows_per_magnitude(self, client):
        resp = client.post(
            "/experiment/sweep",
            json={"scenario": INLINE_SCENARIO, "magnitudes": [0.0, 0.2]},
        )
        assert resp.status_code == 200
        body = resp.json()
        assert [r["magnitude"] for r in body["rows"]] == [0.0, 0.2]
        assert body["rows"][0]["relative_error"] == 0.0
        assert body["rows"][1]["relative_error"] > 0.0
        assert body["csv"].startswith("magnitude,")

    def test_kind_none_is_400(self, client):
        resp = client.post(
            "/experiment/sweep",
            json={"scenario": "[network]\nn = 3\n", "magnitudes": [0.1]},
        )
        assert resp.status_code == 400

    def test_empty_magnitudes_rejected(self, client):
        resp = client.post(
            "/experiment/sweep", json={"scenario": INLINE_SCENARIO, "magnitudes": []}
        )
        assert resp.status_code == 422
