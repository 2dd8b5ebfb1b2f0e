import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from innersocp.cli import main
from innersocp.scenario import matrix_to_json
from innersocp.service.app import app

from conftest import scenario_instance


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


@pytest.fixture(scope="module")
def instance():
    _, _, Rhat, Q, p = scenario_instance(10, 0)
    return {"rhat": matrix_to_json(Rhat), "rs": matrix_to_json(Q.conj().T @ Q)}, p


def test_health(client):
    assert client.get("/health").json()["status"] == "ok"


def test_solve_defaults(client, instance):
    payload, p = instance
    body = client.post("/solve", json=payload).json()
    assert body["gamma"] == pytest.approx(p.gamma) and body["eta"] == pytest.approx(p.eta, rel=1e-9)
    assert body["converged"] and body["val13"] == pytest.approx(1 / np.sqrt(body["v14"]))
    assert body["trace"][0]["t"] is None


def test_solve_direct_form_agrees(client, instance):
    payload, _ = instance
    a = client.post("/solve", json=payload).json()
    b = client.post("/solve", json={**payload, "method": "direct_form"}).json()
    assert b["val13"] == pytest.approx(a["val13"], rel=1e-5)


def test_solve_infeasible_is_422(client, instance):
    payload, _ = instance
    r = client.post("/solve", json={**payload, "eta": 1e3})
    assert r.status_code == 422 and r.json()["error"] == "InfeasibleProblemError"


def test_solve_rejects_non_hermitian(client):
    r = client.post("/solve", json={"rhat": {"re": [[1, 2], [0, 1]]}, "rs": {"re": [[1, 0], [0, 1]]}})
    assert r.status_code == 422


def test_solve_schema_validation(client, instance):
    payload, _ = instance
    assert client.post("/solve", json={**payload, "xi": -1}).status_code == 422


def test_oracle_route(client, instance):
    payload, _ = instance
    body = client.post("/oracle", json={**payload, "starts": 20}).json()
    sol = client.post("/solve", json=payload).json()
    assert body["best_value"] == pytest.approx(sol["v14"], rel=1e-3)
    assert body["n_starts"] == 20


def test_experiments_route(client):
    cfg = "runs = 1\nsnr_grid_db = 0\nrecord_timing = false\n"
    body = client.post("/experiments", json={"config": cfg}).json()
    assert body["rows"] == 1 and body["csv"].startswith("snr_db,run,algorithm")


def test_experiments_bad_config(client):
    r = client.post("/experiments", json={"config": "algorithms = sdp\n"})
    assert r.status_code == 422


def test_cli_solve_oracle_run(tmp_path, instance, capsys):
    payload, _ = instance
    rh, rs = tmp_path / "rhat.json", tmp_path / "rs.json"
    rh.write_text(json.dumps(payload["rhat"]))
    rs.write_text(json.dumps(payload["rs"]))
    main(["solve", "--rhat", str(rh), "--rs", str(rs)])
    solved = json.loads(capsys.readouterr().out)
    main(["oracle", "--rhat", str(rh), "--rs", str(rs), "--starts", "10"])
    oracle = json.loads(capsys.readouterr().out)
    assert oracle["best_value"] == pytest.approx(solved["v14"], rel=1e-3)

    cfg = tmp_path / "exp.cfg"
    cfg.write_text("runs = 1\nsnr_grid_db = 0, 10\nalgorithms = inner_socp, direct_form\n")
    out = tmp_path / "out.csv"
    main(["run", "--config", str(cfg), "--out", str(out)])
    assert len(out.read_text().splitlines()) == 1 + 2 * 2


def test_cli_error_exit_code(tmp_path, instance):
    payload, _ = instance
    rh, rs = tmp_path / "rhat.json", tmp_path / "rs.json"
    rh.write_text(json.dumps(payload["rhat"]))
    rs.write_text(json.dumps(payload["rs"]))
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--rhat", str(rh), "--rs", str(rs), "--eta", "1000"])
    assert exc.value.code == 2
