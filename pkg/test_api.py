import pytest
from fastapi.testclient import TestClient

from api.compare import get_sampler
from api.main import app
from errors import DomainError
from utils import get_cors_origins

client = TestClient(app)


def test_root():
    response = client.get("/")
    assert response.status_code == 200
    assert response.json()["status"] == "ok"


def test_health_lists_suites():
    body = client.get("/api/health").json()
    assert body["status"] == "healthy"
    assert "kernel-invariants" in body["suites"]
    assert {e["path"] for e in body["endpoints"]} >= {"/api/kernel", "/api/compare"}


def test_kernel_endpoint():
    response = client.post("/api/kernel", json={"t": 1.0, "x": 0.0, "beta": 1.0, "y": [0.0, 0.5, 1.0]})
    assert response.status_code == 200
    body = response.json()
    assert body["atom"] == pytest.approx(0.42758, abs=1e-5)
    assert len(body["density"]) == 3
    assert body["cdf"][0] == pytest.approx(body["atom"])
    assert body["cdf"] == sorted(body["cdf"])


def test_kernel_printed_variant_differs():
    plain = client.post("/api/kernel", json={"t": 1.0, "x": 1.0, "beta": 1.0}).json()
    printed = client.post("/api/kernel", json={"t": 1.0, "x": 1.0, "beta": 1.0, "printed": True}).json()
    assert plain["atom"] != printed["atom"]


def test_kernel_rejects_bad_input():
    assert client.post("/api/kernel", json={"t": 1.0, "x": 0.0, "beta": 1.0, "y": [-1.0]}).status_code == 400
    assert client.post("/api/kernel", json={"t": 0.0, "x": 0.0, "beta": 1.0}).status_code == 422
    assert client.post("/api/kernel", json={"t": 1.0, "x": 0.0, "beta": -2.0}).status_code == 422


def test_validate_unknown_suite():
    assert client.post("/api/validate", json={"suite": "nonsense"}).status_code == 400


def test_validate_wentzell():
    response = client.post("/api/validate", json={"suite": "wentzell", "seed": 1})
    assert response.status_code == 200
    body = response.json()
    assert body["passed"] is True
    assert len(body["checks"]) == 3


def test_compare_same_sampler():
    response = client.post("/api/compare", json={"sampler1": "exact", "sampler2": "exact"})
    assert response.status_code == 400


def test_compare_unknown_sampler():
    response = client.post("/api/compare", json={"sampler1": "exact", "sampler2": "magic"})
    assert response.status_code == 400
    with pytest.raises(DomainError):
        get_sampler("magic")


def test_compare_exact_against_grid():
    response = client.post(
        "/api/compare", json={"sampler1": "exact", "sampler2": "exact-grid", "n_paths": 2000, "t": 0.5, "seed": 3}
    )
    assert response.status_code == 200
    body = response.json()
    assert body["agree"] is True
    assert body["sampler1"]["atom_frequency"] == pytest.approx(body["kernel_atom"], abs=0.05)


def test_cors_origins_from_environment(monkeypatch):
    monkeypatch.setenv("STICKY_CORS_ORIGINS", "http://localhost:8888, https://lab.example.org,")
    assert get_cors_origins() == ["http://localhost:8888", "https://lab.example.org"]
    monkeypatch.delenv("STICKY_CORS_ORIGINS")
    assert get_cors_origins() == []


def test_unlisted_origin_gets_no_cors_header():
    response = client.get("/", headers={"Origin": "http://localhost:5173"})
    assert response.status_code == 200
    assert "access-control-allow-origin" not in response.headers
