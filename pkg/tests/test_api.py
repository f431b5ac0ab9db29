import pytest
from fastapi.testclient import TestClient

from dbarlab.api import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def test_health(client):
    assert client.get("/health").json()["status"] == "ok"


def test_geom_type(client):
    r = client.post("/geom/type", json={"config": {"domain": "egg", "k": 3}, "point": "0,0,1,0"})
    assert r.status_code == 200 and r.json()["result"]["type"] == 6 and r.json()["passed"]


def test_config_error_is_422(client):
    assert client.post("/geom/type", json={"config": {"domain": "egg", "k": 7}}).status_code == 422
    assert client.post("/geom/type", json={"point": "1,2"}).status_code == 422


def test_geometry_error_is_409(client):
    assert client.post("/normalize", json={"point": "0,0,0.5,0"}).status_code == 409


def test_extension_endpoint(client):
    r = client.post("/spaces/extend", json={"domain": "graph", "J": 10})
    assert r.status_code == 200 and r.json()["passed"]
