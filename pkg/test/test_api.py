import math
import sys

import pytest
from fastapi.testclient import TestClient
from loguru import logger

from primexp_api.main import app


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as c:
        yield c
    logger.remove()
    logger.add(sys.stderr)


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok"}


def test_prime_sum(client):
    response = client.post("/sum", json={"alpha": "0", "k": 3, "x": 10, "y": 10})
    assert response.status_code == 200
    body = response.json()
    assert body["re"] == pytest.approx(sum(math.log(p) for p in (11, 13, 2, 17, 19)))
    assert body["path"] == "modular"


def test_weyl_sum(client):
    response = client.post("/sum", json={"alpha": "1/2", "k": 1, "x": 10, "y": 10, "kind": "weyl"})
    assert response.status_code == 200
    assert response.json()["abs"] < 1e-12


def test_sum_errors(client):
    assert client.post("/sum", json={"alpha": "1/3", "k": 3, "x": 10, "y": 11}).status_code == 400
    assert client.post("/sum", json={"alpha": "junk", "k": 3, "x": 100, "y": 10}).status_code == 400
    assert client.post("/sum", json={"alpha": "1/3", "k": 3, "x": 100, "y": 10, "path": "modular"}).status_code == 200
    assert client.post("/sum", json={"alpha": "pi", "k": 3, "x": 100, "y": 10, "path": "modular"}).status_code == 400
    assert client.post("/sum", json={"alpha": "1/3", "k": 0, "x": 100, "y": 10}).status_code == 422


def test_classify(client):
    response = client.post("/classify", json={"alpha": "1/3", "k": 3, "theta": "1", "x": 1000, "P": 10})
    assert response.status_code == 200
    body = response.json()
    assert (body["kind"], body["a"], body["q"]) == ("major", 1, 3)
    minor = client.post("/classify", json={"alpha": "0.501", "k": 3, "theta": "1", "x": 1000, "P": 10})
    assert minor.json()["kind"] == "minor"


def test_exponents(client):
    response = client.get("/exponents", params={"k": 4, "theta": "1"})
    assert response.status_code == 200
    assert response.json()["rho_max"]["exact"] == "1/24"
    assert client.get("/exponents", params={"k": 3, "theta": "0.8"}).status_code == 400
    assert client.get("/exponents", params={"k": 2, "theta": "1"}).status_code == 422


def test_wk(client):
    response = client.get("/wk", params={"q": 16, "k": 3})
    assert response.status_code == 200
    assert (response.json()["rat"], response.json()["rad"]) == ("3/4", 2)
    assert client.get("/wk", params={"q": 0, "k": 3}).status_code == 422
