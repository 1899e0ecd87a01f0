from __future__ import annotations

import socket
import threading
import time
from pathlib import Path

import pytest
import uvicorn
from fastapi.testclient import TestClient

from t2ishim import ShimConfig, create_app

HARNESS_ROOT = Path(__file__).resolve().parents[2]
E2E = HARNESS_ROOT / "tests" / "fixtures" / "e2e"
FIXTURE_CACHE = E2E / "cache"


@pytest.fixture(scope="session")
def mock_client() -> TestClient:
    app = create_app(ShimConfig(mode="mock", fixture_dir=FIXTURE_CACHE))
    return TestClient(app)


@pytest.fixture(scope="session")
def post(mock_client):
    def _post(path: str, payload: dict) -> tuple[int, str]:
        response = mock_client.post(path, json=payload)
        return response.status_code, response.text

    return _post


def _free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


@pytest.fixture(scope="session")
def live_shim_url():
    port = _free_port()
    app = create_app(ShimConfig(mode="mock", fixture_dir=FIXTURE_CACHE))
    server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=port,
                                           log_level="warning"))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 15
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("shim server did not start in time")
        time.sleep(0.05)
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)
