import contextlib
import threading

import pytest

from missedrecall.generation import generate_template
from missedrecall.pipeline import ExecutionSettings, generate_groups
from missedrecall.sim import SimBackend, make_server
from missedrecall.sim.fixtures import FIXTURE_PAGE, FIXTURE_TIME, seeded_fixture


def fixture_settings() -> ExecutionSettings:
    return ExecutionSettings(page_size=FIXTURE_PAGE, clock=lambda: FIXTURE_TIME)


@contextlib.contextmanager
def running_server(backend: SimBackend):
    server = make_server(backend, "127.0.0.1", 0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        host, port = server.server_address[:2]
        yield f"http://{host}:{port}"
    finally:
        server.shutdown()
        server.server_close()
        thread.join(5)


@pytest.fixture(scope="session")
def seeded():
    return seeded_fixture(True)


@pytest.fixture(scope="session")
def seeded_clean():
    return seeded_fixture(False)


@pytest.fixture(scope="session")
def template_groups(seeded):
    return generate_groups(seeded[0], generate_template).groups


@pytest.fixture
def settings():
    return fixture_settings()
