import http.server
import socket
import threading
import time
from pathlib import Path

import pytest
import uvicorn

from feedforge.rfc822 import parse_rfc822
from feedforge.service import create_app

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures():
    return FIXTURES


@pytest.fixture
def golden_now():
    return parse_rfc822((FIXTURES / "golden_now.txt").read_text().strip())


@pytest.fixture
def golden_bytes():
    return (FIXTURES / "journalsite_golden.xml").read_bytes()


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class LiveServer:
    """Run the feed app under uvicorn on a background thread."""

    def __init__(self, app):
        self.port = free_port()
        self.server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=self.port,
                                                    log_level="error"))
        self.thread = threading.Thread(target=self.server.run, daemon=True)

    @property
    def url(self):
        return f"http://127.0.0.1:{self.port}"

    def __enter__(self):
        self.thread.start()
        deadline = time.monotonic() + 10
        while not self.server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("uvicorn did not start")
            time.sleep(0.01)
        return self

    def __exit__(self, *exc):
        self.server.should_exit = True
        self.thread.join(timeout=10)


@pytest.fixture
def live_feed(tmp_path, golden_now):
    """A served copy of the fixture store that tests may append to."""
    records = tmp_path / "articles.tsv"
    records.write_bytes((FIXTURES / "articles.tsv").read_bytes())
    app = create_app(FIXTURES / "journalsite.conf", records, golden_now)
    with LiveServer(app) as server:
        server.records = records
        yield server


class ScriptedHandler(http.server.BaseHTTPRequestHandler):
    routes = {}

    def do_GET(self):
        route = self.routes.get(self.path)
        if route is None:
            self.send_error(404)
            return
        route(self)

    def log_message(self, *args):
        pass


@pytest.fixture
def scripted_server():
    """Stdlib HTTP server whose paths map to handler callables."""
    routes = {}
    handler = type("Handler", (ScriptedHandler,), {"routes": routes})
    server = http.server.ThreadingHTTPServer(("127.0.0.1", 0), handler)
    server.daemon_threads = True
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    server.routes = routes
    server.url = f"http://127.0.0.1:{server.server_address[1]}"
    yield server
    server.shutdown()
    server.server_close()


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
