"""The simulator behind the search-adapter wire schema, in-process or over HTTP."""

from __future__ import annotations

import json
import logging
import signal
import threading
from datetime import datetime
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from ..adapter import BackendError, SearchContext
from ..catalog import Catalog
from .engine import SimConfig, check_faults, index, rank

log = logging.getLogger(__name__)


class SimBackend:
    def __init__(self, catalog: Catalog, config: SimConfig):
        self.catalog = catalog
        self.config = config
        self.index = index(catalog, config)
        check_faults(config, self.index)

    def fetch(self, request: dict) -> dict:
        try:
            ctx = SearchContext(
                account_id=str(request["account_id"]),
                location=(float(request["lon"]), float(request["lat"])),
                timestamp=datetime.fromisoformat(request["timestamp"]),
                page_size=int(request.get("page_size", 20)),
            )
            query = str(request["query"])
            page = int(request.get("page", 0))
        except (KeyError, TypeError, ValueError) as exc:
            raise BackendError(f"bad search request: {exc}") from exc
        entries = rank(query, ctx, self.index, self.config)
        chunk = entries[page * ctx.page_size:(page + 1) * ctx.page_size]
        return {"entries": [{"id": e.shop_id, "name": e.name, "score": e.score} for e in chunk]}


def make_server(backend: SimBackend, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    class Handler(BaseHTTPRequestHandler):
        def _reply(self, status: int, body: dict) -> None:
            blob = json.dumps(body, ensure_ascii=False).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(blob)))
            self.end_headers()
            self.wfile.write(blob)

        def do_GET(self):
            if self.path == "/health":
                self._reply(200, {"status": "ok", "shops": len(backend.catalog)})
            else:
                self._reply(404, {"error": "not found"})

        def do_POST(self):
            if self.path != "/search":
                self._reply(404, {"error": "not found"})
                return
            try:
                length = int(self.headers.get("Content-Length", 0))
                request = json.loads(self.rfile.read(length).decode("utf-8"))
                self._reply(200, backend.fetch(request))
            except (BackendError, ValueError) as exc:
                self._reply(400, {"error": str(exc)})

        def log_message(self, fmt, *args):
            log.debug("sim-serve: " + fmt, *args)

    server = ThreadingHTTPServer((host, port), Handler)
    server.daemon_threads = True
    return server


def serve(backend: SimBackend, host: str = "127.0.0.1", port: int = 8765, ready=None) -> None:
    """Serve until SIGTERM/SIGINT, then shut down cleanly."""
    server = make_server(backend, host, port)

    def stop(signum, frame):
        threading.Thread(target=server.shutdown, daemon=True).start()

    previous = {s: signal.signal(s, stop) for s in (signal.SIGTERM, signal.SIGINT)}
    if ready is not None:
        ready(server.server_address)
    try:
        server.serve_forever()
    finally:
        server.server_close()
        for s, handler in previous.items():
            signal.signal(s, handler)
