"""HTTP facade over the stream engine.

Three routes emulate the ingest / query surface of the original stack:

* ``POST /write?db=<name>`` accepts line-protocol records (one per line)
  and answers 204.  Bad records answer 400 with a JSON error.
* ``GET /<out_name>`` returns the latest emitted window batch as a series
  document, or 404 with an empty series before the first emission.
* ``GET /alerts`` returns every alert raised so far.

Ingested points drive the virtual clock, so identical input produces
identical batches regardless of request timing.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import urlparse

from ..errors import WatersentryError
from .engine import ScoreRunner, StreamEngine, alerts_doc
from .httpout import build_payload, payload_json
from .task import StreamTaskSpec


class StreamHttpServer:
    """Socket-owning wrapper; start() binds, stop() tears down."""

    def __init__(
        self,
        task: StreamTaskSpec,
        schema: tuple[str, ...],
        model=None,
        strict: bool = False,
        host: str = "127.0.0.1",
        port: int = 0,
    ):
        self.task = task
        self.schema = tuple(schema)
        self._runner = ScoreRunner(model) if model is not None else None
        self.engine = StreamEngine(
            task, schema=self.schema, strict=strict, on_batch=self._runner
        )
        self._lock = threading.Lock()
        self._host = host
        self._requested_port = port
        self._httpd: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    # -- request handling -------------------------------------------------

    def _handle_write(self, body: str) -> tuple[int, bytes]:
        with self._lock:
            try:
                for line in body.splitlines():
                    if line.strip():
                        self.engine.feed_line(line)
            except WatersentryError as exc:
                msg = json.dumps({"error": str(exc)}).encode()
                return 400, msg
        return 204, b""

    def _handle_batch(self) -> tuple[int, bytes]:
        with self._lock:
            batch = self.engine.latest_batch
            if batch is None:
                doc = build_payload(self.task.measurement, self.schema, ())
                return 404, payload_json(doc).encode()
            doc = build_payload(self.task.measurement, self.schema, batch.points)
            return 200, payload_json(doc).encode()

    def _handle_alerts(self) -> tuple[int, bytes]:
        with self._lock:
            alerts = list(self._runner.alerts) if self._runner is not None else []
        return 200, json.dumps(alerts_doc(alerts)).encode()

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):  # tests need a quiet server
                pass

            def _send(self, status: int, body: bytes):
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                if body:
                    self.wfile.write(body)

            def do_POST(self):
                path = urlparse(self.path).path
                if path != "/write":
                    self._send(404, json.dumps({"error": "not found"}).encode())
                    return
                length = int(self.headers.get("Content-Length", 0))
                body = self.rfile.read(length).decode("utf-8", errors="replace")
                status, payload = outer._handle_write(body)
                self._send(status, payload)

            def do_GET(self):
                path = urlparse(self.path).path
                if path == outer.task.out_path:
                    status, payload = outer._handle_batch()
                elif path == "/alerts":
                    status, payload = outer._handle_alerts()
                else:
                    status, payload = 404, json.dumps({"error": "not found"}).encode()
                self._send(status, payload)

        self._httpd = ThreadingHTTPServer((self._host, self._requested_port), Handler)
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()

    @property
    def port(self) -> int:
        if self._httpd is None:
            raise RuntimeError("server is not running")
        return self._httpd.server_address[1]

    @property
    def address(self) -> str:
        return f"http://{self._host}:{self.port}"

    def wait(self, timeout: float | None = None) -> None:
        """Block the calling thread while the server runs."""
        if self._thread is not None:
            self._thread.join(timeout)

    def stop(self) -> None:
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
            self._httpd = None
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None

    def __enter__(self) -> "StreamHttpServer":
        self.start()
        return self

    def __exit__(self, *exc_info) -> None:
        self.stop()
