"""HTTP service backing the manual-screening UI.

Serves each annotator's queue (never exposing the other annotator's
decisions), records keep/discard decisions with the same overwrite semantics
as the screening session, reports progress, and exports the strict subset
byte-identical to the CLI finalize output. Decisions are persisted on every
write, so they survive restarts. No authentication beyond the annotator id:
this is a local / trusted-network tool.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .errors import DataError, S2SKitError, UsageError
from .records import CandidatePair
from .verify import ScreeningSession, dump_strict, finalize_strict, record_decision


def _pair_view(pair: CandidatePair) -> dict:
    return {
        "pair_id": pair.pair_id,
        "src_text": {"id": pair.src_text.id, "text": pair.src_text.text, "lang": pair.src_text.lang.value},
        "tgt_text": {"id": pair.tgt_text.id, "text": pair.tgt_text.text, "lang": pair.tgt_text.lang.value},
        "llm_rating": pair.llm_rating,
        "cosine": pair.cosine,
    }


class ReviewHandler(BaseHTTPRequestHandler):
    session: ScreeningSession  # set by make_server

    def log_message(self, *args) -> None:  # keep test output quiet
        pass

    def _send(self, status: int, body: bytes, content_type: str = "application/json") -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.end_headers()
        self.wfile.write(body)

    def _json(self, status: int, obj) -> None:
        self._send(status, (json.dumps(obj, ensure_ascii=False) + "\n").encode("utf-8"))

    def do_OPTIONS(self) -> None:
        self._send(204, b"")

    def do_GET(self) -> None:
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        session = self.session
        if parts == []:
            self._json(
                200,
                {
                    "session_id": session.session_id,
                    "annotators": list(session.annotators),
                    "total": len(session.pool),
                },
            )
        elif len(parts) == 3 and parts[0] == "session" and parts[2] == "queue":
            if parts[1] != session.session_id:
                self._json(404, {"error": f"unknown session {parts[1]!r}"})
                return
            query = parse_qs(url.query)
            annotator = query.get("annotator", [None])[0]
            if annotator is None:
                self._json(400, {"error": "missing annotator parameter"})
                return
            if annotator not in session.annotators:
                self._json(409, {"error": f"annotator {annotator!r} not registered"})
                return
            queue = session.queue_for(annotator)
            progress = session.progress()[annotator]
            self._json(
                200,
                {
                    "annotator": annotator,
                    "pairs": [_pair_view(p) for p in queue],
                    "decided": progress["decided"],
                    "total": progress["total"],
                },
            )
        elif len(parts) == 2 and parts[0] == "pair":
            pair = session.by_id.get(parts[1])
            if pair is None:
                self._json(404, {"error": f"unknown pair {parts[1]!r}"})
                return
            view = _pair_view(pair)
            view["src_clips"] = list(pair.src_clips)
            view["tgt_clips"] = list(pair.tgt_clips)
            self._json(200, view)
        elif parts == ["progress"]:
            self._json(200, {"annotators": session.progress()})
        elif parts == ["export"]:
            try:
                strict = finalize_strict(session)
            except DataError as exc:
                undecided = [w.strip() for w in str(exc).split(":", 1)[1].split(",")]
                self._json(200, {"status": "incomplete", "undecided": undecided})
                return
            self._send(200, dump_strict(strict).encode("utf-8"), content_type="application/x-ndjson")
        else:
            self._json(404, {"error": f"unknown route {url.path!r}"})

    def do_POST(self) -> None:
        url = urlparse(self.path)
        if url.path != "/decision":
            self._json(404, {"error": f"unknown route {url.path!r}"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            obj = json.loads(self.rfile.read(length).decode("utf-8"))
            annotator, pair_id, decision = obj["annotator"], obj["pair_id"], obj["decision"]
        except (json.JSONDecodeError, KeyError, ValueError):
            self._json(400, {"error": "malformed decision body"})
            return
        try:
            record_decision(self.session, annotator=annotator, pair_id=pair_id, decision=decision)
        except UsageError as exc:
            self._json(409, {"error": str(exc)})
            return
        except DataError as exc:
            status = 404 if "not a screening candidate" in str(exc) else 400
            self._json(status, {"error": str(exc)})
            return
        self._json(200, {"ok": True})


def make_server(session: ScreeningSession, port: int = 0, host: str = "127.0.0.1") -> ThreadingHTTPServer:
    handler = type("BoundReviewHandler", (ReviewHandler,), {"session": session})
    return ThreadingHTTPServer((host, port), handler)


def serve_forever_in_thread(server: ThreadingHTTPServer) -> threading.Thread:
    thread = threading.Thread(target=lambda: server.serve_forever(poll_interval=0.05), daemon=True)
    thread.start()
    return thread
