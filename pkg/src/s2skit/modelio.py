"""Pluggable clients for the four model roles (mt, t2s, s2t, s2s).

Stub backends are pure lookups and fully deterministic, including their
reported latency (the configured delay). Subprocess backends speak one JSON
request per stdin line, one JSON reply per stdout line; HTTP backends POST
the same bodies to /invoke. Latency is measured around the backend call
only, never around request serialization.
"""

from __future__ import annotations

import hashlib
import json
import os
import selectors
import subprocess
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

from .errors import EndpointError, UsageError
from .langs import SignLang, SpokenLang, partner
from .records import MotionTokenSequence, token_payload

ROLES = ("mt", "t2s", "s2t", "s2s")


@dataclass
class StubBackend:
    """Deterministic lookup table; delay_ms is the latency it reports."""

    mapping: Optional[dict] = None
    map_file: Optional[Union[str, Path]] = None
    delay_ms: float = 0.0
    calls: int = field(default=0, repr=False)

    def table(self) -> dict:
        if self.mapping is None:
            if self.map_file is None:
                raise UsageError("stub backend needs mapping or map_file")
            self.mapping = json.loads(Path(self.map_file).read_text(encoding="utf-8"))
        return self.mapping


@dataclass
class SubprocessBackend:
    cmd: Sequence[str]
    _proc: Optional[subprocess.Popen] = field(default=None, repr=False)
    _buf: bytes = field(default=b"", repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def close(self) -> None:
        if self._proc is not None:
            self._proc.terminate()
            self._proc.wait(timeout=5)
            self._proc = None


@dataclass
class HttpBackend:
    url: str


Backend = Union[StubBackend, SubprocessBackend, HttpBackend]


@dataclass
class EndpointSpec:
    """One model endpoint: a fixed role behind a pluggable backend."""

    role: str
    backend: Backend
    timeout_ms: float = 10000.0
    codebook_id: str = "default"  # tag for token sequences this endpoint emits

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise UsageError(f"unknown endpoint role {self.role!r}")
        if not self.timeout_ms > 0:
            raise UsageError("timeout must be positive")


def endpoint_from_obj(role: str, obj: dict) -> EndpointSpec:
    """Build an EndpointSpec from its JSON form (see README for the schema)."""
    b = obj.get("backend", obj)
    kind = b.get("kind")
    if kind == "stub":
        backend: Backend = StubBackend(
            mapping=b.get("mapping"), map_file=b.get("map_file"), delay_ms=float(b.get("delay_ms", 0.0))
        )
    elif kind == "subprocess":
        backend = SubprocessBackend(cmd=list(b["cmd"]))
    elif kind == "http":
        backend = HttpBackend(url=b["url"])
    else:
        raise UsageError(f"unknown backend kind {kind!r}")
    return EndpointSpec(
        role=role,
        backend=backend,
        timeout_ms=float(obj.get("timeout_ms", 10000.0)),
        codebook_id=obj.get("codebook_id", "default"),
    )


@dataclass(frozen=True)
class MtRequest:
    text: str
    src: SpokenLang
    tgt: SpokenLang


@dataclass(frozen=True)
class T2sRequest:
    text: str
    sign_lang: SignLang


@dataclass(frozen=True)
class S2tRequest:
    tokens: tuple  # of (b, l, r)
    sign_lang: SignLang


@dataclass(frozen=True)
class S2sRequest:
    tokens: tuple
    src: SignLang
    tgt: SignLang


Request = Union[MtRequest, T2sRequest, S2tRequest, S2sRequest]

_REQUEST_TYPES = {"mt": MtRequest, "t2s": T2sRequest, "s2t": S2tRequest, "s2s": S2sRequest}


@dataclass(frozen=True)
class TimedResult:
    payload: object
    latency_ms: float
    stage_latencies: Optional[tuple] = None
    intermediate_texts: Optional[dict] = None


def request_body(request: Request) -> dict:
    if isinstance(request, MtRequest):
        return {"task": "mt", "text": request.text, "src": request.src.value, "tgt": request.tgt.value}
    if isinstance(request, T2sRequest):
        return {"task": "t2s", "text": request.text, "sign_lang": request.sign_lang.value}
    if isinstance(request, S2tRequest):
        return {"task": "s2t", "tokens": token_payload(request.tokens), "sign_lang": request.sign_lang.value}
    if isinstance(request, S2sRequest):
        return {"task": "s2s", "tokens": token_payload(request.tokens), "src": request.src.value, "tgt": request.tgt.value}
    raise UsageError(f"unsupported request type {type(request).__name__}")


def _stub_key(body: dict) -> str:
    if "text" in body:
        return body["text"]
    return json.dumps(body["tokens"], separators=(",", ":"))


def _parse_reply(raw: str) -> object:
    excerpt = raw[:200]
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError:
        raise EndpointError(f"malformed backend reply: {excerpt!r}") from None
    if not isinstance(obj, dict) or "ok" not in obj:
        raise EndpointError(f"malformed backend reply: {excerpt!r}")
    if not obj["ok"]:
        raise EndpointError(f"backend error: {obj.get('error', 'unspecified')}")
    if "payload" not in obj:
        raise EndpointError(f"malformed backend reply: {excerpt!r}")
    return obj["payload"]


def _subprocess_call(backend: SubprocessBackend, line: str, timeout_ms: float) -> str:
    with backend._lock:
        if backend._proc is None or backend._proc.poll() is not None:
            backend._proc = subprocess.Popen(
                list(backend.cmd),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                bufsize=0,
            )
            backend._buf = b""
        proc = backend._proc
        proc.stdin.write(line.encode("utf-8") + b"\n")
        proc.stdin.flush()
        deadline = time.monotonic() + timeout_ms / 1000.0
        sel = selectors.DefaultSelector()
        sel.register(proc.stdout, selectors.EVENT_READ)
        try:
            while b"\n" not in backend._buf:
                remaining = deadline - time.monotonic()
                if remaining <= 0 or not sel.select(timeout=remaining):
                    raise EndpointError("endpoint timeout")
                chunk = os.read(proc.stdout.fileno(), 65536)
                if not chunk:
                    raise EndpointError("backend process closed its output")
                backend._buf += chunk
        finally:
            sel.close()
        reply, backend._buf = backend._buf.split(b"\n", 1)
        return reply.decode("utf-8")


def _http_call(backend: HttpBackend, body_json: str, timeout_ms: float) -> str:
    url = backend.url.rstrip("/") + "/invoke"
    req = urllib.request.Request(
        url, data=body_json.encode("utf-8"), headers={"Content-Type": "application/json"}, method="POST"
    )
    try:
        with urllib.request.urlopen(req, timeout=timeout_ms / 1000.0) as resp:
            return resp.read().decode("utf-8")
    except urllib.error.URLError as exc:
        reason = getattr(exc, "reason", exc)
        if isinstance(reason, TimeoutError) or "timed out" in str(reason):
            raise EndpointError("endpoint timeout") from None
        raise EndpointError(f"http backend failed: {reason}") from None
    except TimeoutError:
        raise EndpointError("endpoint timeout") from None


def _generated_id(role: str, body: dict) -> str:
    digest = hashlib.sha1(json.dumps(body, ensure_ascii=False, separators=(",", ":")).encode("utf-8")).hexdigest()
    return f"{role}-{digest[:12]}"


def _coerce_payload(endpoint: EndpointSpec, request: Request, payload: object, body: dict) -> object:
    role = endpoint.role
    if role in ("mt", "s2t"):
        if not isinstance(payload, str):
            raise EndpointError(f"role {role!r} expects a text payload, got {type(payload).__name__}")
        return payload
    if not isinstance(payload, list):
        raise EndpointError(f"role {role!r} expects a token-triple payload, got {type(payload).__name__}")
    sign_lang = request.sign_lang if isinstance(request, T2sRequest) else request.tgt
    return MotionTokenSequence(
        id=_generated_id(role, body),
        sign_lang=sign_lang,
        synthetic=True,
        tokens=payload,
        codebook_id=endpoint.codebook_id,
    )


def invoke(endpoint: EndpointSpec, request: Request) -> TimedResult:
    """Send one role-typed request to an endpoint and time the backend call."""
    expected = _REQUEST_TYPES[endpoint.role]
    if not isinstance(request, expected):
        raise UsageError(f"endpoint role {endpoint.role!r} expects {expected.__name__}, got {type(request).__name__}")
    body = request_body(request)

    backend = endpoint.backend
    if isinstance(backend, StubBackend):
        table = backend.table()  # load outside the timed region
        key = _stub_key(body)
        backend.calls += 1
        if key not in table:
            raise EndpointError(f"no mapping for input: {key!r}")
        payload = table[key]
        latency = float(backend.delay_ms)
    else:
        body_json = json.dumps(body, ensure_ascii=False, separators=(",", ":"))
        start = time.perf_counter()
        if isinstance(backend, SubprocessBackend):
            raw = _subprocess_call(backend, body_json, endpoint.timeout_ms)
        elif isinstance(backend, HttpBackend):
            raw = _http_call(backend, body_json, endpoint.timeout_ms)
        else:
            raise UsageError(f"unknown backend type {type(backend).__name__}")
        latency = (time.perf_counter() - start) * 1000.0
        payload = _parse_reply(raw)

    return TimedResult(payload=_coerce_payload(endpoint, request, payload, body), latency_ms=latency)


def synthesize_source(t2s: EndpointSpec, text: str, sign_lang: SignLang) -> TimedResult:
    """Generate sign tokens from text. Corpus construction and evaluation both
    route through this single entry point so their decoding setup cannot drift."""
    return invoke(t2s, T2sRequest(text=text, sign_lang=sign_lang))


def cascade_s2s(
    s2t: EndpointSpec,
    mt: EndpointSpec,
    t2s: EndpointSpec,
    source: MotionTokenSequence,
    tgt: SignLang,
) -> TimedResult:
    """Chain s2t -> mt -> t2s; three sequential calls, stage latencies in order.

    Composed latency is the sum of the stage latencies (serialization between
    stages is excluded by design, matching invoke's measurement boundary).
    """
    if source.sign_lang is tgt:
        raise UsageError("cascade source and target sign languages must differ")
    for spec, role in ((s2t, "s2t"), (mt, "mt"), (t2s, "t2s")):
        if spec.role != role:
            raise UsageError(f"cascade stage {role!r} got endpoint with role {spec.role!r}")

    def stage(name: str, endpoint: EndpointSpec, request: Request) -> TimedResult:
        try:
            return invoke(endpoint, request)
        except EndpointError as exc:
            raise EndpointError(f"stage {name}: {exc}") from None

    r1 = stage("s2t", s2t, S2tRequest(tokens=source.tokens, sign_lang=source.sign_lang))
    r2 = stage("mt", mt, MtRequest(text=r1.payload, src=partner(source.sign_lang), tgt=partner(tgt)))
    r3 = stage("t2s", t2s, T2sRequest(text=r2.payload, sign_lang=tgt))

    stage_latencies = (r1.latency_ms, r2.latency_ms, r3.latency_ms)
    return TimedResult(
        payload=r3.payload,
        latency_ms=sum(stage_latencies),
        stage_latencies=stage_latencies,
        intermediate_texts={"s2t": r1.payload, "mt": r2.payload},
    )
