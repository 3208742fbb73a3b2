"""Completion-endpoint client with record/replay cassettes.

Three modes:

- Live: POST to an OpenAI-compatible ``/completions`` endpoint, with
  bounded concurrency and exponential-backoff retries.
- Replay: serve completions from a cassette file; never touches the
  network (no endpoint is even configured).
- RecordThrough: serve from the cassette when the request is already
  recorded, otherwise call the endpoint and append the result.

A cassette is newline-delimited JSON, one ``{fingerprint, model, params,
completion}`` record per line, optionally preceded by a single
``{"metadata": {...}}`` header line.  The fingerprint is a SHA-256 over a
canonical encoding of (model, prompt, params, stop sequences), so any
byte-level change to a request maps to a different cassette slot.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Protocol

import requests

from .prompts import DEFAULT_STOP_SEQUENCES, DecodingParams

RETRY_ATTEMPTS = 3
RETRY_BASE_DELAY = 2.0
DEFAULT_TIMEOUT = 120.0
DEFAULT_CREDENTIAL_ENV = "OPENAI_API_KEY"
DEFAULT_MAX_IN_FLIGHT = 4

_RETRYABLE_STATUSES = frozenset({429, 500, 502, 503, 504})


class ClientError(Exception):
    """Base class for completion-client failures."""


class CassetteMissError(ClientError):
    """The replay cassette has no entry for this request fingerprint."""

    def __init__(self, fingerprint: str):
        super().__init__(f"no cassette entry for fingerprint {fingerprint}")
        self.fingerprint = fingerprint


class EndpointError(ClientError):
    def __init__(self, status: int | None, body: str):
        excerpt = body[:200]
        super().__init__(f"endpoint failure (status {status}): {excerpt}")
        self.status = status
        self.body = excerpt


class RequestTimeoutError(ClientError):
    def __init__(self, timeout: float):
        super().__init__(f"request timed out after {timeout}s (all retries)")
        self.timeout = timeout


@dataclass(frozen=True)
class CompletionRequest:
    model: str
    prompt: str
    params: DecodingParams = field(default_factory=DecodingParams)
    stop_sequences: tuple[str, ...] = DEFAULT_STOP_SEQUENCES

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be nonempty")


def fingerprint(req: CompletionRequest) -> str:
    """Stable hex digest of the full request identity.

    Canonical JSON (sorted keys, no whitespace) hashed with SHA-256; stable
    across processes and platforms, and sensitive to every byte of the
    prompt and every parameter.
    """
    canonical = json.dumps(
        {
            "model": req.model,
            "prompt": req.prompt,
            "params": {
                "temperature": req.params.temperature,
                "max_tokens": req.params.max_tokens,
                "n_samples": req.params.n_samples,
            },
            "stop": list(req.stop_sequences),
        },
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# --------------------------------------------------------------------------
# Cassettes

@dataclass
class Cassette:
    entries: dict[str, str] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | Path) -> "Cassette":
        entries: dict[str, str] = {}
        metadata: dict[str, Any] = {}
        with open(path, encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                if "fingerprint" in record:
                    # First write wins: entries are immutable once recorded.
                    entries.setdefault(record["fingerprint"], record["completion"])
                elif "metadata" in record and lineno == 1:
                    metadata = record["metadata"]
                else:
                    raise ValueError(f"{path}:{lineno}: unrecognized cassette line")
        return cls(entries, metadata)

    def lookup(self, digest: str) -> str | None:
        return self.entries.get(digest)


def write_cassette(path: str | Path, cassette: Cassette) -> None:
    """Write a full cassette file (metadata header first, if any)."""
    lines = []
    if cassette.metadata:
        lines.append(json.dumps({"metadata": cassette.metadata}, sort_keys=True, ensure_ascii=False))
    for digest, completion in cassette.entries.items():
        lines.append(
            json.dumps({"fingerprint": digest, "completion": completion}, sort_keys=True, ensure_ascii=False)
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def append_record(path: str | Path, req: CompletionRequest, completion: str) -> None:
    line = json.dumps(
        {
            "fingerprint": fingerprint(req),
            "model": req.model,
            "params": {
                "temperature": req.params.temperature,
                "max_tokens": req.params.max_tokens,
                "n_samples": req.params.n_samples,
            },
            "completion": completion,
        },
        sort_keys=True,
        ensure_ascii=False,
    )
    with open(path, "a", encoding="utf-8") as handle:
        handle.write(line + "\n")


# --------------------------------------------------------------------------
# Modes

@dataclass(frozen=True)
class Live:
    endpoint: str
    credential_env: str = DEFAULT_CREDENTIAL_ENV
    timeout: float = DEFAULT_TIMEOUT
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT


@dataclass(frozen=True)
class Replay:
    cassette_path: str


@dataclass(frozen=True)
class RecordThrough:
    endpoint: str
    cassette_path: str
    credential_env: str = DEFAULT_CREDENTIAL_ENV
    timeout: float = DEFAULT_TIMEOUT
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT


ClientMode = Live | Replay | RecordThrough


class Transport(Protocol):
    def __call__(self, url: str, payload: dict, headers: dict, timeout: float) -> tuple[int, str]:
        ...


def _requests_transport(url: str, payload: dict, headers: dict, timeout: float) -> tuple[int, str]:
    response = requests.post(url, json=payload, headers=headers, timeout=timeout)
    return response.status_code, response.text


# Cassette cache / per-path locks, so concurrent workers share one parsed
# cassette and RecordThrough appends stay serialized.
_CACHE_LOCK = threading.Lock()
_CASSETTE_CACHE: dict[Path, Cassette] = {}
_WRITER_LOCKS: dict[Path, threading.Lock] = {}
_SEMAPHORE_LOCK = threading.Lock()
_SEMAPHORES: dict[tuple[str, int], threading.BoundedSemaphore] = {}


def _cassette_for(path: str | Path) -> Cassette:
    resolved = Path(path).resolve()
    with _CACHE_LOCK:
        cached = _CASSETTE_CACHE.get(resolved)
        if cached is None:
            cached = Cassette.load(resolved) if resolved.exists() else Cassette()
            _CASSETTE_CACHE[resolved] = cached
        return cached


def _writer_lock(path: str | Path) -> threading.Lock:
    resolved = Path(path).resolve()
    with _CACHE_LOCK:
        return _WRITER_LOCKS.setdefault(resolved, threading.Lock())


def forget_cassette(path: str | Path) -> None:
    """Drop a cached cassette (tests touch cassette files directly)."""
    resolved = Path(path).resolve()
    with _CACHE_LOCK:
        _CASSETTE_CACHE.pop(resolved, None)


def _semaphore(endpoint: str, limit: int) -> threading.BoundedSemaphore:
    with _SEMAPHORE_LOCK:
        key = (endpoint, limit)
        if key not in _SEMAPHORES:
            _SEMAPHORES[key] = threading.BoundedSemaphore(limit)
        return _SEMAPHORES[key]


def _credential(env_name: str) -> str | None:
    import os

    return os.environ.get(env_name)


def _live_call(
    req: CompletionRequest,
    endpoint: str,
    credential_env: str,
    timeout: float,
    max_in_flight: int,
    transport: Transport,
    sleep: Callable[[float], None],
) -> str:
    payload = {
        "model": req.model,
        "prompt": req.prompt,
        "temperature": req.params.temperature,
        "max_tokens": req.params.max_tokens,
        "n": req.params.n_samples,
    }
    if req.stop_sequences:
        payload["stop"] = list(req.stop_sequences)
    headers = {"Content-Type": "application/json"}
    key = _credential(credential_env)
    if key:
        headers["Authorization"] = f"Bearer {key}"

    gate = _semaphore(endpoint, max_in_flight)
    last_status: int | None = None
    last_body = ""
    timed_out = False
    for attempt in range(RETRY_ATTEMPTS):
        if attempt:
            sleep(RETRY_BASE_DELAY * 2 ** (attempt - 1))
        try:
            with gate:
                status, body = transport(endpoint, payload, headers, timeout)
        except (requests.Timeout, TimeoutError):
            timed_out = True
            last_status, last_body = None, "timeout"
            continue
        except (requests.RequestException, ConnectionError, OSError) as err:
            last_status, last_body = None, str(err)
            continue
        timed_out = False
        if status == 200:
            try:
                data = json.loads(body)
                return data["choices"][0]["text"]
            except (json.JSONDecodeError, KeyError, IndexError, TypeError):
                raise EndpointError(status, f"malformed completion body: {body[:120]}")
        if status in _RETRYABLE_STATUSES:
            last_status, last_body = status, body
            continue
        raise EndpointError(status, body)
    if timed_out:
        raise RequestTimeoutError(timeout)
    raise EndpointError(last_status, last_body)


def complete(
    req: CompletionRequest,
    mode: ClientMode,
    *,
    transport: Transport | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> str:
    """Resolve a completion request under the given mode.

    Replay performs a pure cassette lookup — no transport is constructed
    and no network name is ever resolved.  RecordThrough serves recorded
    requests from the cassette (recording is idempotent) and appends fresh
    completions under a per-file writer lock.
    """
    if isinstance(mode, Replay):
        cassette = _cassette_for(mode.cassette_path)
        recorded = cassette.lookup(fingerprint(req))
        if recorded is None:
            raise CassetteMissError(fingerprint(req))
        return recorded

    if isinstance(mode, Live):
        return _live_call(
            req,
            mode.endpoint,
            mode.credential_env,
            mode.timeout,
            mode.max_in_flight,
            transport or _requests_transport,
            sleep,
        )

    if isinstance(mode, RecordThrough):
        digest = fingerprint(req)
        cassette = _cassette_for(mode.cassette_path)
        recorded = cassette.lookup(digest)
        if recorded is not None:
            return recorded
        completion = _live_call(
            req,
            mode.endpoint,
            mode.credential_env,
            mode.timeout,
            mode.max_in_flight,
            transport or _requests_transport,
            sleep,
        )
        with _writer_lock(mode.cassette_path):
            # Re-check under the lock: another worker may have recorded it.
            if cassette.lookup(digest) is None:
                append_record(mode.cassette_path, req, completion)
                cassette.entries[digest] = completion
        return completion

    raise TypeError(f"unknown client mode: {mode!r}")
