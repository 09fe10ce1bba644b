"""Chat-completion client with retry, audit logging and offline backends.

Backends implement ``send(request, config) -> (text, usage)``.  The HTTP
backend speaks the common JSON ``messages`` wire shape; the echo and
scripted backends never touch the network and are what the tests use.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

import httpx

from geogen.errors import (
    AuthError,
    GatewayError,
    GatewayTimeout,
    RetryExhausted,
    ScriptFormatError,
    TransientError,
)

TERMINAL = "<|end|>"


@dataclass(frozen=True)
class GatewayConfig:
    endpoint: str = "http://localhost:8000/v1/chat/completions"
    model: str = "default"
    token_env: str = "GEOGEN_API_TOKEN"
    timeout: float = 60.0
    max_attempts: int = 3
    backoff_base: float = 0.5
    temperature: float = 0.0
    max_in_flight: int = 4
    audit_path: str | None = None

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")


@dataclass(frozen=True)
class CompletionRequest:
    user: str
    system: str = ""
    exemplar: tuple[str, str] | None = None  # one-shot (user, assistant) pair
    request_id: str = ""

    def messages(self) -> list[dict]:
        out = []
        if self.system:
            out.append({"role": "system", "content": self.system})
        if self.exemplar:
            out.append({"role": "user", "content": self.exemplar[0]})
            out.append({"role": "assistant", "content": self.exemplar[1]})
        out.append({"role": "user", "content": self.user})
        return out


@dataclass
class CompletionResponse:
    text: str
    usage: dict = field(default_factory=dict)
    latency: float = 0.0
    attempts: int = 1
    request_id: str = ""


class Backend(Protocol):
    requires_auth: bool

    def send(self, request: CompletionRequest, config: GatewayConfig) -> tuple[str, dict]: ...


class HttpBackend:
    requires_auth = True

    def __init__(self, transport: httpx.BaseTransport | None = None):
        self.transport = transport

    def send(self, request: CompletionRequest, config: GatewayConfig) -> tuple[str, dict]:
        token = os.environ.get(config.token_env, "")
        body = {"model": config.model, "messages": request.messages(), "temperature": config.temperature}
        try:
            with httpx.Client(transport=self.transport, timeout=config.timeout) as client:
                r = client.post(config.endpoint, json=body, headers={"Authorization": f"Bearer {token}"})
        except httpx.TimeoutException as e:
            raise GatewayTimeout(f"request timed out after {config.timeout}s") from e
        except httpx.TransportError as e:
            raise TransientError(f"transport error: {e}") from e
        if r.status_code in (401, 403):
            raise AuthError(f"endpoint rejected credentials ({r.status_code})")
        if r.status_code == 429 or r.status_code >= 500:
            raise TransientError(f"HTTP {r.status_code}")
        if r.status_code >= 400:
            raise GatewayError(f"HTTP {r.status_code}: {r.text[:200]}")
        try:
            data = r.json()
            text = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise TransientError(f"malformed response body: {e}") from e
        return text, dict(data.get("usage") or {})


class EchoBackend:
    """Returns the user text unchanged."""

    requires_auth = False

    def send(self, request: CompletionRequest, config: GatewayConfig) -> tuple[str, dict]:
        return request.user, {"calls": 1}


class ScriptedBackend:
    """Replays a fixed list of responses, then the terminal marker forever."""

    requires_auth = False

    def __init__(self, responses: list[str]):
        self.responses = list(responses)
        self.calls: list[tuple[str, str]] = []
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedBackend":
        return cls(parse_script(Path(path).read_text(encoding="utf-8")))

    def send(self, request: CompletionRequest, config: GatewayConfig) -> tuple[str, dict]:
        with self._lock:
            i = len(self.calls)
            text = self.responses[i] if i < len(self.responses) else TERMINAL
            self.calls.append((request.user, text))
        return text, {"call": i}


class FlakyBackend:
    """Fails ``failures`` times with the given error, then defers to ``inner``."""

    def __init__(self, inner: Backend, failures: int, error: type[GatewayError] = TransientError):
        self.inner, self.failures, self.error = inner, failures, error
        self.requires_auth = inner.requires_auth
        self.attempts = 0

    def send(self, request: CompletionRequest, config: GatewayConfig) -> tuple[str, dict]:
        self.attempts += 1
        if self.attempts <= self.failures:
            raise self.error(f"scripted failure {self.attempts}")
        return self.inner.send(request, config)


def parse_script(text: str) -> list[str]:
    """One JSON value per non-blank line: a string, or a list of strings
    (several candidates for one call, joined by newlines)."""
    out = []
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            v = json.loads(line)
        except json.JSONDecodeError as e:
            raise ScriptFormatError(f"line {n}: not JSON ({e.msg})") from e
        if isinstance(v, str):
            out.append(v)
        elif isinstance(v, list) and all(isinstance(x, str) for x in v):
            if any("\n" in x for x in v):
                raise ScriptFormatError(f"line {n}: candidates may not contain newlines")
            out.append("\n".join(v))
        else:
            raise ScriptFormatError(f"line {n}: expected a string or a list of strings")
    return out


class Gateway:
    def __init__(self, config: GatewayConfig | None = None, backend: Backend | None = None,
                 sleep: Callable[[float], None] = time.sleep):
        self.config = config or GatewayConfig()
        self.backend = backend if backend is not None else HttpBackend()
        self.sleep = sleep
        self._slots = threading.BoundedSemaphore(self.config.max_in_flight)
        self._audit_lock = threading.Lock()

    def _audit(self, entry: dict) -> None:
        if not self.config.audit_path:
            return
        line = json.dumps(entry, sort_keys=True, ensure_ascii=False)
        with self._audit_lock, open(self.config.audit_path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        cfg = self.config
        if self.backend.requires_auth and not os.environ.get(cfg.token_env):
            raise AuthError(f"environment variable {cfg.token_env} is not set")
        last: Exception | None = None
        for attempt in range(1, cfg.max_attempts + 1):
            t0 = time.perf_counter()
            entry = {"request_id": request.request_id, "attempt": attempt, "model": cfg.model,
                     "messages": request.messages()}
            try:
                with self._slots:
                    text, usage = self.backend.send(request, cfg)
                if not text:
                    raise TransientError("empty response text")
            except TransientError as e:
                last = e
                self._audit({**entry, "error": e.to_dict(), "latency": time.perf_counter() - t0})
                if attempt < cfg.max_attempts:
                    self.sleep(cfg.backoff_base * 2 ** (attempt - 1))
                continue
            except GatewayError as e:
                self._audit({**entry, "error": e.to_dict(), "latency": time.perf_counter() - t0})
                raise
            latency = time.perf_counter() - t0
            self._audit({**entry, "response": text, "usage": usage, "latency": latency})
            return CompletionResponse(text, usage, latency, attempt, request.request_id)
        raise RetryExhausted(f"gave up after {cfg.max_attempts} attempts: {last}")


def echo_gateway(audit_path: str | None = None) -> Gateway:
    return Gateway(GatewayConfig(audit_path=audit_path), EchoBackend())
