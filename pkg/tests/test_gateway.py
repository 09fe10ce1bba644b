import json

import httpx
import pytest

from geogen.errors import AuthError, GatewayError, GatewayTimeout, RetryExhausted, ScriptFormatError, TransientError
from geogen.gateway import (
    TERMINAL,
    CompletionRequest,
    EchoBackend,
    FlakyBackend,
    Gateway,
    GatewayConfig,
    HttpBackend,
    ScriptedBackend,
    echo_gateway,
    parse_script,
)


def no_sleep(_):
    pass


def test_echo():
    assert echo_gateway().complete(CompletionRequest("hello")).text == "hello"


def test_flaky_recovers_within_budget():
    be = FlakyBackend(EchoBackend(), failures=2)
    sleeps = []
    r = Gateway(GatewayConfig(max_attempts=3, backoff_base=0.5), be, sleeps.append).complete(CompletionRequest("x"))
    assert r.text == "x" and r.attempts == 3 and be.attempts == 3
    assert sleeps == [0.5, 1.0]


def test_flaky_exhausts():
    be = FlakyBackend(EchoBackend(), failures=3)
    with pytest.raises(RetryExhausted):
        Gateway(GatewayConfig(max_attempts=3), be, no_sleep).complete(CompletionRequest("x"))
    assert be.attempts == 3


def test_non_transient_not_retried():
    be = FlakyBackend(EchoBackend(), failures=1, error=GatewayTimeout)
    with pytest.raises(GatewayTimeout):
        Gateway(GatewayConfig(), be, no_sleep).complete(CompletionRequest("x"))
    assert be.attempts == 1


def test_missing_token_fails_before_any_call(monkeypatch):
    monkeypatch.delenv("GEOGEN_API_TOKEN", raising=False)
    calls = []
    tr = httpx.MockTransport(lambda req: calls.append(req) or httpx.Response(200))
    with pytest.raises(AuthError):
        Gateway(GatewayConfig(), HttpBackend(tr), no_sleep).complete(CompletionRequest("x"))
    assert calls == []


def _http(handler, monkeypatch, **kw):
    monkeypatch.setenv("GEOGEN_API_TOKEN", "t0k")
    return Gateway(GatewayConfig(**kw), HttpBackend(httpx.MockTransport(handler)), no_sleep)


def test_http_ok(monkeypatch):
    seen = {}

    def handler(req):
        seen["auth"] = req.headers["authorization"]
        seen["body"] = json.loads(req.content)
        return httpx.Response(200, json={"choices": [{"message": {"content": "AB = 3"}}], "usage": {"total": 5}})

    r = _http(handler, monkeypatch, model="m1").complete(CompletionRequest("q", system="s"))
    assert r.text == "AB = 3" and r.usage == {"total": 5}
    assert seen["auth"] == "Bearer t0k"
    assert seen["body"]["model"] == "m1"
    assert [m["role"] for m in seen["body"]["messages"]] == ["system", "user"]


def test_http_401(monkeypatch):
    with pytest.raises(AuthError):
        _http(lambda r: httpx.Response(401), monkeypatch).complete(CompletionRequest("q"))


def test_http_500_retries(monkeypatch):
    n = []

    def handler(req):
        n.append(1)
        return httpx.Response(500) if len(n) < 3 else httpx.Response(200, json={"choices": [{"message": {"content": "ok"}}]})

    r = _http(handler, monkeypatch, max_attempts=3).complete(CompletionRequest("q"))
    assert r.text == "ok" and r.attempts == 3


def test_http_timeout(monkeypatch):
    def handler(req):
        raise httpx.ReadTimeout("slow", request=req)

    with pytest.raises(GatewayTimeout):
        _http(handler, monkeypatch).complete(CompletionRequest("q"))


def test_http_malformed_is_transient(monkeypatch):
    with pytest.raises(RetryExhausted):
        _http(lambda r: httpx.Response(200, json={"nope": 1}), monkeypatch, max_attempts=2).complete(CompletionRequest("q"))


def test_script_then_terminal():
    be = ScriptedBackend(["a", "b", "c"])
    g = Gateway(backend=be, sleep=no_sleep)
    assert [g.complete(CompletionRequest(str(i))).text for i in range(4)] == ["a", "b", "c", TERMINAL]
    assert len(be.calls) == 4


def test_empty_script_is_terminal():
    g = Gateway(backend=ScriptedBackend([]), sleep=no_sleep)
    assert g.complete(CompletionRequest("x")).text == TERMINAL


def test_empty_text_is_transient():
    g = Gateway(GatewayConfig(max_attempts=2), ScriptedBackend(["", "ok"]), no_sleep)
    assert g.complete(CompletionRequest("x")).text == "ok"


def test_parse_script():
    assert parse_script('"one"\n\n["a", "b"]\n') == ["one", "a\nb"]
    for bad in ("{}", "not json", '[1, 2]', '["a\\nb"]'):
        with pytest.raises(ScriptFormatError):
            parse_script(bad)


def test_audit_log(tmp_path):
    path = tmp_path / "audit.jsonl"
    g = Gateway(GatewayConfig(audit_path=str(path), max_attempts=2), FlakyBackend(EchoBackend(), 1), no_sleep)
    g.complete(CompletionRequest("hi", request_id="r1"))
    rows = [json.loads(l) for l in path.read_text().splitlines()]
    assert [r["attempt"] for r in rows] == [1, 2]
    assert "error" in rows[0] and rows[1]["response"] == "hi"
    assert all(r["request_id"] == "r1" for r in rows)


def test_config_validation():
    with pytest.raises(ValueError):
        GatewayConfig(max_attempts=0)
    assert issubclass(TransientError, GatewayError)
