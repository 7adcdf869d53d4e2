import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from wardsim.backends import (
    BackendDescriptor,
    ChatMessage,
    FunctionBackend,
    GenerationParams,
    MessageKind,
    RemoteBackend,
    ScriptedBackend,
    script_backend,
    user,
)
from wardsim.errors import BackendOwnershipError, EmptyCompletion, Exhausted, RateLimited, TransportError


def test_queue_semantics():
    b = script_backend(["a", "b"])
    assert b.generate("s", [user("q")]) == "a"
    assert b.generate("s", [user("q")]) == "b"
    with pytest.raises(Exhausted):
        b.generate("s", [user("q")])
    assert len(b.audit) == 3
    assert b.audit.entries[-1].error.startswith("Exhausted")


def test_empty_script():
    with pytest.raises(Exhausted):
        script_backend([]).generate("s", [user("q")])


def test_single_response():
    b = script_backend(["x"])
    assert b.generate("s", [user("q")]) == "x"
    assert b.remaining == 0


def test_blank_completion_is_error():
    with pytest.raises(EmptyCompletion):
        script_backend(["   "]).generate("s", [user("q")])


def test_ownership_tag():
    b = script_backend(["x"])
    b.claim("session-1")
    b.claim("session-1")
    with pytest.raises(BackendOwnershipError):
        b.claim("session-2")


def test_function_backend_reads_last_user_message():
    b = FunctionBackend(lambda q: q.upper())
    assert b.generate("s", [user("first"), ChatMessage(MessageKind.ASSISTANT, "x"), user("second")]) == "SECOND"


def test_params_validation():
    with pytest.raises(ValueError):
        GenerationParams(temperature=2.5)
    with pytest.raises(ValueError):
        GenerationParams(max_tokens=0)
    with pytest.raises(ValueError):
        GenerationParams(max_tokens=100_000)
    with pytest.raises(ValueError):
        ChatMessage(MessageKind.USER, "  ")


def test_descriptor_validation():
    with pytest.raises(ValueError):
        BackendDescriptor("remote", endpoint="http://x")
    with pytest.raises(ValueError):
        BackendDescriptor("scripted", endpoint="http://x", model_name="m")
    assert BackendDescriptor("scripted").to_dict()["kind"] == "scripted"


def test_odd_message_order_warns_only(caplog):
    b = script_backend(["x"])
    b.generate("s", [ChatMessage(MessageKind.ASSISTANT, "a"), ChatMessage(MessageKind.ASSISTANT, "b")])
    assert "consecutive assistant" in caplog.text


def test_audit_jsonl():
    b = script_backend(["x"])
    b.generate("sys", [user("q")], GenerationParams(temperature=0.0, seed=3))
    row = json.loads(b.audit.to_jsonl(include_latency=False))
    assert row["system_prompt"] == "sys" and row["output"] == "x" and row["params"]["seed"] == 3
    assert "latency" not in row


class _Stub:
    """Local chat-completion server replaying (status, body) pairs."""

    def __init__(self, plan):
        self.plan = list(plan)
        self.requests = []
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                stub.requests.append((dict(self.headers), json.loads(self.rfile.read(length))))
                status, body = stub.plan.pop(0) if stub.plan else (500, "")
                data = body.encode() if isinstance(body, str) else json.dumps(body).encode()
                self.send_response(status)
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *args):
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()

    @property
    def url(self):
        return f"http://127.0.0.1:{self.server.server_address[1]}/v1/chat/completions"


def _ok(text):
    return {"choices": [{"message": {"role": "assistant", "content": text}}]}


def _remote(url, **kw):
    sleeps = []
    d = BackendDescriptor("remote", endpoint=url, model_name="m", credential_env="WARDSIM_TEST_KEY", **kw)
    return RemoteBackend(d, sleep=sleeps.append), sleeps


@pytest.fixture(autouse=True)
def _key(monkeypatch):
    monkeypatch.setenv("WARDSIM_TEST_KEY", "secret")


def test_remote_429_then_200():
    with _Stub([(429, ""), (200, _ok("hello"))]) as stub:
        b, sleeps = _remote(stub.url)
        assert b.generate("sys", [user("q")], GenerationParams(temperature=0.2)) == "hello"
    assert b.audit.entries[0].attempts == 2
    assert len(b.audit) == 1
    assert sleeps == [1.0]
    headers, body = stub.requests[0]
    assert headers["Authorization"] == "Bearer secret"
    assert body["messages"][0] == {"role": "system", "content": "sys"}
    assert body["model"] == "m" and body["temperature"] == 0.2


def test_remote_empty_body():
    with _Stub([(200, "")]) as stub:
        b, _ = _remote(stub.url)
        with pytest.raises(EmptyCompletion):
            b.generate("s", [user("q")])
    assert len(b.audit) == 1 and b.audit.entries[0].error


def test_remote_empty_content():
    with _Stub([(200, _ok(""))]) as stub:
        b, _ = _remote(stub.url)
        with pytest.raises(EmptyCompletion):
            b.generate("s", [user("q")])


def test_remote_retry_bound():
    with _Stub([(503, "")] * 5) as stub:
        b, sleeps = _remote(stub.url, max_attempts=3)
        with pytest.raises(TransportError):
            b.generate("s", [user("q")])
    assert len(stub.requests) == 3
    assert b.audit.entries[0].attempts == 3
    assert sleeps == [1.0, 2.0]


def test_remote_rate_limit_exhausts_attempts():
    with _Stub([(429, "")] * 3) as stub:
        b, _ = _remote(stub.url, max_attempts=2)
        with pytest.raises(RateLimited):
            b.generate("s", [user("q")])
    assert len(stub.requests) == 2


def test_remote_client_error_not_retried():
    with _Stub([(400, "bad request")]) as stub:
        b, sleeps = _remote(stub.url)
        with pytest.raises(TransportError) as info:
            b.generate("s", [user("q")])
    assert not info.value.retryable
    assert len(stub.requests) == 1 and sleeps == []


def test_missing_credential(monkeypatch):
    monkeypatch.delenv("WARDSIM_TEST_KEY")
    b, _ = _remote("http://127.0.0.1:9/none")
    with pytest.raises(TransportError):
        b.generate("s", [user("q")])
