"""Text-generation backends: a deterministic scripted queue and a remote chat-completion client.

Every ``generate`` call, failed or not, leaves exactly one entry in the
backend's audit log.
"""

from __future__ import annotations

import enum
import json
import logging
import os
import threading
import time
from dataclasses import asdict, dataclass
from typing import Any, Callable, Sequence

import httpx

from .errors import (
    BackendError,
    BackendOwnershipError,
    EmptyCompletion,
    Exhausted,
    RateLimited,
    TransportError,
)

log = logging.getLogger(__name__)

MAX_TOKENS_CEILING = 8192


class MessageKind(str, enum.Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


@dataclass(frozen=True)
class ChatMessage:
    kind: MessageKind
    content: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", MessageKind(self.kind))
        if self.kind != MessageKind.SYSTEM and not self.content.strip():
            raise ValueError(f"{self.kind.value} message must have content")


def user(content: str) -> ChatMessage:
    return ChatMessage(MessageKind.USER, content)


def assistant(content: str) -> ChatMessage:
    return ChatMessage(MessageKind.ASSISTANT, content)


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.7
    max_tokens: int = 1024
    seed: int | None = None

    def __post_init__(self) -> None:
        if not 0 <= self.temperature <= 2:
            raise ValueError("temperature must lie in [0, 2]")
        if not 0 < self.max_tokens <= MAX_TOKENS_CEILING:
            raise ValueError(f"max_tokens must lie in (0, {MAX_TOKENS_CEILING}]")


class BackendKind(str, enum.Enum):
    SCRIPTED = "scripted"
    REMOTE = "remote"


@dataclass(frozen=True)
class BackendDescriptor:
    kind: BackendKind
    endpoint: str | None = None
    model_name: str | None = None
    credential_env: str | None = None
    max_attempts: int = 3
    backoff: tuple[float, ...] = (1.0, 2.0, 4.0)
    timeout: float = 60.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", BackendKind(self.kind))
        object.__setattr__(self, "backoff", tuple(self.backoff))
        if self.kind == BackendKind.REMOTE and not (self.endpoint and self.model_name):
            raise ValueError("remote backends need endpoint and model_name")
        if self.kind == BackendKind.SCRIPTED and (self.endpoint or self.model_name):
            raise ValueError("scripted backends take no endpoint or model_name")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["kind"] = self.kind.value
        d["backoff"] = list(self.backoff)
        return d


@dataclass(frozen=True)
class AuditEntry:
    backend: str
    system_prompt: str
    messages: tuple[tuple[str, str], ...]
    params: dict[str, Any]
    output: str | None
    error: str | None
    attempts: int
    latency: float

    def prompt_text(self) -> str:
        return "\n".join([self.system_prompt] + [c for _, c in self.messages])

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["messages"] = [{"role": r, "content": c} for r, c in self.messages]
        return d


class AuditLog:
    """Append-only, lock-protected call log."""

    def __init__(self) -> None:
        self._entries: list[AuditEntry] = []
        self._lock = threading.Lock()

    def append(self, entry: AuditEntry) -> None:
        with self._lock:
            self._entries.append(entry)

    @property
    def entries(self) -> list[AuditEntry]:
        with self._lock:
            return list(self._entries)

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def to_jsonl(self, include_latency: bool = True) -> str:
        out = []
        for e in self.entries:
            d = e.to_dict()
            if not include_latency:
                d.pop("latency")
            out.append(json.dumps(d, ensure_ascii=False) + "\n")
        return "".join(out)


class Backend:
    """Common ``generate`` wrapper: validation and auditing around ``_complete``."""

    name = "backend"

    def __init__(self, name: str | None = None, audit: AuditLog | None = None) -> None:
        if name:
            self.name = name
        self.audit = audit if audit is not None else AuditLog()

    def descriptor(self) -> BackendDescriptor:
        raise NotImplementedError

    def generate(
        self,
        system_prompt: str,
        messages: Sequence[ChatMessage],
        params: GenerationParams | None = None,
    ) -> str:
        params = params or GenerationParams()
        _warn_on_odd_order(messages, self.name)
        start = time.perf_counter()
        attempts = [0]
        output = error = None
        try:
            output = self._complete(system_prompt, list(messages), params, attempts)
            if not output or not output.strip():
                raise EmptyCompletion(f"{self.name}: empty completion")
            return output
        except BackendError as exc:
            error = f"{type(exc).__name__}: {exc}"
            output = None
            raise
        finally:
            self.audit.append(
                AuditEntry(
                    backend=self.name,
                    system_prompt=system_prompt,
                    messages=tuple((m.kind.value, m.content) for m in messages),
                    params=asdict(params),
                    output=output,
                    error=error,
                    attempts=max(attempts[0], 1),
                    latency=time.perf_counter() - start,
                )
            )

    def _complete(
        self,
        system_prompt: str,
        messages: list[ChatMessage],
        params: GenerationParams,
        attempts: list[int],
    ) -> str:
        raise NotImplementedError


def _warn_on_odd_order(messages: Sequence[ChatMessage], name: str) -> None:
    kinds = [m.kind for m in messages if m.kind != MessageKind.SYSTEM]
    for a, b in zip(kinds, kinds[1:]):
        if a == b == MessageKind.ASSISTANT:
            log.warning("%s: consecutive assistant messages", name)
            return


class ScriptedBackend(Backend):
    """Replays a fixed list of completions in order, ignoring its inputs."""

    name = "scripted"

    def __init__(self, responses: Sequence[str], name: str | None = None, audit: AuditLog | None = None) -> None:
        super().__init__(name, audit)
        self._responses = list(responses)
        self._cursor = 0
        self._owner: str | None = None
        self._lock = threading.Lock()

    @property
    def remaining(self) -> int:
        return len(self._responses) - self._cursor

    def claim(self, owner: str) -> None:
        """Bind this queue to one session; a second owner is a usage error."""
        with self._lock:
            if self._owner is not None and self._owner != owner:
                raise BackendOwnershipError(
                    f"{self.name} already owned by {self._owner!r}, requested by {owner!r}"
                )
            self._owner = owner

    def descriptor(self) -> BackendDescriptor:
        return BackendDescriptor(BackendKind.SCRIPTED)

    def _complete(self, system_prompt, messages, params, attempts) -> str:
        attempts[0] = 1
        with self._lock:
            if self._cursor >= len(self._responses):
                raise Exhausted(f"{self.name}: scripted responses exhausted")
            out = self._responses[self._cursor]
            self._cursor += 1
        return out


def script_backend(responses: Sequence[str], name: str | None = None) -> ScriptedBackend:
    return ScriptedBackend(responses, name=name)


class FunctionBackend(Backend):
    """Deterministic backend computing its reply from the last user message."""

    name = "function"

    def __init__(self, fn: Callable[[str], str], name: str | None = None, audit: AuditLog | None = None) -> None:
        super().__init__(name, audit)
        self._fn = fn

    def claim(self, owner: str) -> None:
        pass

    def descriptor(self) -> BackendDescriptor:
        return BackendDescriptor(BackendKind.SCRIPTED)

    def _complete(self, system_prompt, messages, params, attempts) -> str:
        attempts[0] = 1
        last = next((m.content for m in reversed(messages) if m.kind == MessageKind.USER), "")
        return self._fn(last)


class RemoteBackend(Backend):
    """Client for an HTTPS chat-completion endpoint (OpenAI-style request body)."""

    name = "remote"

    def __init__(
        self,
        descriptor: BackendDescriptor,
        name: str | None = None,
        audit: AuditLog | None = None,
        client: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        if descriptor.kind != BackendKind.REMOTE:
            raise ValueError("RemoteBackend needs a remote descriptor")
        super().__init__(name or descriptor.model_name, audit)
        self._descriptor = descriptor
        self._client = client or httpx.Client(timeout=descriptor.timeout)
        self._sleep = sleep

    def claim(self, owner: str) -> None:
        pass

    def descriptor(self) -> BackendDescriptor:
        return self._descriptor

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        env = self._descriptor.credential_env
        if env:
            key = os.environ.get(env, "")
            if not key:
                raise TransportError(f"credential variable {env} is not set", retryable=False)
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _payload(self, system_prompt: str, messages: list[ChatMessage], params: GenerationParams) -> dict:
        body: dict[str, Any] = {
            "model": self._descriptor.model_name,
            "messages": [{"role": "system", "content": system_prompt}]
            + [{"role": m.kind.value, "content": m.content} for m in messages],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        }
        if params.seed is not None:
            body["seed"] = params.seed
        return body

    def _attempt(self, payload: dict) -> str:
        try:
            resp = self._client.post(self._descriptor.endpoint, json=payload, headers=self._headers())
        except httpx.TimeoutException as exc:
            raise TransportError(f"timeout: {exc}") from exc
        except httpx.TransportError as exc:
            raise TransportError(str(exc)) from exc
        if resp.status_code == 429:
            raise RateLimited(f"{self.name}: HTTP 429")
        if resp.status_code >= 500:
            raise TransportError(f"{self.name}: HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise TransportError(f"{self.name}: HTTP {resp.status_code}: {resp.text[:200]}", retryable=False)
        if not resp.content.strip():
            raise EmptyCompletion(f"{self.name}: empty response body")
        try:
            data = resp.json()
            content = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"{self.name}: malformed response: {exc}", retryable=False) from exc
        if not content or not str(content).strip():
            raise EmptyCompletion(f"{self.name}: empty completion")
        return str(content)

    def _complete(self, system_prompt, messages, params, attempts) -> str:
        payload = self._payload(system_prompt, messages, params)
        d = self._descriptor
        while True:
            attempts[0] += 1
            try:
                return self._attempt(payload)
            except (RateLimited, TransportError) as exc:
                retryable = isinstance(exc, RateLimited) or exc.retryable
                if not retryable or attempts[0] >= d.max_attempts:
                    raise
                delay = d.backoff[min(attempts[0] - 1, len(d.backoff) - 1)] if d.backoff else 0.0
                log.info("%s: attempt %d failed (%s); retrying in %.1fs", self.name, attempts[0], exc, delay)
                self._sleep(delay)


def make_backend(descriptor: BackendDescriptor, responses: Sequence[str] = (), name: str | None = None) -> Backend:
    if descriptor.kind == BackendKind.SCRIPTED:
        return ScriptedBackend(responses, name=name)
    return RemoteBackend(descriptor, name=name)
