"""Chat-completion client with retries, rate limiting and mock transports.

Requests use the chat-completions JSON shape::

    {"model": ..., "messages": [{"role": ..., "content": ...}, ...],
     "temperature": ..., "max_tokens": ...}

and the reply text is read from ``choices[0].message.content``. Status 429,
5xx and connection failures are retried; retry ``a`` (0-based) sleeps a
uniformly jittered delay in ``[base, 2 * base] * 2**a`` milliseconds. 401/403
fail at once.
"""

from __future__ import annotations

import collections
import hashlib
import json
import logging
import os
import random
import threading
import time
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

from pseudopairs.errors import RemoteError

log = logging.getLogger(__name__)

ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class ClientConfig:
    endpoint_url: str = "https://api.openai.com/v1/chat/completions"
    model_name: str = "gpt-3.5-turbo"
    api_key_env_var_name: str = "OPENAI_API_KEY"
    temperature: float = 0.7
    max_output_tokens: int = 512
    max_retries: int = 5
    base_backoff_ms: int = 500
    requests_per_minute: int = 60
    timeout_s: float = 60.0

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.requests_per_minute <= 0:
            raise ValueError("requests_per_minute must be > 0")


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if self.role != "assistant" and not self.content:
            raise ValueError(f"{self.role} message must have content")


@dataclass(frozen=True)
class CompletionResult:
    text: str
    finish_reason: str | None
    latency_ms: float
    attempt_count: int


class LLMError(RemoteError):
    pass


class AuthError(LLMError):
    pass


class DecodeError(LLMError):
    pass


class ExhaustedRetriesError(LLMError):
    def __init__(self, last_status: int | None, attempts: int):
        super().__init__(f"gave up after {attempts} attempts (last status {last_status})")
        self.last_status = last_status
        self.attempts = attempts


class TransportError(Exception):
    """Connection-level failure; retried like a 5xx."""


# -- clocks ---------------------------------------------------------------


class Clock(Protocol):
    def monotonic(self) -> float: ...
    def sleep(self, seconds: float) -> None: ...


class SystemClock:
    def monotonic(self) -> float:
        return time.monotonic()

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            time.sleep(seconds)


class VirtualClock:
    """Clock whose ``sleep`` only advances the reading. Thread-safe."""

    def __init__(self, start: float = 0.0):
        self._now = start
        self._lock = threading.Lock()
        self.sleeps: list[float] = []

    def monotonic(self) -> float:
        with self._lock:
            return self._now

    def sleep(self, seconds: float) -> None:
        with self._lock:
            self.sleeps.append(seconds)
            if seconds > 0:
                self._now += seconds


class RateLimiter:
    """At most ``per_minute`` departures in any 60-second window.

    A departure at time t is allowed only if fewer than ``per_minute``
    earlier departures happened after t - 60.
    """

    def __init__(self, per_minute: int, clock: Clock | None = None):
        if per_minute <= 0:
            raise ValueError("per_minute must be > 0")
        self.per_minute = per_minute
        self.clock = clock or SystemClock()
        self._recent: collections.deque[float] = collections.deque()
        self._lock = threading.Lock()
        self.departures: list[float] = []

    def acquire(self) -> float:
        with self._lock:
            while True:
                now = self.clock.monotonic()
                while self._recent and self._recent[0] + 60.0 <= now:
                    self._recent.popleft()
                if len(self._recent) < self.per_minute:
                    self._recent.append(now)
                    self.departures.append(now)
                    return now
                # floor the wait so float round-off cannot stall progress
                self.clock.sleep(max(self._recent[0] + 60.0 - now, 1e-6))


# -- transports -----------------------------------------------------------

Transport = Callable[[str, dict, bytes, float], tuple[int, bytes]]


class HttpTransport:
    requires_key = True

    def __init__(self):
        import requests

        self._session = requests.Session()
        self._exc = requests.RequestException

    def __call__(self, url: str, headers: dict, body: bytes, timeout: float) -> tuple[int, bytes]:
        try:
            resp = self._session.post(url, data=body, headers=headers, timeout=timeout)
        except self._exc as exc:
            raise TransportError(str(exc)) from exc
        return resp.status_code, resp.content


def completion_body(text: str, finish_reason: str = "stop") -> bytes:
    return json.dumps(
        {"choices": [{"index": 0, "message": {"role": "assistant", "content": text}, "finish_reason": finish_reason}]}
    ).encode("utf-8")


class ScriptedTransport:
    """Replays ``(status, body)`` responses in order and records each request."""

    requires_key = False

    def __init__(self, responses: Sequence[tuple[int, bytes | str | dict]]):
        self._responses = list(responses)
        self.requests: list[dict] = []
        self._lock = threading.Lock()

    def __call__(self, url, headers, body, timeout):
        with self._lock:
            self.requests.append(json.loads(body))
            if not self._responses:
                raise TransportError("script exhausted")
            status, payload = self._responses.pop(0)
        if isinstance(payload, dict):
            payload = json.dumps(payload)
        if isinstance(payload, str):
            payload = payload.encode("utf-8")
        return status, payload


_MOCK_SENTENCES = (
    "It contains a substituted ring scaffold with several polar functional groups.",
    "It has a role as a metabolite and has been studied as an enzyme inhibitor.",
    "It is functionally related to the reference compound supplied in the prompt.",
    "It shows moderate lipophilicity and is expected to be stable under physiological conditions.",
    "It is a member of a broad class of organic small molecules used in medicinal chemistry.",
)


class MockLLMTransport:
    """Offline stand-in for a chat service; the reply is a pure function of the request messages."""

    requires_key = False

    def __call__(self, url, headers, body, timeout):
        request = json.loads(body)
        digest = hashlib.blake2b(
            json.dumps(request["messages"], sort_keys=True).encode("utf-8"), digest_size=8
        ).hexdigest()
        n = 2 + int(digest[0], 16) % 3
        start = int(digest[1], 16) % len(_MOCK_SENTENCES)
        picked = [_MOCK_SENTENCES[(start + i) % len(_MOCK_SENTENCES)] for i in range(n)]
        text = f"The molecule is a synthetic organic compound with reference code {digest}. " + " ".join(picked)
        return 200, completion_body(text)


# -- client ---------------------------------------------------------------


def _decode(raw: bytes) -> tuple[str, str | None]:
    try:
        doc = json.loads(raw)
        choice = doc["choices"][0]
        text = choice["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise DecodeError(f"malformed completion body: {exc!r}") from exc
    if not isinstance(text, str):
        raise DecodeError("completion content is not a string")
    return text, choice.get("finish_reason")


class ChatClient:
    def __init__(
        self,
        config: ClientConfig,
        transport: Transport | None = None,
        clock: Clock | None = None,
        limiter: RateLimiter | None = None,
        seed: int = 0,
    ):
        self.config = config
        self.transport = transport or HttpTransport()
        self.clock = clock or SystemClock()
        self.limiter = limiter or RateLimiter(config.requests_per_minute, self.clock)
        self._rng = random.Random(seed)
        self._rng_lock = threading.Lock()

    def backoff_seconds(self, retry: int) -> float:
        low = self.config.base_backoff_ms * (2**retry)
        with self._rng_lock:
            return self._rng.uniform(low, 2 * low) / 1000.0

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if getattr(self.transport, "requires_key", True):
            key = os.environ.get(self.config.api_key_env_var_name)
            if not key:
                raise AuthError(f"environment variable {self.config.api_key_env_var_name} is not set")
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def complete(self, messages: Sequence[ChatMessage]) -> CompletionResult:
        if not messages:
            raise ValueError("messages must not be empty")
        cfg = self.config
        headers = self._headers()
        body = json.dumps(
            {
                "model": cfg.model_name,
                "messages": [{"role": m.role, "content": m.content} for m in messages],
                "temperature": cfg.temperature,
                "max_tokens": cfg.max_output_tokens,
            }
        ).encode("utf-8")
        last_status = None
        for attempt in range(cfg.max_retries + 1):
            self.limiter.acquire()
            started = self.clock.monotonic()
            try:
                status, raw = self.transport(cfg.endpoint_url, headers, body, cfg.timeout_s)
            except TransportError as exc:
                log.warning("transport failure on attempt %d: %s", attempt + 1, exc)
                status, raw = None, b""
            latency_ms = (self.clock.monotonic() - started) * 1000.0
            if status == 200:
                text, finish = _decode(raw)
                return CompletionResult(text, finish, latency_ms, attempt + 1)
            if status in (401, 403):
                raise AuthError(f"authentication failed with status {status}")
            last_status = status
            if status is not None and status != 429 and status < 500:
                raise LLMError(f"request rejected with status {status}")
            if attempt < cfg.max_retries:
                delay = self.backoff_seconds(attempt)
                log.info("status %s, retrying in %.3f s", status, delay)
                self.clock.sleep(delay)
        raise ExhaustedRetriesError(last_status, cfg.max_retries + 1)


def complete(config: ClientConfig, messages: Sequence[ChatMessage], **kwargs) -> CompletionResult:
    return ChatClient(config, **kwargs).complete(messages)
