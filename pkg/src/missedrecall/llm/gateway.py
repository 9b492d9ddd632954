"""Chat-completion client with per-attempt timeout and jittered retries.

Every attempt runs on a daemon thread and is abandoned once it exceeds the
per-attempt timeout; the caller then waits a seeded random period and tries
again, up to ``max_retries`` more times.
"""

from __future__ import annotations

import json
import logging
import os
import random
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol

from .prompts import ChatRequest

log = logging.getLogger(__name__)


class LLMError(Exception):
    """Base class for gateway failures; ``attempts`` holds per-attempt diagnostics."""

    def __init__(self, message: str, attempts: list["Attempt"] | None = None):
        super().__init__(message)
        self.attempts = list(attempts or [])


class TransportError(LLMError):
    """All attempts failed."""


class TimeoutExhausted(TransportError):
    """All attempts failed and the last failure was a timeout."""


class AttemptTimeout(Exception):
    pass


class HTTPStatusError(Exception):
    def __init__(self, status: int, body: str = ""):
        super().__init__(f"HTTP {status}")
        self.status = status
        self.body = body


class MalformedResponse(Exception):
    pass


@dataclass(frozen=True)
class RetryPolicy:
    per_attempt_timeout: float = 30.0
    max_retries: int = 3
    wait_min: float = 0.5
    wait_max: float = 2.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.per_attempt_timeout <= 0:
            raise ValueError("per_attempt_timeout must be > 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.wait_min < 0 or self.wait_max < self.wait_min:
            raise ValueError("wait interval must satisfy 0 <= wait_min <= wait_max")

    def worst_case_seconds(self) -> float:
        return (1 + self.max_retries) * (self.per_attempt_timeout + self.wait_max)


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model: str
    api_key_env: str | None = None
    path: str = "/chat/completions"

    @property
    def url(self) -> str:
        return self.base_url.rstrip("/") + self.path

    def headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key_env:
            key = os.environ.get(self.api_key_env)
            if key:
                headers["Authorization"] = f"Bearer {key}"
        return headers


@dataclass
class Attempt:
    number: int
    status: str  # ok | timeout | http_error | protocol_error | malformed
    detail: str = ""
    elapsed: float = 0.0
    wait_after: float = 0.0


@dataclass
class Completion:
    text: str
    attempts: list[Attempt]


class Transport(Protocol):
    def __call__(self, payload: dict, timeout: float) -> Any: ...


def extract_text(body: Any) -> str:
    try:
        content = body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError):
        raise MalformedResponse(f"no choices[0].message.content in {str(body)[:200]!r}") from None
    if not isinstance(content, str):
        raise MalformedResponse("message content is not a string")
    return content


class HttpTransport:
    """POSTs the payload as JSON and returns the decoded response body."""

    def __init__(self, endpoint: EndpointConfig, client=None):
        import httpx

        self.endpoint = endpoint
        self._httpx = httpx
        self._client = client or httpx.Client()

    def __call__(self, payload: dict, timeout: float) -> Any:
        httpx = self._httpx
        try:
            resp = self._client.post(self.endpoint.url, json=payload,
                                     headers=self.endpoint.headers(), timeout=timeout)
        except httpx.TimeoutException as exc:
            raise AttemptTimeout(str(exc)) from exc
        if resp.status_code >= 400:
            raise HTTPStatusError(resp.status_code, resp.text[:500])
        try:
            return resp.json()
        except (json.JSONDecodeError, ValueError) as exc:
            raise MalformedResponse(f"response is not JSON: {exc}") from exc


@dataclass
class ScriptedStep:
    """One scripted reply: sleep ``delay`` seconds, then answer.

    ``text`` yields a well-formed completion, ``status`` >= 400 an HTTP error,
    ``body`` an arbitrary raw body (for malformed-response tests).
    """

    delay: float = 0.0
    text: str | None = None
    status: int = 200
    body: Any = None


class ScriptedTransport:
    """Mock transport replaying a fixed sequence of steps; the last step repeats."""

    def __init__(self, steps):
        self.steps = [s if isinstance(s, ScriptedStep) else ScriptedStep(**s) for s in steps]
        if not self.steps:
            raise ValueError("scripted transport needs at least one step")
        self.calls: list[dict] = []
        self._lock = threading.Lock()

    def __call__(self, payload: dict, timeout: float) -> Any:
        with self._lock:
            step = self.steps[min(len(self.calls), len(self.steps) - 1)]
            self.calls.append(payload)
        if step.delay:
            time.sleep(step.delay)
        if step.status >= 400:
            raise HTTPStatusError(step.status)
        if step.body is not None:
            return step.body
        return {"choices": [{"message": {"role": "assistant", "content": step.text or ""}}]}


class ReplyTransport:
    """Mock transport answering from a function of the request payload."""

    def __init__(self, reply: Callable[[dict], str]):
        self.reply = reply
        self.calls: list[dict] = []

    def __call__(self, payload: dict, timeout: float) -> Any:
        self.calls.append(payload)
        return {"choices": [{"message": {"role": "assistant", "content": self.reply(payload)}}]}


class RateLimiter:
    """Spaces dispatches evenly so that at most ``per_minute`` start per minute."""

    def __init__(self, per_minute: float | None = None, clock=time.monotonic, sleep=time.sleep):
        self.interval = 60.0 / per_minute if per_minute else 0.0
        self._next = 0.0
        self._lock = threading.Lock()
        self._clock = clock
        self._sleep = sleep

    def acquire(self) -> None:
        if not self.interval:
            return
        with self._lock:
            now = self._clock()
            slot = max(now, self._next)
            self._next = slot + self.interval
        if slot > now:
            self._sleep(slot - now)


def _run_with_timeout(fn, timeout: float):
    box: dict[str, Any] = {}

    def target():
        try:
            box["value"] = fn()
        except BaseException as exc:  # handed back to the caller
            box["error"] = exc

    worker = threading.Thread(target=target, daemon=True)
    worker.start()
    worker.join(timeout)
    if worker.is_alive():
        raise AttemptTimeout(f"no reply within {timeout:g}s")
    if "error" in box:
        raise box["error"]
    return box["value"]


@dataclass
class LLMGateway:
    endpoint: EndpointConfig
    policy: RetryPolicy = field(default_factory=RetryPolicy)
    transport: Transport | None = None
    rate_limiter: RateLimiter = field(default_factory=RateLimiter)
    sleep: Callable[[float], None] = time.sleep

    def __post_init__(self) -> None:
        if self.transport is None:
            self.transport = HttpTransport(self.endpoint)
        self._rng = random.Random(self.policy.seed)
        self._rng_lock = threading.Lock()

    def _next_wait(self) -> float:
        with self._rng_lock:
            return self._rng.uniform(self.policy.wait_min, self.policy.wait_max)

    def complete(self, request: ChatRequest) -> Completion:
        payload = request.payload(self.endpoint.model)
        attempts: list[Attempt] = []
        last_kind = ""
        for number in range(1, self.policy.max_retries + 2):
            self.rate_limiter.acquire()
            started = time.monotonic()
            try:
                body = _run_with_timeout(
                    lambda: self.transport(payload, self.policy.per_attempt_timeout),
                    self.policy.per_attempt_timeout,
                )
                text = extract_text(body)
            except AttemptTimeout as exc:
                last_kind, detail = "timeout", str(exc)
            except HTTPStatusError as exc:
                last_kind, detail = "http_error", str(exc)
            except MalformedResponse as exc:
                last_kind, detail = "malformed", str(exc)
            except Exception as exc:  # connection resets, DNS failures, ...
                last_kind, detail = "protocol_error", f"{type(exc).__name__}: {exc}"
            else:
                attempts.append(Attempt(number, "ok", "", time.monotonic() - started))
                return Completion(text, attempts)
            attempt = Attempt(number, last_kind, detail, time.monotonic() - started)
            attempts.append(attempt)
            log.warning("LLM attempt %d failed (%s): %s", number, last_kind, detail)
            if number <= self.policy.max_retries:
                attempt.wait_after = self._next_wait()
                self.sleep(attempt.wait_after)
        error = TimeoutExhausted if last_kind == "timeout" else TransportError
        raise error(f"{len(attempts)} attempts failed, last: {last_kind}", attempts)


def complete(request: ChatRequest, policy: RetryPolicy, endpoint: EndpointConfig,
             transport: Transport | None = None, sleep=time.sleep) -> Completion:
    return LLMGateway(endpoint, policy, transport, sleep=sleep).complete(request)
