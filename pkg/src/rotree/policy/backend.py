"""Chat-completion client: wire format, retries, rate limiting, transports.

Every network request in the package is built here. A transport is any
callable ``transport(url, headers, payload) -> (status, body)``; the default
one posts JSON over HTTPS with httpx, the others replay fixtures or record
traffic for tests.
"""
from __future__ import annotations

import json
import logging
import math
import os
import threading
import time
from dataclasses import dataclass, field

from ..errors import AuthError, BackendUnavailable, MalformedResponse

log = logging.getLogger(__name__)

TRANSIENT_STATUS = {408, 409, 425, 429, 500, 502, 503, 504}


@dataclass(frozen=True)
class RetryPolicy:
    attempts: int = 3
    backoff: tuple = (1.0, 2.0, 4.0)

    def __post_init__(self):
        if self.attempts < 1:
            raise ValueError("attempts must be >= 1")

    def delay(self, failure_index: int) -> float:
        if not self.backoff:
            return 0.0
        return self.backoff[min(failure_index, len(self.backoff) - 1)]


@dataclass(frozen=True)
class BackendConfig:
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    model_name: str = "gpt-4o-mini"
    temperature: float = 0.7
    max_tokens: int = 256
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    rate_limit: float = 0.0  # requests per second, 0 = unlimited
    api_key_source: str | None = "OPENAI_API_KEY"
    logprobs: bool = False
    timeout: float = 60.0

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if isinstance(self.retry, dict):
            object.__setattr__(self, "retry", RetryPolicy(self.retry.get("attempts", 3),
                                                          tuple(self.retry.get("backoff", (1.0, 2.0, 4.0)))))

    def to_json(self) -> dict:
        return {
            "endpoint": self.endpoint,
            "model_name": self.model_name,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
            "retry": {"attempts": self.retry.attempts, "backoff": list(self.retry.backoff)},
            "rate_limit": self.rate_limit,
            "api_key_source": self.api_key_source,
            "logprobs": self.logprobs,
            "timeout": self.timeout,
        }

    @classmethod
    def from_json(cls, data: dict) -> "BackendConfig":
        known = cls.__dataclass_fields__
        return cls(**{k: v for k, v in data.items() if k in known})


class TransportError(Exception):
    """Connection-level failure; always treated as transient."""


class RateLimiter:
    """Spaces calls at least ``1/rate`` seconds apart across threads."""

    def __init__(self, rate, clock=time.monotonic, sleep=time.sleep):
        self.interval = 1.0 / rate if rate and rate > 0 else 0.0
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next = 0.0

    def wait(self):
        if not self.interval:
            return
        with self._lock:
            now = self._clock()
            if now < self._next:
                self._sleep(self._next - now)
                now = self._next
            self._next = now + self.interval


class HttpxTransport:
    def __init__(self, timeout=60.0):
        import httpx

        self._client = httpx.Client(timeout=timeout)
        self._httpx = httpx

    def __call__(self, url, headers, payload):
        try:
            resp = self._client.post(url, headers=headers, json=payload)
        except self._httpx.HTTPError as exc:
            raise TransportError(str(exc)) from exc
        try:
            body = resp.json()
        except ValueError:
            body = {"error": resp.text}
        return resp.status_code, body


class RecordedTransport:
    """Replays canned ``(status, body)`` pairs, or raises queued exceptions."""

    def __init__(self, responses):
        self._responses = list(responses)
        self.calls = 0

    def __call__(self, url, headers, payload):
        self.calls += 1
        if not self._responses:
            raise TransportError("recorded responses exhausted")
        item = self._responses.pop(0) if len(self._responses) > 1 else self._responses[0]
        if isinstance(item, Exception):
            raise item
        if isinstance(item, str):
            return 200, completion_body(item)
        return item

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            data = json.load(fh)
        return cls([(r.get("status", 200), r["body"]) for r in data])


class TapTransport:
    """Forwards to ``inner`` and records every prompt sent."""

    def __init__(self, inner):
        self.inner = inner
        self.payloads = []
        self._lock = threading.Lock()

    def __call__(self, url, headers, payload):
        with self._lock:
            self.payloads.append(payload)
        return self.inner(url, headers, payload)

    @property
    def prompts(self):
        return [m["content"] for p in self.payloads for m in p["messages"] if m["role"] == "user"]


def completion_body(text, top_logprobs=None):
    """An OpenAI-style chat-completion response body."""
    choice = {"index": 0, "message": {"role": "assistant", "content": text}, "finish_reason": "stop"}
    if top_logprobs is not None:
        choice["logprobs"] = {"content": [{
            "token": text,
            "logprob": top_logprobs[0]["logprob"] if top_logprobs else 0.0,
            "top_logprobs": top_logprobs,
        }]}
    return {"object": "chat.completion", "choices": [choice]}


def build_request(config: BackendConfig, messages, **overrides) -> dict:
    payload = {
        "model": config.model_name,
        "messages": [{"role": m["role"], "content": m["content"]} for m in messages],
        "temperature": config.temperature,
        "max_tokens": config.max_tokens,
    }
    payload.update(overrides)
    return payload


def _parse_body(body):
    try:
        return body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError):
        raise MalformedResponse(f"no message content in response: {str(body)[:200]}") from None


class ChatBackend:
    """Chat-completion endpoint plus retry, rate limit, and transport."""

    def __init__(self, config: BackendConfig | None = None, transport=None, sleep=time.sleep):
        self.config = config or BackendConfig()
        self.transport = transport or HttpxTransport(self.config.timeout)
        self.limiter = RateLimiter(self.config.rate_limit, sleep=sleep)
        self._sleep = sleep

    @property
    def supports_logprobs(self) -> bool:
        return self.config.logprobs

    def _headers(self):
        headers = {"Content-Type": "application/json"}
        source = self.config.api_key_source
        if source:
            key = os.environ.get(source)
            if not key:
                raise AuthError(f"API key variable {source} is not set")
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def send(self, payload) -> dict:
        headers = self._headers()
        retry = self.config.retry
        last = None
        for attempt in range(retry.attempts):
            if attempt:
                self._sleep(retry.delay(attempt - 1))
            self.limiter.wait()
            try:
                status, body = self.transport(self.config.endpoint, headers, payload)
            except TransportError as exc:
                last = exc
                log.warning("chat request failed (attempt %d/%d): %s", attempt + 1, retry.attempts, exc)
                continue
            if status in (401, 403):
                raise AuthError(f"endpoint rejected credentials ({status})")
            if status in TRANSIENT_STATUS:
                last = TransportError(f"HTTP {status}: {str(body)[:200]}")
                log.warning("chat request failed (attempt %d/%d): %s", attempt + 1, retry.attempts, last)
                continue
            if status != 200:
                raise MalformedResponse(f"HTTP {status}: {str(body)[:200]}")
            return body
        raise BackendUnavailable(f"gave up after {retry.attempts} attempts: {last}", last_error=last)

    def complete(self, messages, **overrides) -> str:
        return _parse_body(self.send(build_request(self.config, messages, **overrides)))

    def label_probability(self, prompt, positive, negative) -> float:
        """Normalized first-token probability of ``positive`` versus ``negative``."""
        payload = build_request(self.config, [{"role": "user", "content": prompt}],
                                max_tokens=1, logprobs=True, top_logprobs=5)
        body = self.send(payload)
        try:
            tops = body["choices"][0]["logprobs"]["content"][0]["top_logprobs"]
        except (KeyError, IndexError, TypeError):
            raise MalformedResponse("response carries no logprobs") from None
        mass = {positive: 0.0, negative: 0.0}
        for entry in tops:
            word = entry["token"].strip().lower()
            if not word:
                continue
            for label in (positive, negative):
                if label.lower().startswith(word) or word.startswith(label.lower()):
                    mass[label] += math.exp(entry["logprob"])
                    break
        total = mass[positive] + mass[negative]
        if total <= 0:
            raise MalformedResponse(f"neither {positive!r} nor {negative!r} among top tokens")
        return mass[positive] / total


def chat_complete(request, backend: ChatBackend) -> str:
    """Send ``request`` (a prompt string, a messages list, or a full payload dict)."""
    if isinstance(request, str):
        return backend.complete([{"role": "user", "content": request}])
    if isinstance(request, list):
        return backend.complete(request)
    payload = build_request(backend.config, request["messages"],
                            **{k: v for k, v in request.items() if k != "messages"})
    return _parse_body(backend.send(payload))
