"""Completion backends: a live OpenAI-compatible client and a scripted replay.

Every agent call goes through ``CompletionBackend.complete``. The scripted
backend replays a fixed response list (deterministic, thread-safe) and is
what the whole test suite runs on; the live backend speaks the
chat-completions wire format so any OpenAI-compatible gateway works behind
the same interface.
"""

from __future__ import annotations

import math
import os
import threading
import time
from collections import deque
from dataclasses import dataclass
from typing import Protocol, Sequence

import requests


class BackendError(Exception):
    """Base class for completion-backend failures."""


class AuthError(BackendError):
    """Credentials missing or rejected by the provider."""


class RateLimited(BackendError):
    """Provider kept rate-limiting after all retries."""


class TransportError(BackendError):
    """Network or provider failure that retries did not cure."""


class ScriptExhausted(BackendError):
    """Scripted backend was asked for more responses than it holds."""


@dataclass(frozen=True)
class CompletionRequest:
    user_text: str
    system_text: str | None = None
    temperature: float = 0.0
    max_tokens: int | None = None

    def __post_init__(self) -> None:
        if not self.user_text.strip():
            raise ValueError("user_text must be nonempty")


@dataclass(frozen=True)
class CompletionResult:
    text: str
    tokens_in: int
    tokens_out: int
    latency_ms: int
    tokens_estimated: bool = False

    def __post_init__(self) -> None:
        if self.tokens_in < 0 or self.tokens_out < 0:
            raise ValueError("token counts must be >= 0")


def estimate_tokens(text: str) -> int:
    """Crude chars/4 token estimate, used when the provider reports nothing."""
    return math.ceil(len(text) / 4)


class CompletionBackend(Protocol):
    def complete(self, request: CompletionRequest) -> CompletionResult: ...


class ScriptedBackend:
    """Replays a fixed list of responses in order.

    Fully deterministic: identical scripts and call sequences produce
    identical results. A lock serializes access so replay order stays
    well-defined when shared across threads.
    """

    def __init__(self, responses: Sequence[str]):
        self._responses = list(responses)
        self._lock = threading.Lock()
        self._calls = 0

    @property
    def call_count(self) -> int:
        return self._calls

    @property
    def remaining(self) -> int:
        return len(self._responses) - self._calls

    def complete(self, request: CompletionRequest) -> CompletionResult:
        with self._lock:
            if self._calls >= len(self._responses):
                raise ScriptExhausted(
                    f"script has {len(self._responses)} responses, call "
                    f"{self._calls + 1} requested"
                )
            text = self._responses[self._calls]
            self._calls += 1
        return CompletionResult(
            text=text,
            tokens_in=estimate_tokens(request.user_text),
            tokens_out=estimate_tokens(text),
            latency_ms=0,
            tokens_estimated=True,
        )


def make_scripted(responses: Sequence[str]) -> ScriptedBackend:
    return ScriptedBackend(responses)


class TokenBucket:
    """Shared request throttle: at most ``per_minute`` acquisitions per minute."""

    def __init__(self, per_minute: int):
        if per_minute < 1:
            raise ValueError("per_minute must be >= 1")
        self._interval = 60.0 / per_minute
        self._lock = threading.Lock()
        self._stamps: deque[float] = deque()
        self._per_minute = per_minute

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                while self._stamps and now - self._stamps[0] >= 60.0:
                    self._stamps.popleft()
                if len(self._stamps) < self._per_minute:
                    self._stamps.append(now)
                    return
                wait = 60.0 - (now - self._stamps[0])
            time.sleep(min(wait, self._interval))


@dataclass(frozen=True)
class BackendConfig:
    """Live-backend settings; the API key itself stays in the environment."""

    base_url: str = "https://api.openai.com/v1"
    model_name: str = "gpt-4o-mini"
    timeout_ms: int = 120_000
    max_retries: int = 3
    api_key_env: str = "OPENAI_API_KEY"
    requests_per_minute: int | None = None


# Backoff schedule for transient failures: 1s, 2s, 4s.
_BACKOFF_SECONDS = (1.0, 2.0, 4.0)


class OpenAIChatBackend:
    """Minimal synchronous client for any OpenAI-compatible /chat/completions.

    Retries only transport and rate-limit failures (up to
    ``config.max_retries`` attempts with exponential backoff); auth and other
    client errors fail immediately. Token counts come from the provider's
    usage block when present, otherwise a flagged chars/4 estimate.
    """

    def __init__(self, config: BackendConfig, limiter: TokenBucket | None = None):
        self._config = config
        key = os.environ.get(config.api_key_env, "")
        if not key:
            raise AuthError(f"environment variable {config.api_key_env} is not set")
        self._api_key = key
        self._limiter = limiter or (
            TokenBucket(config.requests_per_minute)
            if config.requests_per_minute
            else None
        )
        self._session = requests.Session()

    def complete(self, request: CompletionRequest) -> CompletionResult:
        messages = []
        if request.system_text:
            messages.append({"role": "system", "content": request.system_text})
        messages.append({"role": "user", "content": request.user_text})
        body: dict = {
            "model": self._config.model_name,
            "messages": messages,
            "temperature": request.temperature,
        }
        if request.max_tokens is not None:
            body["max_tokens"] = request.max_tokens

        url = self._config.base_url.rstrip("/") + "/chat/completions"
        attempts = max(1, self._config.max_retries)
        last_error: BackendError | None = None
        for attempt in range(attempts):
            if self._limiter is not None:
                self._limiter.acquire()
            started = time.monotonic()
            try:
                response = self._session.post(
                    url,
                    json=body,
                    headers={"Authorization": f"Bearer {self._api_key}"},
                    timeout=self._config.timeout_ms / 1000.0,
                )
            except requests.RequestException as exc:
                last_error = TransportError(f"transport failure: {exc}")
            else:
                latency_ms = int((time.monotonic() - started) * 1000)
                if response.status_code in (401, 403):
                    raise AuthError(f"provider rejected credentials ({response.status_code})")
                if response.status_code == 429:
                    last_error = RateLimited(f"rate limited: {response.text[:200]}")
                elif response.status_code >= 500:
                    last_error = TransportError(
                        f"server error {response.status_code}: {response.text[:200]}"
                    )
                elif response.status_code >= 400:
                    raise TransportError(
                        f"request rejected {response.status_code}: {response.text[:200]}"
                    )
                else:
                    return self._parse(response.json(), request, latency_ms)
            if attempt < attempts - 1:
                time.sleep(_BACKOFF_SECONDS[min(attempt, len(_BACKOFF_SECONDS) - 1)])
        assert last_error is not None
        raise last_error

    def _parse(
        self, data: dict, request: CompletionRequest, latency_ms: int
    ) -> CompletionResult:
        try:
            text = data["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed provider response: {exc}") from exc
        usage = data.get("usage") or {}
        tokens_in = usage.get("prompt_tokens")
        tokens_out = usage.get("completion_tokens")
        estimated = tokens_in is None or tokens_out is None
        if tokens_in is None:
            tokens_in = estimate_tokens(request.user_text) + estimate_tokens(
                request.system_text or ""
            )
        if tokens_out is None:
            tokens_out = estimate_tokens(text)
        return CompletionResult(
            text=text,
            tokens_in=int(tokens_in),
            tokens_out=int(tokens_out),
            latency_ms=latency_ms,
            tokens_estimated=estimated,
        )
