"""Chat LLM boundary.

The wire protocol is the widely deployed chat-completions JSON shape
(model id, role-tagged messages, temperature), so any compatible hosted or
local endpoint works. Endpoint URL and credential come from configuration
and environment, never code.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Callable

import requests

from ragmcq.providers.base import (
    AuthError,
    BadRequest,
    CallLogger,
    Clock,
    ConnectFailure,
    ProviderTimeout,
    RateLimited,
    RateLimiter,
    ResponseCache,
    RetryPolicy,
    ServerError,
    retry_call,
)

__all__ = ["ChatRequest", "ChatReply", "ChatClient", "http_chat_transport"]


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[tuple[str, str], ...]
    model_id: str
    temperature: float = 0.0
    max_response_chars: int | None = None
    timeout_seconds: int = 300

    def __post_init__(self) -> None:
        msgs = tuple((str(role), str(text)) for role, text in self.messages)
        object.__setattr__(self, "messages", msgs)
        if not any(role == "user" for role, _ in msgs):
            raise ValueError("a chat request needs at least one user message")
        for role, _ in msgs:
            if role not in {"system", "user"}:
                raise ValueError(f"unsupported message role {role!r}")
        if not math.isfinite(self.temperature) or not (0.0 <= self.temperature <= 2.0):
            raise ValueError(f"temperature must be finite in [0, 2], got {self.temperature}")
        if self.timeout_seconds <= 0:
            raise ValueError("timeout_seconds must be positive")

    def last_user_text(self) -> str:
        for role, text in reversed(self.messages):
            if role == "user":
                return text
        return ""


@dataclass
class ChatReply:
    text: str
    attempts: int
    latency: float = 0.0


class ChatClient:
    """Retry/rate-limit/log/cache wrapper around any chat transport.

    The transport is a callable ``ChatRequest -> str`` raising the error
    classes from :mod:`ragmcq.providers.base` on failure.
    """

    kind = "chat"

    def __init__(
        self,
        transport: Callable[[ChatRequest], str],
        *,
        policy: RetryPolicy,
        clock: Clock,
        limiter: RateLimiter | None = None,
        logger: CallLogger | None = None,
        cache: ResponseCache | None = None,
        endpoint_label: str = "chat",
    ) -> None:
        self.transport = transport
        self.policy = policy
        self.clock = clock
        self.limiter = limiter
        self.logger = logger
        self.cache = cache
        self.endpoint_label = endpoint_label

    def _cache_payload(self, req: ChatRequest) -> dict:
        return {
            "model": req.model_id,
            "messages": [list(m) for m in req.messages],
            "temperature": req.temperature,
            "max_response_chars": req.max_response_chars,
        }

    def complete(self, req: ChatRequest) -> ChatReply:
        """Return the assistant message text verbatim (truncated to
        ``max_response_chars`` when set)."""
        if self.cache is not None:
            hit = self.cache.get(self.kind, self._cache_payload(req))
            if hit is not None:
                return ChatReply(text=hit, attempts=0, latency=0.0)
        result = retry_call(
            lambda: self.transport(req),
            policy=self.policy,
            clock=self.clock,
            limiter=self.limiter,
            logger=self.logger,
            provider=self.kind,
            endpoint=self.endpoint_label,
        )
        text = str(result.value)
        if req.max_response_chars is not None:
            text = text[: req.max_response_chars]
        if self.cache is not None:
            self.cache.put(self.kind, self._cache_payload(req), text)
        return ChatReply(text=text, attempts=result.attempts, latency=result.latency)


def http_chat_transport(
    base_url: str,
    api_key_env: str = "",
    session: requests.Session | None = None,
) -> Callable[[ChatRequest], str]:
    """Chat-completions POST transport; credential read from the named
    environment variable at call time."""
    sess = session or requests.Session()
    url = base_url.rstrip("/") + "/chat/completions"

    def call(req: ChatRequest) -> str:
        headers = {"Content-Type": "application/json"}
        if api_key_env:
            key = os.environ.get(api_key_env, "")
            if not key:
                raise AuthError(f"environment variable {api_key_env} is not set")
            headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": req.model_id,
            "messages": [{"role": role, "content": text} for role, text in req.messages],
            "temperature": req.temperature,
        }
        try:
            resp = sess.post(url, json=body, headers=headers, timeout=req.timeout_seconds)
        except requests.Timeout as exc:
            raise ProviderTimeout(str(exc)) from exc
        except requests.ConnectionError as exc:
            raise ConnectFailure(str(exc)) from exc
        if resp.status_code == 429:
            raise RateLimited(f"HTTP 429: {resp.text[:200]}")
        if resp.status_code >= 500:
            raise ServerError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        if resp.status_code in (401, 403):
            raise AuthError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        if resp.status_code >= 400:
            raise BadRequest(f"HTTP {resp.status_code}: {resp.text[:200]}")
        data = resp.json()
        try:
            return str(data["choices"][0]["message"]["content"])
        except (KeyError, IndexError, TypeError) as exc:
            raise BadRequest(f"malformed chat response: {exc}") from exc

    return call
