"""Web-search boundary (Serper-shaped JSON API by default)."""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable, Sequence

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
    RetryPolicy,
    ServerError,
    retry_call,
)

__all__ = ["SearchResult", "SearchClient", "http_search_transport"]


@dataclass(frozen=True)
class SearchResult:
    url: str
    title: str
    snippet: str
    rank: int


class SearchClient:
    """Retry/log wrapper around a search transport.

    Exhausted retries raise :class:`ProviderUnavailable`, which callers can
    tell apart from a genuine zero-hit result (empty list).
    """

    kind = "search"

    def __init__(
        self,
        transport: Callable[[str, int], Sequence[SearchResult]],
        *,
        policy: RetryPolicy,
        clock: Clock,
        limiter: RateLimiter | None = None,
        logger: CallLogger | None = None,
        endpoint_label: str = "search",
    ) -> None:
        self.transport = transport
        self.policy = policy
        self.clock = clock
        self.limiter = limiter
        self.logger = logger
        self.endpoint_label = endpoint_label

    def search(self, query: str, max_links: int = 8) -> list[SearchResult]:
        if max_links < 1:
            raise ValueError("max_links must be >= 1")
        result = retry_call(
            lambda: self.transport(query, max_links),
            policy=self.policy,
            clock=self.clock,
            limiter=self.limiter,
            logger=self.logger,
            provider=self.kind,
            endpoint=self.endpoint_label,
        )
        hits = list(result.value)[:max_links]
        for i, hit in enumerate(hits, start=1):
            if hit.rank != i:
                raise BadRequest(f"search ranks must be contiguous from 1, got {hit.rank} at {i}")
        return hits


def http_search_transport(
    endpoint: str,
    api_key_env: str = "",
    session: requests.Session | None = None,
    timeout_seconds: int = 30,
) -> Callable[[str, int], list[SearchResult]]:
    sess = session or requests.Session()

    def call(query: str, max_links: int) -> list[SearchResult]:
        headers = {"Content-Type": "application/json"}
        if api_key_env:
            key = os.environ.get(api_key_env, "")
            if not key:
                raise AuthError(f"environment variable {api_key_env} is not set")
            headers["X-API-KEY"] = key
        try:
            resp = sess.post(
                endpoint,
                json={"q": query, "num": max_links},
                headers=headers,
                timeout=timeout_seconds,
            )
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
        organic = data.get("organic") or []
        hits = []
        for i, item in enumerate(organic[:max_links], start=1):
            hits.append(
                SearchResult(
                    url=str(item.get("link", "")),
                    title=str(item.get("title", "")),
                    snippet=str(item.get("snippet", "")),
                    rank=i,
                )
            )
        return hits

    return call
