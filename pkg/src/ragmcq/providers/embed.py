"""Text-embedding boundary: batched requests, one finite vector per input."""

from __future__ import annotations

import os
from typing import Callable, Sequence

import numpy as np
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

__all__ = ["EmbeddingClient", "http_embed_transport"]


class EmbeddingClient:
    """Retry/log wrapper around an embedding transport.

    ``identity`` feeds the index fingerprint so caches invalidate when the
    embedding model changes.
    """

    kind = "embed"

    def __init__(
        self,
        transport: Callable[[Sequence[str]], Sequence[Sequence[float]]],
        identity: str,
        *,
        policy: RetryPolicy,
        clock: Clock,
        limiter: RateLimiter | None = None,
        logger: CallLogger | None = None,
        endpoint_label: str = "embeddings",
    ) -> None:
        self.transport = transport
        self.identity = identity
        self.policy = policy
        self.clock = clock
        self.limiter = limiter
        self.logger = logger
        self.endpoint_label = endpoint_label

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        """One vector per input, in order; all vectors finite and same-dim."""
        if not texts:
            return []
        for i, t in enumerate(texts):
            if not str(t).strip():
                raise ValueError(f"text {i} is empty after trimming")
        result = retry_call(
            lambda: self.transport(list(texts)),
            policy=self.policy,
            clock=self.clock,
            limiter=self.limiter,
            logger=self.logger,
            provider=self.kind,
            endpoint=self.endpoint_label,
        )
        vectors = [np.asarray(v, dtype=np.float64) for v in result.value]
        if len(vectors) != len(texts):
            raise BadRequest(f"expected {len(texts)} embeddings, got {len(vectors)}")
        dims = {v.shape for v in vectors}
        if len(dims) > 1:
            raise BadRequest(f"inconsistent embedding dimensions in one batch: {sorted(dims)}")
        for i, v in enumerate(vectors):
            if not np.all(np.isfinite(v)):
                raise BadRequest(f"embedding {i} contains non-finite values")
        return vectors


def http_embed_transport(
    base_url: str,
    model: str,
    api_key_env: str = "",
    session: requests.Session | None = None,
    timeout_seconds: int = 120,
) -> Callable[[Sequence[str]], list[list[float]]]:
    sess = session or requests.Session()
    url = base_url.rstrip("/") + "/embeddings"

    def call(texts: Sequence[str]) -> list[list[float]]:
        headers = {"Content-Type": "application/json"}
        if api_key_env:
            key = os.environ.get(api_key_env, "")
            if not key:
                raise AuthError(f"environment variable {api_key_env} is not set")
            headers["Authorization"] = f"Bearer {key}"
        try:
            resp = sess.post(
                url,
                json={"model": model, "input": list(texts)},
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
        try:
            rows = sorted(data["data"], key=lambda d: d.get("index", 0))
            return [list(map(float, row["embedding"])) for row in rows]
        except (KeyError, TypeError, ValueError) as exc:
            raise BadRequest(f"malformed embeddings response: {exc}") from exc

    return call
