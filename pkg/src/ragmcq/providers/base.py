"""Shared provider plumbing: error taxonomy, clocks, rate limiting,
retry with exponential backoff, per-attempt logging, and a response cache.

Every outbound call in the package funnels through :func:`retry_call`, so
attempt counts, delays and logs behave identically for the chat, embedding,
search and fetch clients, and for their deterministic mocks.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, TypeVar

__all__ = [
    "ProviderError",
    "RetryableError",
    "ProviderTimeout",
    "RateLimited",
    "ServerError",
    "ConnectFailure",
    "FetchError",
    "AuthError",
    "BadRequest",
    "ProviderUnavailable",
    "RetryPolicy",
    "Clock",
    "VirtualClock",
    "RateLimiter",
    "CallLogEntry",
    "CallLogger",
    "ResponseCache",
    "RetryResult",
    "retry_call",
]

T = TypeVar("T")


class ProviderError(Exception):
    """Base class for all provider-boundary failures."""


class RetryableError(ProviderError):
    """Transient failure: the retry policy may try again."""


class ProviderTimeout(RetryableError):
    pass


class RateLimited(RetryableError):
    pass


class ServerError(RetryableError):
    pass


class ConnectFailure(RetryableError):
    pass


class FetchError(RetryableError):
    """Page fetch failure (bad status included; pages do flap)."""


class AuthError(ProviderError):
    pass


class BadRequest(ProviderError):
    pass


class ProviderUnavailable(ProviderError):
    """Raised when the retry budget is exhausted; carries the last failure."""

    def __init__(self, message: str, last_error: Exception | None = None, attempts: int = 0):
        super().__init__(message)
        self.last_error = last_error
        self.attempts = attempts


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 4
    base_delay: float = 1.0
    backoff_factor: float = 2.0
    retryable: tuple[type[Exception], ...] = (RetryableError,)

    def __post_init__(self) -> None:
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.base_delay <= 0:
            raise ValueError("base_delay must be positive")
        if self.backoff_factor < 1:
            raise ValueError("backoff_factor must be >= 1")

    def delay_after(self, attempt: int) -> float:
        """Sleep before attempt ``attempt + 1``: base * factor^(attempt-1)."""
        return self.base_delay * self.backoff_factor ** (attempt - 1)


class Clock:
    """Wall clock; swap for :class:`VirtualClock` to make runs deterministic."""

    def now(self) -> float:
        return time.monotonic()

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            time.sleep(seconds)


class VirtualClock(Clock):
    """Clock that only advances when something sleeps. Records every sleep."""

    def __init__(self) -> None:
        self._t = 0.0
        self._lock = threading.Lock()
        self.sleeps: list[float] = []

    def now(self) -> float:
        with self._lock:
            return self._t

    def sleep(self, seconds: float) -> None:
        with self._lock:
            self.sleeps.append(seconds)
            self._t += max(seconds, 0.0)


class RateLimiter:
    """Enforces a minimum delay between consecutive calls, shared by all
    providers of a run."""

    def __init__(self, clock: Clock, min_interval: float = 0.0) -> None:
        self.clock = clock
        self.min_interval = min_interval
        self._lock = threading.Lock()
        self._last: float | None = None

    def wait(self) -> None:
        if self.min_interval <= 0:
            return
        with self._lock:
            now = self.clock.now()
            if self._last is not None:
                gap = self.min_interval - (now - self._last)
                if gap > 0:
                    self.clock.sleep(gap)
                    now = self.clock.now()
            self._last = now


@dataclass(frozen=True)
class CallLogEntry:
    provider: str
    endpoint: str
    attempt: int
    latency: float
    outcome: str  # "ok" | "retried" | "failed"
    detail: str


class CallLogger:
    """Append-only attempt log; in memory always, mirrored to JSONL when a
    path is given."""

    def __init__(self, path: str | Path | None = None) -> None:
        self.path = Path(path) if path is not None else None
        self.entries: list[CallLogEntry] = []
        self._lock = threading.Lock()
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)

    def log(self, entry: CallLogEntry) -> None:
        with self._lock:
            self.entries.append(entry)
            if self.path is not None:
                record = {
                    "provider": entry.provider,
                    "endpoint": entry.endpoint,
                    "attempt": entry.attempt,
                    "latency": round(entry.latency, 6),
                    "outcome": entry.outcome,
                    "detail": entry.detail,
                }
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record, ensure_ascii=False) + "\n")


class ResponseCache:
    """Disk cache of successful responses keyed by (provider kind, request
    hash); lets interrupted batch runs resume without repaying calls."""

    def __init__(self, directory: str | Path) -> None:
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, kind: str, payload: Any) -> Path:
        canon = json.dumps(payload, ensure_ascii=False, sort_keys=True)
        digest = hashlib.sha256(f"{kind}\x00{canon}".encode()).hexdigest()
        return self.directory / f"{kind}-{digest[:32]}.json"

    def get(self, kind: str, payload: Any) -> str | None:
        path = self._path(kind, payload)
        if not path.exists():
            return None
        return path.read_text(encoding="utf-8")

    def put(self, kind: str, payload: Any, value: str) -> None:
        path = self._path(kind, payload)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(value, encoding="utf-8")
        tmp.replace(path)


@dataclass
class RetryResult:
    value: Any
    attempts: int
    latency: float = 0.0


def retry_call(
    fn: Callable[[], T],
    *,
    policy: RetryPolicy,
    clock: Clock,
    limiter: RateLimiter | None = None,
    logger: CallLogger | None = None,
    provider: str = "",
    endpoint: str = "",
) -> RetryResult:
    """Run ``fn`` under the retry policy.

    Retryable failures back off ``base * factor^(n-1)`` between attempts and
    exhaust into :class:`ProviderUnavailable`; anything else fails
    immediately. Each attempt is logged.
    """
    last: Exception | None = None
    total_latency = 0.0
    for attempt in range(1, policy.max_attempts + 1):
        if limiter is not None:
            limiter.wait()
        start = clock.now()
        try:
            value = fn()
        except policy.retryable as exc:
            latency = clock.now() - start
            total_latency += latency
            last = exc
            final = attempt == policy.max_attempts
            if logger is not None:
                logger.log(
                    CallLogEntry(
                        provider, endpoint, attempt, latency,
                        "failed" if final else "retried",
                        f"{type(exc).__name__}: {exc}",
                    )
                )
            if final:
                break
            delay = policy.delay_after(attempt)
            clock.sleep(delay)
            total_latency += delay
        except Exception as exc:
            latency = clock.now() - start
            if logger is not None:
                logger.log(
                    CallLogEntry(
                        provider, endpoint, attempt, latency, "failed",
                        f"{type(exc).__name__}: {exc}",
                    )
                )
            raise
        else:
            latency = clock.now() - start
            total_latency += latency
            if logger is not None:
                logger.log(CallLogEntry(provider, endpoint, attempt, latency, "ok", "ok"))
            return RetryResult(value=value, attempts=attempt, latency=total_latency)
    raise ProviderUnavailable(
        f"{provider or 'provider'} unavailable after {policy.max_attempts} attempts: {last}",
        last_error=last,
        attempts=policy.max_attempts,
    )
