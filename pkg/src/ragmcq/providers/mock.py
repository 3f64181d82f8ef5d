"""Deterministic mock transports.

These make every downstream pipeline reproducible: two runs with the same
scripts produce byte-identical result files. Scripted transports raise the
same error classes as the HTTP ones, so retry behavior is exercised for
real.
"""

from __future__ import annotations

import hashlib
import json
import threading
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ragmcq.providers.base import ServerError
from ragmcq.providers.chat import ChatRequest
from ragmcq.providers.search import SearchResult

__all__ = [
    "ScriptedChatTransport",
    "RuleChatTransport",
    "load_chat_script",
    "hash_embed_transport",
    "hash_embed_identity",
    "scripted_search_transport",
    "failing_search_transport",
    "scripted_fetch_transport",
]


class ScriptedChatTransport:
    """Replays a fixed sequence of replies; an Exception entry is raised
    (letting the retry layer see transport failures)."""

    def __init__(self, replies: Sequence[str | Exception]):
        self._replies = list(replies)
        self._i = 0
        self._lock = threading.Lock()
        self.calls: list[ChatRequest] = []

    def __call__(self, req: ChatRequest) -> str:
        with self._lock:
            self.calls.append(req)
            if self._i >= len(self._replies):
                raise RuntimeError("scripted chat transport ran out of replies")
            item = self._replies[self._i]
            self._i += 1
        if isinstance(item, Exception):
            raise item
        return item


class RuleChatTransport:
    """Answers by substring rules against the last user message.

    Rules are checked in order; ``default`` answers anything unmatched.
    """

    def __init__(self, rules: Sequence[tuple[str, str]], default: str | None = None):
        self.rules = list(rules)
        self.default = default
        self._lock = threading.Lock()
        self.calls: list[ChatRequest] = []

    def __call__(self, req: ChatRequest) -> str:
        with self._lock:
            self.calls.append(req)
        prompt = req.last_user_text()
        for needle, reply in self.rules:
            if needle in prompt:
                return reply
        if self.default is not None:
            return self.default
        raise RuntimeError(f"no chat rule matches prompt: {prompt[:120]!r}")


def load_chat_script(path: str | Path) -> Callable[[ChatRequest], str]:
    """Build a mock chat transport from a JSON script file.

    Shape: ``{"rules": [{"contains": ..., "reply": ...}], "default": ...}``
    or ``{"replies": [...]}`` for a sequential script.
    """
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if "replies" in data:
        return ScriptedChatTransport([str(r) for r in data["replies"]])
    rules = [(str(r["contains"]), str(r["reply"])) for r in data.get("rules", [])]
    return RuleChatTransport(rules, default=data.get("default"))


def _hash_vector(text: str, dim: int) -> np.ndarray:
    out = np.empty(dim, dtype=np.float64)
    i = 0
    counter = 0
    while i < dim:
        digest = hashlib.sha256(f"{text}\x00{counter}".encode()).digest()
        for off in range(0, len(digest) - 3, 4):
            if i >= dim:
                break
            word = int.from_bytes(digest[off : off + 4], "big")
            out[i] = word / 4294967295.0 * 2.0 - 1.0
            i += 1
        counter += 1
    norm = float(np.linalg.norm(out))
    return out / norm if norm > 0 else out


def hash_embed_identity(dim: int) -> str:
    return f"hash-sha256:{dim}"


def hash_embed_transport(dim: int = 32) -> Callable[[Sequence[str]], list[np.ndarray]]:
    """Deterministic embedder: identical strings map to identical unit
    vectors, on any platform."""

    def call(texts: Sequence[str]) -> list[np.ndarray]:
        return [_hash_vector(t, dim) for t in texts]

    return call


def scripted_search_transport(
    hits: Sequence[dict | SearchResult],
) -> Callable[[str, int], list[SearchResult]]:
    fixed = []
    for i, h in enumerate(hits, start=1):
        if isinstance(h, SearchResult):
            fixed.append(SearchResult(h.url, h.title, h.snippet, i))
        else:
            fixed.append(
                SearchResult(
                    url=str(h.get("url", f"https://example.test/{i}")),
                    title=str(h.get("title", "")),
                    snippet=str(h.get("snippet", "")),
                    rank=i,
                )
            )

    def call(query: str, max_links: int) -> list[SearchResult]:
        return fixed[:max_links]

    return call


def failing_search_transport(message: str = "search backend down") -> Callable[[str, int], list[SearchResult]]:
    def call(query: str, max_links: int) -> list[SearchResult]:
        raise ServerError(message)

    return call


def scripted_fetch_transport(pages: dict[str, str]) -> Callable[[str], tuple[str, str]]:
    """Maps URL -> HTML body; unknown URLs raise a server error."""

    def call(url: str) -> tuple[str, str]:
        if url not in pages:
            raise ServerError(f"no scripted page for {url}")
        return "text/html; charset=utf-8", pages[url]

    return call
