"""Page fetching and visible-text extraction.

Extraction keeps text found inside an allowlist of content elements
(article, main, p, h1-h6, li), drops script/style entirely, and collapses
whitespace. No JavaScript, no rendering: deterministic by construction.
"""

from __future__ import annotations

import re
from html.parser import HTMLParser
from typing import Callable

import requests

from ragmcq.providers.base import (
    CallLogger,
    Clock,
    ConnectFailure,
    FetchError,
    ProviderTimeout,
    RateLimiter,
    RetryPolicy,
    retry_call,
)

__all__ = ["extract_text", "FetchClient", "http_fetch_transport"]

_ALLOWED = {"article", "main", "p", "h1", "h2", "h3", "h4", "h5", "h6", "li"}
_BLOCKED = {"script", "style", "noscript"}
_WS = re.compile(r"\s+")


class _Extractor(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.allow_depth = 0
        self.block_depth = 0
        self.parts: list[str] = []

    def handle_starttag(self, tag, attrs):
        if tag in _ALLOWED:
            self.allow_depth += 1
        elif tag in _BLOCKED:
            self.block_depth += 1

    def handle_endtag(self, tag):
        if tag in _ALLOWED and self.allow_depth > 0:
            self.allow_depth -= 1
        elif tag in _BLOCKED and self.block_depth > 0:
            self.block_depth -= 1

    def handle_data(self, data):
        if self.allow_depth > 0 and self.block_depth == 0 and data.strip():
            self.parts.append(data)


def extract_text(html: str) -> str:
    """Visible text of allowlisted elements, whitespace-normalized.

    Returns "" when the page has no allowlisted content.
    """
    parser = _Extractor()
    parser.feed(html)
    parser.close()
    return _WS.sub(" ", " ".join(parser.parts)).strip()


class FetchClient:
    """Fetch a URL and return its extracted text.

    Non-HTML content yields "" (not an error); transport failures and bad
    statuses retry per policy and exhaust into :class:`ProviderUnavailable`.
    """

    kind = "fetch"

    def __init__(
        self,
        transport: Callable[[str], tuple[str, str]],
        *,
        policy: RetryPolicy,
        clock: Clock,
        limiter: RateLimiter | None = None,
        logger: CallLogger | None = None,
    ) -> None:
        self.transport = transport
        self.policy = policy
        self.clock = clock
        self.limiter = limiter
        self.logger = logger

    def fetch_text(self, url: str) -> str:
        result = retry_call(
            lambda: self.transport(url),
            policy=self.policy,
            clock=self.clock,
            limiter=self.limiter,
            logger=self.logger,
            provider=self.kind,
            endpoint=url[:120],
        )
        content_type, body = result.value
        ct = content_type.lower()
        if ct and "html" not in ct and "xml" not in ct:
            return ""
        return extract_text(body)


def http_fetch_transport(
    timeout_seconds: float = 20.0,
    session: requests.Session | None = None,
    user_agent: str = "ragmcq/0.1",
) -> Callable[[str], tuple[str, str]]:
    sess = session or requests.Session()

    def call(url: str) -> tuple[str, str]:
        if not url.startswith(("http://", "https://")):
            raise ValueError(f"not an http(s) URL: {url!r}")
        try:
            resp = sess.get(url, timeout=timeout_seconds, headers={"User-Agent": user_agent})
        except requests.Timeout as exc:
            raise ProviderTimeout(str(exc)) from exc
        except requests.ConnectionError as exc:
            raise ConnectFailure(str(exc)) from exc
        if resp.status_code >= 400:
            raise FetchError(f"HTTP {resp.status_code} for {url}")
        return resp.headers.get("Content-Type", ""), resp.text

    return call
