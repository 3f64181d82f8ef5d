"""External-service boundaries behind uniform contracts.

``ProviderBundle.from_config`` builds chat/embedding/search/fetch clients
from a config dict, wiring the shared clock, rate limiter, attempt logger
and optional response cache. Mock kinds make the whole stack offline and
deterministic (a virtual clock is used when every configured provider is a
mock).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from ragmcq.providers.base import (
    AuthError,
    BadRequest,
    CallLogEntry,
    CallLogger,
    Clock,
    ConnectFailure,
    FetchError,
    ProviderError,
    ProviderTimeout,
    ProviderUnavailable,
    RateLimited,
    RateLimiter,
    ResponseCache,
    RetryPolicy,
    RetryableError,
    ServerError,
    VirtualClock,
    retry_call,
)
from ragmcq.providers.chat import ChatClient, ChatReply, ChatRequest, http_chat_transport
from ragmcq.providers.embed import EmbeddingClient, http_embed_transport
from ragmcq.providers.fetch import FetchClient, extract_text, http_fetch_transport
from ragmcq.providers.mock import (
    failing_search_transport,
    hash_embed_identity,
    hash_embed_transport,
    load_chat_script,
    scripted_fetch_transport,
    scripted_search_transport,
)
from ragmcq.providers.search import SearchClient, SearchResult, http_search_transport

__all__ = [
    "ProviderBundle",
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
    "retry_call",
    "ChatRequest",
    "ChatReply",
    "ChatClient",
    "EmbeddingClient",
    "SearchClient",
    "SearchResult",
    "FetchClient",
    "extract_text",
]

_MOCK_KINDS = {"mock", "hash", "failing"}


@dataclass
class ProviderBundle:
    chat: ChatClient | None
    embed: EmbeddingClient | None
    search: SearchClient | None
    fetch: FetchClient | None
    clock: Clock
    logger: CallLogger
    limiter: RateLimiter
    mock_mode: bool

    @classmethod
    def from_config(
        cls,
        cfg: dict,
        base_dir: str | Path = ".",
        log_path: str | Path | None = None,
    ) -> "ProviderBundle":
        base_dir = Path(base_dir)
        retry_cfg = cfg.get("retry", {})
        policy = RetryPolicy(
            max_attempts=int(retry_cfg.get("max_attempts", 4)),
            base_delay=float(retry_cfg.get("base_delay", 1.0)),
            backoff_factor=float(retry_cfg.get("backoff_factor", 2.0)),
        )
        kinds = [
            cfg[section].get("kind", "")
            for section in ("chat", "embed", "search", "fetch")
            if isinstance(cfg.get(section), dict)
        ]
        mock_mode = bool(kinds) and all(k in _MOCK_KINDS for k in kinds)
        clock: Clock = VirtualClock() if mock_mode else Clock()
        logger = CallLogger(log_path)
        limiter = RateLimiter(clock, float(cfg.get("rate_limit_seconds", 0.0)))
        cache = None
        if cfg.get("response_cache_dir"):
            cache_dir = Path(cfg["response_cache_dir"])
            if not cache_dir.is_absolute():
                cache_dir = base_dir / cache_dir
            cache = ResponseCache(cache_dir)
        common = dict(policy=policy, clock=clock, limiter=limiter, logger=logger)

        chat = None
        chat_cfg = cfg.get("chat")
        if isinstance(chat_cfg, dict):
            kind = chat_cfg.get("kind", "http")
            if kind == "http":
                transport = http_chat_transport(
                    base_url=chat_cfg["base_url"],
                    api_key_env=chat_cfg.get("api_key_env", ""),
                )
            elif kind == "mock":
                script = chat_cfg.get("script")
                if script is None:
                    raise ValueError("mock chat provider needs a 'script' file")
                script_path = Path(script)
                if not script_path.is_absolute():
                    script_path = base_dir / script_path
                transport = load_chat_script(script_path)
            else:
                raise ValueError(f"unknown chat provider kind {kind!r}")
            chat = ChatClient(transport, cache=cache, **common)

        embed = None
        embed_cfg = cfg.get("embed")
        if isinstance(embed_cfg, dict):
            kind = embed_cfg.get("kind", "http")
            if kind == "http":
                transport = http_embed_transport(
                    base_url=embed_cfg["base_url"],
                    model=embed_cfg.get("model", ""),
                    api_key_env=embed_cfg.get("api_key_env", ""),
                )
                identity = f"http:{embed_cfg['base_url']}:{embed_cfg.get('model', '')}"
            elif kind == "hash":
                dim = int(embed_cfg.get("dim", 32))
                transport = hash_embed_transport(dim)
                identity = hash_embed_identity(dim)
            else:
                raise ValueError(f"unknown embed provider kind {kind!r}")
            embed = EmbeddingClient(transport, identity, **common)

        search = None
        search_cfg = cfg.get("search")
        if isinstance(search_cfg, dict):
            kind = search_cfg.get("kind", "http")
            if kind == "http":
                transport = http_search_transport(
                    endpoint=search_cfg["endpoint"],
                    api_key_env=search_cfg.get("api_key_env", ""),
                )
            elif kind == "mock":
                transport = scripted_search_transport(search_cfg.get("hits", []))
            elif kind == "failing":
                transport = failing_search_transport()
            else:
                raise ValueError(f"unknown search provider kind {kind!r}")
            search = SearchClient(transport, **common)

        fetch = None
        fetch_cfg = cfg.get("fetch")
        if isinstance(fetch_cfg, dict):
            kind = fetch_cfg.get("kind", "http")
            if kind == "http":
                transport = http_fetch_transport(
                    timeout_seconds=float(fetch_cfg.get("timeout", 20.0))
                )
            elif kind == "mock":
                transport = scripted_fetch_transport(dict(fetch_cfg.get("pages", {})))
            else:
                raise ValueError(f"unknown fetch provider kind {kind!r}")
            fetch = FetchClient(transport, **common)

        return cls(
            chat=chat,
            embed=embed,
            search=search,
            fetch=fetch,
            clock=clock,
            logger=logger,
            limiter=limiter,
            mock_mode=mock_mode,
        )
