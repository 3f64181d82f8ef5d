from __future__ import annotations

import random

import pytest

from ragmcq.providers import (
    CallLogger,
    ChatClient,
    EmbeddingClient,
    FetchClient,
    ProviderBundle,
    RateLimiter,
    RetryPolicy,
    SearchClient,
    VirtualClock,
)
from ragmcq.providers.mock import hash_embed_identity, hash_embed_transport


@pytest.fixture
def clock():
    return VirtualClock()


def make_bundle(
    chat_transport=None,
    search_transport=None,
    fetch_transport=None,
    embed_dim: int = 16,
    clock=None,
    policy: RetryPolicy | None = None,
):
    """Provider bundle over a virtual clock with whichever mock transports a
    test supplies."""
    clock = clock or VirtualClock()
    policy = policy or RetryPolicy()
    logger = CallLogger()
    limiter = RateLimiter(clock, 0.0)
    common = dict(policy=policy, clock=clock, limiter=limiter, logger=logger)
    chat = ChatClient(chat_transport, **common) if chat_transport is not None else None
    embed = EmbeddingClient(hash_embed_transport(embed_dim), hash_embed_identity(embed_dim), **common)
    search = SearchClient(search_transport, **common) if search_transport is not None else None
    fetch = FetchClient(fetch_transport, **common) if fetch_transport is not None else None
    return ProviderBundle(
        chat=chat,
        embed=embed,
        search=search,
        fetch=fetch,
        clock=clock,
        logger=logger,
        limiter=limiter,
        mock_mode=True,
    )


@pytest.fixture
def rng():
    return random.Random(1234)
