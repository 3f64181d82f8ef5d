"""Shared tokenizer for every text metric.

Whitespace-split after normalization, with punctuation detached into
separate tokens. ZWNJ/ZWJ stay attached to word tokens so Bangla conjuncts
survive; a token made only of joiners is dropped.
"""

from __future__ import annotations

import re

from ragmcq.corpus import normalize_text

_TOKEN_RE = re.compile(r"[\w‌‍]+|[^\w\s‌‍]")

__all__ = ["tokenize"]


def tokenize(text: str) -> list[str]:
    if not text:
        return []
    return [t for t in _TOKEN_RE.findall(normalize_text(text)) if t.strip("‌‍")]
