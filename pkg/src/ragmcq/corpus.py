"""Corpus normalization and overlapping chunking.

Turns raw digitized documents (e.g. an OCR'd textbook) into the fixed-size
overlapping text chunks that back the retrieval index. Character counts are
Unicode scalar values throughout.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass
from pathlib import Path

__all__ = [
    "RawDocument",
    "Chunk",
    "ChunkingConfig",
    "normalize_text",
    "chunk_text",
    "chunk_corpus",
    "load_manifest",
    "read_corpus",
]

# Width-variant ASCII (U+FF01..U+FF5E) folds onto U+0021..U+007E; the
# ideographic space folds onto a plain space.
_CHAR_MAP: dict[int, str | None] = {0xFF01 + i: chr(0x21 + i) for i in range(0x5E)}
_CHAR_MAP[0x3000] = " "
# Soft / invisible whitespace handling: NBSP becomes a breaking space,
# zero-width space, word joiner and BOM are layout artifacts and dropped.
# ZWNJ/ZWJ are *not* in this table: they are meaningful inside Bangla
# conjuncts and are only stripped next to whitespace (see below).
_CHAR_MAP[0x00A0] = " "
_CHAR_MAP[0x200B] = None
_CHAR_MAP[0x2060] = None
_CHAR_MAP[0xFEFF] = None

_JOINER_AT_BOUNDARY = re.compile(
    r"(?:(?<=\s)|^)[‌‍]+|[‌‍]+(?=\s|$)"
)
_SPACE_RUNS = re.compile(r"[ \t]+")


def normalize_text(raw: str) -> str:
    """Normalize a Unicode string for chunking, parsing and comparison.

    Applies, in order: newline unification, width-variant folding to ASCII,
    soft-whitespace mapping, NFC composition, removal of ZWNJ/ZWJ adjacent
    to whitespace, and collapsing of space/tab runs. Newlines are preserved.
    Total and idempotent.
    """
    if not raw:
        return ""
    text = raw.replace("\r\n", "\n").replace("\r", "\n")
    text = text.translate(_CHAR_MAP)
    text = unicodedata.normalize("NFC", text)
    text = _JOINER_AT_BOUNDARY.sub("", text)
    text = _SPACE_RUNS.sub(" ", text)
    return text


@dataclass(frozen=True)
class RawDocument:
    """One source document; ``text`` is expected to be normalized."""

    doc_id: str
    text: str
    source_label: str = ""


@dataclass(frozen=True)
class ChunkingConfig:
    chunk_size: int = 1000
    overlap: int = 200

    def __post_init__(self) -> None:
        if self.chunk_size < 1:
            raise ValueError(f"chunk_size must be positive, got {self.chunk_size}")
        if self.overlap < 0:
            raise ValueError(f"overlap must be non-negative, got {self.overlap}")
        if self.overlap >= self.chunk_size:
            raise ValueError(
                f"overlap ({self.overlap}) must be smaller than chunk_size ({self.chunk_size})"
            )


@dataclass(frozen=True)
class Chunk:
    chunk_id: str
    text: str
    char_start: int
    char_len: int


def chunk_text(doc: RawDocument, cfg: ChunkingConfig) -> list[Chunk]:
    """Slice ``doc.text`` into overlapping windows.

    Chunk ``i`` starts at ``i * (chunk_size - overlap)``; all chunks except
    possibly the last have exactly ``chunk_size`` characters and the last one
    ends at the document end. An empty document yields no chunks.
    """
    text = doc.text
    n = len(text)
    if n == 0:
        return []
    stride = cfg.chunk_size - cfg.overlap
    chunks: list[Chunk] = []
    i = 0
    while True:
        start = i * stride
        length = min(cfg.chunk_size, n - start)
        chunks.append(
            Chunk(
                chunk_id=f"{doc.doc_id}#{i:05d}",
                text=text[start : start + length],
                char_start=start,
                char_len=length,
            )
        )
        if start + length >= n:
            break
        i += 1
    return chunks


def chunk_corpus(docs: list[RawDocument], cfg: ChunkingConfig) -> list[Chunk]:
    out: list[Chunk] = []
    for doc in docs:
        out.extend(chunk_text(doc, cfg))
    return out


@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    doc_id: str
    source_label: str = ""


def load_manifest(manifest_path: str | Path) -> list[ManifestEntry]:
    """Read a corpus manifest: JSON mapping text files to doc ids.

    Shape: ``{"documents": [{"path": ..., "doc_id": ..., "source_label": ...}]}``.
    Relative paths are resolved against the manifest's directory.
    """
    manifest_path = Path(manifest_path)
    data = json.loads(manifest_path.read_text(encoding="utf-8"))
    docs = data.get("documents")
    if not isinstance(docs, list) or not docs:
        raise ValueError(f"manifest {manifest_path} has no 'documents' list")
    base = manifest_path.parent
    entries = []
    for i, item in enumerate(docs):
        if "path" not in item or "doc_id" not in item:
            raise ValueError(f"manifest entry {i} needs 'path' and 'doc_id'")
        p = Path(item["path"])
        if not p.is_absolute():
            p = base / p
        entries.append(
            ManifestEntry(path=p, doc_id=str(item["doc_id"]), source_label=str(item.get("source_label", "")))
        )
    return entries


def read_corpus(manifest_path: str | Path) -> list[RawDocument]:
    """Load and normalize every document named by the manifest.

    Rejects duplicate doc ids and documents that are empty after
    normalization.
    """
    entries = load_manifest(manifest_path)
    seen: set[str] = set()
    docs: list[RawDocument] = []
    for entry in entries:
        if entry.doc_id in seen:
            raise ValueError(f"duplicate doc_id {entry.doc_id!r} in manifest")
        seen.add(entry.doc_id)
        text = normalize_text(entry.path.read_text(encoding="utf-8"))
        if not text.strip():
            raise ValueError(f"document {entry.doc_id!r} ({entry.path}) is empty after normalization")
        docs.append(RawDocument(doc_id=entry.doc_id, text=text, source_label=entry.source_label))
    return docs
