"""In-memory dense vector index with exact top-k cosine retrieval.

The index is a flat float64 matrix searched exactly (one matvec per query);
at textbook scale this beats any ANN structure and keeps retrieval
oracle-testable. Built indexes are cached on disk keyed by a fingerprint of
corpus content + embedder identity, with the fingerprint recorded in a
sidecar manifest.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ragmcq.corpus import Chunk

__all__ = [
    "Passage",
    "RetrievedContext",
    "VectorIndex",
    "IndexBuildError",
    "cosine_similarity",
    "build_index",
    "retrieve",
]

CACHE_VERSION = "ragmcq-index-v1"


class IndexBuildError(Exception):
    pass


@dataclass(frozen=True)
class Passage:
    """One retrieved unit: a chunk id or URL, its text, and a score/rank."""

    ref: str
    text: str
    score: float


@dataclass(frozen=True)
class RetrievedContext:
    passages: tuple[Passage, ...]
    k_requested: int
    origin: str  # "local" | "web"
    total_chars: int

    @classmethod
    def make(cls, passages: Iterable[Passage], k_requested: int, origin: str) -> "RetrievedContext":
        ps = tuple(passages)
        return cls(
            passages=ps,
            k_requested=k_requested,
            origin=origin,
            total_chars=sum(len(p.text) for p in ps),
        )

    @classmethod
    def empty(cls, k_requested: int, origin: str = "local") -> "RetrievedContext":
        return cls(passages=(), k_requested=k_requested, origin=origin, total_chars=0)

    def joined_text(self, sep: str = "\n\n") -> str:
        return sep.join(p.text for p in self.passages)


class VectorIndex:
    """Immutable flat index: chunk ids, texts and an (n, d) embedding matrix."""

    def __init__(
        self,
        chunk_ids: Sequence[str],
        texts: Sequence[str],
        matrix: np.ndarray,
        fingerprint: str = "",
    ) -> None:
        if matrix.ndim != 2 or matrix.shape[0] != len(chunk_ids) or len(texts) != len(chunk_ids):
            raise ValueError("chunk_ids, texts and matrix rows must align")
        if len(set(chunk_ids)) != len(chunk_ids):
            raise ValueError("chunk_ids must be unique")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("index vectors must be finite")
        self.chunk_ids = tuple(chunk_ids)
        self.texts = tuple(texts)
        self.matrix = np.ascontiguousarray(matrix, dtype=np.float64)
        self.matrix.setflags(write=False)
        self.norms = np.linalg.norm(self.matrix, axis=1)
        self.norms.setflags(write=False)
        self.fingerprint = fingerprint

    def __len__(self) -> int:
        return len(self.chunk_ids)

    @property
    def dimension(self) -> int:
        return int(self.matrix.shape[1])


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine of two vectors; 0.0 when either has zero norm."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def index_fingerprint(chunks: Sequence[Chunk], embedder_identity: str) -> str:
    h = hashlib.sha256()
    h.update(CACHE_VERSION.encode())
    h.update(b"\x00")
    h.update(embedder_identity.encode())
    for chunk in chunks:
        h.update(b"\x00")
        h.update(chunk.chunk_id.encode())
        h.update(b"\x01")
        h.update(chunk.text.encode())
    return h.hexdigest()


def _cache_paths(cache_dir: Path, fingerprint: str) -> tuple[Path, Path]:
    stem = cache_dir / f"index-{fingerprint[:24]}"
    return stem.with_suffix(".npz"), stem.with_suffix(".manifest.json")


def _load_cached(cache_dir: Path, fingerprint: str) -> VectorIndex | None:
    npz_path, manifest_path = _cache_paths(cache_dir, fingerprint)
    if not npz_path.exists() or not manifest_path.exists():
        return None
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("fingerprint") != fingerprint or manifest.get("version") != CACHE_VERSION:
        return None
    with np.load(npz_path) as data:
        matrix = data["matrix"]
    return VectorIndex(manifest["chunk_ids"], manifest["texts"], matrix, fingerprint)


def _save_cache(cache_dir: Path, index: VectorIndex, embedder_identity: str) -> None:
    cache_dir.mkdir(parents=True, exist_ok=True)
    npz_path, manifest_path = _cache_paths(cache_dir, index.fingerprint)
    tmp = npz_path.with_suffix(".tmp.npz")
    np.savez(tmp, matrix=index.matrix)
    tmp.replace(npz_path)
    manifest = {
        "version": CACHE_VERSION,
        "fingerprint": index.fingerprint,
        "embedder": embedder_identity,
        "dimension": index.dimension,
        "count": len(index),
        "chunk_ids": list(index.chunk_ids),
        "texts": list(index.texts),
    }
    tmp_m = manifest_path.with_suffix(".tmp")
    tmp_m.write_text(json.dumps(manifest, ensure_ascii=False), encoding="utf-8")
    tmp_m.replace(manifest_path)


def build_index(chunks, embedder, cache_dir=None, batch_size: int = 64) -> VectorIndex:
    """Embed every chunk into a searchable index, reusing the on-disk cache
    when corpus bytes and embedder identity are unchanged.

    Raises :class:`IndexBuildError` naming the chunk batch on embedding
    failure, or the chunk on a cross-batch dimension mismatch.
    """
    chunks = list(chunks)
    if not chunks:
        raise IndexBuildError("cannot build an index from zero chunks")
    fingerprint = index_fingerprint(chunks, embedder.identity)
    if cache_dir is not None:
        cached = _load_cached(Path(cache_dir), fingerprint)
        if cached is not None:
            return cached
    vectors: list[np.ndarray] = []
    dim: int | None = None
    for start in range(0, len(chunks), batch_size):
        batch = chunks[start : start + batch_size]
        try:
            batch_vecs = embedder.embed([c.text for c in batch])
        except Exception as exc:
            ids = ", ".join(c.chunk_id for c in batch[:3])
            raise IndexBuildError(
                f"embedding failed for batch starting at chunk {batch[0].chunk_id} ({ids}...): {exc}"
            ) from exc
        for chunk, vec in zip(batch, batch_vecs):
            arr = np.asarray(vec, dtype=np.float64)
            if arr.ndim != 1:
                raise IndexBuildError(f"embedding for chunk {chunk.chunk_id} is not a vector")
            if dim is None:
                dim = arr.shape[0]
            elif arr.shape[0] != dim:
                raise IndexBuildError(
                    f"dimension mismatch for chunk {chunk.chunk_id}: got {arr.shape[0]}, expected {dim}"
                )
            vectors.append(arr)
    matrix = np.vstack(vectors)
    index = VectorIndex([c.chunk_id for c in chunks], [c.text for c in chunks], matrix, fingerprint)
    if cache_dir is not None:
        _save_cache(Path(cache_dir), index, embedder.identity)
    return index


def top_k(index: VectorIndex, query_vec: np.ndarray, k: int) -> list[tuple[str, str, float]]:
    """Exact top-k by cosine; ties broken by ascending chunk_id."""
    q = np.asarray(query_vec, dtype=np.float64)
    qnorm = float(np.linalg.norm(q))
    dots = index.matrix @ q
    denom = index.norms * qnorm
    scores = np.where(denom > 0.0, dots / np.where(denom == 0.0, 1.0, denom), 0.0)
    order = sorted(range(len(index)), key=lambda i: (-scores[i], index.chunk_ids[i]))[:k]
    return [(index.chunk_ids[i], index.texts[i], float(scores[i])) for i in order]


def retrieve(index: VectorIndex, query: str, k: int, embedder) -> RetrievedContext:
    """Top-k passages for a query; fewer when the index is smaller than k."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(index) == 0:
        raise ValueError("cannot retrieve from an empty index")
    query_vec = embedder.embed([query])[0]
    hits = top_k(index, query_vec, k)
    return RetrievedContext.make(
        (Passage(ref=cid, text=text, score=score) for cid, text, score in hits),
        k_requested=k,
        origin="local",
    )
