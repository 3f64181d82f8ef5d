"""Text-generation evaluation metrics over token sequences.

Implements accuracy, clipped n-gram precision/recall/F1 (ROUGE-1/2),
LCS-based ROUGE-L, unigram METEOR with fragmentation penalty, BLEU with
brevity penalty, and greedy-matching embedding F1. Everything except the
embedding F1 runs on the integer-id kernels in :mod:`ragmcq.metrics.kernels`
(numba by default, ``RAGMCQ_KERNELS=numpy`` for the fallback path).

Token sequences are lists of non-empty strings as produced by
:func:`tokenize`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, ClassVar, Iterable, Iterator, Sequence

import numpy as np

from ragmcq.metrics import kernels
from ragmcq.metrics.tokenizer import tokenize

__all__ = [
    "PrfScore",
    "MetricBundle",
    "tokenize",
    "accuracy",
    "ngram_prf",
    "lcs_length",
    "rouge_l",
    "meteor",
    "bleu",
    "bertscore_f1",
    "compute_bundle",
    "pairwise_rows",
]

TokenSeq = Sequence[str]

# Shared token-id vocabulary. dict.setdefault is atomic under the GIL, so
# concurrent scorers may extend it safely.
_VOCAB: dict[str, int] = {}


def _ids(tokens: TokenSeq) -> np.ndarray:
    vocab = _VOCAB
    return np.array(
        [vocab.setdefault(t, len(vocab)) for t in tokens], dtype=np.int64
    )


@dataclass(frozen=True)
class PrfScore:
    precision: float
    recall: float
    f: float

    ZERO: ClassVar["PrfScore"]


PrfScore.ZERO = PrfScore(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class MetricBundle:
    """Per-question metric values; ``correct`` is the accuracy contribution."""

    correct: int
    bert_f1: float | None
    meteor: float | None
    rouge1: PrfScore | None
    rouge2: PrfScore | None
    rouge_l: PrfScore | None
    bleu1: float | None
    bleu2: float | None


def accuracy(predictions: Sequence[str | None], golds: Sequence[str]) -> float:
    """Fraction of predictions equal to gold; NA / failed count as wrong."""
    if len(predictions) != len(golds):
        raise ValueError(
            f"prediction/gold length mismatch: {len(predictions)} vs {len(golds)}"
        )
    if not golds:
        raise ValueError("accuracy needs at least one prediction")
    hits = sum(1 for p, g in zip(predictions, golds) if p == g)
    return hits / len(golds)


def ngram_prf(candidate: TokenSeq, reference: TokenSeq, n: int) -> PrfScore:
    """Clipped n-gram overlap scored as precision/recall/F1 (ROUGE-n)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if len(candidate) < n or len(reference) < n:
        return PrfScore.ZERO
    p, r, f = kernels.rouge_n_prf(_ids(candidate), _ids(reference), n)
    return PrfScore(float(p), float(r), float(f))


def lcs_length(a: TokenSeq, b: TokenSeq) -> int:
    return int(kernels.lcs_len(_ids(a), _ids(b)))


def rouge_l(candidate: TokenSeq, reference: TokenSeq, beta: float = 1.0) -> PrfScore:
    """LCS-based precision/recall and beta-weighted F."""
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if not candidate or not reference:
        return PrfScore.ZERO
    p, r, f = kernels.rouge_l_prf(_ids(candidate), _ids(reference), float(beta))
    return PrfScore(float(p), float(r), float(f))


def meteor(candidate: TokenSeq, reference: TokenSeq) -> float:
    """Unigram METEOR with the 0.5 * (chunks/matches)^3 fragmentation penalty.

    Exact matching only; no stemming or synonym stage.
    """
    if not candidate or not reference:
        return 0.0
    return float(kernels.meteor_score(_ids(candidate), _ids(reference)))


def bleu(
    candidate: TokenSeq,
    references: Sequence[TokenSeq],
    weights: Sequence[float],
    smooth: bool = False,
) -> float:
    """BLEU with reference clipping and brevity penalty.

    ``weights`` sets the n-gram orders (BLEU-1 = [1.0], BLEU-2 = [0.5, 0.5]).
    A zero precision yields 0 unless ``smooth`` is set, which substitutes a
    small epsilon count (0.1) for zero numerators.
    """
    if not weights:
        raise ValueError("weights must be non-empty")
    if not math.isclose(sum(weights), 1.0, abs_tol=1e-9):
        raise ValueError(f"weights must sum to 1, got {sum(weights)}")
    if not references:
        raise ValueError("at least one reference is required")
    if not candidate:
        return 0.0
    w = np.asarray(weights, dtype=np.float64)
    eps = 0.1 if smooth else 0.0
    cand = _ids(candidate)
    if len(references) == 1:
        return float(kernels.bleu_single(cand, _ids(references[0]), w, eps))
    ref_ids = [_ids(r) for r in references]
    offsets = np.zeros(len(ref_ids) + 1, dtype=np.int64)
    for i, r in enumerate(ref_ids):
        offsets[i + 1] = offsets[i] + len(r)
    flat = np.concatenate(ref_ids) if offsets[-1] else np.empty(0, dtype=np.int64)
    return float(kernels.bleu_multi(cand, flat, offsets, w, eps))


def bertscore_f1(
    candidate: TokenSeq,
    reference: TokenSeq,
    token_embedder: Callable[[Sequence[str]], Iterable[np.ndarray]],
) -> float:
    """Greedy-matching embedding F1.

    Recall averages, over reference tokens, the best cosine against any
    candidate token; precision mirrors it over candidate tokens. Cosines are
    floored at 0 so the score stays in [0, 1] under arbitrary embedders.
    """
    if not candidate or not reference:
        return 0.0
    c_mat = np.asarray(list(token_embedder(list(candidate))), dtype=np.float64)
    r_mat = np.asarray(list(token_embedder(list(reference))), dtype=np.float64)
    if c_mat.shape[0] != len(candidate) or r_mat.shape[0] != len(reference):
        raise ValueError("token_embedder must return one vector per token")
    c_unit = _unit_rows(c_mat)
    r_unit = _unit_rows(r_mat)
    sim = np.clip(c_unit @ r_unit.T, 0.0, None)
    p = float(sim.max(axis=1).mean())
    r = float(sim.max(axis=0).mean())
    if p + r == 0.0:
        return 0.0
    return 2.0 * p * r / (p + r)


def _unit_rows(mat: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return mat / norms


def compute_bundle(
    predicted_option: str | None,
    gold_option: str,
    generated_rationale: str,
    gold_rationale: str | None,
    token_embedder: Callable[[Sequence[str]], Iterable[np.ndarray]] | None,
    rouge_beta: float = 1.0,
) -> MetricBundle:
    """Score one question: answer correctness plus rationale similarity.

    When the gold rationale is absent the text metrics are left as None
    (null markers downstream).
    """
    correct = int(predicted_option == gold_option)
    if gold_rationale is None:
        return MetricBundle(correct, None, None, None, None, None, None, None)
    cand = tokenize(generated_rationale)
    ref = tokenize(gold_rationale)
    bert = (
        bertscore_f1(cand, ref, token_embedder) if token_embedder is not None else None
    )
    return MetricBundle(
        correct=correct,
        bert_f1=bert,
        meteor=meteor(cand, ref),
        rouge1=ngram_prf(cand, ref, 1),
        rouge2=ngram_prf(cand, ref, 2),
        rouge_l=rouge_l(cand, ref, rouge_beta),
        bleu1=bleu(cand, [ref], [1.0]),
        bleu2=bleu(cand, [ref], [0.5, 0.5]),
    )


def pairwise_rows(
    sequences: Sequence[TokenSeq], rouge_beta: float = 1.0
) -> Iterator[tuple[int, dict[str, np.ndarray]]]:
    """Bulk scoring: yield, per candidate index, arrays of every metric
    against all sequences as references.

    Row keys follow :data:`ragmcq.metrics.kernels.ROW_FIELDS`. Runs on the
    same per-pair kernels as the scalar functions, batched per candidate to
    keep Python overhead off the hot loop.
    """
    n = len(sequences)
    ids = [_ids(s) for s in sequences]
    max_len = max((len(s) for s in ids), default=0)
    seqs = np.zeros((n, max(max_len, 1)), dtype=np.int64)
    lens = np.zeros(n, dtype=np.int64)
    for i, s in enumerate(ids):
        seqs[i, : len(s)] = s
        lens[i] = len(s)
    w1 = np.array([1.0])
    w2 = np.array([0.5, 0.5])
    for i in range(n):
        out = np.empty((12, n), dtype=np.float64)
        kernels.score_row(ids[i], seqs, lens, float(rouge_beta), w1, w2, out)
        yield i, {name: out[j] for j, name in enumerate(kernels.ROW_FIELDS)}
