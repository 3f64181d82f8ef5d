"""Scoring kernels over integer token-id arrays.

These inner loops dominate corpus-scale evaluation, so they are compiled
with numba by default. Set ``RAGMCQ_KERNELS=numpy`` to run the identical
source as plain Python over numpy arrays (slow path, same results); the
flag is read once at import. ``BACKEND`` reports which path is active.

All kernels take ``np.int64`` arrays of token ids produced by the public
wrappers in :mod:`ragmcq.metrics`.
"""

from __future__ import annotations

import math
import os
import warnings

import numpy as np

_FLAG = os.environ.get("RAGMCQ_KERNELS", "numba").strip().lower()
if _FLAG not in {"numba", "numpy"}:
    warnings.warn(f"RAGMCQ_KERNELS={_FLAG!r} not recognized; using 'numba'")
    _FLAG = "numba"

USE_NUMBA = _FLAG == "numba"
if USE_NUMBA:
    try:
        from numba import njit as _njit

        def _jit(func):
            return _njit(cache=True)(func)

    except ImportError:  # pragma: no cover - numba is a declared dependency
        warnings.warn("numba is not importable; falling back to the numpy kernel path")
        USE_NUMBA = False

if not USE_NUMBA:

    def _jit(func):
        return func


BACKEND = "numba" if USE_NUMBA else "numpy"


@_jit
def lcs_len(a, b):
    """Length of the longest common subsequence (classic DP, rolling rows)."""
    n = a.shape[0]
    m = b.shape[0]
    if n == 0 or m == 0:
        return 0
    prev = np.zeros(m + 1, dtype=np.int64)
    cur = np.zeros(m + 1, dtype=np.int64)
    for i in range(n):
        ai = a[i]
        for j in range(m):
            if ai == b[j]:
                cur[j + 1] = prev[j] + 1
            elif cur[j] > prev[j + 1]:
                cur[j + 1] = cur[j]
            else:
                cur[j + 1] = prev[j + 1]
        tmp = prev
        prev = cur
        cur = tmp
    return int(prev[m])


@_jit
def ngram_match(c, r, n):
    """Clipped n-gram matches: sum over distinct candidate n-grams of
    min(count in candidate, count in reference)."""
    lc = c.shape[0] - n + 1
    lr = r.shape[0] - n + 1
    if lc <= 0 or lr <= 0:
        return 0
    total = 0
    for i in range(lc):
        first = True
        for k in range(i):
            eq = True
            for t in range(n):
                if c[k + t] != c[i + t]:
                    eq = False
                    break
            if eq:
                first = False
                break
        if not first:
            continue
        cc = 0
        for k in range(i, lc):
            eq = True
            for t in range(n):
                if c[k + t] != c[i + t]:
                    eq = False
                    break
            if eq:
                cc += 1
        rc = 0
        for k in range(lr):
            eq = True
            for t in range(n):
                if r[k + t] != c[i + t]:
                    eq = False
                    break
            if eq:
                rc += 1
        total += cc if cc < rc else rc
    return total


@_jit
def ngram_match_multi(c, refs_flat, offsets, n):
    """Clipped matches against several references: per distinct candidate
    n-gram the clip is the maximum count over all references."""
    lc = c.shape[0] - n + 1
    if lc <= 0:
        return 0
    n_refs = offsets.shape[0] - 1
    total = 0
    for i in range(lc):
        first = True
        for k in range(i):
            eq = True
            for t in range(n):
                if c[k + t] != c[i + t]:
                    eq = False
                    break
            if eq:
                first = False
                break
        if not first:
            continue
        cc = 0
        for k in range(i, lc):
            eq = True
            for t in range(n):
                if c[k + t] != c[i + t]:
                    eq = False
                    break
            if eq:
                cc += 1
        best = 0
        for ri in range(n_refs):
            lo = offsets[ri]
            hi = offsets[ri + 1]
            lr = hi - lo - n + 1
            rc = 0
            for k in range(lr):
                eq = True
                for t in range(n):
                    if refs_flat[lo + k + t] != c[i + t]:
                        eq = False
                        break
                if eq:
                    rc += 1
            if rc > best:
                best = rc
        total += cc if cc < best else best
    return total


@_jit
def meteor_stats(c, r):
    """Exact unigram alignment with left-to-right position assignment.

    Returns (matches, chunks) where a chunk is a maximal run of matched
    candidate tokens mapping to consecutive reference positions.
    """
    nc = c.shape[0]
    nr = r.shape[0]
    used = np.zeros(nr, dtype=np.bool_)
    matches = 0
    chunks = 0
    prev_c = -2
    prev_r = -2
    for i in range(nc):
        for j in range(nr):
            if not used[j] and r[j] == c[i]:
                used[j] = True
                matches += 1
                if i != prev_c + 1 or j != prev_r + 1:
                    chunks += 1
                prev_c = i
                prev_r = j
                break
    return matches, chunks


@_jit
def rouge_n_prf(c, r, n):
    """ROUGE-n precision/recall/F1 over clipped n-gram matches."""
    lc = c.shape[0] - n + 1
    lr = r.shape[0] - n + 1
    if lc <= 0 or lr <= 0:
        return 0.0, 0.0, 0.0
    m = ngram_match(c, r, n)
    p = m / lc
    rec = m / lr
    if p + rec == 0.0:
        return p, rec, 0.0
    return p, rec, 2.0 * p * rec / (p + rec)


@_jit
def rouge_l_prf(c, r, beta):
    """ROUGE-L precision/recall/F over the LCS, F weighted by beta."""
    nc = c.shape[0]
    nr = r.shape[0]
    if nc == 0 or nr == 0:
        return 0.0, 0.0, 0.0
    l = lcs_len(c, r)
    p = l / nc
    rec = l / nr
    den = beta * beta * p + rec
    if den == 0.0:
        return p, rec, 0.0
    return p, rec, (1.0 + beta * beta) * p * rec / den


@_jit
def meteor_score(c, r):
    """Unigram-match METEOR: harmonic mean weighted toward recall times a
    fragmentation penalty 0.5 * (chunks / matches)^3."""
    if c.shape[0] == 0 or r.shape[0] == 0:
        return 0.0
    matches, chunks = meteor_stats(c, r)
    if matches == 0:
        return 0.0
    p = matches / c.shape[0]
    rec = matches / r.shape[0]
    fmean = 10.0 * p * rec / (rec + 9.0 * p)
    frag = chunks / matches
    penalty = 0.5 * frag * frag * frag
    return fmean * (1.0 - penalty)


@_jit
def bleu_single(c, r, weights, smooth_eps):
    """BLEU against one reference: geometric mean of clipped n-gram
    precisions (orders 1..len(weights)) times the brevity penalty.

    Any zero precision makes the score 0 unless ``smooth_eps`` > 0, in which
    case the zero count is replaced by ``smooth_eps`` before dividing.
    """
    clen = c.shape[0]
    if clen == 0:
        return 0.0
    rlen = r.shape[0]
    acc = 0.0
    for n in range(1, weights.shape[0] + 1):
        den = clen - n + 1
        if den <= 0:
            return 0.0
        num = ngram_match(c, r, n)
        if num == 0:
            if smooth_eps > 0.0:
                pn = smooth_eps / den
            else:
                return 0.0
        else:
            pn = num / den
        acc += weights[n - 1] * math.log(pn)
    if clen > rlen:
        bp = 1.0
    else:
        bp = math.exp(1.0 - rlen / clen)
    return bp * math.exp(acc)


@_jit
def bleu_multi(c, refs_flat, offsets, weights, smooth_eps):
    """BLEU against several references; the effective reference length is the
    one closest to the candidate length (ties broken toward the shorter)."""
    clen = c.shape[0]
    if clen == 0:
        return 0.0
    n_refs = offsets.shape[0] - 1
    r_eff = -1
    best_gap = -1
    for ri in range(n_refs):
        rl = offsets[ri + 1] - offsets[ri]
        gap = rl - clen
        if gap < 0:
            gap = -gap
        if best_gap < 0 or gap < best_gap or (gap == best_gap and rl < r_eff):
            best_gap = gap
            r_eff = rl
    acc = 0.0
    for n in range(1, weights.shape[0] + 1):
        den = clen - n + 1
        if den <= 0:
            return 0.0
        num = ngram_match_multi(c, refs_flat, offsets, n)
        if num == 0:
            if smooth_eps > 0.0:
                pn = smooth_eps / den
            else:
                return 0.0
        else:
            pn = num / den
        acc += weights[n - 1] * math.log(pn)
    if clen > r_eff:
        bp = 1.0
    else:
        bp = math.exp(1.0 - r_eff / clen)
    return bp * math.exp(acc)


@_jit
def score_row(cand, seqs, lens, beta, w1, w2, out):
    """Score one candidate against every padded reference row of ``seqs``.

    Fills ``out`` (shape ``(12, n_seqs)``) with rouge1 p/r/f, rouge2 p/r/f,
    rougeL p/r/f, meteor, bleu1, bleu2 per column. Shares the exact per-pair
    kernels used by the scalar API.
    """
    n_seqs = seqs.shape[0]
    for j in range(n_seqs):
        r = seqs[j, : lens[j]]
        p1, r1, f1 = rouge_n_prf(cand, r, 1)
        out[0, j] = p1
        out[1, j] = r1
        out[2, j] = f1
        p2, r2, f2 = rouge_n_prf(cand, r, 2)
        out[3, j] = p2
        out[4, j] = r2
        out[5, j] = f2
        pl, rl, fl = rouge_l_prf(cand, r, beta)
        out[6, j] = pl
        out[7, j] = rl
        out[8, j] = fl
        out[9, j] = meteor_score(cand, r)
        out[10, j] = bleu_single(cand, r, w1, 0.0)
        out[11, j] = bleu_single(cand, r, w2, 0.0)


ROW_FIELDS = (
    "rouge1_p",
    "rouge1_r",
    "rouge1_f",
    "rouge2_p",
    "rouge2_r",
    "rouge2_f",
    "rouge_l_p",
    "rouge_l_r",
    "rouge_l_f",
    "meteor",
    "bleu1",
    "bleu2",
)


def warm_up() -> None:
    """Trigger (or load the cached) JIT compilation of every kernel."""
    a = np.array([0, 1, 2], dtype=np.int64)
    b = np.array([0, 2], dtype=np.int64)
    w1 = np.array([1.0])
    w2 = np.array([0.5, 0.5])
    offs = np.array([0, 2], dtype=np.int64)
    lcs_len(a, b)
    ngram_match(a, b, 1)
    ngram_match_multi(a, b, offs, 1)
    meteor_stats(a, b)
    rouge_n_prf(a, b, 1)
    rouge_l_prf(a, b, 1.0)
    meteor_score(a, b)
    bleu_single(a, b, w1, 0.0)
    bleu_multi(a, b, offs, w2, 0.0)
    seqs = np.zeros((2, 3), dtype=np.int64)
    seqs[0, :3] = a
    seqs[1, :2] = b
    lens = np.array([3, 2], dtype=np.int64)
    out = np.empty((12, 2), dtype=np.float64)
    score_row(a, seqs, lens, 1.0, w1, w2, out)
