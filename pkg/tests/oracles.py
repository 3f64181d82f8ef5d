"""Independent brute-force reference implementations used by the tests.

Everything here is written from the metric definitions directly (explicit
n-gram enumeration, exhaustive subsequence enumeration for the LCS, a
step-by-step alignment walk for METEOR), so it shares no code with the
package kernels it checks.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter


def ngrams(seq, n):
    return [tuple(seq[i : i + n]) for i in range(len(seq) - n + 1)]


def orc_ngram_match(cand, ref, n):
    """Clipped matches by explicit counting over distinct candidate n-grams."""
    cg = ngrams(cand, n)
    rg = ngrams(ref, n)
    total = 0
    for g in sorted(set(cg)):
        total += min(cg.count(g), rg.count(g))
    return total


def orc_ngram_prf(cand, ref, n):
    cg = ngrams(cand, n)
    rg = ngrams(ref, n)
    if not cg or not rg:
        return (0.0, 0.0, 0.0)
    m = orc_ngram_match(cand, ref, n)
    p = m / len(cg)
    r = m / len(rg)
    f = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return (p, r, f)


def subsequences(seq):
    """All subsequences of ``seq`` as tuples (2^len of them)."""
    out = set()
    for k in range(len(seq) + 1):
        out.update(itertools.combinations(seq, k))
    return out


def orc_lcs(a, b):
    """LCS length by exhaustive subsequence enumeration (short inputs only)."""
    subs_b = subsequences(b)
    return max(len(s) for s in subsequences(a) if s in subs_b)


def orc_rouge_l(cand, ref, beta=1.0):
    if not cand or not ref:
        return (0.0, 0.0, 0.0)
    l = orc_lcs(cand, ref)
    p = l / len(cand)
    r = l / len(ref)
    den = beta * beta * p + r
    f = 0.0 if den == 0 else (1 + beta * beta) * p * r / den
    return (p, r, f)


def orc_meteor_alignment(cand, ref):
    """Left-to-right exact unigram alignment; returns the list of
    (candidate_position, reference_position) matches."""
    taken = [False] * len(ref)
    pairs = []
    for i, tok in enumerate(cand):
        for j, rtok in enumerate(ref):
            if not taken[j] and rtok == tok:
                taken[j] = True
                pairs.append((i, j))
                break
    return pairs


def orc_meteor(cand, ref):
    pairs = orc_meteor_alignment(cand, ref)
    m = len(pairs)
    if m == 0:
        return 0.0
    chunks = 0
    prev = None
    for (ci, ri) in pairs:
        if prev is None or ci != prev[0] + 1 or ri != prev[1] + 1:
            chunks += 1
        prev = (ci, ri)
    p = m / len(cand)
    r = m / len(ref)
    fmean = 10 * p * r / (r + 9 * p)
    penalty = 0.5 * (chunks / m) ** 3
    return fmean * (1 - penalty)


def orc_bleu(cand, refs, weights):
    """BLEU from the formula: clipped precisions, geometric mean, brevity
    penalty with the effective reference length closest to the candidate."""
    c = len(cand)
    if c == 0:
        return 0.0
    log_sum = 0.0
    for n, w in enumerate(weights, start=1):
        cg = ngrams(cand, n)
        if not cg:
            return 0.0
        cc = Counter(cg)
        clipped = 0
        for g, k in cc.items():
            best = max((Counter(ngrams(r, n)).get(g, 0) for r in refs), default=0)
            clipped += min(k, best)
        if clipped == 0:
            return 0.0
        log_sum += w * math.log(clipped / len(cg))
    r_eff = min((len(r) for r in refs), key=lambda L: (abs(L - c), L))
    bp = 1.0 if c > r_eff else math.exp(1 - r_eff / c)
    return bp * math.exp(log_sum)


class OracleTable:
    """The same brute-force definitions, with per-sequence precomputation so
    the exhaustive small-alphabet sweep stays inside its time budget.

    ``test_oracles.py`` asserts this class agrees with the plain functions
    above on random pairs before the sweep relies on it.
    """

    def __init__(self, sequences):
        self.seqs = [tuple(s) for s in sequences]
        self.uni = [Counter(ngrams(s, 1)) for s in self.seqs]
        self.bi = [Counter(ngrams(s, 2)) for s in self.seqs]
        # Subsequences sorted by falling length: first containment hit is the LCS.
        self.subs_desc = [
            sorted(subsequences(s), key=len, reverse=True) for s in self.seqs
        ]
        self.subs_set = [set(d) for d in self.subs_desc]
        self.lens = [len(s) for s in self.seqs]

    def clipped(self, i, j, n):
        a = self.uni[i] if n == 1 else self.bi[i]
        b = self.uni[j] if n == 1 else self.bi[j]
        if len(b) < len(a):
            a, b = b, a
        return sum(min(v, b.get(g, 0)) for g, v in a.items())

    def rouge_n(self, i, j, n):
        lc = self.lens[i] - n + 1
        lr = self.lens[j] - n + 1
        if lc <= 0 or lr <= 0:
            return (0.0, 0.0, 0.0)
        m = self.clipped(i, j, n)
        p = m / lc
        r = m / lr
        f = 0.0 if p + r == 0 else 2 * p * r / (p + r)
        return (p, r, f)

    def lcs(self, i, j):
        sset = self.subs_set[j]
        for s in self.subs_desc[i]:
            if s in sset:
                return len(s)
        return 0

    def rouge_l(self, i, j, beta=1.0):
        lc = self.lens[i]
        lr = self.lens[j]
        if lc == 0 or lr == 0:
            return (0.0, 0.0, 0.0)
        l = self.lcs(i, j)
        p = l / lc
        r = l / lr
        den = beta * beta * p + r
        f = 0.0 if den == 0 else (1 + beta * beta) * p * r / den
        return (p, r, f)

    def meteor(self, i, j):
        return orc_meteor(self.seqs[i], self.seqs[j])

    def bleu1(self, i, j):
        c = self.lens[i]
        if c == 0:
            return 0.0
        m1 = self.clipped(i, j, 1)
        if m1 == 0:
            return 0.0
        r = self.lens[j]
        bp = 1.0 if c > r else math.exp(1 - r / c)
        return bp * (m1 / c)

    def bleu2(self, i, j):
        c = self.lens[i]
        if c < 2:
            return 0.0
        m1 = self.clipped(i, j, 1)
        m2 = self.clipped(i, j, 2)
        if m1 == 0 or m2 == 0:
            return 0.0
        r = self.lens[j]
        bp = 1.0 if c > r else math.exp(1 - r / c)
        return bp * math.exp(0.5 * math.log(m1 / c) + 0.5 * math.log(m2 / (c - 1)))


def orc_top_k(entries, query_vec, k):
    """Brute-force cosine ranking: per-entry dot/norms, sorted by
    (-score, chunk_id)."""
    scored = []
    for chunk_id, vec in entries:
        num = sum(x * y for x, y in zip(vec, query_vec))
        nu = math.sqrt(sum(x * x for x in vec))
        nv = math.sqrt(sum(y * y for y in query_vec))
        score = 0.0 if nu == 0 or nv == 0 else num / (nu * nv)
        scored.append((chunk_id, score))
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored[:k]


def orc_vote(votes, k_values, tiebreak_k):
    """Rule evaluation for k-aggregation: unanimity, strict majority
    (> half), else the tiebreak vote."""
    assert [k for k, _, _ in votes] == list(k_values)
    options = [o for _, o, _ in votes]
    if len(set(options)) == 1:
        return options[0], "unanimous"
    counts = Counter(options)
    top, top_n = counts.most_common(1)[0]
    if top_n > len(options) / 2 and list(counts.values()).count(top_n) == 1:
        return top, "majority"
    by_k = {k: o for k, o, _ in votes}
    return by_k[tiebreak_k], "tie"
