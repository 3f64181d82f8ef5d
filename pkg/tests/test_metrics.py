import json
import os
import random
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import orc_bleu, orc_lcs, orc_meteor, orc_ngram_prf, orc_rouge_l
from ragmcq.metrics import (
    PrfScore,
    accuracy,
    bertscore_f1,
    bleu,
    compute_bundle,
    lcs_length,
    meteor,
    ngram_prf,
    pairwise_rows,
    rouge_l,
    tokenize,
)
from ragmcq.metrics import kernels

tokens = st.lists(st.sampled_from(["a", "b", "c", "d", "xy"]), max_size=10)


class TestTokenizer:
    def test_punctuation_detached(self):
        assert tokenize("ক, খ।") == ["ক", ",", "খ", "।"]

    def test_whitespace_split(self):
        assert tokenize("one  two\nthree") == ["one", "two", "three"]

    def test_no_empty_tokens(self):
        assert all(tokenize("  !! a ‍ ব় "))

    def test_empty(self):
        assert tokenize("") == []


class TestAccuracy:
    def test_direct_count(self):
        assert accuracy(["A", "B", "C", "D"], ["A", "B", "C", "A"]) == 0.75

    def test_all_correct(self):
        assert accuracy(["A", "A"], ["A", "A"]) == 1.0

    def test_na_counts_wrong(self):
        assert accuracy(["NA", "A"], ["B", "A"]) == 0.5
        assert accuracy([None, "A"], ["B", "A"]) == 0.5

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            accuracy(["A"], ["A", "B"])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            accuracy([], [])


class TestNgramPrf:
    def test_hand_counted_unigrams(self):
        got = ngram_prf("a b c".split(), "a c d".split(), 1)
        assert got == PrfScore(2 / 3, 2 / 3, 2 / 3)

    def test_identity(self):
        seq = "x y z".split()
        for n in (1, 2, 3):
            assert ngram_prf(seq, seq, n) == PrfScore(1.0, 1.0, 1.0)

    def test_candidate_shorter_than_n(self):
        assert ngram_prf(["a"], ["a", "b"], 2) == PrfScore.ZERO

    def test_clipping(self):
        # "a a a" vs "a": one distinct unigram clipped to reference count 1
        got = ngram_prf(["a", "a", "a"], ["a"], 1)
        assert got.precision == pytest.approx(1 / 3)
        assert got.recall == 1.0

    def test_n_validation(self):
        with pytest.raises(ValueError):
            ngram_prf(["a"], ["a"], 0)

    @given(a=tokens, b=tokens, n=st.integers(min_value=1, max_value=3))
    @settings(max_examples=300, deadline=None)
    def test_matches_oracle_and_symmetry(self, a, b, n):
        got = ngram_prf(a, b, n)
        exp = orc_ngram_prf(a, b, n)
        assert got.precision == pytest.approx(exp[0], abs=1e-12)
        assert got.recall == pytest.approx(exp[1], abs=1e-12)
        assert got.f == pytest.approx(exp[2], abs=1e-12)
        # precision/recall swap under argument swap
        assert ngram_prf(b, a, n).recall == pytest.approx(got.precision, abs=1e-12)


class TestLcs:
    def test_classic_example(self):
        assert lcs_length("A B C B D A B".split(), "B D C A B A".split()) == 4

    def test_identity_and_disjoint(self):
        assert lcs_length(list("abcd"), list("abcd")) == 4
        assert lcs_length(list("abc"), list("xyz")) == 0

    @given(a=tokens, b=tokens)
    @settings(max_examples=200, deadline=None)
    def test_oracle_and_bounds(self, a, b):
        got = lcs_length(a, b)
        assert got == orc_lcs(a, b)
        assert got <= min(len(a), len(b))
        # appending a shared token raises the LCS by exactly one
        assert lcs_length(a + ["zz"], b + ["zz"]) == got + 1


class TestRougeL:
    def test_hand_derived(self):
        assert rouge_l("a b c".split(), "a c d".split()) == PrfScore(2 / 3, 2 / 3, 2 / 3)

    def test_identity(self):
        assert rouge_l(list("ab"), list("ab")) == PrfScore(1.0, 1.0, 1.0)

    def test_empty_candidate(self):
        assert rouge_l([], ["a"]) == PrfScore.ZERO

    def test_beta_validation(self):
        with pytest.raises(ValueError):
            rouge_l(["a"], ["a"], beta=0.0)

    @given(a=tokens, b=tokens, beta=st.sampled_from([0.5, 1.0, 1.2]))
    @settings(max_examples=200, deadline=None)
    def test_matches_oracle(self, a, b, beta):
        got = rouge_l(a, b, beta)
        exp = orc_rouge_l(a, b, beta)
        assert got.f == pytest.approx(exp[2], abs=1e-12)


class TestMeteor:
    def test_identical_four_tokens(self):
        assert meteor(list("wxyz"), list("wxyz")) == 0.9921875

    def test_zero_matches(self):
        assert meteor(["a"], ["b"]) == 0.0

    def test_swapped_pair_two_chunks(self):
        assert meteor(["b", "a"], ["a", "b"]) == 0.5

    def test_identity_formula(self):
        for n in (1, 2, 3, 5, 8):
            seq = [f"t{i}" for i in range(n)]
            assert meteor(seq, seq) == pytest.approx(1 - 0.5 / n**3, abs=1e-15)

    @given(a=tokens, b=tokens)
    @settings(max_examples=300, deadline=None)
    def test_matches_oracle(self, a, b):
        assert meteor(a, b) == pytest.approx(orc_meteor(a, b), abs=1e-12)


class TestBleu:
    def test_identity_bleu1(self):
        seq = "p q r s".split()
        assert bleu(seq, [seq], [1.0]) == 1.0

    def test_hand_derived_bleu2(self):
        got = bleu("a b c d".split(), ["a b x d".split()], [0.5, 0.5])
        assert got == pytest.approx(0.5, abs=1e-12)

    def test_zero_bigram_match(self):
        assert bleu("a b".split(), ["b a".split()], [0.5, 0.5]) == 0.0

    def test_empty_candidate(self):
        assert bleu([], [["a"]], [1.0]) == 0.0

    def test_weight_validation(self):
        with pytest.raises(ValueError):
            bleu(["a"], [["a"]], [])
        with pytest.raises(ValueError):
            bleu(["a"], [["a"]], [0.9])
        with pytest.raises(ValueError):
            bleu(["a"], [], [1.0])

    def test_brevity_penalty(self):
        # candidate shorter than reference: BP = exp(1 - r/c) with c=1, r=2
        got = bleu(["a"], [["a", "b"]], [1.0])
        assert got == pytest.approx(np.exp(1 - 2 / 1), abs=1e-12)

    def test_effective_ref_length_tie_prefers_shorter(self):
        # refs of lengths 2 and 4 are equally close to c=3: pick 2 -> BP=1
        cand = ["a", "b", "c"]
        refs = [["a", "b"], ["a", "b", "c", "d"]]
        assert bleu(cand, refs, [1.0]) == pytest.approx(orc_bleu(cand, refs, [1.0]), abs=1e-12)
        assert bleu(cand, refs, [1.0]) == 1.0  # BP 1 because c > r_eff

    def test_smoothing_flag(self):
        assert bleu(["a", "b"], [["c", "d"]], [1.0]) == 0.0
        assert 0.0 < bleu(["a", "b"], [["c", "d"]], [1.0], smooth=True) < 0.2

    @given(a=tokens, b=tokens, data=st.data())
    @settings(max_examples=300, deadline=None)
    def test_matches_oracle_multi_ref(self, a, b, data):
        if not a:
            return
        extra = data.draw(tokens)
        refs = [b, extra]
        for weights in ([1.0], [0.5, 0.5]):
            assert bleu(a, refs, weights) == pytest.approx(
                orc_bleu(a, refs, weights), abs=1e-12
            )


def one_hot_embedder(vocab: dict):
    def embed(toks):
        dim = max(len(vocab), 8)
        out = []
        for t in toks:
            v = np.zeros(dim)
            v[vocab[t]] = 1.0
            out.append(v)
        return out

    return embed


class TestBertScore:
    def test_identity(self):
        emb = one_hot_embedder({"a": 0, "b": 1})
        assert bertscore_f1(["a", "b"], ["a", "b"], emb) == 1.0

    def test_one_hot_half_overlap(self):
        emb = one_hot_embedder({"a": 0, "b": 1, "c": 2})
        assert bertscore_f1(["a", "b"], ["a", "c"], emb) == 0.5

    def test_empty_side(self):
        emb = one_hot_embedder({"a": 0})
        assert bertscore_f1([], ["a"], emb) == 0.0
        assert bertscore_f1(["a"], [], emb) == 0.0

    def test_embedder_shape_validated(self):
        with pytest.raises(ValueError):
            bertscore_f1(["a", "b"], ["a"], lambda toks: [np.ones(4)])

    def test_in_unit_range_with_hash_embedder(self):
        from ragmcq.providers.mock import hash_embed_transport

        emb = hash_embed_transport(8)
        rng = random.Random(5)
        for _ in range(50):
            a = [random.choice("abcdef") for _ in range(rng.randint(1, 6))]
            b = [random.choice("abcdef") for _ in range(rng.randint(1, 6))]
            score = bertscore_f1(a, b, emb)
            assert 0.0 <= score <= 1.0


@given(a=tokens, b=tokens)
@settings(max_examples=300, deadline=None)
def test_all_metrics_in_unit_range(a, b):
    for n in (1, 2):
        score = ngram_prf(a, b, n)
        assert 0.0 <= score.precision <= 1.0 and 0.0 <= score.recall <= 1.0 and 0.0 <= score.f <= 1.0
    rl = rouge_l(a, b)
    assert 0.0 <= rl.f <= 1.0
    assert 0.0 <= meteor(a, b) <= 1.0
    if a:
        assert 0.0 <= bleu(a, [b], [1.0]) <= 1.0
        assert 0.0 <= bleu(a, [b], [0.5, 0.5]) <= 1.0


class TestBatchEqualsScalar:
    def test_pairwise_rows_match_scalar_calls(self):
        rng = random.Random(99)
        seqs = [
            [rng.choice("abc") for _ in range(rng.randint(0, 6))] for _ in range(40)
        ]
        for i, row in pairwise_rows(seqs):
            cand = seqs[i]
            for j, ref in enumerate(seqs):
                assert row["rouge1_f"][j] == ngram_prf(cand, ref, 1).f
                assert row["rouge2_f"][j] == ngram_prf(cand, ref, 2).f
                assert row["rouge_l_f"][j] == rouge_l(cand, ref).f
                assert row["meteor"][j] == meteor(cand, ref)
                if cand:
                    assert row["bleu1"][j] == bleu(cand, [ref], [1.0])
                    assert row["bleu2"][j] == bleu(cand, [ref], [0.5, 0.5])


class TestKernelBackends:
    def test_numba_backend_active_by_default(self):
        assert kernels.BACKEND == "numba"

    def test_numpy_fallback_agrees(self):
        """Run a fixture battery under RAGMCQ_KERNELS=numpy in a subprocess
        and compare with the in-process numba results."""
        code = """
import json
from ragmcq.metrics import bleu, lcs_length, meteor, ngram_prf, rouge_l
from ragmcq.metrics import kernels
pairs = [
    ("a b c", "a c d"), ("a b c d", "a b x d"), ("w x y z", "w x y z"),
    ("b a", "a b"), ("a", ""), ("", ""), ("a a b c", "a b a c"),
]
out = {"backend": kernels.BACKEND, "scores": []}
for c, r in pairs:
    cand, ref = c.split(), r.split()
    out["scores"].append([
        ngram_prf(cand, ref, 1).f, ngram_prf(cand, ref, 2).f,
        rouge_l(cand, ref).f, meteor(cand, ref), lcs_length(cand, ref),
        bleu(cand, [ref], [1.0]) if cand else 0.0,
        bleu(cand, [ref], [0.5, 0.5]) if cand else 0.0,
    ])
print(json.dumps(out))
"""
        env = dict(os.environ, RAGMCQ_KERNELS="numpy")
        proc = subprocess.run(
            [sys.executable, "-c", code], capture_output=True, text=True, env=env, check=True
        )
        result = json.loads(proc.stdout)
        assert result["backend"] == "numpy"
        pairs = [
            ("a b c", "a c d"), ("a b c d", "a b x d"), ("w x y z", "w x y z"),
            ("b a", "a b"), ("a", ""), ("", ""), ("a a b c", "a b a c"),
        ]
        for (c, r), row in zip(pairs, result["scores"]):
            cand, ref = c.split(), r.split()
            expected = [
                ngram_prf(cand, ref, 1).f, ngram_prf(cand, ref, 2).f,
                rouge_l(cand, ref).f, meteor(cand, ref), lcs_length(cand, ref),
                bleu(cand, [ref], [1.0]) if cand else 0.0,
                bleu(cand, [ref], [0.5, 0.5]) if cand else 0.0,
            ]
            assert row == expected


class TestBundle:
    def test_full_bundle(self):
        emb = one_hot_embedder({t: i for i, t in enumerate("abcdxyz")})
        bundle = compute_bundle("A", "A", "a b c", "a c d", emb)
        assert bundle.correct == 1
        assert bundle.rouge1.f == pytest.approx(2 / 3)
        assert bundle.bleu1 == pytest.approx(2 / 3)

    def test_gold_absent_null_markers(self):
        bundle = compute_bundle("B", "A", "a b", None, None)
        assert bundle.correct == 0
        assert bundle.bleu1 is None and bundle.rouge1 is None and bundle.bert_f1 is None

    def test_failed_prediction_counts_wrong(self):
        bundle = compute_bundle(None, "A", "", "gold words", None)
        assert bundle.correct == 0
        assert bundle.bleu1 == 0.0
