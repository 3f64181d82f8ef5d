"""The precomputing OracleTable must agree with the plain brute-force
functions before the exhaustive acceptance sweep leans on it."""

import random

import pytest

from oracles import (
    OracleTable,
    orc_bleu,
    orc_lcs,
    orc_meteor,
    orc_ngram_prf,
    orc_rouge_l,
    orc_vote,
)


def test_oracle_table_matches_plain_oracles():
    rng = random.Random(2024)
    seqs = [tuple(rng.choice((0, 1, 2)) for _ in range(rng.randint(0, 6))) for _ in range(60)]
    table = OracleTable(seqs)
    for i in range(len(seqs)):
        for j in range(len(seqs)):
            a, b = seqs[i], seqs[j]
            assert table.rouge_n(i, j, 1) == orc_ngram_prf(a, b, 1)
            assert table.rouge_n(i, j, 2) == orc_ngram_prf(a, b, 2)
            assert table.lcs(i, j) == orc_lcs(a, b)
            assert table.rouge_l(i, j) == orc_rouge_l(a, b)
            assert table.meteor(i, j) == orc_meteor(a, b)
            if a:
                assert table.bleu1(i, j) == pytest.approx(orc_bleu(a, [b], [1.0]), abs=1e-15)
                assert table.bleu2(i, j) == pytest.approx(orc_bleu(a, [b], [0.5, 0.5]), abs=1e-15)
            else:
                assert table.bleu1(i, j) == 0.0
                assert table.bleu2(i, j) == 0.0


def test_vote_oracle_spot_checks():
    ks = (3, 5, 6)
    assert orc_vote([(3, "A", ""), (5, "A", ""), (6, "B", "")], ks, 6) == ("A", "majority")
    assert orc_vote([(3, "C", ""), (5, "C", ""), (6, "C", "")], ks, 6) == ("C", "unanimous")
    assert orc_vote([(3, "A", ""), (5, "B", ""), (6, "C", "")], ks, 6) == ("C", "tie")
