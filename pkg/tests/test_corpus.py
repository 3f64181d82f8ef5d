import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ragmcq.corpus import (
    Chunk,
    ChunkingConfig,
    RawDocument,
    chunk_text,
    load_manifest,
    normalize_text,
    read_corpus,
)


class TestNormalize:
    def test_fullwidth_ascii_folds(self):
        assert normalize_text("Ａ.") == "A."
        assert normalize_text("ｑｕｉｚ？") == "quiz?"

    def test_nbsp_becomes_space(self):
        assert normalize_text("ক খ") == "ক খ"

    def test_empty_identity(self):
        assert normalize_text("") == ""

    def test_zero_width_space_removed(self):
        assert normalize_text("ক​খ") == "কখ"

    def test_joiners_kept_inside_words(self):
        # ZWNJ inside a Bangla conjunct carries meaning
        assert normalize_text("র‌য") == "র‌য"

    def test_joiners_stripped_at_boundaries(self):
        assert normalize_text("ক‍ খ") == "ক খ"
        assert normalize_text("‍ক") == "ক"
        assert normalize_text("ক‌") == "ক"

    def test_space_runs_collapse_lines_survive(self):
        assert normalize_text("a  \t b\nc   d") == "a b\nc d"

    def test_crlf_unified(self):
        assert normalize_text("a\r\nb\rc") == "a\nb\nc"

    def test_ideographic_space(self):
        assert normalize_text("a　b") == "a b"

    @given(st.text(max_size=200))
    @settings(max_examples=300, deadline=None)
    def test_idempotent(self, text):
        once = normalize_text(text)
        assert normalize_text(once) == once


def _doc(n: int) -> RawDocument:
    # varied characters so slicing bugs can't hide behind repetition
    alphabet = "অআকখগঘঙচছজঝঞটঠডঢণতথদধনপফবভমযরলশষসহabcdefghij"
    return RawDocument(doc_id="d", text="".join(alphabet[i % len(alphabet)] for i in range(n)))


class TestChunking:
    def test_stride_2400(self):
        chunks = chunk_text(_doc(2400), ChunkingConfig(1000, 200))
        assert [(c.char_start, c.char_len) for c in chunks] == [(0, 1000), (800, 1000), (1600, 800)]

    def test_short_doc_single_chunk(self):
        chunks = chunk_text(_doc(500), ChunkingConfig(1000, 200))
        assert [(c.char_start, c.char_len) for c in chunks] == [(0, 500)]

    def test_exact_size_single_chunk(self):
        chunks = chunk_text(_doc(1000), ChunkingConfig(1000, 200))
        assert [(c.char_start, c.char_len) for c in chunks] == [(0, 1000)]

    def test_empty_doc_no_chunks(self):
        assert chunk_text(RawDocument("d", ""), ChunkingConfig()) == []

    def test_rejects_overlap_ge_size(self):
        with pytest.raises(ValueError):
            ChunkingConfig(chunk_size=100, overlap=100)
        with pytest.raises(ValueError):
            ChunkingConfig(chunk_size=100, overlap=150)

    def test_chunk_ids_ordered(self):
        chunks = chunk_text(_doc(2400), ChunkingConfig(1000, 200))
        assert [c.chunk_id for c in chunks] == ["d#00000", "d#00001", "d#00002"]
        assert sorted(c.chunk_id for c in chunks) == [c.chunk_id for c in chunks]

    def test_deterministic(self):
        doc, cfg = _doc(3333), ChunkingConfig(700, 150)
        assert chunk_text(doc, cfg) == chunk_text(doc, cfg)

    @given(
        n=st.integers(min_value=0, max_value=5000),
        size=st.integers(min_value=1, max_value=900),
        data=st.data(),
    )
    @settings(max_examples=200, deadline=None)
    def test_coverage_and_overlap_invariants(self, n, size, data):
        overlap = data.draw(st.integers(min_value=0, max_value=size - 1))
        doc = _doc(n)
        cfg = ChunkingConfig(size, overlap)
        chunks = chunk_text(doc, cfg)
        check_chunk_invariants(doc, cfg, chunks)


def check_chunk_invariants(doc: RawDocument, cfg: ChunkingConfig, chunks: list[Chunk]):
    n = len(doc.text)
    if n == 0:
        assert chunks == []
        return
    assert chunks[0].char_start == 0
    stride = cfg.chunk_size - cfg.overlap
    covered_to = 0
    for i, c in enumerate(chunks):
        assert c.char_start == i * stride
        assert c.text == doc.text[c.char_start : c.char_start + c.char_len]
        assert 1 <= c.char_len <= cfg.chunk_size
        if i < len(chunks) - 1:
            assert c.char_len == cfg.chunk_size
            # consecutive chunks overlap by exactly cfg.overlap
            assert chunks[i + 1].char_start == c.char_start + stride
        assert c.char_start < n
        covered_to = max(covered_to, c.char_start + c.char_len)
    last = chunks[-1]
    assert last.char_start + last.char_len == n
    # reassembly: stitching chunk bodies minus overlaps recreates the text
    rebuilt = chunks[0].text
    for prev, cur in zip(chunks, chunks[1:]):
        rebuilt += cur.text[prev.char_start + prev.char_len - cur.char_start :]
    assert rebuilt == doc.text


class TestManifest:
    def test_roundtrip(self, tmp_path):
        (tmp_path / "a.txt").write_text("বাংলা পাঠ্য", encoding="utf-8")
        manifest = tmp_path / "m.json"
        manifest.write_text(
            json.dumps({"documents": [{"path": "a.txt", "doc_id": "a", "source_label": "test"}]}),
            encoding="utf-8",
        )
        entries = load_manifest(manifest)
        assert entries[0].doc_id == "a"
        docs = read_corpus(manifest)
        assert docs[0].text == "বাংলা পাঠ্য"
        assert docs[0].source_label == "test"

    def test_duplicate_doc_id_rejected(self, tmp_path):
        (tmp_path / "a.txt").write_text("x", encoding="utf-8")
        manifest = tmp_path / "m.json"
        manifest.write_text(
            json.dumps(
                {
                    "documents": [
                        {"path": "a.txt", "doc_id": "a"},
                        {"path": "a.txt", "doc_id": "a"},
                    ]
                }
            ),
            encoding="utf-8",
        )
        with pytest.raises(ValueError, match="duplicate doc_id"):
            read_corpus(manifest)

    def test_empty_document_rejected(self, tmp_path):
        (tmp_path / "a.txt").write_text(" ​ ", encoding="utf-8")
        manifest = tmp_path / "m.json"
        manifest.write_text(
            json.dumps({"documents": [{"path": "a.txt", "doc_id": "a"}]}), encoding="utf-8"
        )
        with pytest.raises(ValueError, match="empty after normalization"):
            read_corpus(manifest)

    def test_missing_documents_key(self, tmp_path):
        manifest = tmp_path / "m.json"
        manifest.write_text("{}", encoding="utf-8")
        with pytest.raises(ValueError):
            load_manifest(manifest)
