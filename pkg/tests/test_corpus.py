import json
from collections import Counter
from random import Random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import CJK_ALPHABET, has_repeat_by_histogram, synthetic_corpus_rows

from proftap.corpus import (
    Corpus,
    Poem,
    Source,
    YanClass,
    classify_yan,
    compute_features,
    detect_char_repetition,
    ingest_corpus,
    load_char_map,
    normalize_text,
    sample_titles,
    segment_lines,
)
from proftap.errors import CorpusFormatError, SegmentationError

from conftest import write_jsonl


class TestNormalizeText:
    def test_identity_without_mapping(self):
        assert normalize_text("雲") == "雲"

    def test_single_char_mapping(self):
        assert normalize_text("白雲", {"雲": "云"}) == "白云"

    def test_crlf_and_fullwidth_space(self):
        assert normalize_text("a\r\nb\rc　d") == "a\nb\ncd"

    @given(st.text(max_size=80))
    def test_idempotent(self, text):
        once = normalize_text(text)
        assert normalize_text(once) == once


class TestSegmentLines:
    def test_two_segments(self, night_snow):
        lines = segment_lines(
            Poem("x", "夜雪", "已觉衾枕冷，转见窗户明。", Source.human())
        )
        assert lines.lines == ("已觉衾枕冷", "转见窗户明")

    def test_newline_and_period(self, two_line_poem):
        lines = segment_lines(two_line_poem)
        assert len(lines.lines) == 2
        assert lines.line_lengths == (5, 5)

    def test_punctuation_only_body_fails(self):
        poem = Poem("x", "t", "，。，。", Source.human())
        with pytest.raises(SegmentationError):
            segment_lines(poem)

    def test_enumeration_comma_stays_in_line(self):
        # 、 marks an in-line list, not a line end
        poem = Poem("x", "t", "山、水。", Source.human())
        lines = segment_lines(poem)
        assert lines.lines == ("山水",)

    def test_reconstruction_round_trip(self, night_snow):
        lines = segment_lines(night_snow)
        assert lines.reconstruct() == lines.normalized_body

    def test_reconstruction_with_leading_delimiter(self):
        poem = Poem("x", "t", "。白日依山尽。", Source.human())
        lines = segment_lines(poem)
        assert lines.reconstruct() == lines.normalized_body
        assert lines.raw_delimiters[0] == "。"

    def test_custom_delimiter_set(self):
        # with 、 promoted to a delimiter the same body splits differently
        poem = Poem("x", "t", "山、水。", Source.human())
        default = segment_lines(poem)
        custom = segment_lines(poem, delimiters="，。！？；：、")
        assert default.lines == ("山水",)
        assert custom.lines == ("山", "水")

    @given(
        st.lists(
            st.text(
                alphabet=st.sampled_from(CJK_ALPHABET + list("，。！？；：、 \n")),
                max_size=30,
            ),
            max_size=4,
        )
    )
    @settings(max_examples=200)
    def test_round_trip_property(self, chunks):
        body = "".join(chunks)
        poem_ok = any(ch in CJK_ALPHABET for ch in body)
        if not poem_ok:
            return
        poem = Poem("x", "t", body, Source.human())
        lines = segment_lines(poem)
        assert lines.reconstruct() == lines.normalized_body
        assert all(len(line) >= 1 for line in lines.lines)


class TestYan:
    @pytest.mark.parametrize(
        "lengths,expected",
        [
            ((5, 5, 5, 5), YanClass.YAN5),
            ((7,) * 8, YanClass.YAN7),
            ((5, 7, 5, 7), YanClass.OTHER),
            ((6, 6), YanClass.OTHER),
        ],
    )
    def test_classification(self, lengths, expected):
        body = "。".join("字" * n for n in lengths) + "。"
        lines = segment_lines(Poem("x", "t", body, Source.human()))
        assert lines.line_lengths == lengths
        assert classify_yan(lines) is expected

    def test_classification_matches_min_max_rule(self, rng):
        for _ in range(100):
            lengths = [rng.randint(3, 9) for _ in range(rng.randint(1, 6))]
            body = "。".join("字" * n for n in lengths) + "。"
            lines = segment_lines(Poem("x", "t", body, Source.human()))
            got = classify_yan(lines)
            lo, hi = min(lengths), max(lengths)
            if lo == hi == 5:
                assert got is YanClass.YAN5
            elif lo == hi == 7:
                assert got is YanClass.YAN7
            else:
                assert got is YanClass.OTHER


class TestCharRepetition:
    def test_immediate_repeat(self):
        lines = segment_lines(Poem("x", "t", "山山。", Source.human()))
        assert detect_char_repetition(lines) is True

    def test_all_distinct(self, two_line_poem):
        lines = segment_lines(two_line_poem)
        assert detect_char_repetition(lines) is False

    def test_repeat_across_lines_counts_for_body_scope(self):
        lines = segment_lines(Poem("x", "t", "山高。山远。", Source.human()))
        assert detect_char_repetition(lines, scope="body") is True
        assert detect_char_repetition(lines, scope="line") is False

    def test_matches_histogram_oracle_on_random_poems(self, rng):
        alphabet = CJK_ALPHABET[:20]
        for _ in range(200):
            chars = [rng.choice(alphabet) for _ in range(40)]
            body = (
                "".join(chars[:10]) + "，" + "".join(chars[10:20]) + "。"
                + "".join(chars[20:30]) + "，" + "".join(chars[30:]) + "。"
            )
            lines = segment_lines(Poem("x", "t", body, Source.human()))
            assert detect_char_repetition(lines) == has_repeat_by_histogram(
                list(lines.lines)
            )


class TestFeatures:
    def test_patterned_iff_equal_lengths(self):
        regular = segment_lines(Poem("a", "t", "字字字字字。字字字字字。", Source.human()))
        irregular = segment_lines(Poem("b", "t", "字字字。字字字字字。", Source.human()))
        assert compute_features(regular).line_length_patterned is True
        assert compute_features(irregular).line_length_patterned is False


class TestIngest:
    def test_minimal_record(self, tmp_path):
        path = write_jsonl(
            tmp_path / "one.jsonl",
            [{"title": "夜雪", "body": "已觉衾枕冷，转见窗户明。"}],
        )
        corpus = ingest_corpus(path, "jsonl")
        assert len(corpus) == 1
        assert corpus.poems[0].title == "夜雪"

    def test_empty_body_names_record(self, tmp_path):
        path = write_jsonl(
            tmp_path / "bad.jsonl",
            [{"title": "好", "body": "字。"}, {"title": "坏", "body": ""}],
        )
        with pytest.raises(CorpusFormatError, match="record 2"):
            ingest_corpus(path, "jsonl")

    def test_thousand_records_distinct_ids(self, tmp_path):
        rows = synthetic_corpus_rows(1000, seed=3)
        path = write_jsonl(tmp_path / "big.jsonl", rows)
        corpus = ingest_corpus(path, "jsonl")
        assert len(corpus) == 1000
        assert len({p.id for p in corpus}) == 1000

    def test_csv_format(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text("id,title,body\nc1,夜雪,字字字。\n", encoding="utf-8")
        corpus = ingest_corpus(path, "csv")
        assert corpus.poems[0].id == "c1"

    def test_csv_missing_header_fails(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text("title,body\n夜雪,字。\n", encoding="utf-8")
        with pytest.raises(CorpusFormatError, match="header"):
            ingest_corpus(path, "csv")

    def test_unknown_format(self, tmp_path, corpus_file):
        with pytest.raises(CorpusFormatError, match="format"):
            ingest_corpus(corpus_file, "xml")

    def test_missing_file(self, tmp_path):
        with pytest.raises(CorpusFormatError, match="not found"):
            ingest_corpus(tmp_path / "absent.jsonl", "jsonl")

    def test_duplicate_ids_rejected(self, tmp_path):
        rows = [
            {"id": "same", "title": "一", "body": "字。"},
            {"id": "same", "title": "二", "body": "是。"},
        ]
        path = write_jsonl(tmp_path / "dup.jsonl", rows)
        with pytest.raises(CorpusFormatError, match="duplicate"):
            ingest_corpus(path, "jsonl")


class TestSampleTitles:
    def test_sample_distinct(self, corpus_file):
        corpus = ingest_corpus(corpus_file, "jsonl")
        sampled = sample_titles(corpus, 110, seed=42)
        assert len(sampled) == 110
        assert len({poem.id for _, poem in sampled}) == 110

    def test_exhaustive_sample_is_permutation(self, small_db):
        sampled = sample_titles(small_db, len(small_db), seed=1)
        assert sorted(p.id for _, p in sampled) == sorted(p.id for p in small_db)

    def test_deterministic(self, small_db):
        a = sample_titles(small_db, 10, seed=5)
        b = sample_titles(small_db, 10, seed=5)
        assert [p.id for _, p in a] == [p.id for _, p in b]

    def test_count_exceeds_size(self, small_db):
        with pytest.raises(ValueError):
            sample_titles(small_db, len(small_db) + 1, seed=0)


class TestCharMap:
    def test_load_and_apply(self, tmp_path):
        path = tmp_path / "map.tsv"
        path.write_text("雲\t云\n詩\t诗\n", encoding="utf-8")
        mapping = load_char_map(path)
        assert normalize_text("白雲詩", mapping) == "白云诗"

    def test_rejects_multichar_entries(self, tmp_path):
        path = tmp_path / "map.tsv"
        path.write_text("雲云\t云\n", encoding="utf-8")
        with pytest.raises(CorpusFormatError):
            load_char_map(path)
