"""Poem corpora: ingestion, line segmentation, and structural features.

A poem body is segmented into lines on the hard delimiter set
``，。！？；：`` plus the newline. The enumeration comma ``、`` is *not* a
line delimiter: it marks an in-line list, so the characters around it stay
in one line. All other punctuation, symbols, and whitespace are treated as
in-line noise and removed before segmentation.

Line length (the "yan" of a poem) is counted in Unicode scalar values after
that removal.
"""

from __future__ import annotations

import csv
import json
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from random import Random
from typing import Iterable, Iterator, Mapping

from .errors import CorpusFormatError, SegmentationError

HARD_DELIMITERS = "，。！？；："
FORM_HINTS = ("gufeng", "lushi", "jueju", "other")


def normalize_text(text: str, mapping: Mapping[str, str] | None = None) -> str:
    """Normalize whitespace and optionally apply a character map.

    CR/LF variants become ``\\n`` and the full-width space (U+3000) is
    removed. With no mapping this is the identity otherwise. A mapping is
    applied character-wise (single char to single char), which is how a
    Traditional-to-Simplified table plugs in.
    """
    text = text.replace("\r\n", "\n").replace("\r", "\n").replace("　", "")
    if mapping:
        text = "".join(mapping.get(ch, ch) for ch in text)
    return text


def load_char_map(path: str | Path) -> dict[str, str]:
    """Load a two-column TSV character map (``from<TAB>to`` per line)."""
    table: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not raw.strip():
            continue
        parts = raw.split("\t")
        if len(parts) != 2 or len(parts[0]) != 1 or len(parts[1]) != 1:
            raise CorpusFormatError(
                f"{path}: line {lineno}: expected single-char FROM<TAB>TO, got {raw!r}"
            )
        table[parts[0]] = parts[1]
    return table


def _is_soft_punct(ch: str, delimiters: str = HARD_DELIMITERS) -> bool:
    # Hard delimiters and newlines are structural, everything else that is
    # punctuation/symbol/separator/control counts as in-line noise.
    if ch == "\n" or ch in delimiters:
        return False
    if ch.isspace():
        return True
    return unicodedata.category(ch)[0] in ("P", "S", "Z", "C")


def normalize_body(
    text: str,
    mapping: Mapping[str, str] | None = None,
    delimiters: str = HARD_DELIMITERS,
) -> str:
    """Body text reduced to line content, hard delimiters, and newlines."""
    return "".join(
        ch for ch in normalize_text(text, mapping) if not _is_soft_punct(ch, delimiters)
    )


@dataclass(frozen=True)
class Source:
    """Authorship of a poem: the human corpus or one generating model."""

    kind: str
    model_id: str | None = None

    @classmethod
    def human(cls) -> "Source":
        return cls("human")

    @classmethod
    def model(cls, model_id: str) -> "Source":
        return cls("model", model_id)

    @property
    def is_human(self) -> bool:
        return self.kind == "human"

    def encode(self) -> str:
        return "human" if self.is_human else f"model:{self.model_id}"

    @classmethod
    def decode(cls, text: str) -> "Source":
        if text == "human":
            return cls.human()
        if text.startswith("model:"):
            return cls.model(text.split(":", 1)[1])
        raise ValueError(f"unknown source encoding: {text!r}")


@dataclass(frozen=True)
class Poem:
    id: str
    title: str
    body: str
    source: Source
    form_hint: str | None = None

    def __post_init__(self) -> None:
        if not self.title:
            raise ValueError(f"poem {self.id!r}: empty title")
        if not normalize_text(self.body).strip():
            raise ValueError(f"poem {self.id!r}: empty body after normalization")
        if self.form_hint is not None and self.form_hint not in FORM_HINTS:
            raise ValueError(f"poem {self.id!r}: unknown form hint {self.form_hint!r}")


@dataclass(frozen=True)
class PoemLines:
    """Segmented poem body.

    ``raw_delimiters`` has one entry more than ``lines``: entry ``i``
    precedes line ``i`` and the final entry trails the last line, so
    interleaving both reconstructs ``normalized_body`` exactly.
    """

    poem_id: str
    lines: tuple[str, ...]
    raw_delimiters: tuple[str, ...]
    normalized_body: str

    def reconstruct(self) -> str:
        parts = [self.raw_delimiters[0]]
        for line, delim in zip(self.lines, self.raw_delimiters[1:]):
            parts.append(line)
            parts.append(delim)
        return "".join(parts)

    @property
    def line_lengths(self) -> tuple[int, ...]:
        return tuple(len(line) for line in self.lines)


def segment_lines(
    poem: Poem,
    mapping: Mapping[str, str] | None = None,
    delimiters: str = HARD_DELIMITERS,
) -> PoemLines:
    """Split a poem body into punctuation-free lines.

    ``delimiters`` is the set of line-ending characters (newline is always
    one). Raises :class:`SegmentationError` when nothing but punctuation
    remains.
    """
    normalized = normalize_body(poem.body, mapping, delimiters)
    lines: list[str] = []
    delims: list[str] = [""]
    buf: list[str] = []
    for ch in normalized:
        if ch == "\n" or ch in delimiters:
            if buf:
                lines.append("".join(buf))
                buf.clear()
                delims.append(ch)
            else:
                delims[-1] += ch
        else:
            buf.append(ch)
    if buf:
        lines.append("".join(buf))
        delims.append("")
    if not lines:
        raise SegmentationError(
            f"poem {poem.id!r}: no line content after punctuation removal"
        )
    return PoemLines(
        poem_id=poem.id,
        lines=tuple(lines),
        raw_delimiters=tuple(delims),
        normalized_body=normalized,
    )


class YanClass(str, Enum):
    YAN5 = "yan5"
    YAN7 = "yan7"
    OTHER = "other"


def classify_yan(lines: PoemLines) -> YanClass:
    """Yan5 when every line has 5 characters, Yan7 for 7, Other otherwise."""
    lengths = set(lines.line_lengths)
    if lengths == {5}:
        return YanClass.YAN5
    if lengths == {7}:
        return YanClass.YAN7
    return YanClass.OTHER


def detect_char_repetition(lines: PoemLines, scope: str = "body") -> bool:
    """True when some character occurs at least twice.

    ``scope="body"`` counts across all lines (the default: classical
    regulated verse discourages any repeat within a poem); ``scope="line"``
    only flags repeats inside a single line.
    """
    if scope == "body":
        counts = Counter("".join(lines.lines))
        return any(n >= 2 for n in counts.values())
    if scope == "line":
        return any(
            any(n >= 2 for n in Counter(line).values()) for line in lines.lines
        )
    raise ValueError(f"unknown repetition scope: {scope!r}")


@dataclass(frozen=True)
class StructuralFeatures:
    poem_id: str
    yan_class: YanClass
    has_char_repetition: bool
    line_length_patterned: bool
    line_lengths: tuple[int, ...]


def compute_features(lines: PoemLines, repetition_scope: str = "body") -> StructuralFeatures:
    lengths = lines.line_lengths
    return StructuralFeatures(
        poem_id=lines.poem_id,
        yan_class=classify_yan(lines),
        has_char_repetition=detect_char_repetition(lines, scope=repetition_scope),
        line_length_patterned=len(set(lengths)) == 1,
        line_lengths=lengths,
    )


@dataclass
class Corpus:
    poems: list[Poem]
    source_label: str = ""
    _by_id: dict[str, Poem] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not self.poems:
            raise CorpusFormatError(f"corpus {self.source_label!r}: no poems")
        self._by_id = {}
        for poem in self.poems:
            if poem.id in self._by_id:
                raise CorpusFormatError(
                    f"corpus {self.source_label!r}: duplicate poem id {poem.id!r}"
                )
            self._by_id[poem.id] = poem

    def __len__(self) -> int:
        return len(self.poems)

    def __iter__(self) -> Iterator[Poem]:
        return iter(self.poems)

    def get(self, poem_id: str) -> Poem:
        return self._by_id[poem_id]

    def __contains__(self, poem_id: str) -> bool:
        return poem_id in self._by_id


def _form_hint(raw: str | None) -> str | None:
    if raw is None or raw == "":
        return None
    return raw if raw in FORM_HINTS else "other"


def _record_to_poem(record: dict, recno: int, where: str) -> Poem:
    title = record.get("title")
    body = record.get("body")
    if not isinstance(title, str) or not title:
        raise CorpusFormatError(f"{where}: record {recno}: missing or empty title")
    if not isinstance(body, str) or not normalize_text(body).strip():
        raise CorpusFormatError(f"{where}: record {recno}: missing or empty body")
    poem_id = record.get("id") or f"p{recno:06d}"
    return Poem(
        id=str(poem_id),
        title=title,
        body=body,
        source=Source.human(),
        form_hint=_form_hint(record.get("form")),
    )


def ingest_corpus(path: str | Path, format: str = "jsonl") -> Corpus:
    """Read a poem corpus file.

    Formats: ``jsonl`` (one object per line, keys ``title``/``body``
    required, ``id``/``author``/``dynasty``/``form`` optional) and ``csv``
    (header ``id,title,body``). Malformed records raise
    :class:`CorpusFormatError` naming the record position.
    """
    path = Path(path)
    if not path.exists():
        raise CorpusFormatError(f"corpus file not found: {path}")
    if format == "jsonl":
        poems = list(_iter_jsonl(path))
    elif format == "csv":
        poems = list(_iter_csv(path))
    else:
        raise CorpusFormatError(f"unknown corpus format: {format!r}")
    return Corpus(poems=poems, source_label=path.name)


def _iter_jsonl(path: Path) -> Iterable[Poem]:
    with path.open(encoding="utf-8") as fh:
        recno = 0
        for lineno, raw in enumerate(fh, 1):
            if not raw.strip():
                continue
            recno += 1
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path.name}: line {lineno}: bad JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise CorpusFormatError(f"{path.name}: line {lineno}: expected an object")
            yield _record_to_poem(record, recno, path.name)


def _iter_csv(path: Path) -> Iterable[Poem]:
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"id", "title", "body"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise CorpusFormatError(
                f"{path.name}: CSV header must contain {sorted(required)}"
            )
        for recno, row in enumerate(reader, 1):
            yield _record_to_poem(row, recno, path.name)


def sample_titles(corpus: Corpus, count: int, seed: int) -> list[tuple[str, Poem]]:
    """Sample ``count`` distinct poems uniformly without replacement.

    Returns (title, poem) pairs in sampled order; the same (corpus, count,
    seed) always yields the same sample.
    """
    if count > len(corpus):
        raise ValueError(f"cannot sample {count} titles from {len(corpus)} poems")
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = Random(seed)
    picks = rng.sample(range(len(corpus)), count)
    return [(corpus.poems[i].title, corpus.poems[i]) for i in picks]
