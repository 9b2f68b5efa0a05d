"""Exact consecutive-line duplicate detection against a reference database.

A generated poem counts as duplicative when at least two consecutive lines
match database lines exactly (after the same normalization the corpus
module applies). Two match modes:

* ``SAME_POEM`` (default): the two query lines must match two consecutive
  lines of a single database poem, in order. This catches recitation.
* ``ANY_LINE``: each of the two consecutive query lines matches some
  database line, not necessarily from the same poem. Stricter as a filter.

Every SAME_POEM hit is also an ANY_LINE hit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

from .corpus import Corpus, Poem, PoemLines, segment_lines


class MatchMode(str, Enum):
    SAME_POEM = "same-poem"
    ANY_LINE = "any-line"


@dataclass
class LineIndex:
    """Immutable-after-build multimap from line text to its occurrences."""

    entries: dict[str, set[tuple[str, int]]] = field(default_factory=dict)
    poem_line_counts: dict[str, int] = field(default_factory=dict)

    @property
    def total_postings(self) -> int:
        return sum(len(v) for v in self.entries.values())

    def occurrences(self, line: str) -> set[tuple[str, int]]:
        return self.entries.get(line, set())


def build_index(database: Corpus, mapping: Mapping[str, str] | None = None) -> LineIndex:
    """Index every line of every database poem with its position."""
    if len(database) == 0:
        raise ValueError("empty database")
    index = LineIndex()
    for poem in database:
        lines = segment_lines(poem, mapping).lines
        index.poem_line_counts[poem.id] = len(lines)
        for pos, line in enumerate(lines):
            index.entries.setdefault(line, set()).add((poem.id, pos))
    return index


@dataclass(frozen=True)
class MatchEvidence:
    query_line_start: int
    db_poem_id: str
    db_line_start: int
    length: int
    mode: MatchMode

    def to_json(self) -> dict:
        return {
            "query_line_start": self.query_line_start,
            "db_poem_id": self.db_poem_id,
            "db_line_start": self.db_line_start,
            "length": self.length,
            "mode": self.mode.value,
        }


def _postings(index: LineIndex, line: str, exclude_id: str | None) -> set[tuple[str, int]]:
    occ = index.occurrences(line)
    if exclude_id is None:
        return occ
    return {(pid, pos) for pid, pos in occ if pid != exclude_id}


def find_duplication(
    poem: Poem | PoemLines,
    index: LineIndex,
    mode: MatchMode = MatchMode.SAME_POEM,
    exclude_id: str | None = None,
    mapping: Mapping[str, str] | None = None,
) -> MatchEvidence | None:
    """First run of >= 2 consecutive query lines matching the database.

    Returns the earliest match in query order (ties broken by smallest
    (poem id, position) so verdicts do not depend on database ingestion
    order), or None when the poem is clean. ``exclude_id`` suppresses a
    poem's matches against its own database entry.
    """
    lines = poem.lines if isinstance(poem, PoemLines) else segment_lines(poem, mapping).lines
    if mode is MatchMode.SAME_POEM:
        return _find_same_poem(lines, index, exclude_id)
    if mode is MatchMode.ANY_LINE:
        return _find_any_line(lines, index, exclude_id)
    raise ValueError(f"unknown match mode: {mode!r}")


def _find_same_poem(
    lines: tuple[str, ...], index: LineIndex, exclude_id: str | None
) -> MatchEvidence | None:
    for i in range(len(lines) - 1):
        first = _postings(index, lines[i], exclude_id)
        if not first:
            continue
        second = index.occurrences(lines[i + 1])
        candidates = sorted(
            (pid, pos) for pid, pos in first if (pid, pos + 1) in second
        )
        if not candidates:
            continue
        pid, pos = candidates[0]
        length = 2
        while (
            i + length < len(lines)
            and (pid, pos + length) in index.occurrences(lines[i + length])
        ):
            length += 1
        return MatchEvidence(
            query_line_start=i,
            db_poem_id=pid,
            db_line_start=pos,
            length=length,
            mode=MatchMode.SAME_POEM,
        )
    return None


def _find_any_line(
    lines: tuple[str, ...], index: LineIndex, exclude_id: str | None
) -> MatchEvidence | None:
    matched = [bool(_postings(index, line, exclude_id)) for line in lines]
    for i in range(len(lines) - 1):
        if not (matched[i] and matched[i + 1]):
            continue
        length = 2
        while i + length < len(lines) and matched[i + length]:
            length += 1
        pid, pos = min(_postings(index, lines[i], exclude_id))
        return MatchEvidence(
            query_line_start=i,
            db_poem_id=pid,
            db_line_start=pos,
            length=length,
            mode=MatchMode.ANY_LINE,
        )
    return None
