import json
import sys
from pathlib import Path
from random import Random

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for oracles.py

from oracles import synthetic_corpus_rows

from proftap.corpus import Corpus, Poem, Source


@pytest.fixture
def night_snow() -> Poem:
    return Poem(
        id="ns1",
        title="夜雪",
        body="已觉衾枕冷，转见窗户明。积雪阴云尽，寒飙曙色清。",
        source=Source.human(),
    )


@pytest.fixture
def two_line_poem() -> Poem:
    return Poem(
        id="dg1",
        title="登鹳雀楼",
        body="白日依山尽。\n黄河入海流。",
        source=Source.human(),
    )


def corpus_from_rows(rows: list[dict], label: str = "synthetic") -> Corpus:
    poems = [
        Poem(id=r["id"], title=r["title"], body=r["body"], source=Source.human())
        for r in rows
    ]
    return Corpus(poems=poems, source_label=label)


@pytest.fixture
def small_db() -> Corpus:
    return corpus_from_rows(synthetic_corpus_rows(50, seed=7))


def write_jsonl(path: Path, rows: list[dict]) -> Path:
    path.write_text(
        "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows),
        encoding="utf-8",
    )
    return path


@pytest.fixture
def corpus_file(tmp_path) -> Path:
    return write_jsonl(tmp_path / "corpus.jsonl", synthetic_corpus_rows(200, seed=11))


@pytest.fixture
def rng() -> Random:
    return Random(20240901)
