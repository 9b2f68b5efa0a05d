"""Independent brute-force oracles the fast implementations are checked against.

Everything here trades speed for obviousness: pairwise loops, literal
enumeration of sign assignments, nested scans. None of it shares code with
the package under test.
"""

from __future__ import annotations

import itertools
from collections import Counter
from fractions import Fraction
from random import Random

import numpy as np


def pairwise_auc(human: list[float], ai: list[float]) -> Fraction:
    """All-pairs AUC with half credit for ties, in exact rationals."""
    total = Fraction(0)
    for h in human:
        for a in ai:
            if h > a:
                total += 1
            elif h == a:
                total += Fraction(1, 2)
    return total / (len(human) * len(ai))


def _avg_ranks(values: list[float]) -> list[Fraction]:
    """Average ranks (1-based) with ties sharing the mean rank."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks: list[Fraction] = [Fraction(0)] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j < len(order) and values[order[j]] == values[order[i]]:
            j += 1
        avg = Fraction(i + 1 + j, 2)
        for k in range(i, j):
            ranks[order[k]] = avg
        i = j
    return ranks


def signed_rank_p_enumerated(diffs: list[float], alternative: str = "two-sided") -> Fraction:
    """Exact signed-rank p by literally walking all 2^n sign assignments.

    ``diffs`` must already exclude zeros. Two-sided extremeness is
    min(W+, W-) at or below the observed minimum.
    """
    n = len(diffs)
    if n == 0:
        return Fraction(1)
    ranks = _avg_ranks([abs(d) for d in diffs])
    total = sum(ranks)
    w_pos = sum(r for r, d in zip(ranks, diffs) if d > 0)
    w_obs_min = min(w_pos, total - w_pos)
    hits = 0
    for signs in itertools.product((0, 1), repeat=n):
        w = sum(r for r, s in zip(ranks, signs) if s)
        if alternative == "two-sided":
            if min(w, total - w) <= w_obs_min:
                hits += 1
        elif alternative == "greater":
            if w >= w_pos:
                hits += 1
        else:
            if w <= w_pos:
                hits += 1
    return Fraction(hits, 2**n)


def signed_rank_p_enumerated_np(diffs: list[float]) -> float:
    """Two-sided exact p via numpy-vectorized full enumeration.

    Usable up to n ~ 22; exists so the n = 20 check still enumerates every
    assignment instead of trusting the implementation's counting.
    """
    n = len(diffs)
    ranks = _avg_ranks([abs(d) for d in diffs])
    ranks2 = np.array([int(r * 2) for r in ranks], dtype=np.int64)
    total2 = int(ranks2.sum())
    w2_pos = sum(int(r * 2) for r, d in zip(ranks, diffs) if d > 0)
    w2_obs = min(w2_pos, total2 - w2_pos)
    assignments = np.arange(2**n, dtype=np.uint64)
    w2 = np.zeros(2**n, dtype=np.int64)
    for i in range(n):
        bit = (assignments >> np.uint64(i)) & np.uint64(1)
        w2 += bit.astype(np.int64) * ranks2[i]
    extreme = np.minimum(w2, total2 - w2) <= w2_obs
    return float(extreme.sum() / 2**n)


def naive_duplication(
    query_lines: list[str],
    db_lines_by_poem: dict[str, list[str]],
    mode: str,
    exclude_id: str | None = None,
) -> bool:
    """Nested-scan duplicate verdict, no index involved."""
    for i in range(len(query_lines) - 1):
        a, b = query_lines[i], query_lines[i + 1]
        if mode == "same-poem":
            for pid, lines in db_lines_by_poem.items():
                if pid == exclude_id:
                    continue
                for pos in range(len(lines) - 1):
                    if lines[pos] == a and lines[pos + 1] == b:
                        return True
        else:
            def hit(line: str) -> bool:
                return any(
                    line in lines
                    for pid, lines in db_lines_by_poem.items()
                    if pid != exclude_id
                )
            if hit(a) and hit(b):
                return True
    return False


def has_repeat_by_histogram(lines: list[str]) -> bool:
    counts = Counter()
    for line in lines:
        counts.update(line)
    return any(v >= 2 for v in counts.values())


# A compact CJK alphabet for synthetic fixtures, disjoint from the stub
# adapter's alphabet so synthetic poems never collide with database lines.
CJK_ALPHABET = [chr(0x5200 + i) for i in range(500)]


def synthetic_poem_body(rng: Random, n_lines: int = 4, length: int = 5) -> str:
    lines = []
    for i in range(n_lines):
        text = "".join(rng.choice(CJK_ALPHABET) for _ in range(length))
        lines.append(text + ("。" if i % 2 else "，"))
    return "".join(lines)


def synthetic_corpus_rows(
    n: int, seed: int, n_lines: int = 4, length: int = 5, varied: bool = False
) -> list[dict]:
    rng = Random(seed)
    rows = []
    for i in range(n):
        title = "".join(rng.choice(CJK_ALPHABET) for _ in range(3))
        if varied:
            n_lines = rng.choice([4, 4, 8])
            length = rng.choice([5, 5, 7, 7, 6])
        rows.append(
            {
                "id": f"db{i:06d}",
                "title": title,
                "body": synthetic_poem_body(rng, n_lines=n_lines, length=length),
            }
        )
    return rows
