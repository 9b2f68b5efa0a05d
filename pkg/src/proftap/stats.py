"""Rank statistics over judged poems.

Two primitives drive every report:

* ``auc`` — the probability that a randomly chosen human poem received a
  higher mean human-authorship score than a randomly chosen AI poem, with
  half credit for ties. Computed exactly in rational arithmetic through the
  rank-sum identity, so results are free of float accumulation error.
  0.5 means the judges could not tell the classes apart, 1.0 means perfect
  separation.

* ``wilcoxon_signed_rank`` — paired test on (human score, model score)
  pairs sharing a title. Zero differences are dropped, absolute differences
  get average ranks under ties, and the statistic is W = min(W+, W-). For
  small samples the p-value is exact over all 2^n equiprobable sign
  assignments (computed by counting, identical to full enumeration);
  larger samples use the tie-corrected normal approximation with
  continuity correction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

from .corpus import Source, StructuralFeatures, YanClass

EXACT_THRESHOLD_DEFAULT = 20
MIN_CLASS_SIZE = 10


def auc_fraction(human_scores: Sequence[float], ai_scores: Sequence[float]) -> Fraction:
    """Exact tie-aware AUC with human as the positive class.

    Equals the mean over all (human, AI) score pairs of
    1 if h > a, 1/2 if h == a, 0 if h < a.
    """
    nh, na = len(human_scores), len(ai_scores)
    if nh == 0 or na == 0:
        raise ValueError("auc needs at least one score in each class")
    items = sorted([(s, True) for s in human_scores] + [(s, False) for s in ai_scores])
    total = nh + na
    rank2_human = 0  # sum of doubled midranks over human items
    i = 0
    while i < total:
        j = i
        while j < total and items[j][0] == items[i][0]:
            j += 1
        midrank2 = (i + 1) + j  # doubled average of 1-based positions i+1 .. j
        humans_here = sum(1 for k in range(i, j) if items[k][1])
        rank2_human += midrank2 * humans_here
        i = j
    return Fraction(rank2_human - nh * (nh + 1), 2 * nh * na)


def auc(human_scores: Sequence[float], ai_scores: Sequence[float]) -> float:
    return float(auc_fraction(human_scores, ai_scores))


def _doubled_ranks(abs_diffs: Sequence[float]) -> tuple[list[int], list[int]]:
    """Average ranks of |d| doubled to stay integral, plus tie group sizes."""
    order = sorted(range(len(abs_diffs)), key=lambda k: abs_diffs[k])
    ranks2 = [0] * len(abs_diffs)
    tie_sizes: list[int] = []
    i = 0
    n = len(order)
    while i < n:
        j = i
        while j < n and abs_diffs[order[j]] == abs_diffs[order[i]]:
            j += 1
        midrank2 = (i + 1) + j
        for k in range(i, j):
            ranks2[order[k]] = midrank2
        tie_sizes.append(j - i)
        i = j
    return ranks2, tie_sizes


def signed_rank_counts(ranks2: Sequence[int]) -> list[int]:
    """Distribution of the doubled positive-rank sum over all sign choices.

    ``counts[s]`` is the number of the 2^n sign assignments whose doubled
    W+ equals ``s``. Computed by convolution, which counts every
    assignment exactly once, so the result matches literal enumeration.
    """
    total = sum(ranks2)
    counts = [0] * (total + 1)
    counts[0] = 1
    for r in ranks2:
        for s in range(total, r - 1, -1):
            counts[s] += counts[s - r]
    return counts


def exact_signed_rank_p(
    diffs: Sequence[float], alternative: str = "two-sided"
) -> Fraction:
    """Exact signed-rank p-value for nonzero differences ``diffs``.

    Two-sided extremeness is measured by min(W+, W-): the p-value is the
    probability, over all 2^n sign assignments of the observed rank
    magnitudes, that min(W+, W-) is at or below the observed value.
    """
    n = len(diffs)
    if n == 0:
        return Fraction(1)
    ranks2, _ = _doubled_ranks([abs(d) for d in diffs])
    w2_pos = sum(r for r, d in zip(ranks2, diffs) if d > 0)
    s2 = sum(ranks2)
    counts = signed_rank_counts(ranks2)
    denom = 2**n
    if alternative == "two-sided":
        w2_min = min(w2_pos, s2 - w2_pos)
        num = sum(c for s, c in enumerate(counts) if min(s, s2 - s) <= w2_min)
    elif alternative == "greater":
        num = sum(c for s, c in enumerate(counts) if s >= w2_pos)
    elif alternative == "less":
        num = sum(c for s, c in enumerate(counts) if s <= w2_pos)
    else:
        raise ValueError(f"unknown alternative: {alternative!r}")
    return Fraction(num, denom)


def _norm_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


@dataclass(frozen=True)
class WilcoxonResult:
    w: float
    p: float
    n_nonzero: int
    n_zero: int
    exact: bool


def wilcoxon_signed_rank(
    pairs: Iterable[tuple[float, float]],
    exact_threshold: int = EXACT_THRESHOLD_DEFAULT,
    alternative: str = "two-sided",
) -> WilcoxonResult:
    """Signed-rank test on (human score, model score) pairs.

    Differences are human minus model. ``alternative="greater"`` tests
    whether human scores tend to exceed the model's.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("wilcoxon_signed_rank needs at least one pair")
    diffs = [h - m for h, m in pairs]
    nonzero = [d for d in diffs if d != 0.0]
    n = len(nonzero)
    n_zero = len(diffs) - n
    if n == 0:
        return WilcoxonResult(w=0.0, p=1.0, n_nonzero=0, n_zero=n_zero, exact=True)

    ranks2, tie_sizes = _doubled_ranks([abs(d) for d in nonzero])
    w2_pos = sum(r for r, d in zip(ranks2, nonzero) if d > 0)
    s2 = n * (n + 1)
    w2_min = min(w2_pos, s2 - w2_pos)

    if n <= exact_threshold:
        p = float(exact_signed_rank_p(nonzero, alternative=alternative))
        return WilcoxonResult(w=w2_min / 2.0, p=p, n_nonzero=n, n_zero=n_zero, exact=True)

    mu = n * (n + 1) / 4.0
    tie_term = sum(t**3 - t for t in tie_sizes) / 48.0
    var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term
    sd = math.sqrt(var)
    if alternative == "two-sided":
        z = (w2_min / 2.0 - mu + 0.5) / sd
        p = min(1.0, 2.0 * _norm_cdf(z))
    elif alternative == "greater":
        # small W- is evidence for positive differences
        z = ((s2 - w2_pos) / 2.0 - mu + 0.5) / sd
        p = _norm_cdf(z)
    elif alternative == "less":
        z = (w2_pos / 2.0 - mu + 0.5) / sd
        p = _norm_cdf(z)
    else:
        raise ValueError(f"unknown alternative: {alternative!r}")
    return WilcoxonResult(w=w2_min / 2.0, p=p, n_nonzero=n, n_zero=n_zero, exact=False)


class Criterion(str, Enum):
    LINE_LENGTH = "line-length"
    CHAR_REPETITION = "char-repetition"


class FilterScope(str, Enum):
    AI_ONLY = "ai-only"
    BOTH = "both"


@dataclass(frozen=True)
class ScoredPoem:
    poem_id: str
    source: Source
    title_ref: str
    q: float
    features: StructuralFeatures


@dataclass(frozen=True)
class ModelReport:
    model_id: str
    auc: float
    wilcoxon_w: float
    wilcoxon_p: float
    wilcoxon_exact: bool
    n_pairs: int
    n_unpaired: int
    n_nonzero: int
    filtered_auc: dict[Criterion, float | None]
    yan_auc: dict[YanClass, float | None]
    yan_ratio: dict[YanClass, float]


def _split(scored: Iterable[ScoredPoem], model_id: str) -> tuple[list[ScoredPoem], list[ScoredPoem]]:
    humans, models = [], []
    for s in scored:
        if s.source.is_human:
            humans.append(s)
        elif s.source.model_id == model_id:
            models.append(s)
    if not humans:
        raise ValueError("no human poems in scored collection")
    if not models:
        raise ValueError(f"no poems for model {model_id!r}")
    return humans, models


def _violates(poem: ScoredPoem, criterion: Criterion) -> bool:
    if criterion is Criterion.LINE_LENGTH:
        return not poem.features.line_length_patterned
    return poem.features.has_char_repetition


def filtered_auc(
    scored: Iterable[ScoredPoem],
    model_id: str,
    criterion: Criterion,
    scope: FilterScope = FilterScope.AI_ONLY,
    min_class_size: int = MIN_CLASS_SIZE,
) -> float | None:
    """AUC after removing poems violating ``criterion``.

    Violations are removed from the AI side by default, from both classes
    under ``FilterScope.BOTH``. Returns None when fewer than
    ``min_class_size`` AI poems survive (or no human poems do).
    """
    humans, models = _split(scored, model_id)
    surviving_ai = [s for s in models if not _violates(s, criterion)]
    surviving_human = (
        [s for s in humans if not _violates(s, criterion)]
        if scope is FilterScope.BOTH
        else humans
    )
    if len(surviving_ai) < min_class_size or not surviving_human:
        return None
    return auc([s.q for s in surviving_human], [s.q for s in surviving_ai])


def yan_analysis(
    scored: Iterable[ScoredPoem],
    model_id: str,
    min_class_size: int = MIN_CLASS_SIZE,
) -> tuple[dict[YanClass, float], dict[YanClass, float | None]]:
    """Per-line-length shares and AUCs for one model.

    Returns (ratio, per-class AUC). The ratio covers all three classes and
    sums to 1; the AUC compares model poems of a class against human poems
    of the same class and is absent below ``min_class_size`` model poems
    (or when no human poem shares the class).
    """
    humans, models = _split(scored, model_id)
    ratio: dict[YanClass, float] = {}
    for cls in YanClass:
        ratio[cls] = sum(1 for s in models if s.features.yan_class is cls) / len(models)
    yan_auc: dict[YanClass, float | None] = {}
    for cls in (YanClass.YAN5, YanClass.YAN7):
        model_cls = [s.q for s in models if s.features.yan_class is cls]
        human_cls = [s.q for s in humans if s.features.yan_class is cls]
        if len(model_cls) < min_class_size or not human_cls:
            yan_auc[cls] = None
        else:
            yan_auc[cls] = auc(human_cls, model_cls)
    return ratio, yan_auc


def title_pairs(
    scored: Iterable[ScoredPoem], model_id: str
) -> tuple[list[tuple[float, float]], int]:
    """(human q, model q) pairs matched by title reference.

    Titles present on only one side are dropped; the second return value
    counts those drops.
    """
    humans, models = _split(scored, model_id)
    human_by_title: dict[str, ScoredPoem] = {}
    for s in humans:
        if s.title_ref in human_by_title:
            raise ValueError(f"duplicate human poem for title ref {s.title_ref!r}")
        human_by_title[s.title_ref] = s
    pairs: list[tuple[float, float]] = []
    unpaired = 0
    seen_titles = set()
    for s in models:
        if s.title_ref in seen_titles:
            raise ValueError(
                f"duplicate poem for model {model_id!r}, title ref {s.title_ref!r}"
            )
        seen_titles.add(s.title_ref)
        h = human_by_title.get(s.title_ref)
        if h is None:
            unpaired += 1
        else:
            pairs.append((h.q, s.q))
    unpaired += sum(1 for t in human_by_title if t not in seen_titles)
    return pairs, unpaired


def model_report(
    scored: Iterable[ScoredPoem],
    model_id: str,
    filter_scope: FilterScope = FilterScope.AI_ONLY,
    min_class_size: int = MIN_CLASS_SIZE,
    exact_threshold: int = EXACT_THRESHOLD_DEFAULT,
    alternative: str = "two-sided",
) -> ModelReport:
    """Full per-model report: AUC, paired signed-rank test, filter and yan views."""
    scored = list(scored)
    humans, models = _split(scored, model_id)
    overall = auc([s.q for s in humans], [s.q for s in models])
    pairs, unpaired = title_pairs(scored, model_id)
    if pairs:
        wres = wilcoxon_signed_rank(
            pairs, exact_threshold=exact_threshold, alternative=alternative
        )
    else:
        wres = WilcoxonResult(w=0.0, p=1.0, n_nonzero=0, n_zero=0, exact=True)
    filt = {
        criterion: filtered_auc(scored, model_id, criterion, filter_scope, min_class_size)
        for criterion in Criterion
    }
    ratio, per_yan = yan_analysis(scored, model_id, min_class_size)
    return ModelReport(
        model_id=model_id,
        auc=overall,
        wilcoxon_w=wres.w,
        wilcoxon_p=wres.p,
        wilcoxon_exact=wres.exact,
        n_pairs=len(pairs),
        n_unpaired=unpaired,
        n_nonzero=wres.n_nonzero,
        filtered_auc=filt,
        yan_auc=per_yan,
        yan_ratio=ratio,
    )
