"""Human- and machine-readable report output.

Three aligned-column Markdown tables mirror the analysis views: the
summary (AUC plus paired-test p per model), the criterion-filtered AUCs,
and the per-line-length AUCs. Line-length shares go out as CSV for
external plotting. ``reports_to_json`` carries everything for machines.
"""

from __future__ import annotations

import math
from typing import Iterable, Mapping, Sequence

from .corpus import YanClass
from .stats import Criterion, ModelReport, ScoredPoem

ABSENT = "-"


def fmt_auc(value: float | None) -> str:
    return ABSENT if value is None else f"{value:.3f}"


def fmt_p(p: float) -> str:
    """Compact p-value: 3 decimals, scientific below 1e-3, floor at 1e-8."""
    if p < 1e-8:
        return "<1e-8"
    if p < 1e-3:
        exponent = math.floor(math.log10(p))
        mantissa = round(p / 10**exponent)
        if mantissa == 10:
            mantissa, exponent = 1, exponent + 1
        return f"{mantissa}e{exponent}"
    return f"{p:.3f}"


def _markdown_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [len(h) for h in header]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def line(cells: Sequence[str]) -> str:
        return "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |"
    out = [line(header), "| " + " | ".join("-" * w for w in widths) + " |"]
    out.extend(line(row) for row in rows)
    return "\n".join(out) + "\n"


def _sorted_reports(reports: Iterable[ModelReport]) -> list[ModelReport]:
    return sorted(reports, key=lambda r: (r.auc, r.model_id))


def render_summary_table(
    reports: Iterable[ModelReport],
    prm_labels: Mapping[str, str] | None = None,
) -> str:
    """Per-model AUC and paired-test p, best (lowest AUC) model first."""
    prm_labels = prm_labels or {}
    rows = [
        [
            r.model_id,
            prm_labels.get(r.model_id, "N/A"),
            fmt_auc(r.auc),
            fmt_p(r.wilcoxon_p),
        ]
        for r in _sorted_reports(reports)
    ]
    return _markdown_table(["Model", "#Prm", "AUC", "W.T. p"], rows)


def render_filter_table(reports: Iterable[ModelReport]) -> str:
    """AUC after removing poems violating each criterion."""
    rows = [
        [
            r.model_id,
            fmt_auc(r.filtered_auc.get(Criterion.LINE_LENGTH)),
            fmt_auc(r.filtered_auc.get(Criterion.CHAR_REPETITION)),
        ]
        for r in _sorted_reports(reports)
    ]
    return _markdown_table(["Model", "Lin. Len.", "Cha. Rep."], rows)


def render_yan_table(reports: Iterable[ModelReport]) -> str:
    """AUC within each line-length category."""
    rows = [
        [
            r.model_id,
            fmt_auc(r.yan_auc.get(YanClass.YAN5)),
            fmt_auc(r.yan_auc.get(YanClass.YAN7)),
        ]
        for r in _sorted_reports(reports)
    ]
    return _markdown_table(["Model", "5-yan", "7-yan"], rows)


def yan_ratio_rows(scored: Iterable[ScoredPoem]) -> list[tuple[str, float, float, float]]:
    """Line-length class shares per source: human first, then models."""
    by_source: dict[str, list[ScoredPoem]] = {}
    for s in scored:
        label = "human" if s.source.is_human else s.source.model_id
        by_source.setdefault(label, []).append(s)
    labels = ["human"] if "human" in by_source else []
    labels += sorted(k for k in by_source if k != "human")
    rows = []
    for label in labels:
        poems = by_source[label]
        counts = {cls: 0 for cls in YanClass}
        for s in poems:
            counts[s.features.yan_class] += 1
        total = len(poems)
        rows.append(
            (
                label,
                counts[YanClass.YAN5] / total,
                counts[YanClass.YAN7] / total,
                counts[YanClass.OTHER] / total,
            )
        )
    return rows


def yan_ratio_csv(scored: Iterable[ScoredPoem]) -> str:
    lines = ["model,yan5,yan7,other"]
    for label, y5, y7, other in yan_ratio_rows(scored):
        lines.append(f"{label},{y5:.4f},{y7:.4f},{other:.4f}")
    return "\n".join(lines) + "\n"


def reports_to_json(
    reports: Iterable[ModelReport],
    prm_labels: Mapping[str, str] | None = None,
) -> dict:
    prm_labels = prm_labels or {}
    out = []
    for r in _sorted_reports(reports):
        out.append(
            {
                "model_id": r.model_id,
                "prm": prm_labels.get(r.model_id),
                "auc": r.auc,
                "wilcoxon": {
                    "w": r.wilcoxon_w,
                    "p": r.wilcoxon_p,
                    "exact": r.wilcoxon_exact,
                    "n_pairs": r.n_pairs,
                    "n_unpaired": r.n_unpaired,
                    "n_nonzero": r.n_nonzero,
                },
                "filtered_auc": {c.value: v for c, v in r.filtered_auc.items()},
                "yan_auc": {c.value: v for c, v in r.yan_auc.items()},
                "yan_ratio": {c.value: v for c, v in r.yan_ratio.items()},
            }
        )
    return {"models": out}
