"""Synthetic judges for pipeline validation and power analysis.

Three judge models with one skill knob:

* oracle: rates every human poem 1.0 and every AI poem 0.0.
* random: rates Uniform(0, 1), blind to the true class.
* gaussian: rates clamp(Normal(0.5 + d/2, sigma), 0, 1) for human poems and
  clamp(Normal(0.5 - d/2, sigma), 0, 1) for AI poems. ``d`` is the mean
  separation between classes; d=0 is chance, large d approaches the oracle.

All draws flow from explicit seeds, so identical configurations reproduce
identical rating sets bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from random import Random
from typing import Iterable, Mapping, Sequence

from .judging import (
    AssignmentPlan,
    RatingRecord,
    aggregate_scores,
    plan_assignments,
)
from .randutil import derive_seed
from .stats import auc, wilcoxon_signed_rank

HUMAN = "human"
AI = "ai"


@dataclass(frozen=True)
class JudgeModel:
    kind: str  # "oracle" | "random" | "gaussian"
    d: float = 0.0
    sigma: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("oracle", "random", "gaussian"):
            raise ValueError(f"unknown judge model kind: {self.kind!r}")
        if self.kind == "gaussian":
            if self.d < 0:
                raise ValueError("class separation d must be >= 0")
            if self.sigma <= 0:
                raise ValueError("sigma must be > 0")

    def rating(self, rng: Random, is_human: bool) -> float:
        if self.kind == "oracle":
            return 1.0 if is_human else 0.0
        if self.kind == "random":
            return rng.random()
        mean = 0.5 + self.d / 2.0 if is_human else 0.5 - self.d / 2.0
        return min(1.0, max(0.0, rng.gauss(mean, self.sigma)))


def _deterministic_timestamp(index: int) -> str:
    return datetime.fromtimestamp(index, tz=timezone.utc).isoformat()


def simulate_ratings(
    plan: AssignmentPlan,
    truth: Mapping[str, str],
    judges: Mapping[str, JudgeModel],
) -> list[RatingRecord]:
    """One rating per plan assignment, drawn from each judge's model.

    ``truth`` maps poem id to "human" or "ai". Judges are processed in
    sorted id order and each consumes its own seeded stream, so the output
    is deterministic. Timestamps are synthetic (epoch-indexed) to keep
    artifacts reproducible.
    """
    missing = plan.poem_ids() - set(truth)
    if missing:
        raise ValueError(f"poems in plan missing from truth map: {sorted(missing)[:5]}")
    records: list[RatingRecord] = []
    counter = 0
    for judge_id in sorted(plan.assignments):
        model = judges[judge_id]
        rng = Random(model.seed)
        for poem_id in plan.assignments[judge_id]:
            value = model.rating(rng, truth[poem_id] == HUMAN)
            records.append(
                RatingRecord(judge_id, poem_id, value, _deterministic_timestamp(counter))
            )
            counter += 1
    return records


def make_gaussian_judges(
    count: int, d: float, sigma: float, base_seed: int
) -> dict[str, JudgeModel]:
    return {
        f"judge{i:02d}": JudgeModel(
            "gaussian", d=d, sigma=sigma, seed=derive_seed(base_seed, "judge", i)
        )
        for i in range(1, count + 1)
    }


def make_uniform_judges(count: int, kind: str, base_seed: int) -> dict[str, JudgeModel]:
    return {
        f"judge{i:02d}": JudgeModel(kind, seed=derive_seed(base_seed, "judge", i))
        for i in range(1, count + 1)
    }


@dataclass(frozen=True)
class PowerRow:
    d: float
    mean_auc: float
    rejection_rate: float


def run_replication(
    d: float,
    t_titles: int,
    k_min: int,
    n_judges: int,
    seed: int,
    sigma: float = 0.2,
    kind: str = "gaussian",
    alpha: float = 0.05,
) -> tuple[float, float]:
    """One synthetic end-to-end pass: plan, simulate, aggregate, test.

    Builds a pool of ``t_titles`` human poems plus one AI poem per title,
    runs the production planning/aggregation/statistics code paths, and
    returns (auc, wilcoxon p).
    """
    human_ids = [f"h{j:04d}" for j in range(t_titles)]
    ai_ids = [f"a{j:04d}" for j in range(t_titles)]
    truth = {pid: HUMAN for pid in human_ids}
    truth.update({pid: AI for pid in ai_ids})
    if kind == "gaussian":
        judges = make_gaussian_judges(n_judges, d, sigma, derive_seed(seed, "judges"))
    else:
        judges = make_uniform_judges(n_judges, kind, derive_seed(seed, "judges"))
    plan = plan_assignments(
        human_ids + ai_ids, sorted(judges), k_min, derive_seed(seed, "plan")
    )
    scores = aggregate_scores(simulate_ratings(plan, truth, judges))
    human_q = [scores[pid].q for pid in human_ids]
    ai_q = [scores[pid].q for pid in ai_ids]
    pairs = list(zip(human_q, ai_q))
    result = wilcoxon_signed_rank(pairs)
    return auc(human_q, ai_q), result.p


def power_analysis(
    d_grid: Sequence[float],
    t_titles: int,
    k_min: int,
    n_judges: int,
    alpha: float,
    replications: int,
    seed: int,
    sigma: float = 0.2,
) -> list[PowerRow]:
    """Mean AUC and null-rejection rate over a grid of judge skill levels.

    Replication ``r`` reuses the same derived seed across all ``d`` values
    (common random numbers), which makes the AUC trend in ``d`` smooth.
    """
    if replications < 1:
        raise ValueError("replications must be >= 1")
    if not d_grid:
        raise ValueError("empty d grid")
    if any(d < 0 for d in d_grid):
        raise ValueError("d values must be >= 0")
    rows: list[PowerRow] = []
    for d in d_grid:
        aucs: list[float] = []
        rejections = 0
        for rep in range(replications):
            rep_seed = derive_seed(seed, rep)
            auc_value, p_value = run_replication(
                d, t_titles, k_min, n_judges, rep_seed, sigma=sigma
            )
            aucs.append(auc_value)
            if p_value < alpha:
                rejections += 1
        rows.append(
            PowerRow(
                d=d,
                mean_auc=sum(aucs) / len(aucs),
                rejection_rate=rejections / replications,
            )
        )
    return rows


def power_rows_csv(rows: Iterable[PowerRow]) -> str:
    lines = ["d,mean_auc,rejection_rate"]
    for row in rows:
        lines.append(f"{row.d!r},{row.mean_auc!r},{row.rejection_rate!r}")
    return "\n".join(lines) + "\n"
