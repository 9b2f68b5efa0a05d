"""Blind judging: assignment planning, rating records, aggregation.

The plan distributes the mixed poem pool over judges so that every poem is
rated by at least ``k_min`` distinct judges while judge workloads stay
within one assignment of each other. Each judge reads their poems in a
private seeded shuffle, so presentation order carries no signal.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from random import Random
from typing import Iterable, Mapping, Sequence

from .errors import DuplicateRatingError, PlanError, RatingError
from .randutil import derive_seed


@dataclass(frozen=True)
class Judge:
    judge_id: str
    access_token: str
    display_name: str | None = None


@dataclass
class AssignmentPlan:
    assignments: dict[str, list[str]]
    coverage: dict[str, set[str]]
    k_min: int
    seed: int

    def validate(self) -> None:
        derived: dict[str, set[str]] = {}
        for judge_id, poem_ids in self.assignments.items():
            if len(set(poem_ids)) != len(poem_ids):
                raise PlanError(f"judge {judge_id!r} assigned a poem twice")
            for pid in poem_ids:
                derived.setdefault(pid, set()).add(judge_id)
        if derived != self.coverage:
            raise PlanError("coverage map does not match assignments")
        for pid, judges in self.coverage.items():
            if len(judges) < self.k_min:
                raise PlanError(f"poem {pid!r} covered by {len(judges)} < {self.k_min} judges")

    def loads(self) -> dict[str, int]:
        return {j: len(p) for j, p in self.assignments.items()}

    def poem_ids(self) -> set[str]:
        return set(self.coverage)

    def to_json(self) -> dict:
        return {
            "k_min": self.k_min,
            "seed": self.seed,
            "assignments": {j: list(p) for j, p in sorted(self.assignments.items())},
            "coverage": {p: sorted(js) for p, js in sorted(self.coverage.items())},
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "AssignmentPlan":
        plan = cls(
            assignments={j: list(p) for j, p in data["assignments"].items()},
            coverage={p: set(js) for p, js in data["coverage"].items()},
            k_min=int(data["k_min"]),
            seed=int(data["seed"]),
        )
        plan.validate()
        return plan


def plan_assignments(
    poem_ids: Sequence[str],
    judges: Sequence[Judge] | Sequence[str],
    k_min: int,
    seed: int,
) -> AssignmentPlan:
    """Randomized poem-to-judge assignment with k-coverage and balanced loads.

    Each poem goes to exactly ``k_min`` distinct judges, chosen greedily as
    the currently least-loaded ones (random tie-break), which keeps the
    spread of judge loads at most 1. Deterministic in ``seed``.
    """
    judge_ids = [j.judge_id if isinstance(j, Judge) else j for j in judges]
    if len(set(judge_ids)) != len(judge_ids):
        raise PlanError("duplicate judge ids")
    if len(set(poem_ids)) != len(poem_ids):
        raise PlanError("duplicate poem ids")
    if k_min < 1:
        raise PlanError("k_min must be >= 1")
    if len(judge_ids) < k_min:
        raise PlanError(
            f"{len(judge_ids)} judges cannot give {k_min}-coverage without repeats"
        )

    rng = Random(seed)
    pool = list(poem_ids)
    rng.shuffle(pool)
    loads = {j: 0 for j in judge_ids}
    assignments: dict[str, list[str]] = {j: [] for j in judge_ids}
    coverage: dict[str, set[str]] = {}
    for pid in pool:
        ranked = sorted(judge_ids, key=lambda j: (loads[j], rng.random()))
        chosen = ranked[:k_min]
        for j in chosen:
            assignments[j].append(pid)
            loads[j] += 1
        coverage[pid] = set(chosen)

    for judge_id in sorted(assignments):
        Random(derive_seed(seed, "judge-order", judge_id)).shuffle(assignments[judge_id])

    plan = AssignmentPlan(assignments=assignments, coverage=coverage, k_min=k_min, seed=seed)
    plan.validate()
    return plan


@dataclass(frozen=True)
class RatingRecord:
    judge_id: str
    poem_id: str
    probability: float
    submitted_at: str

    def to_json(self) -> dict:
        return {
            "judge_id": self.judge_id,
            "poem_id": self.poem_id,
            "probability": self.probability,
            "submitted_at": self.submitted_at,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "RatingRecord":
        return cls(
            judge_id=str(data["judge_id"]),
            poem_id=str(data["poem_id"]),
            probability=float(data["probability"]),
            submitted_at=str(data["submitted_at"]),
        )


class RatingStore:
    """Rating records with an append-only JSONL log for crash safety.

    Every accepted record is appended and flushed before the call returns;
    a snapshot of all records is rewritten every ``snapshot_every`` accepts.
    Duplicate submissions raise and leave the store unchanged.
    """

    def __init__(
        self,
        plan: AssignmentPlan | None = None,
        log_path: str | Path | None = None,
        snapshot_every: int = 50,
    ):
        self.plan = plan
        self.log_path = Path(log_path) if log_path else None
        self.snapshot_every = snapshot_every
        self._records: dict[tuple[str, str], RatingRecord] = {}
        self._since_snapshot = 0
        if self.log_path and self.log_path.exists():
            self._replay_log()

    def _replay_log(self) -> None:
        assert self.log_path is not None
        for raw in self.log_path.read_text(encoding="utf-8").splitlines():
            if not raw.strip():
                continue
            row = json.loads(raw)
            if "void" in row:
                self._records.pop((row["void"]["judge_id"], row["void"]["poem_id"]), None)
            else:
                record = RatingRecord.from_json(row)
                self._records[(record.judge_id, record.poem_id)] = record

    def __len__(self) -> int:
        return len(self._records)

    def records(self) -> list[RatingRecord]:
        return [self._records[k] for k in sorted(self._records)]

    def rated_by(self, judge_id: str) -> set[str]:
        return {p for (j, p) in self._records if j == judge_id}

    def has(self, judge_id: str, poem_id: str) -> bool:
        return (judge_id, poem_id) in self._records

    def record(
        self,
        judge_id: str,
        poem_id: str,
        probability: float,
        submitted_at: str | None = None,
    ) -> RatingRecord:
        if not (0.0 <= probability <= 1.0) or math.isnan(probability):
            raise RatingError(f"probability {probability!r} outside [0, 1]")
        if self.plan is not None:
            assigned = self.plan.assignments.get(judge_id)
            if assigned is None or poem_id not in assigned:
                raise RatingError(f"poem {poem_id!r} not assigned to judge {judge_id!r}")
        if (judge_id, poem_id) in self._records:
            raise DuplicateRatingError(
                f"judge {judge_id!r} already rated poem {poem_id!r}"
            )
        if submitted_at is None:
            submitted_at = datetime.now(timezone.utc).isoformat()
        rec = RatingRecord(judge_id, poem_id, probability, submitted_at)
        self._records[(judge_id, poem_id)] = rec
        self._append_to_log(rec)
        return rec

    def void(self, judge_id: str, poem_id: str) -> bool:
        """Discard a stored rating so the poem is offered to the judge again.

        Admin-level escape hatch for operational mistakes; the removal is
        itself an append-only log entry, so replay stays consistent.
        """
        if (judge_id, poem_id) not in self._records:
            return False
        del self._records[(judge_id, poem_id)]
        self._append_row({"void": {"judge_id": judge_id, "poem_id": poem_id}})
        return True

    def _append_to_log(self, rec: RatingRecord) -> None:
        self._append_row(rec.to_json())

    def _append_row(self, row: dict) -> None:
        if self.log_path is None:
            return
        with self.log_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
            fh.flush()
        self._since_snapshot += 1
        if self._since_snapshot >= self.snapshot_every:
            self.write_snapshot(self.log_path.with_suffix(".snapshot.csv"))
            self._since_snapshot = 0

    def write_snapshot(self, path: str | Path) -> None:
        path = Path(path)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(export_csv(self.records()), encoding="utf-8")
        tmp.replace(path)


EXPORT_HEADER = "judge_id,poem_id,probability,submitted_at"


def export_csv(records: Iterable[RatingRecord]) -> str:
    lines = [EXPORT_HEADER]
    for rec in records:
        lines.append(
            f"{rec.judge_id},{rec.poem_id},{rec.probability!r},{rec.submitted_at}"
        )
    return "\n".join(lines) + "\n"


def parse_ratings_csv(text: str) -> list[RatingRecord]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != EXPORT_HEADER:
        raise RatingError(f"ratings CSV must start with header {EXPORT_HEADER!r}")
    out = []
    for ln in lines[1:]:
        judge_id, poem_id, probability, submitted_at = ln.split(",", 3)
        out.append(RatingRecord(judge_id, poem_id, float(probability), submitted_at))
    return out


@dataclass(frozen=True)
class AggregatedScore:
    poem_id: str
    q: float
    n_ratings: int


def aggregate_scores(ratings: Iterable[RatingRecord]) -> dict[str, AggregatedScore]:
    """Mean probability per poem.

    Values are sorted before summation so the result does not depend on
    submission order.
    """
    by_poem: dict[str, list[float]] = {}
    for rec in ratings:
        by_poem.setdefault(rec.poem_id, []).append(rec.probability)
    out: dict[str, AggregatedScore] = {}
    for poem_id in sorted(by_poem):
        values = sorted(by_poem[poem_id])
        out[poem_id] = AggregatedScore(
            poem_id=poem_id,
            q=math.fsum(values) / len(values),
            n_ratings=len(values),
        )
    return out


def below_coverage(
    scores: Mapping[str, AggregatedScore], k_min: int
) -> list[str]:
    """Poem ids whose rating count falls short of the planned coverage."""
    return sorted(pid for pid, s in scores.items() if s.n_ratings < k_min)
