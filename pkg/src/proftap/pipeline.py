"""End-to-end run orchestration and the post-judging analysis step.

A run directory is self-describing and reproducible: the config snapshot,
seed, cleanup-rule version, and a checksum per completed stage live in
``manifest.json``. Stages (title sampling, generation, pool mixing,
assignment planning) are checkpointed, so an interrupted run resumed with
the same config produces byte-identical artifacts.

The pipeline deliberately stops at the human-judging boundary: ``run``
prepares everything and prints how to start the rating service, and
``analyze`` turns collected ratings into reports.

Poems enter the mixed pool under opaque hashed ids so that nothing a judge
receives, including the id itself, hints at authorship.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from random import Random
from typing import Mapping

from .antiplag import MatchMode, build_index
from .corpus import (
    Corpus,
    Poem,
    Source,
    compute_features,
    ingest_corpus,
    load_char_map,
    sample_titles,
    segment_lines,
)
from .errors import StageError, ValidationError
from .generation import (
    DEFAULT_PROMPT_TEMPLATE,
    POSTPROCESS_RULES_VERSION,
    GenerationParams,
    ModelSpec,
    PromptTemplate,
    build_adapter,
    generate_poem,
)
from .judging import (
    AssignmentPlan,
    Judge,
    RatingRecord,
    aggregate_scores,
    below_coverage,
    parse_ratings_csv,
    plan_assignments,
)
from .randutil import derive_seed, derive_token
from .reports import (
    render_filter_table,
    render_summary_table,
    render_yan_table,
    reports_to_json,
    yan_ratio_csv,
)
from .stats import FilterScope, ModelReport, ScoredPoem, model_report

PACKAGE_VERSION = "0.1.0"


def canonical_json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True)


def write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class RunConfig:
    corpus_path: str
    titles_count: int
    k_min: int
    seed: int
    models: list[ModelSpec]
    output_dir: str
    database_path: str | None = None
    corpus_format: str = "jsonl"
    database_format: str = "jsonl"
    template_path: str | None = None
    plag_mode: MatchMode = MatchMode.SAME_POEM
    filter_scope: FilterScope = FilterScope.AI_ONLY
    judges: list[dict] = field(default_factory=list)
    prm_labels: dict[str, str] = field(default_factory=dict)
    char_map_path: str | None = None
    max_workers: int = 1

    def __post_init__(self) -> None:
        if self.titles_count < 1:
            raise ValidationError("titles_count must be >= 1")
        if self.k_min < 1:
            raise ValidationError("k_min must be >= 1")
        if not self.models:
            raise ValidationError("at least one model is required")
        if not self.judges:
            raise ValidationError("judges must be a count or a non-empty list")

    @classmethod
    def from_json(cls, data: Mapping, base_dir: Path | None = None) -> "RunConfig":
        def resolve(p):
            if p is None:
                return None
            path = Path(p)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            return str(path)

        try:
            models = []
            prm_labels = {}
            for m in data["models"]:
                params = m.get("params", {})
                spec = ModelSpec(
                    model_id=m["model_id"],
                    adapter=m.get("adapter", "stub"),
                    endpoint=resolve(m.get("endpoint")) if m.get("adapter") == "replay" else m.get("endpoint"),
                    params=GenerationParams(
                        temperature=params.get("temperature", 0.9),
                        max_attempts=params.get("max_attempts", 5),
                        extra=params.get("extra", {}),
                    ),
                )
                models.append(spec)
                if m.get("prm"):
                    prm_labels[spec.model_id] = m["prm"]
            judges_field = data.get("judges", [])
            if isinstance(judges_field, int):
                judges = [{"judge_id": f"judge{i:02d}"} for i in range(1, judges_field + 1)]
            else:
                judges = [dict(j) for j in judges_field]
            return cls(
                corpus_path=resolve(data["corpus_path"]),
                database_path=resolve(data.get("database_path")),
                titles_count=int(data["titles_count"]),
                k_min=int(data["k_min"]),
                seed=int(data["seed"]),
                models=models,
                output_dir=resolve(data.get("output_dir", "run")),
                corpus_format=data.get("corpus_format", "jsonl"),
                database_format=data.get("database_format", "jsonl"),
                template_path=resolve(data.get("template_path")),
                plag_mode=MatchMode(data.get("plag_mode", "same-poem")),
                filter_scope=FilterScope(data.get("filter_scope", "ai-only")),
                judges=judges,
                prm_labels=prm_labels,
                char_map_path=resolve(data.get("char_map_path")),
                max_workers=int(data.get("max_workers", 1)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"bad run config: {exc}") from exc


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc}") from exc
    return RunConfig.from_json(data, base_dir=path.parent)


class Manifest:
    """Stage bookkeeping: which artifacts exist and their checksums."""

    def __init__(self, run_dir: Path):
        self.run_dir = run_dir
        self.path = run_dir / "manifest.json"
        if self.path.exists():
            self.data = json.loads(self.path.read_text(encoding="utf-8"))
        else:
            self.data = {
                "package_version": PACKAGE_VERSION,
                "postprocess_rules_version": POSTPROCESS_RULES_VERSION,
                "stages": {},
            }

    def stage_complete(self, name: str) -> bool:
        entry = self.data["stages"].get(name)
        if not entry:
            return False
        artifact = self.run_dir / entry["file"]
        return artifact.exists() and sha256_file(artifact) == entry["sha256"]

    def mark_stage(self, name: str, filename: str) -> None:
        self.data["stages"][name] = {
            "file": filename,
            "sha256": sha256_file(self.run_dir / filename),
        }
        self.save()

    def save(self) -> None:
        write_atomic(self.path, canonical_json(self.data) + "\n")


def load_template(config: RunConfig) -> PromptTemplate:
    if config.template_path:
        return PromptTemplate(Path(config.template_path).read_text(encoding="utf-8").strip())
    return PromptTemplate(DEFAULT_PROMPT_TEMPLATE)


def opaque_id(seed: int, source: Source, orig_id: str, j: int) -> str:
    return "u" + derive_token(seed, source.encode(), orig_id, j, length=12)


@dataclass
class RunResult:
    run_dir: Path
    n_human: int
    n_ai: int
    n_failures: int


def run_pipeline(config: RunConfig, run_dir: str | Path | None = None) -> RunResult:
    """Execute the pre-judging stages into a (possibly existing) run dir."""
    run_dir = Path(run_dir) if run_dir else Path(config.output_dir)
    try:
        run_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ValidationError(f"output dir not writable: {exc}") from exc
    manifest = Manifest(run_dir)
    manifest.data["seed"] = config.seed
    config_snapshot = _config_snapshot(config)
    write_atomic(run_dir / "config.json", canonical_json(config_snapshot) + "\n")
    manifest.save()

    char_map = load_char_map(config.char_map_path) if config.char_map_path else None
    corpus = ingest_corpus(config.corpus_path, config.corpus_format)

    titles = _stage_titles(config, run_dir, manifest, corpus)
    gen_rows, failures = _stage_generation(config, run_dir, manifest, titles, char_map)
    pool_rows = _stage_pool(config, run_dir, manifest, corpus, titles, gen_rows)
    _stage_plan(config, run_dir, manifest, pool_rows)

    print(f"run directory ready: {run_dir}")
    print(f"start the judging service with: proftap serve --run {run_dir} --port 8000")
    if failures:
        print(f"warning: {len(failures)} (model, title) pairs failed; see generation_failures.jsonl")
    return RunResult(
        run_dir=run_dir,
        n_human=len(titles),
        n_ai=len(gen_rows),
        n_failures=len(failures),
    )


def _config_snapshot(config: RunConfig) -> dict:
    return {
        "corpus_path": config.corpus_path,
        "database_path": config.database_path,
        "corpus_format": config.corpus_format,
        "database_format": config.database_format,
        "titles_count": config.titles_count,
        "k_min": config.k_min,
        "seed": config.seed,
        "plag_mode": config.plag_mode.value,
        "filter_scope": config.filter_scope.value,
        "template_path": config.template_path,
        "char_map_path": config.char_map_path,
        "max_workers": config.max_workers,
        "judges": config.judges,
        "models": [
            {
                "model_id": m.model_id,
                "adapter": m.adapter,
                "endpoint": m.endpoint,
                "prm": config.prm_labels.get(m.model_id),
                "params": {
                    "temperature": m.params.temperature,
                    "max_attempts": m.params.max_attempts,
                    "extra": m.params.extra,
                },
            }
            for m in config.models
        ],
    }


def _stage_titles(config, run_dir: Path, manifest: Manifest, corpus: Corpus) -> list[dict]:
    path = run_dir / "titles.jsonl"
    if manifest.stage_complete("titles"):
        return [json.loads(r) for r in path.read_text(encoding="utf-8").splitlines() if r.strip()]
    sampled = sample_titles(corpus, config.titles_count, config.seed)
    rows = [
        {"j": j, "title": title, "human_poem_id": poem.id}
        for j, (title, poem) in enumerate(sampled)
    ]
    write_atomic(path, "".join(canonical_json(r) + "\n" for r in rows))
    manifest.mark_stage("titles", "titles.jsonl")
    return rows


def _stage_generation(
    config: RunConfig,
    run_dir: Path,
    manifest: Manifest,
    titles: list[dict],
    char_map,
) -> tuple[list[dict], list[dict]]:
    gen_path = run_dir / "generation.jsonl"
    fail_path = run_dir / "generation_failures.jsonl"
    if manifest.stage_complete("generation"):
        rows = [json.loads(r) for r in gen_path.read_text(encoding="utf-8").splitlines() if r.strip()]
        failures = []
        if fail_path.exists():
            failures = [json.loads(r) for r in fail_path.read_text(encoding="utf-8").splitlines() if r.strip()]
        return rows, failures

    database = ingest_corpus(
        config.database_path or config.corpus_path, config.database_format
    )
    index = build_index(database, char_map)
    template = load_template(config)

    done: dict[tuple[str, int], dict] = {}
    if gen_path.exists():  # partial progress from an interrupted run
        for raw in gen_path.read_text(encoding="utf-8").splitlines():
            if raw.strip():
                row = json.loads(raw)
                done[(row["model_id"], row["j"])] = row

    failures: list[dict] = []
    with gen_path.open("a", encoding="utf-8") as checkpoint:
        for spec in config.models:
            adapter = build_adapter(spec, stub_seed=config.seed)
            for row in titles:
                key = (spec.model_id, row["j"])
                if key in done:
                    continue
                try:
                    result = generate_poem(
                        spec,
                        template,
                        row["title"],
                        index,
                        adapter=adapter,
                        mode=config.plag_mode,
                        poem_id=f"{spec.model_id}:{row['j']:04d}",
                        run_nonce=str(config.seed),
                    )
                except Exception as exc:
                    failures.append(
                        {"model_id": spec.model_id, "j": row["j"],
                         "title": row["title"], "error": str(exc)}
                    )
                    continue
                gen_row = {
                    "model_id": spec.model_id,
                    "j": row["j"],
                    "title": row["title"],
                    "body": result.poem.body,
                    "attempts": result.attempts,
                }
                done[key] = gen_row
                checkpoint.write(canonical_json(gen_row) + "\n")
                checkpoint.flush()

    model_order = {m.model_id: i for i, m in enumerate(config.models)}
    rows = sorted(done.values(), key=lambda r: (model_order[r["model_id"]], r["j"]))
    write_atomic(gen_path, "".join(canonical_json(r) + "\n" for r in rows))
    write_atomic(fail_path, "".join(canonical_json(r) + "\n" for r in failures))
    manifest.mark_stage("generation", "generation.jsonl")
    manifest.mark_stage("generation_failures", "generation_failures.jsonl")
    return rows, failures


def _stage_pool(
    config: RunConfig,
    run_dir: Path,
    manifest: Manifest,
    corpus: Corpus,
    titles: list[dict],
    gen_rows: list[dict],
) -> list[dict]:
    path = run_dir / "pool.jsonl"
    if manifest.stage_complete("pool"):
        return [json.loads(r) for r in path.read_text(encoding="utf-8").splitlines() if r.strip()]
    rows: list[dict] = []
    for row in titles:
        poem = corpus.get(row["human_poem_id"])
        source = Source.human()
        rows.append(
            {
                "poem_id": opaque_id(config.seed, source, poem.id, row["j"]),
                "title": poem.title,
                "body": poem.body,
                "source": source.encode(),
                "j": row["j"],
                "orig_id": poem.id,
            }
        )
    model_order = {m.model_id: i for i, m in enumerate(config.models)}
    for row in sorted(gen_rows, key=lambda r: (model_order[r["model_id"]], r["j"])):
        source = Source.model(row["model_id"])
        rows.append(
            {
                "poem_id": opaque_id(config.seed, source, f"{row['model_id']}:{row['j']}", row["j"]),
                "title": row["title"],
                "body": row["body"],
                "source": source.encode(),
                "j": row["j"],
                "orig_id": f"{row['model_id']}:{row['j']:04d}",
            }
        )
    ids = [r["poem_id"] for r in rows]
    if len(set(ids)) != len(ids):
        raise StageError("opaque pool id collision; change the run seed")
    Random(derive_seed(config.seed, "pool")).shuffle(rows)
    write_atomic(path, "".join(canonical_json(r) + "\n" for r in rows))
    manifest.mark_stage("pool", "pool.jsonl")
    return rows


def make_judges(config: RunConfig) -> tuple[list[Judge], str]:
    judges = []
    for entry in config.judges:
        judge_id = entry["judge_id"]
        token = entry.get("access_token") or derive_token(config.seed, "token", judge_id)
        judges.append(Judge(judge_id, token, entry.get("display_name")))
    admin_token = derive_token(config.seed, "admin")
    return judges, admin_token


def _stage_plan(config: RunConfig, run_dir: Path, manifest: Manifest, pool_rows: list[dict]) -> None:
    if manifest.stage_complete("plan") and manifest.stage_complete("judges"):
        return
    judges, admin_token = make_judges(config)
    judges_doc = {
        "admin_token": admin_token,
        "judges": [
            {"judge_id": j.judge_id, "access_token": j.access_token,
             "display_name": j.display_name}
            for j in judges
        ],
    }
    write_atomic(run_dir / "judges.json", canonical_json(judges_doc) + "\n")
    manifest.mark_stage("judges", "judges.json")
    plan = plan_assignments(
        [r["poem_id"] for r in pool_rows],
        [j.judge_id for j in judges],
        config.k_min,
        derive_seed(config.seed, "plan"),
    )
    write_atomic(run_dir / "plan.json", canonical_json(plan.to_json()) + "\n")
    manifest.mark_stage("plan", "plan.json")


def load_ratings(path: str | Path) -> list[RatingRecord]:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"ratings file not found: {path}")
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".csv":
        return parse_ratings_csv(text)
    records: dict[tuple[str, str], RatingRecord] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip():
            continue
        try:
            row = json.loads(raw)
            if "void" in row:
                records.pop((row["void"]["judge_id"], row["void"]["poem_id"]), None)
            else:
                rec = RatingRecord.from_json(row)
                records[(rec.judge_id, rec.poem_id)] = rec
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ValidationError(f"{path.name}: line {lineno}: bad rating record: {exc}")
    return [records[k] for k in sorted(records)]


@dataclass
class AnalysisResult:
    reports: list[ModelReport]
    warnings: list[str]
    out_dir: Path


def analyze_run(
    run_dir: str | Path,
    ratings_path: str | Path | None = None,
    out_dir: str | Path | None = None,
) -> AnalysisResult:
    """Aggregate ratings and write reports for a completed run."""
    run_dir = Path(run_dir)
    pool_path = run_dir / "pool.jsonl"
    if not pool_path.exists():
        raise ValidationError(f"no pool.jsonl in {run_dir}")
    config_data = json.loads((run_dir / "config.json").read_text(encoding="utf-8"))
    filter_scope = FilterScope(config_data.get("filter_scope", "ai-only"))
    k_min = int(config_data.get("k_min", 1))
    prm_labels = {
        m["model_id"]: m["prm"] for m in config_data.get("models", []) if m.get("prm")
    }
    char_map = (
        load_char_map(config_data["char_map_path"])
        if config_data.get("char_map_path")
        else None
    )

    pool_rows = [
        json.loads(r) for r in pool_path.read_text(encoding="utf-8").splitlines() if r.strip()
    ]
    ratings = load_ratings(ratings_path or run_dir / "ratings.jsonl")
    known_ids = {r["poem_id"] for r in pool_rows}
    stray = sorted({rec.poem_id for rec in ratings} - known_ids)
    warnings = []
    if stray:
        warnings.append(f"{len(stray)} rating(s) reference unknown poems: {stray[:5]}")
        ratings = [rec for rec in ratings if rec.poem_id in known_ids]
    scores = aggregate_scores(ratings)

    unrated = sorted(known_ids - set(scores))
    for pid in unrated:
        warnings.append(f"poem {pid} has no ratings; excluded from analysis")
    short = below_coverage(scores, k_min)
    if short:
        warnings.append(
            f"{len(short)} poem(s) below the planned {k_min}-judge coverage: {short[:5]}"
        )

    scored: list[ScoredPoem] = []
    for row in pool_rows:
        if row["poem_id"] not in scores:
            continue
        poem = Poem(
            id=row["poem_id"],
            title=row["title"],
            body=row["body"],
            source=Source.decode(row["source"]),
        )
        features = compute_features(segment_lines(poem, char_map))
        scored.append(
            ScoredPoem(
                poem_id=row["poem_id"],
                source=poem.source,
                title_ref=str(row["j"]),
                q=scores[row["poem_id"]].q,
                features=features,
            )
        )

    model_ids = sorted(
        {s.source.model_id for s in scored if not s.source.is_human}
    )
    reports = [
        model_report(scored, model_id, filter_scope=filter_scope)
        for model_id in model_ids
    ]

    out_dir = Path(out_dir) if out_dir else run_dir / "analysis"
    out_dir.mkdir(parents=True, exist_ok=True)
    write_atomic(out_dir / "reports.json", canonical_json(reports_to_json(reports, prm_labels)) + "\n")
    write_atomic(out_dir / "summary.md", render_summary_table(reports, prm_labels))
    write_atomic(out_dir / "filters.md", render_filter_table(reports))
    write_atomic(out_dir / "yan.md", render_yan_table(reports))
    write_atomic(out_dir / "yan_ratio.csv", yan_ratio_csv(scored))
    for message in warnings:
        print(f"warning: {message}")
    return AnalysisResult(reports=reports, warnings=warnings, out_dir=out_dir)
