"""Command-line entry point.

Subcommands cover the whole pipeline: ``ingest``, ``sample``, ``generate``,
``check-plagiarism``, ``plan``, ``run``, ``serve``, ``analyze``,
``simulate``, ``export``. Exit codes: 0 success, 2 validation problem,
3 stage failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import pipeline
from .antiplag import MatchMode, build_index, find_duplication
from .corpus import ingest_corpus, sample_titles
from .errors import ProftapError, StageError, ValidationError
from .judging import export_csv, plan_assignments
from .pipeline import canonical_json, load_run_config, write_atomic
from .randutil import derive_seed, derive_token
from .simjudge import power_analysis, power_rows_csv


def _cmd_ingest(args) -> int:
    corpus = ingest_corpus(args.infile, args.format)
    rows = []
    for poem in corpus:
        rows.append(
            {"id": poem.id, "title": poem.title, "body": poem.body,
             "form": poem.form_hint}
        )
    text = "".join(canonical_json(r) + "\n" for r in rows)
    if args.out:
        write_atomic(Path(args.out), text)
        print(f"{len(rows)} poems -> {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_sample(args) -> int:
    corpus = ingest_corpus(args.corpus, args.format)
    try:
        sampled = sample_titles(corpus, args.count, args.seed)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    rows = [
        {"j": j, "title": title, "human_poem_id": poem.id}
        for j, (title, poem) in enumerate(sampled)
    ]
    text = "".join(canonical_json(r) + "\n" for r in rows)
    if args.out:
        write_atomic(Path(args.out), text)
        print(f"{len(rows)} titles -> {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_check_plagiarism(args) -> int:
    database = ingest_corpus(args.db, args.db_format)
    queries = ingest_corpus(args.infile, args.in_format)
    index = build_index(database)
    mode = MatchMode(args.mode)
    results = []
    flagged = 0
    for poem in queries:
        evidence = find_duplication(
            poem, index, mode=mode,
            exclude_id=poem.id if args.exclude_self else None,
        )
        results.append(
            {
                "poem_id": poem.id,
                "duplicative": evidence is not None,
                "evidence": evidence.to_json() if evidence else None,
            }
        )
        flagged += evidence is not None
    report = {"mode": mode.value, "total": len(results), "duplicative": flagged,
              "results": results}
    text = canonical_json(report) + "\n"
    if args.out:
        write_atomic(Path(args.out), text)
        print(f"{flagged}/{len(results)} duplicative -> {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_plan(args) -> int:
    pool_rows = [
        json.loads(r)
        for r in Path(args.pool).read_text(encoding="utf-8").splitlines()
        if r.strip()
    ]
    judge_ids = [f"judge{i:02d}" for i in range(1, args.judges + 1)]
    plan = plan_assignments(
        [r["poem_id"] for r in pool_rows], judge_ids, args.k, args.seed
    )
    write_atomic(Path(args.out), canonical_json(plan.to_json()) + "\n")
    print(f"plan for {len(pool_rows)} poems x {args.judges} judges -> {args.out}")
    if args.judges_out:
        doc = {
            "admin_token": derive_token(args.seed, "admin"),
            "judges": [
                {"judge_id": j, "access_token": derive_token(args.seed, "token", j),
                 "display_name": None}
                for j in judge_ids
            ],
        }
        write_atomic(Path(args.judges_out), canonical_json(doc) + "\n")
        print(f"judge tokens -> {args.judges_out}")
    return 0


def _cmd_run(args) -> int:
    config = load_run_config(args.config)
    result = pipeline.run_pipeline(config, args.run_dir)
    print(
        f"pool: {result.n_human} human + {result.n_ai} AI poems, "
        f"{result.n_failures} failures"
    )
    return 0 if result.n_failures == 0 else 3


def _cmd_generate(args) -> int:
    # Runs only the pre-pool stages (title sampling and screened generation).
    config = load_run_config(args.config)
    run_dir = Path(args.run_dir) if args.run_dir else Path(config.output_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    manifest = pipeline.Manifest(run_dir)
    manifest.data["seed"] = config.seed
    pipeline.write_atomic(
        run_dir / "config.json",
        canonical_json(pipeline._config_snapshot(config)) + "\n",
    )
    manifest.save()
    corpus = ingest_corpus(config.corpus_path, config.corpus_format)
    char_map = None
    if config.char_map_path:
        from .corpus import load_char_map

        char_map = load_char_map(config.char_map_path)
    titles = pipeline._stage_titles(config, run_dir, manifest, corpus)
    rows, failures = pipeline._stage_generation(config, run_dir, manifest, titles, char_map)
    print(f"{len(rows)} poems generated, {len(failures)} failures -> {run_dir}")
    return 0 if not failures else 3


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app, load_run_state

    state = load_run_state(args.run)
    app = create_app(state, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _cmd_analyze(args) -> int:
    result = pipeline.analyze_run(args.run, args.ratings, args.out)
    print(f"reports -> {result.out_dir}")
    return 0


def _cmd_simulate(args) -> int:
    data = json.loads(Path(args.config).read_text(encoding="utf-8"))
    judge_model = data.get("judge_model", {})
    rows = power_analysis(
        d_grid=[float(d) for d in data["d_grid"]],
        t_titles=int(data.get("T", 110)),
        k_min=int(data.get("K", 2)),
        n_judges=int(data.get("judges", 13)),
        alpha=float(data.get("alpha", 0.05)),
        replications=int(data.get("replications", 100)),
        seed=int(data.get("seed", 0)),
        sigma=float(judge_model.get("sigma", 0.2)),
    )
    text = power_rows_csv(rows)
    if args.out:
        write_atomic(Path(args.out), text)
        print(f"{len(rows)} grid points -> {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_export(args) -> int:
    records = pipeline.load_ratings(Path(args.run) / "ratings.jsonl")
    text = export_csv(records)
    if args.out:
        write_atomic(Path(args.out), text)
        print(f"{len(records)} ratings -> {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proftap",
        description="Distinguishability evaluation for AI-generated classical Chinese poetry.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a corpus file and emit canonical JSONL")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", choices=["jsonl", "csv"], default="jsonl")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_ingest)

    p = sub.add_parser("sample", help="sample title conditions from a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=["jsonl", "csv"], default="jsonl")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_sample)

    p = sub.add_parser("generate", help="run title sampling and screened generation")
    p.add_argument("--config", required=True)
    p.add_argument("--run-dir")
    p.set_defaults(fn=_cmd_generate)

    p = sub.add_parser("check-plagiarism", help="screen poems against a database")
    p.add_argument("--db", required=True)
    p.add_argument("--db-format", choices=["jsonl", "csv"], default="jsonl")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--in-format", choices=["jsonl", "csv"], default="jsonl")
    p.add_argument("--mode", choices=[m.value for m in MatchMode], default="same-poem")
    p.add_argument("--exclude-self", action="store_true",
                   help="ignore matches against a poem's own database entry")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_check_plagiarism)

    p = sub.add_parser("plan", help="build an assignment plan for a poem pool")
    p.add_argument("--pool", required=True)
    p.add_argument("--judges", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--judges-out")
    p.set_defaults(fn=_cmd_plan)

    p = sub.add_parser("run", help="execute all pre-judging stages")
    p.add_argument("--config", required=True)
    p.add_argument("--run-dir")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("serve", help="start the judging service")
    p.add_argument("--run", required=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--static", help="directory with the web UI bundle")
    p.set_defaults(fn=_cmd_serve)

    p = sub.add_parser("analyze", help="aggregate ratings and write reports")
    p.add_argument("--run", required=True)
    p.add_argument("--ratings")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_analyze)

    p = sub.add_parser("simulate", help="power analysis with synthetic judges")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("export", help="dump collected ratings as CSV")
    p.add_argument("--run", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"stage failed: {exc}", file=sys.stderr)
        return 3
    except ProftapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
