"""Command-line entry point exposing the toolkit as subcommands.

Exit codes: 0 success, 1 domain failure (e.g. too few mutants, missing
samples), 2 usage error, 3 I/O or client-transport error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from specmut import __version__
from specmut.corpus import Corpus, load_corpus
from specmut.errors import SpecmutError
from specmut.frontend.ops import (
    classify_dependency,
    loc_bucket,
    method_coverage,
    parse_coverage_report,
)
from specmut.fixturelang.spans import BUILTIN_NAMES
from specmut.harness import RunnerMode, RunnerSpec
from specmut.llmclient import Transport, TransportMode
from specmut.metrics import AblationKind, AblationSpec, run_ablation
from specmut.mutgen import (
    MutantStatus,
    dedup_across_schemes,
    generate_llm_mutants,
    generate_operator_mutants,
    load_catalog,
    mutant_from_json,
    mutant_to_json,
    select_llm_mutation_targets,
)
from specmut.pipeline import (
    TrigramHashProvider,
    assemble_instance,
    embed_headers,
    environment_repair_loop,
    farthest_first_select,
    filter_candidate_methods,
)
from specmut.store import (
    ResultRecord,
    RunManifest,
    aggregate,
    append_records,
    emit_report,
    init_store,
    read_records,
)
from specmut.validate import (
    build_kill_matrix,
    filter_defective_mutants,
    matrix_from_records,
    require_min_mutants,
)

log = logging.getLogger("specmut")


def _slug(method_id: str) -> str:
    return method_id.replace("/", "_").replace("::", "__").replace(".", "_")


def _store_dir(args, corpus: Corpus) -> Path:
    store = args.store or corpus.raw_config.get("store", "store")
    return init_store(store)


def _logical_run_id(corpus: Corpus) -> str:
    return corpus.raw_config.get("run_id", "run0")


def _write_manifest(store: Path, corpus: Corpus, seed: int) -> RunManifest:
    manifest = RunManifest.create(corpus.raw_config, __version__, seed)
    out = store / "manifests"
    out.mkdir(exist_ok=True)
    (out / f"{manifest.run_id}.json").write_text(
        json.dumps(
            {
                "config_snapshot": manifest.config_snapshot,
                "run_id": manifest.run_id,
                "seed": manifest.seed,
                "started": manifest.started,
                "tool_version": manifest.tool_version,
            },
            sort_keys=True,
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    return manifest


# --- subcommands -----------------------------------------------------------------


def cmd_scan(args) -> int:
    corpus = load_corpus(args.config)
    store = _store_dir(args, corpus)
    coverage_table = None
    if corpus.coverage_path:
        coverage_table = parse_coverage_report(corpus.root / corpus.coverage_path)
    rows = []
    for target in corpus.targets:
        unit, method = corpus.load_method(target)
        if coverage_table is not None:
            method.coverage = method_coverage(coverage_table, method, unit)
        dep = classify_dependency(method, BUILTIN_NAMES)
        rows.append(
            {
                "comment_words": method.comment_words,
                "coverage": method.coverage,
                "cyclomatic": method.cyclomatic,
                "dependency_class": dep.value,
                "doc_comment": method.doc_comment,
                "external_refs": method.external_refs,
                "loc": method.loc,
                "loc_bucket": loc_bucket(method).value,
                "method_id": method.method_id,
                "signature": method.signature,
                "unit": target.unit_path,
            }
        )
    out = store / "methods.json"
    out.write_text(json.dumps(rows, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    print(f"scanned {len(rows)} methods -> {out}")
    return 0


def cmd_mutate(args) -> int:
    corpus = load_corpus(args.config)
    store = _store_dir(args, corpus)
    catalog = load_catalog(
        corpus.catalog if corpus.catalog in ("fixture", "python-like", "java-like")
        else str(corpus.root / corpus.catalog)
    )
    out = store / "mutants.jsonl"
    count = 0
    with open(out, "w", encoding="utf-8") as handle:
        for target in corpus.targets:
            unit, method = corpus.load_method(target)
            pool = generate_operator_mutants(unit, method, catalog)
            if corpus.llm_enabled:
                transport = corpus.transport()
                targets_llm = select_llm_mutation_targets(unit, method)
                pool += generate_llm_mutants(unit, method, targets_llm, transport)
            dedup_across_schemes(pool)
            for mutant in pool:
                handle.write(json.dumps(mutant_to_json(mutant), sort_keys=True) + "\n")
                count += 1
    print(f"generated {count} candidate mutants -> {out}")
    return 0


def _load_mutants(corpus: Corpus, store: Path) -> dict:
    """method_id -> list of mutants, rendered against the current units."""
    path = store / "mutants.jsonl"
    units = {}
    for target in corpus.targets:
        units[target.method_id] = corpus.load_unit(target)
    by_method: dict = {t.method_id: [] for t in corpus.targets}
    with open(path, encoding="utf-8") as handle:
        for raw in handle:
            raw = raw.strip()
            if not raw:
                continue
            data = json.loads(raw)
            unit = units[data["method_id"]]
            by_method[data["method_id"]].append(mutant_from_json(data, unit.text))
    return by_method


def _write_mutants(store: Path, by_method: dict) -> None:
    with open(store / "mutants.jsonl", "w", encoding="utf-8") as handle:
        for method_id in by_method:
            for mutant in by_method[method_id]:
                handle.write(json.dumps(mutant_to_json(mutant), sort_keys=True) + "\n")


def cmd_filter_mutants(args) -> int:
    corpus = load_corpus(args.config)
    store = _store_dir(args, corpus)
    by_method = _load_mutants(corpus, store)
    total = 0
    for target in corpus.targets:
        unit, _ = corpus.load_method(target)
        spec = corpus.runner_spec(target)
        defective = filter_defective_mutants(unit, by_method[target.method_id], spec)
        total += len(defective)
        print(f"{target.method_id}: {len(defective)} defective")
    _write_mutants(store, by_method)
    print(f"{total} defective mutants retained")
    return 0


def cmd_evaluate(args) -> int:
    corpus = load_corpus(args.config)
    store = _store_dir(args, corpus)
    _write_manifest(store, corpus, args.seed if args.seed is not None else corpus.seed)
    by_method = _load_mutants(corpus, store)
    run_id = _logical_run_id(corpus)
    existing = {r.key() for r in read_records(store)}
    fresh = []
    for target in corpus.targets:
        unit, method = corpus.load_method(target)
        spec = corpus.runner_spec(target)
        psets = corpus.load_psets(target)
        defective = [
            m for m in by_method[target.method_id]
            if m.status is MutantStatus.DEFECTIVE
        ]
        matrix = build_kill_matrix(
            task_id=method.method_id,
            unit=unit,
            method=method,
            psets=psets,
            mutants=defective,
            spec=spec,
            store_path=store / "killmatrix.jsonl",
            workers=args.workers,
        )
        for index, verdict in enumerate(matrix.verdicts()):
            record = ResultRecord(
                run_id=run_id,
                task_id=method.method_id,
                setting=corpus.setting,
                model_tag=corpus.model_tag,
                sample_index=index,
                correct=verdict.correct,
                complete=verdict.complete,
                kill_row_ref=f"killmatrix.jsonl#{method.method_id}/{verdict.set_id}",
            )
            if record.key() not in existing:
                fresh.append(record)
    appended = append_records(store, fresh)
    print(f"evaluated {len(corpus.targets)} tasks, appended {appended} records")
    return 0


def cmd_metrics(args) -> int:
    corpus = load_corpus(args.config)
    store = _store_dir(args, corpus)
    stats = aggregate(store, {})
    from specmut.metrics import build_metric_report

    report = build_metric_report(stats, corpus.k_values)
    payload = {
        "c2c": report.c2c,
        "comp_at": {str(k): v for k, v in report.comp_at.items()},
        "corr_at": {str(k): v for k, v in report.corr_at.items()},
        "delta_at": {str(k): v for k, v in report.delta_at.items()},
        "per_method_gap": report.per_method_gap,
        "rho_at": {str(k): v for k, v in report.rho_at.items()},
    }
    out = store / "metrics.json"
    out.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    print(f"metrics over {len(stats)} task groups -> {out}")
    return 0


def cmd_select(args) -> int:
    corpus = load_corpus(args.config)
    store = _store_dir(args, corpus)
    coverage_table = None
    if corpus.coverage_path:
        coverage_table = parse_coverage_report(corpus.root / corpus.coverage_path)
    records = []
    units = {}
    for target in corpus.targets:
        unit, method = corpus.load_method(target)
        if coverage_table is not None:
            method.coverage = method_coverage(coverage_table, method, unit)
        records.append(method)
        units[method.method_id] = (unit, target)
    kept = filter_candidate_methods(records, corpus.selection)
    if not kept:
        print("no methods pass the selection filters", file=sys.stderr)
        return 1
    headers = [m.signature for m in kept]
    vectors = embed_headers(headers, TrigramHashProvider())
    count = corpus.selection.target_count or len(kept)
    count = min(count, len(kept))
    chosen = farthest_first_select(vectors, count)
    by_method = _load_mutants(corpus, store)
    selection = []
    for index in chosen:
        method = kept[index]
        unit, target = units[method.method_id]
        spec = corpus.runner_spec(target)
        instance_dir = store / "instances" / _slug(method.method_id)
        assemble_instance(
            method=method,
            unit=unit,
            mutants=by_method[method.method_id],
            psets=corpus.load_psets(target),
            tests=spec,
            out_dir=instance_dir,
            language_tag=corpus.adapter_id,
            allowlist=BUILTIN_NAMES,
            min_mutants=corpus.min_mutants,
        )
        selection.append(method.method_id)
    out = store / "selection.json"
    out.write_text(json.dumps(selection, indent=2) + "\n", encoding="utf-8")
    print(f"selected {len(selection)} methods -> {out}")
    return 0


def cmd_ablate(args) -> int:
    corpus = load_corpus(args.config)
    store = _store_dir(args, corpus)
    by_method = _load_mutants(corpus, store)
    records = []
    with open(store / "killmatrix.jsonl", encoding="utf-8") as handle:
        for raw in handle:
            if raw.strip():
                records.append(json.loads(raw))
    matrices = []
    for target in corpus.targets:
        meta = {
            m.mutant_id: {"scheme": m.scheme.value, "operator": m.operator_name}
            for m in by_method[target.method_id]
        }
        matrices.append(matrix_from_records(records, target.method_id, meta))
    seed = args.seed if args.seed is not None else corpus.seed
    specs = []
    for entry in corpus.raw_config.get("ablations", [
        {"kind": "SCHEME_EXCLUDE", "scheme": "LLM"},
        {"kind": "SCHEME_EXCLUDE", "scheme": "OPERATOR"},
        {"kind": "BUDGET", "fraction": 0.5, "trials": 20},
        {"kind": "BUDGET", "fraction": 1.0, "trials": 5},
    ]):
        specs.append(
            AblationSpec(
                kind=AblationKind(entry["kind"]),
                operator_name=entry.get("operator", ""),
                scheme=entry.get("scheme", ""),
                fraction=entry.get("fraction", 1.0),
                count=entry.get("count", 0),
                trials=entry.get("trials", 1),
            )
        )
    rows = [run_ablation(matrices, spec, seed) for spec in specs]
    out = store / "ablations.csv"
    with open(out, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("label,mean,std,trials\n")
        for row in rows:
            handle.write(
                f"{row['label']},{row['mean']:.3f},{row['std']:.3f},{row['trials']}\n"
            )
    print(f"{len(rows)} ablation rows -> {out}")
    return 0


def cmd_repair_env(args) -> int:
    corpus = load_corpus(args.config)
    repair_cfg = corpus.raw_config.get("repair", {})
    check = RunnerSpec(
        mode=RunnerMode.PROCESS,
        working_dir=args.project,
        test_command=repair_cfg.get("check_command", "true"),
        timeout_ms=int(repair_cfg.get("timeout_ms", 60_000)),
    )
    transport = Transport(
        mode=TransportMode(repair_cfg.get("mode", "REPLAY")),
        endpoint=repair_cfg.get("endpoint", ""),
        transcript_path=str(corpus.root / repair_cfg.get("transcript", "")),
    )
    report = environment_repair_loop(
        args.project,
        check,
        transport,
        max_rounds=int(repair_cfg.get("max_rounds", 5)),
        allowlist=tuple(repair_cfg.get("allowlist", ["config.json", "pyproject.toml", "pom.xml"])),
    )
    payload = {
        "rounds": [
            {
                "check_passed": r.check_passed,
                "edits": r.edits,
                "rejected": r.rejected,
                "round": r.round_index,
            }
            for r in report.rounds
        ],
        "success": report.success,
    }
    out = Path(args.project) / "repair_report.json"
    out.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    print(f"repair {'succeeded' if report.success else 'failed'} -> {out}")
    return 0 if report.success else 1


def cmd_report(args) -> int:
    corpus = load_corpus(args.config)
    store = _store_dir(args, corpus)
    stats = aggregate(store, {})
    out_dir = store / "reports" / _logical_run_id(corpus)
    paths = emit_report(stats, out_dir, k_values=corpus.k_values)
    print(f"report -> {paths['report.csv']}")
    return 0


# --- dispatch ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specmut",
        description="Mutation-based postcondition evaluation and benchmark assembly",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="corpus config JSON")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--workers", type=int, default=1, help="harness worker bound")
        p.add_argument("--store", default=None, help="store directory override")

    for name, func, doc in [
        ("scan", cmd_scan, "parse subjects into method records with metrics"),
        ("mutate", cmd_mutate, "generate candidate mutants"),
        ("filter-mutants", cmd_filter_mutants, "keep mutants the test suite catches"),
        ("evaluate", cmd_evaluate, "build kill matrices and verdict records"),
        ("metrics", cmd_metrics, "aggregate records into metric tables"),
        ("select", cmd_select, "filter, diversify, and assemble instances"),
        ("ablate", cmd_ablate, "recompute Comp@1 under mutant-set perturbations"),
        ("report", cmd_report, "emit report.txt/report.csv/gaps.csv"),
    ]:
        p = sub.add_parser(name, help=doc)
        common(p)
        p.set_defaults(func=func)

    p = sub.add_parser("repair-env", help="bounded config-repair loop over a project")
    common(p)
    p.add_argument("--project", required=True, help="project directory to repair")
    p.set_defaults(func=cmd_repair_env)
    return parser


def cli_dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except SpecmutError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error[IO_ERROR]: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
