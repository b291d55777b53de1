#!/usr/bin/env python3
"""Regenerate the bundled corpus artifacts: LLM-mutation transcript,
coverage report, and the brute-force kill-matrix oracle.

The oracle is produced by instrumenting and running every (set, variant)
pair directly through the builtin interpreter, with none of the batching
machinery, so it stays an independent check on the kill-matrix builder.

Run from the repository root:  python3 tools/build_fixture_artifacts.py
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from specmut import llmclient
from specmut.corpus import load_corpus
from specmut.fixturelang import nodes
from specmut.fixturelang.parser import parse_program
from specmut.frontend.types import SourceUnit
from specmut.harness import RunnerMode, evaluate, instrument, load_test_units, run_suite
from specmut.llmclient import Transport, TransportMode
from specmut.mutgen import (
    MutantStatus,
    dedup_across_schemes,
    generate_llm_mutants,
    generate_operator_mutants,
    load_catalog,
    select_llm_mutation_targets,
)
from specmut.validate import filter_defective_mutants

CORPUS = REPO / "src/specmut/fixtures/corpus"

# Crafted defective replacement lines, keyed by (method name, 1-based line).
LLM_RESPONSES = {
    ("clamp", 5): "  if (x > lo) {",
    ("sum_positive", 6): "  for (x in [1]) {",
    ("count_matches", 7): "    if (true) {",
    ("safe_ratio", 5): "  if (b == 0 || a == 10) {",
    ("bounded_max", 10): "    if (x < m) {",
    ("accumulate", 8): "    if (total > limit) {",
    ("label", 5): "  if (n < 3) {",
    ("abs_delta", 6): "  if (d != 0) {",
    ("append_bounded", 5): "  if (len(xs) < cap + cap) {",
    ("clip_range", 11): "    v = min(v, hi - 1);",
}


def fake_poster_factory(original_lines: dict):
    """RECORD-mode poster answering from the crafted table.

    Targets without a crafted response get the original line back, which
    the generator drops under the identity rule; recording those
    exchanges keeps the replay transcript complete for every prompt the
    corpus run will issue.
    """

    def fake_post(url, payload, timeout_s, token):
        user = payload["messages"][1]["content"]
        first = user.splitlines()[0]
        method_id = first.removeprefix("method: ")
        method_name = method_id.split("::")[-1]
        placeholder = user.split("\n\n", 1)[1]
        line_no = None
        for i, line in enumerate(placeholder.splitlines(), start=1):
            if line == "<<MUTATE_THIS_LINE>>":
                line_no = i
                break
        key = (method_name, line_no)
        if key in LLM_RESPONSES:
            return json.dumps({"text": LLM_RESPONSES[key]})
        return json.dumps({"text": original_lines[(method_id, line_no)]})

    return fake_post


def statement_lines(text: str) -> set:
    """Statically collected executable lines: every statement's first line."""
    lines = set()

    def walk(block):
        for stmt in block.stmts:
            lines.add(stmt.line)
            if isinstance(stmt, nodes.If):
                walk(stmt.then)
                if stmt.orelse is not None:
                    walk(stmt.orelse)
            elif isinstance(stmt, (nodes.While, nodes.For)):
                walk(stmt.body)

    for func in parse_program(text).functions:
        walk(func.body)
    return lines


def main() -> int:
    corpus = load_corpus(CORPUS / "config.json")
    catalog = load_catalog(corpus.catalog)

    original_lines = {}
    for target in corpus.targets:
        unit, method = corpus.load_method(target)
        for llm_target in select_llm_mutation_targets(unit, method):
            original_lines[(method.method_id, llm_target.line)] = llm_target.original_line

    transcript_path = CORPUS / corpus.llm_transcript
    transcript_path.parent.mkdir(parents=True, exist_ok=True)
    transcript_path.write_text("", encoding="utf-8")
    record = Transport(mode=TransportMode.RECORD, endpoint="http://record.invalid",
                       transcript_path=str(transcript_path))
    real_post = llmclient._http_post
    llmclient._http_post = fake_poster_factory(original_lines)
    import os
    os.environ.setdefault("SPECMUT_API_TOKEN", "offline-token")

    all_ok = True
    oracle_records = []
    coverage_rows = []

    try:
        for target in corpus.targets:
            unit, method = corpus.load_method(target)
            spec = corpus.runner_spec(target)
            psets = corpus.load_psets(target)

            mutants = generate_operator_mutants(unit, method, catalog)
            targets_llm = select_llm_mutation_targets(unit, method)
            print(f"\n=== {method.method_id} ===")
            print(f"  llm target lines: {[t.line for t in targets_llm]}")
            llm_mutants = generate_llm_mutants(unit, method, targets_llm, record)
            pool = dedup_across_schemes(mutants + llm_mutants)

            defective = filter_defective_mutants(unit, pool, spec)
            op_defective = [m for m in defective if m.operator_name]
            llm_defective = [m for m in defective if not m.operator_name]
            by_status = {}
            for m in pool:
                by_status.setdefault(m.status.name, 0)
                by_status[m.status.name] += 1
            print(f"  statuses: {by_status}")
            print(f"  defective: {len(op_defective)} operator + {len(llm_defective)} llm")
            if len(op_defective) < 5:
                print("  !! FEWER THAN 5 DEFECTIVE OPERATOR MUTANTS")
                all_ok = False
            if not llm_defective:
                print("  !! LLM MUTANT NOT DEFECTIVE")
                all_ok = False

            # brute-force oracle: direct instrument+run over all pairs
            variants = [("original", unit.text)] + [
                (m.mutant_id, m.rendered_text) for m in defective
            ]
            test_units = load_test_units(spec)
            summaries = []
            for pset in psets:
                row = []
                for variant_id, text in variants:
                    variant = SourceUnit(unit_id=variant_id, path=unit.path,
                                         text=text, adapter_id=unit.adapter_id)
                    woven = instrument(variant, method, pset)
                    outcome = run_suite([woven] + test_units, spec, contracts_woven=True)
                    row.append(outcome.value)
                    oracle_records.append({
                        "task": method.method_id,
                        "set": pset.set_id,
                        "variant": variant_id,
                        "value": outcome.value,
                        "kind": outcome.kind.value,
                        "violated": list(outcome.violated_cond_ids),
                    })
                correct = row[0] == 1
                complete = correct and all(v == 0 for v in row[1:])
                survivors = [variants[i][0] for i in range(1, len(row)) if row[i] != 0]
                summaries.append((pset.set_id, correct, complete, survivors))
                print(f"  {pset.set_id}: correct={correct} complete={complete}"
                      f" row={row}" + (f" survivors={survivors}" if survivors else ""))
            c0, c1, c2 = summaries
            if not (c0[1] and c0[2]):
                print("  !! SET 0 IS NOT COMPLETE")
                all_ok = False
            if not (c1[1] and not c1[2]):
                print("  !! SET 1 IS NOT CORRECT-BUT-INCOMPLETE")
                all_ok = False
            if c2[1]:
                print("  !! SET 2 IS NOT INCORRECT")
                all_ok = False

            # coverage from tracing a plain run
            from specmut.fixturelang.interp import Interpreter

            units = [(unit.path, unit.text)] + [
                (u.path, u.text) for u in test_units
            ]
            interp = Interpreter(units, trace_lines=True)
            trace = interp.run_tests(corpus.timeout_ms)
            if trace.failed_tests or trace.crash_message or trace.timed_out:
                print(f"  !! PLAIN RUN NOT GREEN: {trace.failed_tests} {trace.crash_message}")
                all_ok = False
            executable = statement_lines(unit.text)
            executed = trace.executed_lines.get(unit.path, set())
            body_first = unit.text.encode()[: method.body_start].count(b"\n") + 1
            body_last = unit.text.encode()[: method.body_end].count(b"\n") + 1
            body_exec = {ln for ln in executable if body_first <= ln <= body_last}
            covered = body_exec & executed
            ratio = len(covered) / len(body_exec) if body_exec else 0
            print(f"  method coverage: {len(covered)}/{len(body_exec)} = {ratio:.2f}")
            if ratio < 0.9:
                print("  !! COVERAGE BELOW 0.9")
                all_ok = False
            for ln in sorted(executable):
                hits = 1 if ln in executed else 0
                coverage_rows.append((unit.path, ln, hits))
    finally:
        llmclient._http_post = real_post

    oracle_path = CORPUS / "oracle" / "kill_matrix.jsonl"
    oracle_path.parent.mkdir(parents=True, exist_ok=True)
    with open(oracle_path, "w", encoding="utf-8") as handle:
        for record_ in oracle_records:
            handle.write(json.dumps(record_, sort_keys=True) + "\n")
    print(f"\noracle: {len(oracle_records)} cells -> {oracle_path}")

    coverage_path = CORPUS / corpus.coverage_path
    with open(coverage_path, "w", encoding="utf-8") as handle:
        for path, line, hits in coverage_rows:
            handle.write(f"{path}\t{line}\t{hits}\n")
    print(f"coverage: {len(coverage_rows)} lines -> {coverage_path}")
    print(f"transcript -> {transcript_path}")

    print("\nOK" if all_ok else "\nPROBLEMS FOUND")
    return 0 if all_ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
