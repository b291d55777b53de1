"""Correctness/bug-completeness verdicts, kill matrices, mutant filtering.

A postcondition set is correct when evaluating it on the original
implementation yields 1, and bug-complete when it is correct and every
mutant evaluation yields exactly 0 (a violation). Crashes and test
failures on a mutant (-1) are not kills: the mutant survives.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from specmut.errors import SpawnFailureError
from specmut.frontend.types import MethodRecord, SourceUnit
from specmut.harness import (
    EvalOutcome,
    PlainRun,
    PostconditionSet,
    RunnerSpec,
    evaluate,
    run_plain,
)
from specmut.mutgen import MutantStatus

log = logging.getLogger(__name__)

ORIGINAL_VARIANT = "original"


@dataclass
class ValidationVerdict:
    set_id: str
    correct: bool
    complete: bool
    survived_mutants: list = field(default_factory=list)
    harness_error: bool = False


@dataclass
class KillMatrix:
    """Tri-valued outcomes for every (postcondition set, variant) pair.

    Column 0 is always the original implementation. ``variant_meta``
    carries per-mutant scheme/operator provenance for the ablation and
    cross-scheme analyses.
    """

    task_id: str
    set_ids: list
    variant_ids: list                      # original first
    cells: list                            # rows align with set_ids
    variant_meta: dict = field(default_factory=dict)   # id -> {scheme, operator}

    def row(self, set_id: str) -> list:
        return self.cells[self.set_ids.index(set_id)]

    def mutant_ids(self) -> list:
        return self.variant_ids[1:]

    def verdicts(self) -> list:
        return [
            check_completeness(row, set_id=set_id, mutant_ids=self.mutant_ids())
            for set_id, row in zip(self.set_ids, self.cells)
        ]


def check_correctness(original_outcome: EvalOutcome) -> bool:
    """Correct iff the woven original passes everything (value exactly 1)."""
    return original_outcome.value == 1


def check_completeness(row: list, set_id: str = "", mutant_ids=None) -> ValidationVerdict:
    """Verdict from one matrix row: original value first, then mutants.

    Complete iff the original yields 1 and every mutant yields exactly
    0. Mutants with any other value survive.
    """
    if not row:
        raise ValueError("row must contain at least the original outcome")
    if mutant_ids is None:
        mutant_ids = [f"m{i}" for i in range(1, len(row))]
    correct = row[0] == 1
    survivors = [
        mutant_ids[h - 1] for h in range(1, len(row)) if row[h] != 0
    ]
    return ValidationVerdict(
        set_id=set_id,
        correct=correct,
        complete=correct and not survivors,
        survived_mutants=survivors,
        harness_error=row[0] == -1,
    )


# --- kill matrix construction -------------------------------------------------


def _cell_key(task_id: str, set_id: str, variant_id: str) -> tuple:
    return (task_id, set_id, variant_id)


def _load_existing_cells(store_path) -> dict:
    cells = {}
    path = Path(store_path)
    if not path.exists():
        return cells
    with open(path, encoding="utf-8") as handle:
        for raw in handle:
            raw = raw.strip()
            if not raw:
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError:
                log.warning("ignoring truncated kill-matrix record")
                continue
            cells[(record["task"], record["set"], record["variant"])] = record
    return cells


def build_kill_matrix(
    task_id: str,
    unit: SourceUnit,
    method: MethodRecord,
    psets: list,
    mutants: list,
    spec: RunnerSpec,
    store_path=None,
    workers: int = 1,
) -> KillMatrix:
    """Evaluate every (set, variant) pair; persist one JSONL record per cell.

    Cells already present in the store are not re-evaluated, so an
    interrupted run resumes and converges to the same matrix. Cells are
    written in deterministic (set, variant) order regardless of worker
    scheduling. A spawn failure records value -1 for that cell and the
    build continues.
    """
    variants = [(ORIGINAL_VARIANT, unit)]
    for mutant in mutants:
        variants.append(
            (
                mutant.mutant_id,
                SourceUnit(
                    unit_id=f"{unit.unit_id}#{mutant.mutant_id}",
                    path=unit.path,
                    text=mutant.rendered_text,
                    adapter_id=unit.adapter_id,
                ),
            )
        )
    existing = _load_existing_cells(store_path) if store_path else {}
    pending = [
        (pset, variant_id, variant_unit)
        for pset in psets
        for variant_id, variant_unit in variants
        if _cell_key(task_id, pset.set_id, variant_id) not in existing
    ]

    def run_cell(item):
        pset, variant_id, variant_unit = item
        try:
            outcome = evaluate(variant_unit, method, pset, spec)
            return {
                "task": task_id,
                "set": pset.set_id,
                "variant": variant_id,
                "value": outcome.value,
                "kind": outcome.kind.value,
                "violated": list(outcome.violated_cond_ids),
                "ms": outcome.duration_ms,
            }
        except SpawnFailureError as exc:
            log.warning("spawn failure for %s/%s: %s", pset.set_id, variant_id, exc)
            return {
                "task": task_id,
                "set": pset.set_id,
                "variant": variant_id,
                "value": -1,
                "kind": "SPAWN_FAILURE",
                "violated": [],
                "ms": 0,
            }

    if workers > 1 and pending:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_cell, pending))
    else:
        results = [run_cell(item) for item in pending]

    fresh = {
        (r["task"], r["set"], r["variant"]): r for r in results
    }
    all_cells = {**existing, **fresh}

    if store_path:
        writer_path = Path(store_path)
        writer_path.parent.mkdir(parents=True, exist_ok=True)
        with open(writer_path, "a", encoding="utf-8") as handle:
            for pset in psets:
                for variant_id, _ in variants:
                    key = _cell_key(task_id, pset.set_id, variant_id)
                    if key in fresh:
                        handle.write(json.dumps(fresh[key], sort_keys=True) + "\n")

    matrix_cells = [
        [all_cells[_cell_key(task_id, pset.set_id, vid)]["value"] for vid, _ in variants]
        for pset in psets
    ]
    meta = {}
    for mutant in mutants:
        meta[mutant.mutant_id] = {
            "scheme": mutant.scheme.value,
            "operator": mutant.operator_name,
        }
    return KillMatrix(
        task_id=task_id,
        set_ids=[p.set_id for p in psets],
        variant_ids=[vid for vid, _ in variants],
        cells=matrix_cells,
        variant_meta=meta,
    )


# --- defective-mutant filtering --------------------------------------------------


def filter_defective_mutants(
    unit: SourceUnit, mutants: list, spec: RunnerSpec
) -> list:
    """Keep only mutants the plain suite catches with a test failure.

    Mutants that still pass are discarded as equivalent-by-tests; those
    that crash or time out are discarded so that postconditions, not
    incidental exceptions, do the discriminating.
    """
    defective = []
    for mutant in mutants:
        if mutant.status is not MutantStatus.CANDIDATE:
            continue
        variant = SourceUnit(
            unit_id=f"{unit.unit_id}#{mutant.mutant_id}",
            path=unit.path,
            text=mutant.rendered_text,
            adapter_id=unit.adapter_id,
        )
        plain = run_plain([variant], spec)
        if plain is PlainRun.TEST_FAIL:
            mutant.status = MutantStatus.DEFECTIVE
            defective.append(mutant)
        elif plain is PlainRun.PASS:
            mutant.status = MutantStatus.DISCARDED_PASSES
        else:
            mutant.status = MutantStatus.DISCARDED_CRASHES
    return defective


def require_min_mutants(mutants: list, min_count: int = 5) -> bool:
    """At least ``min_count`` defective mutants must remain for a task."""
    return sum(1 for m in mutants if m.status is MutantStatus.DEFECTIVE) >= min_count


def scheme_of_map(mutants: list) -> dict:
    """mutant_id -> Scheme for metric computations."""
    return {m.mutant_id: m.scheme for m in mutants}


def matrix_from_records(records: list, task_id: str, variant_meta=None) -> KillMatrix:
    """Rebuild a KillMatrix from persisted JSONL cell records."""
    sets = []
    variants = [ORIGINAL_VARIANT]
    values = {}
    for record in records:
        if record["task"] != task_id:
            continue
        if record["set"] not in sets:
            sets.append(record["set"])
        if record["variant"] not in variants:
            variants.append(record["variant"])
        values[(record["set"], record["variant"])] = record["value"]
    cells = [[values[(s, v)] for v in variants] for s in sets]
    return KillMatrix(
        task_id=task_id,
        set_ids=sets,
        variant_ids=variants,
        cells=cells,
        variant_meta=variant_meta or {},
    )
