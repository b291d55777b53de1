"""Run persistence: JSONL result records, aggregation, report emission.

Everything is written with sorted keys and LF endings so goldens stay
diff-stable. Ratios without a defined value render as "—" in reports.
"""

from __future__ import annotations

import csv
import enum
import json
import logging
import os
import secrets
import time
from dataclasses import dataclass
from pathlib import Path

from specmut.errors import (
    DuplicateKeyError,
    EmptySelectionError,
    MissingSampleError,
    StoreIOError,
)
from specmut.metrics import SampleStats, build_metric_report

log = logging.getLogger(__name__)

RESULTS_FILE = "results.jsonl"
UNDEFINED_MARK = "—"


class Setting(enum.Enum):
    C2P = "C2P"     # code only
    N2P = "N2P"     # natural-language comment only
    F2P = "F2P"     # both

    @classmethod
    def parse(cls, value) -> "Setting":
        return value if isinstance(value, cls) else cls(str(value))


@dataclass
class ResultRecord:
    run_id: str
    task_id: str
    setting: Setting
    model_tag: str
    sample_index: int
    correct: bool
    complete: bool
    kill_row_ref: str = ""

    def __post_init__(self):
        self.setting = Setting.parse(self.setting)
        if self.sample_index < 0:
            raise ValueError("sample_index must be >= 0")
        if self.complete and not self.correct:
            raise ValueError("complete implies correct")

    def key(self) -> tuple:
        return (self.run_id, self.task_id, self.model_tag,
                self.setting.value, self.sample_index)

    def to_json(self) -> dict:
        return {
            "complete": self.complete,
            "correct": self.correct,
            "kill_row_ref": self.kill_row_ref,
            "model_tag": self.model_tag,
            "run_id": self.run_id,
            "sample_index": self.sample_index,
            "setting": self.setting.value,
            "task_id": self.task_id,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ResultRecord":
        return cls(
            run_id=data["run_id"],
            task_id=data["task_id"],
            setting=Setting(data["setting"]),
            model_tag=data["model_tag"],
            sample_index=data["sample_index"],
            correct=data["correct"],
            complete=data["complete"],
            kill_row_ref=data.get("kill_row_ref", ""),
        )


@dataclass
class RunManifest:
    run_id: str
    config_snapshot: dict
    tool_version: str
    seed: int
    started: str
    finished: str = ""

    @classmethod
    def create(cls, config_snapshot: dict, tool_version: str, seed: int) -> "RunManifest":
        stamp = time.strftime("%Y%m%dT%H%M%S", time.gmtime())
        return cls(
            run_id=f"{stamp}-{secrets.token_hex(4)}",
            config_snapshot=config_snapshot,
            tool_version=tool_version,
            seed=seed,
            started=time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        )


def init_store(store_dir) -> Path:
    path = Path(store_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _results_path(store_dir) -> Path:
    return Path(store_dir) / RESULTS_FILE


def read_records(store_dir) -> list:
    """Load all records; a truncated trailing line is skipped with a warning."""
    path = _results_path(store_dir)
    if not path.exists():
        return []
    records = []
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().split("\n")
    for i, raw in enumerate(lines):
        if not raw.strip():
            continue
        try:
            records.append(ResultRecord.from_json(json.loads(raw)))
        except (json.JSONDecodeError, KeyError):
            if i == len(lines) - 1:
                log.warning("ignoring truncated trailing record in %s", path)
            else:
                raise StoreIOError(f"corrupt record at {path}:{i + 1}") from None
    return records


def append_records(store_dir, records: list) -> int:
    """Atomically append fresh records; duplicate keys reject the whole batch."""
    if not records:
        return 0
    existing_keys = {r.key() for r in read_records(store_dir)}
    batch_keys = set()
    for record in records:
        key = record.key()
        if key in existing_keys or key in batch_keys:
            raise DuplicateKeyError(f"record {key} already stored")
        batch_keys.add(key)
    path = _results_path(store_dir)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = "".join(
        json.dumps(r.to_json(), sort_keys=True) + "\n" for r in records
    )
    try:
        with open(path, "a", encoding="utf-8") as handle:
            handle.write(payload)
            handle.flush()
            os.fsync(handle.fileno())
    except OSError as exc:
        raise StoreIOError(f"cannot append to {path}: {exc}") from exc
    return len(records)


def aggregate(store_dir, query: dict | None = None) -> list:
    """Group records into SampleStats by (task, model, setting).

    ``n`` is the highest sample index plus one; gaps in the index
    sequence are an error because the estimator needs the full draw.
    """
    query = query or {}
    records = read_records(store_dir)
    selected = []
    for record in records:
        if "task_id" in query and record.task_id != query["task_id"]:
            continue
        if "model_tag" in query and record.model_tag != query["model_tag"]:
            continue
        if "setting" in query and record.setting.value != str(query["setting"]):
            continue
        if "run_id" in query and record.run_id != query["run_id"]:
            continue
        selected.append(record)
    if not selected:
        raise EmptySelectionError(f"no records match {query!r}")
    groups: dict = {}
    for record in selected:
        groups.setdefault(
            (record.task_id, record.model_tag, record.setting.value), {}
        )[record.sample_index] = record
    stats = []
    for (task_id, model_tag, setting), by_index in sorted(groups.items()):
        n = max(by_index) + 1
        gaps = [i for i in range(n) if i not in by_index]
        if gaps:
            raise MissingSampleError((task_id, model_tag, setting), gaps)
        per_sample = [
            (by_index[i].correct, by_index[i].complete) for i in range(n)
        ]
        stats.append(
            SampleStats(
                task_id=task_id,
                n=n,
                c_corr=sum(1 for c, _ in per_sample if c),
                c_comp=sum(1 for _, p in per_sample if p),
                per_sample=per_sample,
                model_tag=model_tag,
                setting=setting,
            )
        )
    return stats


# --- report emission -----------------------------------------------------------


def _fmt(value) -> str:
    return UNDEFINED_MARK if value is None else f"{value:.3f}"


def emit_report(stats: list, out_dir, k_values=(1, 3, 5)) -> dict:
    """Write report.txt, the tabular report.csv, and gaps.csv.

    One row per (model_tag, setting) group with Corr/Comp/Delta and
    Comp-over-Corr columns for each k, all at 3 decimals.
    """
    if not stats:
        raise EmptySelectionError("no stats to report")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StoreIOError(f"cannot create report dir {out}: {exc}") from exc

    groups: dict = {}
    for stat in stats:
        groups.setdefault((stat.model_tag, stat.setting), []).append(stat)

    reports = {
        key: build_metric_report(group, list(k_values))
        for key, group in sorted(groups.items())
    }

    csv_path = out / "report.csv"
    with open(csv_path, "w", encoding="utf-8", newline="\n") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        header = ["model", "setting"]
        for k in k_values:
            header += [f"corr@{k}", f"comp@{k}", f"delta@{k}", f"comp_over_corr@{k}"]
        header.append("c2c")
        writer.writerow(header)
        for (model_tag, setting), report in reports.items():
            row = [model_tag, setting]
            for k in k_values:
                row += [
                    _fmt(report.corr_at[k]),
                    _fmt(report.comp_at[k]),
                    _fmt(report.delta_at[k]),
                    _fmt(report.rho_at[k]),
                ]
            row.append(_fmt(report.c2c))
            writer.writerow(row)

    gaps_path = out / "gaps.csv"
    with open(gaps_path, "w", encoding="utf-8", newline="\n") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["task_id", "setting", "gap"])
        for stat in sorted(stats, key=lambda s: (s.task_id, s.setting, s.model_tag)):
            from specmut.metrics import method_level_gap

            gap = method_level_gap(stat)
            if gap is not None:
                writer.writerow([stat.task_id, stat.setting, f"{gap:.3f}"])

    txt_path = out / "report.txt"
    with open(txt_path, "w", encoding="utf-8", newline="\n") as handle:
        for (model_tag, setting), report in reports.items():
            handle.write(f"== {model_tag} / {setting} ==\n")
            for k in k_values:
                handle.write(
                    f"  @{k}:  corr {_fmt(report.corr_at[k])}"
                    f"  comp {_fmt(report.comp_at[k])}"
                    f"  delta {_fmt(report.delta_at[k])}"
                    f"  comp/corr {_fmt(report.rho_at[k])}\n"
                )
            handle.write(f"  c2c: {_fmt(report.c2c)}\n")
        handle.write(
            "notes: ratios with zero denominators print as "
            f"{UNDEFINED_MARK}; ablation std is population std over trials.\n"
        )
    return {"report.csv": csv_path, "gaps.csv": gaps_path, "report.txt": txt_path,
            "reports": reports}
