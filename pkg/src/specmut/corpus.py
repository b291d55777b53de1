"""Corpus configuration: the JSON document driving every CLI subcommand.

One config file describes a corpus of target methods (unit, tests,
postcondition sets), the mutation setup, the harness mode, and metric
parameters. String values of the form ``${NAME}`` inside the optional
``secrets`` object are interpolated from the environment at load time;
nothing else is rewritten, so a run manifest's config snapshot stays
self-describing.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from specmut.frontend.ops import extract_methods, parse_unit
from specmut.frontend.types import MethodRecord, SourceUnit
from specmut.harness import Postcondition, PostconditionSet, RunnerMode, RunnerSpec
from specmut.llmclient import Transport, TransportMode
from specmut.pipeline import SelectionConfig


@dataclass
class CorpusTarget:
    unit_path: str
    method_name: str
    test_files: list
    postconds_path: str

    @property
    def method_id(self) -> str:
        return f"{self.unit_path}::{self.method_name}"


@dataclass
class Corpus:
    root: Path
    adapter_id: str
    catalog: str
    coverage_path: str
    targets: list
    harness_mode: RunnerMode
    timeout_ms: int
    llm_enabled: bool
    llm_mode: str
    llm_transcript: str
    k_values: list
    model_tag: str
    setting: str
    seed: int
    min_mutants: int
    selection: SelectionConfig
    raw_config: dict = field(default_factory=dict)

    def runner_spec(self, target: CorpusTarget) -> RunnerSpec:
        return RunnerSpec(
            mode=self.harness_mode,
            working_dir=str(self.root),
            test_files=list(target.test_files),
            timeout_ms=self.timeout_ms,
            adapter_id=self.adapter_id,
        )

    def transport(self) -> Transport:
        return Transport(
            mode=TransportMode(self.llm_mode),
            transcript_path=str(self.root / self.llm_transcript),
        )

    def load_unit(self, target: CorpusTarget) -> SourceUnit:
        text = (self.root / target.unit_path).read_text(encoding="utf-8")
        return parse_unit(text, self.adapter_id, path=target.unit_path)

    def load_method(self, target: CorpusTarget) -> tuple[SourceUnit, MethodRecord]:
        unit = self.load_unit(target)
        for record in extract_methods(unit):
            if record.name == target.method_name:
                return unit, record
        raise LookupError(f"method {target.method_name!r} not in {target.unit_path}")

    def load_psets(self, target: CorpusTarget) -> list:
        data = json.loads(
            (self.root / target.postconds_path).read_text(encoding="utf-8")
        )
        return [
            PostconditionSet(
                set_id=entry["set_id"],
                conditions=[
                    Postcondition(c["cond_id"], c["source_text"], list(c["old_exprs"]))
                    for c in entry["conditions"]
                ],
            )
            for entry in data["sets"]
        ]


def _interpolate_secrets(config: dict) -> dict:
    secrets = config.get("secrets")
    if not isinstance(secrets, dict):
        return config
    resolved = {}
    for key, value in secrets.items():
        if isinstance(value, str) and value.startswith("${") and value.endswith("}"):
            resolved[key] = os.environ.get(value[2:-1], "")
        else:
            resolved[key] = value
    out = dict(config)
    out["secrets"] = resolved
    return out


def load_corpus(config_path) -> Corpus:
    path = Path(config_path)
    config = _interpolate_secrets(json.loads(path.read_text(encoding="utf-8")))
    root = (path.parent / config.get("corpus_dir", ".")).resolve()
    harness = config.get("harness", {})
    llm = config.get("llm_mutation", {})
    sel = config.get("selection", {})
    targets = [
        CorpusTarget(
            unit_path=t["unit"],
            method_name=t["method"],
            test_files=list(t["tests"]),
            postconds_path=t["postconds"],
        )
        for t in config.get("targets", [])
    ]
    return Corpus(
        root=root,
        adapter_id=config.get("adapter", "fixture"),
        catalog=config.get("catalog", "fixture"),
        coverage_path=config.get("coverage", ""),
        targets=targets,
        harness_mode=RunnerMode(harness.get("mode", "BUILTIN")),
        timeout_ms=int(harness.get("timeout_ms", 120_000)),
        llm_enabled=bool(llm.get("enabled", False)),
        llm_mode=llm.get("mode", "REPLAY"),
        llm_transcript=llm.get("transcript", ""),
        k_values=list(config.get("metrics", {}).get("k_values", [1, 3, 5])),
        model_tag=config.get("model_tag", "default"),
        setting=config.get("setting", "F2P"),
        seed=int(config.get("seed", 0)),
        min_mutants=int(config.get("min_mutants", 5)),
        selection=SelectionConfig(
            min_comment_words=int(sel.get("min_comment_words", 15)),
            min_loc=int(sel.get("min_loc", 15)),
            min_cc=int(sel.get("min_cc", 3)),
            min_coverage=float(sel.get("min_coverage", 0.90)),
            min_mutants=int(config.get("min_mutants", 5)),
            target_count=int(sel.get("target_count", 0)),
        ),
        raw_config=config,
    )


def bundled_corpus_config() -> Path:
    """Path of the corpus shipped inside the package."""
    return Path(str(resources.files("specmut.fixtures"))) / "corpus" / "config.json"
