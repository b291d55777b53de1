"""Subject-language adapter protocol and registry.

An adapter owns everything language-specific: parsing into labeled spans
and raw method info, expression syntax checks, the contract weaving
template, guard rendering, and (for the bundled language) in-process
test execution.
"""

from __future__ import annotations

import importlib
from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

from specmut.errors import UnknownAdapterError
from specmut.frontend.types import LabeledSpan


@dataclass
class RawMethod:
    """Language-agnostic method facts handed from adapter to frontend ops."""

    name: str
    signature: str
    doc_comment: str
    body_start: int
    body_end: int
    line: int
    params: list[str]
    external_refs: list[str]
    decision_points: int
    loc: int


@dataclass
class ParsedUnit:
    spans: list[LabeledSpan] = field(default_factory=list)
    methods: list[RawMethod] = field(default_factory=list)


@dataclass
class RawRunResult:
    """Outcome facts from a builtin-mode test run, before protocol mapping."""

    violated_cond_ids: list[str] = field(default_factory=list)
    failed_tests: list[str] = field(default_factory=list)
    crash_message: str | None = None
    timed_out: bool = False
    tests_run: int = 0
    log_lines: list[str] = field(default_factory=list)


@runtime_checkable
class SubjectAdapter(Protocol):
    adapter_id: str

    def parse(self, text: str) -> ParsedUnit: ...

    def check_expression(self, text: str) -> None: ...

    def weaving_template(self, text: str, method_name: str) -> str: ...

    def render_snapshots(self, old_exprs: list[str]) -> str: ...

    def render_guards(self, conditions: list, old_exprs: list[str]) -> str: ...

    def run_builtin(self, unit_texts: list[str], timeout_ms: int) -> RawRunResult: ...


_REGISTRY: dict[str, SubjectAdapter] = {}
_BUNDLED = {"fixture": "specmut.fixturelang"}


def register_adapter(adapter: SubjectAdapter) -> None:
    _REGISTRY[adapter.adapter_id] = adapter


def get_adapter(adapter_id: str) -> SubjectAdapter:
    if adapter_id not in _REGISTRY and adapter_id in _BUNDLED:
        module = importlib.import_module(_BUNDLED[adapter_id])
        register_adapter(module.FixtureAdapter())
    try:
        return _REGISTRY[adapter_id]
    except KeyError:
        raise UnknownAdapterError(f"no adapter registered under {adapter_id!r}") from None
