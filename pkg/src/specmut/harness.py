"""Contract weaving, suite execution, and tri-valued outcome classification.

The outcome protocol, evaluated strictly in this order:

    1. deadline exceeded                          -> TIMEOUT   (value -1)
    2. violation marker seen (contracts woven)    -> VIOLATION (value  0)
    3. clean exit                                 -> ALL_PASS  (value  1)
    4. test/assertion failure (exit status 1)     -> TEST_FAIL (value -1)
    5. anything else                              -> CRASH     (value -1)

Marker lines are exact ASCII ``POSTCOND_VIOLATION:<cond_id>``, one per
line with no surrounding whitespace, written to stderr by woven guards.
A marker always wins over a later failure or crash in the same run: the
guard fires before the enclosing test dies.
"""

from __future__ import annotations

import enum
import os
import re
import shlex
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

from specmut.errors import RenderError, SpawnFailureError, TemplateMissingError
from specmut.frontend.adapters import get_adapter
from specmut.frontend.types import MethodRecord, SourceUnit

MARKER_RE = re.compile(r"^POSTCOND_VIOLATION:(\S+)$")
LOG_EXCERPT_CAP = 64 * 1024
DEFAULT_TIMEOUT_MS = 120_000


@dataclass
class Postcondition:
    cond_id: str
    source_text: str
    old_exprs: list = field(default_factory=list)


@dataclass
class PostconditionSet:
    set_id: str
    conditions: list = field(default_factory=list)

    def all_old_exprs(self) -> list:
        ordered = []
        for cond in self.conditions:
            for expr in cond.old_exprs:
                if expr not in ordered:
                    ordered.append(expr)
        return ordered


class RunnerMode(enum.Enum):
    PROCESS = "PROCESS"
    BUILTIN = "BUILTIN"


@dataclass
class RunnerSpec:
    mode: RunnerMode
    working_dir: str = "."
    test_command: str | None = None        # PROCESS mode
    test_files: list = field(default_factory=list)   # BUILTIN mode, unit paths
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    env: dict = field(default_factory=dict)
    adapter_id: str = "fixture"

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")
        if self.mode is RunnerMode.PROCESS and not self.test_command:
            raise ValueError("PROCESS mode requires a test_command")


class OutcomeKind(enum.Enum):
    ALL_PASS = "ALL_PASS"
    VIOLATION = "VIOLATION"
    TEST_FAIL = "TEST_FAIL"
    CRASH = "CRASH"
    TIMEOUT = "TIMEOUT"


_VALUE_BY_KIND = {
    OutcomeKind.ALL_PASS: 1,
    OutcomeKind.VIOLATION: 0,
    OutcomeKind.TEST_FAIL: -1,
    OutcomeKind.CRASH: -1,
    OutcomeKind.TIMEOUT: -1,
}


class PlainRun(enum.Enum):
    PASS = "PASS"
    TEST_FAIL = "TEST_FAIL"
    CRASH = "CRASH"
    TIMEOUT = "TIMEOUT"


@dataclass
class EvalOutcome:
    value: int
    kind: OutcomeKind
    violated_cond_ids: list = field(default_factory=list)
    duration_ms: int = 0
    log_excerpt: str = ""

    @classmethod
    def of(cls, kind: OutcomeKind, violated=None, duration_ms=0, log_excerpt=""):
        return cls(
            value=_VALUE_BY_KIND[kind],
            kind=kind,
            violated_cond_ids=list(violated or []),
            duration_ms=duration_ms,
            log_excerpt=log_excerpt[:LOG_EXCERPT_CAP],
        )


# --- weaving --------------------------------------------------------------


def instrument(unit: SourceUnit, method: MethodRecord, pset: PostconditionSet) -> SourceUnit:
    """Weave the set's guards and pre-state snapshots into the unit.

    Substitution is plain text: everything outside the two placeholder
    sites is bit-exact. Each guard emits the violation marker for its
    condition id and halts the current test on failure.
    """
    adapter = get_adapter(unit.adapter_id)
    template = adapter.weaving_template(unit.text, method.name)
    if "{{OLD_SNAPSHOTS}}" not in template or "{{POSTCONDITIONS}}" not in template:
        raise TemplateMissingError(
            f"adapter {unit.adapter_id!r} produced a template without placeholders"
        )
    old_exprs = pset.all_old_exprs()
    snapshots = adapter.render_snapshots(old_exprs)
    guards = adapter.render_guards(pset.conditions, old_exprs)
    woven = template.replace("{{OLD_SNAPSHOTS}}", snapshots).replace(
        "{{POSTCONDITIONS}}", guards
    )
    try:
        adapter.parse(woven)
    except Exception as exc:
        raise RenderError(f"woven unit does not parse: {exc}") from exc
    return SourceUnit(
        unit_id=f"{unit.unit_id}#{pset.set_id}",
        path=unit.path,
        text=woven,
        adapter_id=unit.adapter_id,
    )


def load_test_units(spec: RunnerSpec) -> list[SourceUnit]:
    units = []
    for rel in spec.test_files:
        path = Path(spec.working_dir) / rel
        text = path.read_text(encoding="utf-8")
        units.append(SourceUnit(unit_id=rel, path=rel, text=text,
                                adapter_id=spec.adapter_id))
    return units


# --- execution --------------------------------------------------------------


def run_suite(unit_set: list, spec: RunnerSpec, contracts_woven: bool) -> EvalOutcome:
    """Execute the test suite over the given units and classify the outcome."""
    if spec.mode is RunnerMode.BUILTIN:
        return _run_builtin(unit_set, spec, contracts_woven)
    return _run_process(unit_set, spec, contracts_woven)


def _run_builtin(unit_set, spec: RunnerSpec, contracts_woven: bool) -> EvalOutcome:
    adapter = get_adapter(spec.adapter_id)
    started = time.monotonic()
    result = adapter.run_builtin([u.text for u in unit_set], spec.timeout_ms)
    duration = int((time.monotonic() - started) * 1000)
    log_text = "\n".join(result.log_lines)
    if result.timed_out:
        return EvalOutcome.of(OutcomeKind.TIMEOUT, duration_ms=duration,
                              log_excerpt=log_text)
    if contracts_woven and result.violated_cond_ids:
        return EvalOutcome.of(OutcomeKind.VIOLATION, result.violated_cond_ids,
                              duration, log_text)
    if result.crash_message is not None:
        return EvalOutcome.of(OutcomeKind.CRASH, duration_ms=duration,
                              log_excerpt=log_text)
    if result.failed_tests:
        return EvalOutcome.of(OutcomeKind.TEST_FAIL, duration_ms=duration,
                              log_excerpt=log_text)
    return EvalOutcome.of(OutcomeKind.ALL_PASS, duration_ms=duration,
                          log_excerpt=log_text)


def _run_process(unit_set, spec: RunnerSpec, contracts_woven: bool) -> EvalOutcome:
    started = time.monotonic()
    with tempfile.TemporaryDirectory(prefix="specmut-run-") as tmp:
        workdir = Path(tmp) / "work"
        shutil.copytree(spec.working_dir, workdir)
        for unit in unit_set:
            target = workdir / unit.path
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(unit.text, encoding="utf-8")
        env = dict(os.environ)
        env.update(spec.env)
        try:
            proc = subprocess.run(
                shlex.split(spec.test_command),
                cwd=workdir,
                env=env,
                capture_output=True,
                text=True,
                timeout=spec.timeout_ms / 1000.0,
            )
        except subprocess.TimeoutExpired as exc:
            duration = int((time.monotonic() - started) * 1000)
            log_text = _excerpt(exc.stdout, exc.stderr)
            return EvalOutcome.of(OutcomeKind.TIMEOUT, duration_ms=duration,
                                  log_excerpt=log_text)
        except (FileNotFoundError, PermissionError, NotADirectoryError) as exc:
            raise SpawnFailureError(f"cannot start {spec.test_command!r}: {exc}") from exc
    duration = int((time.monotonic() - started) * 1000)
    log_text = _excerpt(proc.stdout, proc.stderr)
    if contracts_woven:
        violated = _scan_markers(proc.stderr or "")
        if violated:
            return EvalOutcome.of(OutcomeKind.VIOLATION, violated, duration, log_text)
    if proc.returncode == 0:
        return EvalOutcome.of(OutcomeKind.ALL_PASS, duration_ms=duration,
                              log_excerpt=log_text)
    if proc.returncode == 1:
        return EvalOutcome.of(OutcomeKind.TEST_FAIL, duration_ms=duration,
                              log_excerpt=log_text)
    return EvalOutcome.of(OutcomeKind.CRASH, duration_ms=duration,
                          log_excerpt=log_text)


def _scan_markers(stderr: str) -> list:
    violated = []
    for line in stderr.splitlines():
        match = MARKER_RE.match(line)
        if match and match.group(1) not in violated:
            violated.append(match.group(1))
    return violated


def _excerpt(stdout, stderr) -> str:
    parts = []
    if stdout:
        parts.append(stdout if isinstance(stdout, str) else stdout.decode("utf-8", "replace"))
    if stderr:
        parts.append(stderr if isinstance(stderr, str) else stderr.decode("utf-8", "replace"))
    return "\n".join(parts)[:LOG_EXCERPT_CAP]


def evaluate(
    method_variant: SourceUnit,
    method: MethodRecord,
    pset: PostconditionSet,
    spec: RunnerSpec,
) -> EvalOutcome:
    """Instrument the variant with the set and run the suite, contracts woven."""
    woven = instrument(method_variant, method, pset)
    units = [woven]
    if spec.mode is RunnerMode.BUILTIN:
        units = [woven] + load_test_units(spec)
    return run_suite(units, spec, contracts_woven=True)


def classify_plain_run(outcome: EvalOutcome) -> PlainRun:
    """Map an unwoven run's outcome onto the defectiveness label classes."""
    mapping = {
        OutcomeKind.ALL_PASS: PlainRun.PASS,
        OutcomeKind.TEST_FAIL: PlainRun.TEST_FAIL,
        OutcomeKind.CRASH: PlainRun.CRASH,
        OutcomeKind.TIMEOUT: PlainRun.TIMEOUT,
    }
    if outcome.kind not in mapping:
        raise ValueError("plain runs cannot produce contract violations")
    return mapping[outcome.kind]


def run_plain(unit_set: list, spec: RunnerSpec) -> PlainRun:
    """Run the suite without contracts and classify the result."""
    units = list(unit_set)
    if spec.mode is RunnerMode.BUILTIN:
        units = units + load_test_units(spec)
    return classify_plain_run(run_suite(units, spec, contracts_woven=False))
