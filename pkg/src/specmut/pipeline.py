"""Benchmark assembly: method filtering, diverse selection, instance
manifests, and the bounded environment-repair loop."""

from __future__ import annotations

import difflib
import json
import logging
import os
import shlex
import subprocess
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from specmut.errors import (
    CountExceedsPopulationError,
    MissingTestsError,
    ProviderError,
    TooFewMutantsError,
)
from specmut.frontend.types import (
    DependencyClass,
    MethodRecord,
    SourceUnit,
)
from specmut.frontend.ops import classify_dependency, loc_bucket
from specmut.harness import Postcondition, PostconditionSet, RunnerSpec, RunnerMode
from specmut.llmclient import PromptRequest, Transport, complete
from specmut.mutgen import Mutant, MutantStatus, Scheme, render_diff, render_single_span
from specmut.validate import require_min_mutants

log = logging.getLogger(__name__)


@dataclass
class SelectionConfig:
    min_comment_words: int = 15      # strict greater-than
    min_loc: int = 15
    min_cc: int = 3
    min_coverage: float = 0.90
    min_mutants: int = 5
    target_count: int = 0

    def __post_init__(self):
        if min(self.min_comment_words, self.min_loc, self.min_cc, self.min_mutants) <= 0:
            raise ValueError("thresholds must be positive")
        if not 0 < self.min_coverage <= 1:
            raise ValueError("min_coverage must be in (0, 1]")


def filter_candidate_methods(records: list, cfg: SelectionConfig) -> list:
    """Keep documented, non-trivial, well-covered methods, preserving order.

    A record passes with strictly more than ``min_comment_words``
    comment words, (loc >= min_loc OR cyclomatic >= min_cc), and
    coverage >= min_coverage. Records without coverage are skipped with
    a logged reason rather than failing the batch.
    """
    kept = []
    for record in records:
        if record.coverage is None:
            log.warning("COVERAGE_ABSENT: skipping %s", record.method_id)
            continue
        if record.comment_words <= cfg.min_comment_words:
            continue
        if not (record.loc >= cfg.min_loc or record.cyclomatic >= cfg.min_cc):
            continue
        if record.coverage < cfg.min_coverage:
            continue
        kept.append(record)
    return kept


# --- header embeddings -------------------------------------------------------


EMBEDDING_DIM = 256


class TrigramHashProvider:
    """Deterministic fallback embedding: character trigrams hashed into
    256 buckets, then L2-normalized. Headers shorter than a trigram use
    the whole header as a single feature."""

    def embed(self, headers: list) -> list:
        vectors = []
        for header in headers:
            if not header:
                raise ValueError("headers must be non-empty strings")
            counts = np.zeros(EMBEDDING_DIM, dtype=np.float64)
            grams = (
                [header[i:i + 3] for i in range(len(header) - 2)]
                if len(header) >= 3 else [header]
            )
            for gram in grams:
                counts[zlib.crc32(gram.encode("utf-8")) % EMBEDDING_DIM] += 1.0
            vectors.append(counts / np.linalg.norm(counts))
        return vectors


class HttpEmbeddingProvider:
    """Live embedding endpoint; failures surface as PROVIDER_ERROR.

    There is no silent fallback: switching to the trigram provider is an
    explicit configuration choice.
    """

    def __init__(self, endpoint: str, auth_env_var: str = "SPECMUT_API_TOKEN",
                 timeout_s: float = 60.0):
        self.endpoint = endpoint
        self.auth_env_var = auth_env_var
        self.timeout_s = timeout_s

    def embed(self, headers: list) -> list:
        from specmut.llmclient import _http_post

        token = os.environ.get(self.auth_env_var, "")
        try:
            body = _http_post(
                self.endpoint, {"inputs": list(headers)}, self.timeout_s, token
            )
            rows = json.loads(body)["embeddings"]
        except Exception as exc:
            raise ProviderError(f"embedding provider failed: {exc}") from exc
        vectors = []
        for row in rows:
            vec = np.asarray(row, dtype=np.float64)
            norm = np.linalg.norm(vec)
            if norm == 0:
                raise ProviderError("embedding provider returned a zero vector")
            vectors.append(vec / norm)
        return vectors


def embed_headers(headers: list, provider) -> list:
    """One unit vector per header; deterministic for the bundled provider."""
    if not headers:
        return []
    vectors = provider.embed(list(headers))
    for vec in vectors:
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > 1e-9:
            raise ProviderError(f"provider returned a non-unit vector (norm {norm})")
    return vectors


def farthest_first_select(vectors: list, count: int) -> list:
    """Greedy max-min diverse subset under cosine distance (1 - dot).

    The first pick is index 0; every later pick maximizes the minimum
    distance to the already-selected set, breaking ties toward the
    lowest index. Deterministic by construction.
    """
    if count > len(vectors):
        raise CountExceedsPopulationError(
            f"cannot select {count} of {len(vectors)} vectors"
        )
    if count <= 0:
        return []
    matrix = np.asarray(vectors, dtype=np.float64)
    selected = [0]
    min_dist = 1.0 - matrix @ matrix[0]
    min_dist[0] = -np.inf
    while len(selected) < count:
        pick = int(np.argmax(min_dist))       # argmax takes the lowest index on ties
        selected.append(pick)
        dist_new = 1.0 - matrix @ matrix[pick]
        min_dist = np.minimum(min_dist, dist_new)
        min_dist[pick] = -np.inf
    return selected


# --- instance manifests --------------------------------------------------------


@dataclass
class BenchmarkInstance:
    task_id: str
    sig: str
    nl: str
    impl: str
    tests: RunnerSpec
    mutants: list
    postconditions: list
    language_tag: str
    dependency_class: DependencyClass
    loc_bucket: str


def _dump_json(path: Path, payload) -> None:
    path.write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def assemble_instance(
    method: MethodRecord,
    unit: SourceUnit,
    mutants: list,
    psets: list,
    tests: RunnerSpec,
    out_dir,
    language_tag: str = "fixture",
    allowlist: set | None = None,
    min_mutants: int = 5,
) -> BenchmarkInstance:
    """Write one task directory: instance.json, impl.src, tests/, mutants/,
    postconds/. JSON keys are sorted and files end with LF for byte-stable
    diffs; loading the directory reproduces the manifest exactly.
    """
    defective = [m for m in mutants if m.status is MutantStatus.DEFECTIVE]
    if not require_min_mutants(mutants, min_mutants):
        raise TooFewMutantsError(
            f"{method.method_id} has {len(defective)} defective mutants, needs {min_mutants}"
        )
    if tests.mode is RunnerMode.BUILTIN and not tests.test_files:
        raise MissingTestsError(f"{method.method_id} has an empty test manifest")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "impl.src").write_text(unit.text, encoding="utf-8")

    copied_tests = []
    if tests.mode is RunnerMode.BUILTIN:
        (out / "tests").mkdir(exist_ok=True)
        for rel in tests.test_files:
            src = Path(tests.working_dir) / rel
            name = Path(rel).name
            (out / "tests" / name).write_text(
                src.read_text(encoding="utf-8"), encoding="utf-8"
            )
            copied_tests.append(f"tests/{name}")

    (out / "mutants").mkdir(exist_ok=True)
    mutant_entries = []
    for mutant in defective:
        safe_name = mutant.mutant_id.split("::", 1)[-1].replace("::", "_").replace("@", "_at_")
        diff_file = f"mutants/{safe_name}.diff"
        (out / diff_file).write_text(
            render_diff(unit.text, mutant), encoding="utf-8"
        )
        mutant_entries.append(
            {
                "byte_end": mutant.byte_end,
                "byte_start": mutant.byte_start,
                "diff_file": diff_file,
                "id": mutant.mutant_id,
                "line": mutant.line,
                "operator": mutant.operator_name,
                "original_payload": mutant.original_payload,
                "replacement": mutant.replacement,
                "scheme": mutant.scheme.value,
                "status": mutant.status.value,
            }
        )

    (out / "postconds").mkdir(exist_ok=True)
    pset_files = []
    for pset in psets:
        rel = f"postconds/{pset.set_id}.json"
        _dump_json(
            out / rel,
            {
                "conditions": [
                    {
                        "cond_id": c.cond_id,
                        "old_exprs": list(c.old_exprs),
                        "source_text": c.source_text,
                    }
                    for c in pset.conditions
                ],
                "set_id": pset.set_id,
            },
        )
        pset_files.append(rel)

    dep = classify_dependency(method, allowlist or set())
    bucket = loc_bucket(method)
    manifest = {
        "dependency_class": dep.value,
        "impl_file": "impl.src",
        "language_tag": language_tag,
        "loc_bucket": bucket.value,
        "mutants": mutant_entries,
        "nl": method.doc_comment,
        "postcond_files": pset_files,
        "sig": method.signature,
        "task_id": method.method_id,
        "tests": {
            "adapter_id": tests.adapter_id,
            "mode": tests.mode.value,
            "test_command": tests.test_command,
            "test_files": copied_tests if tests.mode is RunnerMode.BUILTIN else [],
            "timeout_ms": tests.timeout_ms,
        },
        "unit_path": unit.path,
    }
    _dump_json(out / "instance.json", manifest)
    return load_instance(out)


def load_instance(task_dir) -> BenchmarkInstance:
    """Read one task directory back into a BenchmarkInstance."""
    root = Path(task_dir)
    manifest = json.loads((root / "instance.json").read_text(encoding="utf-8"))
    impl = (root / manifest["impl_file"]).read_text(encoding="utf-8")
    tests_meta = manifest["tests"]
    spec = RunnerSpec(
        mode=RunnerMode(tests_meta["mode"]),
        working_dir=str(root),
        test_command=tests_meta["test_command"],
        test_files=list(tests_meta["test_files"]),
        timeout_ms=tests_meta["timeout_ms"],
        adapter_id=tests_meta["adapter_id"],
    )
    mutants = []
    for entry in manifest["mutants"]:
        rendered = render_single_span(
            impl, entry["byte_start"], entry["byte_end"], entry["replacement"]
        )
        mutants.append(
            Mutant(
                mutant_id=entry["id"],
                method_id=manifest["task_id"],
                scheme=Scheme(entry["scheme"]),
                operator_name=entry["operator"],
                byte_start=entry["byte_start"],
                byte_end=entry["byte_end"],
                original_payload=entry["original_payload"],
                replacement=entry["replacement"],
                rendered_text=rendered,
                status=MutantStatus(entry["status"]),
                line=entry["line"],
            )
        )
    psets = []
    for rel in manifest["postcond_files"]:
        data = json.loads((root / rel).read_text(encoding="utf-8"))
        psets.append(
            PostconditionSet(
                set_id=data["set_id"],
                conditions=[
                    Postcondition(c["cond_id"], c["source_text"], list(c["old_exprs"]))
                    for c in data["conditions"]
                ],
            )
        )
    return BenchmarkInstance(
        task_id=manifest["task_id"],
        sig=manifest["sig"],
        nl=manifest["nl"],
        impl=impl,
        tests=spec,
        mutants=mutants,
        postconditions=psets,
        language_tag=manifest["language_tag"],
        dependency_class=DependencyClass(manifest["dependency_class"]),
        loc_bucket=manifest["loc_bucket"],
    )


# --- environment repair loop ------------------------------------------------------


DEFAULT_CONFIG_ALLOWLIST = ("config.json", "pyproject.toml", "pom.xml")

REPAIR_SYSTEM = (
    "You repair the build configuration of a project whose check command is "
    "failing. You may only rewrite the config files shown. Reply with one "
    "block per file to replace, in the exact form:\n"
    "<<<FILE: name>>>\n<full new file content>\n<<<END>>>"
)


@dataclass
class RepairRound:
    round_index: int
    check_passed: bool
    log_excerpt: str
    edits: list = field(default_factory=list)       # [{file, diff}]
    rejected: list = field(default_factory=list)    # files outside the allowlist
    prompt_id: str = ""
    response: str = ""


@dataclass
class RepairReport:
    success: bool
    rounds: list = field(default_factory=list)

    @property
    def edit_count(self) -> int:
        return sum(len(r.edits) for r in self.rounds)


def _run_check(check: RunnerSpec) -> tuple:
    env = dict(os.environ)
    env.update(check.env)
    try:
        proc = subprocess.run(
            shlex.split(check.test_command),
            cwd=check.working_dir,
            env=env,
            capture_output=True,
            text=True,
            timeout=check.timeout_ms / 1000.0,
        )
    except subprocess.TimeoutExpired as exc:
        return False, f"check timed out\n{exc.stdout or ''}{exc.stderr or ''}"
    output = (proc.stdout or "") + (proc.stderr or "")
    return proc.returncode == 0, output


def _parse_file_blocks(response: str) -> list:
    blocks = []
    lines = response.splitlines()
    current_name = None
    current: list = []
    for line in lines:
        stripped = line.strip()
        if stripped.startswith("<<<FILE:") and stripped.endswith(">>>"):
            current_name = stripped[len("<<<FILE:"):-len(">>>")].strip()
            current = []
        elif stripped == "<<<END>>>" and current_name is not None:
            blocks.append((current_name, "\n".join(current) + "\n"))
            current_name = None
        elif current_name is not None:
            current.append(line)
    return blocks


def environment_repair_loop(
    project_dir,
    check: RunnerSpec,
    transport: Transport,
    max_rounds: int = 5,
    allowlist: tuple = DEFAULT_CONFIG_ALLOWLIST,
) -> RepairReport:
    """Run the check; on failure, let the client rewrite config files and retry.

    Edits are whole-file replacements restricted to the allowlist; a
    response naming any other file has that edit rejected while the
    round still counts. Stops at the first passing check or after
    ``max_rounds`` repair rounds.
    """
    project = Path(project_dir)
    check_spec = RunnerSpec(
        mode=RunnerMode.PROCESS,
        working_dir=str(project),
        test_command=check.test_command,
        timeout_ms=check.timeout_ms,
        env=check.env,
    )
    report = RepairReport(success=False)
    passed, log_text = _run_check(check_spec)
    report.rounds.append(RepairRound(0, passed, log_text[:4096]))
    if passed:
        report.success = True
        return report

    for round_index in range(1, max_rounds + 1):
        listed = []
        for name in allowlist:
            path = project / name
            if path.exists():
                listed.append(
                    f"<<<FILE: {name}>>>\n{path.read_text(encoding='utf-8')}<<<END>>>"
                )
        user = (
            f"check command: {check_spec.test_command}\n\n"
            f"failure log:\n{log_text}\n\nconfig files:\n" + "\n".join(listed)
        )
        request = PromptRequest.build(REPAIR_SYSTEM, user)
        response = complete(request, transport)
        round_record = RepairRound(round_index, False, "", prompt_id=request.request_id,
                                   response=response)
        for name, content in _parse_file_blocks(response):
            if name not in allowlist:
                log.warning("EDIT_OUTSIDE_ALLOWLIST: rejecting edit to %s", name)
                round_record.rejected.append(name)
                continue
            target = project / name
            before = target.read_text(encoding="utf-8") if target.exists() else ""
            target.write_text(content, encoding="utf-8")
            diff = "".join(
                difflib.unified_diff(
                    before.splitlines(keepends=True),
                    content.splitlines(keepends=True),
                    fromfile=f"a/{name}",
                    tofile=f"b/{name}",
                )
            )
            round_record.edits.append({"file": name, "diff": diff})
        passed, log_text = _run_check(check_spec)
        round_record.check_passed = passed
        round_record.log_excerpt = log_text[:4096]
        report.rounds.append(round_record)
        if passed:
            report.success = True
            return report
    return report
