"""Candidate mutant generation: operator catalogs and LLM line rewrites.

Operator catalogs are data files. Each operator names the span kinds it
applies to plus an ordered rule list of (pattern, replacement) pairs.
Patterns are either literal payload text or one of a small symbolic
vocabulary:

    @int            integer literal payload
    @str            quoted string literal payload
    @any            any payload
    @call:NAME      call expression whose callee is NAME
    @call_args      call expression with at least one argument

Replacements are literal text or a transform:

    @increment      integer n becomes n+1
    @append:SUF     string literal content gets SUF appended
    @rename:NEW     call callee renamed to NEW
    @drop_last_arg  call loses its final argument

A rule only matches when its output differs from the payload, so no
rule can produce an identity rewrite.
"""

from __future__ import annotations

import difflib
import enum
import json
import logging
from dataclasses import dataclass, field
from importlib import resources

from specmut.errors import UnknownOperatorError, UnparseableResultError
from specmut.frontend.adapters import get_adapter
from specmut.frontend.types import LabeledSpan, MethodRecord, SourceUnit, SpanKind
from specmut.llmclient import PromptRequest, Transport, complete

log = logging.getLogger(__name__)

PLACEHOLDER_LINE = "<<MUTATE_THIS_LINE>>"

LLM_MUTATION_SYSTEM = (
    "You edit one line of a small imperative program to introduce a defect. "
    "The target line has been replaced by the placeholder "
    "<<MUTATE_THIS_LINE>>. Reply with a single replacement line that keeps "
    "the program syntactically valid but changes its behavior. Reply with "
    "the line only."
)


class Scheme(enum.Enum):
    OPERATOR = "OPERATOR"
    LLM = "LLM"


class MutantStatus(enum.Enum):
    CANDIDATE = "CANDIDATE"
    DEFECTIVE = "DEFECTIVE"
    DISCARDED_PASSES = "DISCARDED_PASSES"
    DISCARDED_CRASHES = "DISCARDED_CRASHES"
    DISCARDED_DUPLICATE = "DISCARDED_DUPLICATE"


@dataclass
class MutationOperator:
    name: str
    site_kinds: set
    rules: list                      # list of (pattern, replacement)


@dataclass
class Mutant:
    mutant_id: str
    method_id: str
    scheme: Scheme
    operator_name: str | None
    byte_start: int
    byte_end: int
    original_payload: str
    replacement: str
    rendered_text: str
    status: MutantStatus = MutantStatus.CANDIDATE
    line: int = 0


# --- catalog loading ---------------------------------------------------------


def load_catalog(name_or_path: str) -> list[MutationOperator]:
    """Load a catalog by bundled name (fixture, python-like, java-like) or path."""
    bundled = {
        "fixture": "catalog.fixture.json",
        "python-like": "catalog.python-like.json",
        "java-like": "catalog.java-like.json",
    }
    if name_or_path in bundled:
        raw = (
            resources.files("specmut.data")
            .joinpath(bundled[name_or_path])
            .read_text(encoding="utf-8")
        )
    else:
        with open(name_or_path, encoding="utf-8") as handle:
            raw = handle.read()
    entries = json.loads(raw)
    catalog = []
    seen = set()
    for entry in entries:
        name = entry["name"]
        if name in seen:
            raise ValueError(f"duplicate operator name {name!r} in catalog")
        seen.add(name)
        rules = [(r["pattern"], r["replacement"]) for r in entry["rules"]]
        for pattern, _ in rules:
            if not pattern:
                raise ValueError(f"operator {name!r} has an empty pattern")
        catalog.append(
            MutationOperator(
                name=name,
                site_kinds={SpanKind(k) for k in entry["site_kinds"]},
                rules=rules,
            )
        )
    return catalog


# --- rule engine -------------------------------------------------------------


def _split_call(payload: str) -> tuple[str, list[str]] | None:
    """Split a call payload into (callee, top-level args); None if not a call."""
    open_idx = payload.find("(")
    if open_idx <= 0 or not payload.rstrip().endswith(")"):
        return None
    callee = payload[:open_idx].strip()
    if not callee.replace("_", "").isalnum():
        return None
    inner = payload.rstrip()[open_idx + 1 : -1]
    if not inner.strip():
        return callee, []
    args = []
    depth = 0
    in_string = False
    current = []
    i = 0
    while i < len(inner):
        ch = inner[i]
        if in_string:
            current.append(ch)
            if ch == "\\":
                current.append(inner[i + 1])
                i += 1
            elif ch == '"':
                in_string = False
        elif ch == '"':
            in_string = True
            current.append(ch)
        elif ch in "([{":
            depth += 1
            current.append(ch)
        elif ch in ")]}":
            depth -= 1
            current.append(ch)
        elif ch == "," and depth == 0:
            args.append("".join(current).strip())
            current = []
        else:
            current.append(ch)
        i += 1
    args.append("".join(current).strip())
    return callee, args


def _pattern_matches(pattern: str, payload: str) -> bool:
    if pattern == "@any":
        return True
    if pattern == "@int":
        return payload.isdigit()
    if pattern == "@str":
        return len(payload) >= 2 and payload[0] == '"' and payload[-1] == '"'
    if pattern.startswith("@call:"):
        call = _split_call(payload)
        return call is not None and call[0] == pattern[len("@call:"):]
    if pattern == "@call_args":
        call = _split_call(payload)
        return call is not None and len(call[1]) > 0
    return pattern == payload


def _apply_replacement(replacement: str, payload: str) -> str | None:
    if replacement == "@increment":
        return str(int(payload) + 1)
    if replacement.startswith("@append:"):
        suffix = replacement[len("@append:"):]
        return payload[:-1] + suffix + payload[-1]
    if replacement.startswith("@rename:"):
        call = _split_call(payload)
        if call is None:
            return None
        open_idx = payload.find("(")
        return replacement[len("@rename:"):] + payload[open_idx:]
    if replacement == "@drop_last_arg":
        call = _split_call(payload)
        if call is None or not call[1]:
            return None
        callee, args = call
        return f"{callee}({', '.join(args[:-1])})"
    return replacement


def rewrite_payload(operator: MutationOperator, payload: str) -> str | None:
    """First rule (in catalog order) whose pattern matches and changes the payload."""
    rule = first_matching_rule(operator, payload)
    if rule is None:
        return None
    return _apply_replacement(rule[1], payload)


def first_matching_rule(operator: MutationOperator, payload: str):
    """The rule apply_operator_mutation would use for this payload, or None."""
    for pattern, replacement in operator.rules:
        if not _pattern_matches(pattern, payload):
            continue
        result = _apply_replacement(replacement, payload)
        if result is not None and result != payload:
            return (pattern, replacement)
    return None


def apply_single_rule(pattern: str, replacement: str, payload: str) -> str | None:
    """Apply exactly one rule; None when it does not match or is an identity."""
    if not _pattern_matches(pattern, payload):
        return None
    result = _apply_replacement(replacement, payload)
    if result is None or result == payload:
        return None
    return result


# --- operator-based generation -------------------------------------------------


def enumerate_sites(method: MethodRecord, operator: MutationOperator) -> list[LabeledSpan]:
    """All method spans the operator can rewrite, in stable source order."""
    sites = []
    for span in method.spans:
        if span.kind not in operator.site_kinds:
            continue
        if rewrite_payload(operator, span.payload) is not None:
            sites.append(span)
    sites.sort(key=lambda s: (s.byte_start, s.byte_end))
    return sites


def render_single_span(unit_text: str, byte_start: int, byte_end: int, replacement: str) -> str:
    data = unit_text.encode("utf-8")
    return (data[:byte_start] + replacement.encode("utf-8") + data[byte_end:]).decode("utf-8")


def apply_operator_mutation(
    unit: SourceUnit,
    method: MethodRecord,
    operator: MutationOperator,
    site: LabeledSpan,
) -> Mutant:
    """Single-span rewrite via the operator's first matching rule.

    The rendered unit must parse under the same adapter; otherwise the
    mutant is rejected with UNPARSEABLE_RESULT.
    """
    replacement = rewrite_payload(operator, site.payload)
    if replacement is None:
        raise UnknownOperatorError(
            f"operator {operator.name!r} has no rule for payload {site.payload!r}"
        )
    rendered = render_single_span(unit.text, site.byte_start, site.byte_end, replacement)
    adapter = get_adapter(unit.adapter_id)
    try:
        adapter.parse(rendered)
    except Exception as exc:
        raise UnparseableResultError(
            f"{operator.name} at byte {site.byte_start}: {exc}"
        ) from exc
    return Mutant(
        mutant_id=f"{method.method_id}::{operator.name}@{site.byte_start}",
        method_id=method.method_id,
        scheme=Scheme.OPERATOR,
        operator_name=operator.name,
        byte_start=site.byte_start,
        byte_end=site.byte_end,
        original_payload=site.payload,
        replacement=replacement,
        rendered_text=rendered,
        status=MutantStatus.CANDIDATE,
        line=site.line,
    )


def generate_operator_mutants(
    unit: SourceUnit, method: MethodRecord, catalog: list[MutationOperator]
) -> list[Mutant]:
    """Union over operators and sites, deduplicated on rendered text.

    Output is ordered by (operator_name, byte_start); the first mutant
    with a given rendered text stays CANDIDATE, later ones are marked
    DISCARDED_DUPLICATE.
    """
    mutants = []
    for operator in sorted(catalog, key=lambda op: op.name):
        for site in enumerate_sites(method, operator):
            try:
                mutants.append(apply_operator_mutation(unit, method, operator, site))
            except UnparseableResultError as exc:
                log.warning("dropped unparseable mutant: %s", exc)
    seen: dict[str, str] = {}
    for mutant in mutants:
        if mutant.rendered_text in seen:
            mutant.status = MutantStatus.DISCARDED_DUPLICATE
        else:
            seen[mutant.rendered_text] = mutant.mutant_id
    return mutants


# --- LLM-based generation --------------------------------------------------------


@dataclass
class LlmTarget:
    line: int
    placeholder_text: str
    original_line: str


def _line_ranges(text: str) -> list[tuple[int, int, str]]:
    """Byte (start, end) per line, newline excluded."""
    data = text.encode("utf-8")
    ranges = []
    start = 0
    for i, line in enumerate(data.split(b"\n")):
        ranges.append((start, start + len(line), line.decode("utf-8")))
        start += len(line) + 1
    return ranges


def select_llm_mutation_targets(unit: SourceUnit, method: MethodRecord) -> list[LlmTarget]:
    """One target per body line holding a condition, loop header, or call."""
    wanted = {SpanKind.CONDITION, SpanKind.LOOP_HEADER, SpanKind.CALL}
    lines = sorted({s.line for s in method.spans if s.kind in wanted})
    ranges = _line_ranges(unit.text)
    targets = []
    for line_no in lines:
        start, end, original = ranges[line_no - 1]
        placeholder = render_single_span(unit.text, start, end, PLACEHOLDER_LINE)
        targets.append(LlmTarget(line_no, placeholder, original))
    return targets


def generate_llm_mutants(
    unit: SourceUnit,
    method: MethodRecord,
    targets: list[LlmTarget],
    transport: Transport,
) -> list[Mutant]:
    """Ask the completion client for a defective replacement per target line.

    Responses are truncated to their first line; replies identical to
    the original line or that break the parse are dropped and logged.
    Results follow target order regardless of transport behavior.
    """
    adapter = get_adapter(unit.adapter_id)
    ranges = _line_ranges(unit.text)
    mutants = []
    for target in targets:
        request = PromptRequest.build(
            system=LLM_MUTATION_SYSTEM,
            user=f"method: {method.method_id}\n\n{target.placeholder_text}",
        )
        response = complete(request, transport)
        line = response.split("\n", 1)[0].rstrip("\r")
        if line.strip() == target.original_line.strip():
            log.warning(
                "llm mutant for %s line %d equals the original line; dropped",
                method.method_id, target.line,
            )
            continue
        start, end, _ = ranges[target.line - 1]
        rendered = render_single_span(unit.text, start, end, line)
        try:
            adapter.parse(rendered)
        except Exception as exc:
            log.warning(
                "llm mutant for %s line %d failed to parse (%s); dropped",
                method.method_id, target.line, exc,
            )
            continue
        mutants.append(
            Mutant(
                mutant_id=f"{method.method_id}::llm@{target.line}",
                method_id=method.method_id,
                scheme=Scheme.LLM,
                operator_name=None,
                byte_start=start,
                byte_end=end,
                original_payload=target.original_line,
                replacement=line,
                rendered_text=rendered,
                status=MutantStatus.CANDIDATE,
                line=target.line,
            )
        )
    return mutants


def dedup_across_schemes(mutants: list[Mutant]) -> list[Mutant]:
    """Mark later duplicates (same rendered text) across the whole pool."""
    seen = set()
    for mutant in mutants:
        if mutant.status is not MutantStatus.CANDIDATE:
            continue
        if mutant.rendered_text in seen:
            mutant.status = MutantStatus.DISCARDED_DUPLICATE
        else:
            seen.add(mutant.rendered_text)
    return mutants


# --- serialization ----------------------------------------------------------------


def mutant_to_json(mutant: Mutant) -> dict:
    """Manifest form; rendered text is reconstructed from the unit on load."""
    return {
        "byte_end": mutant.byte_end,
        "byte_start": mutant.byte_start,
        "line": mutant.line,
        "method_id": mutant.method_id,
        "mutant_id": mutant.mutant_id,
        "operator": mutant.operator_name,
        "original_payload": mutant.original_payload,
        "replacement": mutant.replacement,
        "scheme": mutant.scheme.value,
        "status": mutant.status.value,
    }


def mutant_from_json(data: dict, unit_text: str) -> Mutant:
    return Mutant(
        mutant_id=data["mutant_id"],
        method_id=data["method_id"],
        scheme=Scheme(data["scheme"]),
        operator_name=data["operator"],
        byte_start=data["byte_start"],
        byte_end=data["byte_end"],
        original_payload=data["original_payload"],
        replacement=data["replacement"],
        rendered_text=render_single_span(
            unit_text, data["byte_start"], data["byte_end"], data["replacement"]
        ),
        status=MutantStatus(data["status"]),
        line=data["line"],
    )


# --- diff rendering ----------------------------------------------------------------


def render_diff(original_text: str, mutant: Mutant, label: str = "") -> str:
    """Unified diff between the original unit and the mutant's rendering."""
    diff = difflib.unified_diff(
        original_text.splitlines(keepends=True),
        mutant.rendered_text.splitlines(keepends=True),
        fromfile="original",
        tofile=label or mutant.mutant_id,
    )
    return "".join(diff)
