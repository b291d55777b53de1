"""Frontend operations: parsing units, method extraction, and filter metrics."""

from __future__ import annotations

import hashlib

from specmut.errors import MalformedReportError
from specmut.frontend.adapters import get_adapter
from specmut.frontend.types import (
    CoverageTable,
    DependencyClass,
    LabeledSpan,
    LocBucket,
    MethodRecord,
    SourceUnit,
)


def parse_unit(
    text: str, adapter_id: str, path: str = "", unit_id: str = ""
) -> SourceUnit:
    """Parse source text into a unit with its labeled spans materialized.

    ``unit_id`` defaults to the path when given, else to a content hash,
    keeping ids stable for identical input.
    """
    adapter = get_adapter(adapter_id)
    parsed = adapter.parse(text)
    if not unit_id:
        unit_id = path or hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]
    return SourceUnit(
        unit_id=unit_id,
        path=path or unit_id,
        text=text,
        adapter_id=adapter_id,
        spans=list(parsed.spans),
    )


def extract_methods(unit: SourceUnit) -> list[MethodRecord]:
    """One record per method declaration, in stable source order."""
    adapter = get_adapter(unit.adapter_id)
    parsed = adapter.parse(unit.text)
    records = []
    for raw in parsed.methods:
        spans = [
            s for s in unit.spans
            if raw.body_start <= s.byte_start and s.byte_end <= raw.body_end
        ]
        words, _ = count_comment_words(raw.doc_comment)
        records.append(
            MethodRecord(
                method_id=f"{unit.unit_id}::{raw.name}",
                unit_id=unit.unit_id,
                signature=raw.signature,
                doc_comment=raw.doc_comment,
                body_start=raw.body_start,
                body_end=raw.body_end,
                line=raw.line,
                loc=raw.loc,
                cyclomatic=1 + raw.decision_points,
                comment_words=words,
                coverage=None,
                external_refs=list(raw.external_refs),
                spans=spans,
                name=raw.name,
                params=list(raw.params),
            )
        )
    return records


def cyclomatic_complexity(record: MethodRecord) -> int:
    """McCabe-style count: 1 plus the number of decision points."""
    return record.cyclomatic


def count_comment_words(comment: str) -> tuple[int, bool]:
    """Count whitespace-separated tokens containing at least one ASCII letter.

    Passes only with strictly more than 15 such words. Comment markers
    like ``/**`` or ``*`` carry no letters, so raw text can be counted
    without stripping markup.
    """
    words = [
        tok for tok in comment.split()
        if any(("a" <= ch <= "z") or ("A" <= ch <= "Z") for ch in tok)
    ]
    count = len(words)
    return count, count > 15


def comment_quality(record: MethodRecord) -> tuple[int, bool]:
    return count_comment_words(record.doc_comment)


def parse_coverage_report(path) -> CoverageTable:
    """Read the normalized tab-separated coverage format.

    One record per line: ``path<TAB>line<TAB>hits``. Every line present
    in the file is executable.
    """
    table = CoverageTable()
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise MalformedReportError(lineno, "expected path<TAB>line<TAB>hits")
            file_path, line_text, hits_text = parts
            try:
                line_no = int(line_text)
                hits = int(hits_text)
            except ValueError:
                raise MalformedReportError(lineno, "line and hits must be integers") from None
            if hits < 0:
                raise MalformedReportError(lineno, "hits must be non-negative")
            key = (file_path, line_no)
            table.executable_lines.add(key)
            table.entries[key] = hits
    return table


def ingest_coverage(report_file, method: MethodRecord, unit: SourceUnit) -> float | None:
    """Per-method line coverage from a normalized report file.

    Returns covered/executable within the method's body lines, or None
    when no executable line of the unit's path maps into the body span.
    """
    table = parse_coverage_report(report_file)
    return method_coverage(table, method, unit)


def method_coverage(
    table: CoverageTable, method: MethodRecord, unit: SourceUnit
) -> float | None:
    first_line, last_line = _body_line_range(unit, method)
    executable = [
        key for key in table.executable_lines
        if key[0] == unit.path and first_line <= key[1] <= last_line
    ]
    if not executable:
        return None
    covered = sum(1 for key in executable if table.entries.get(key, 0) > 0)
    return covered / len(executable)


def _body_line_range(unit: SourceUnit, method: MethodRecord) -> tuple[int, int]:
    data = unit.text.encode("utf-8")
    first = data[: method.body_start].count(b"\n") + 1
    last = data[: method.body_end].count(b"\n") + 1
    return first, last


def classify_dependency(record: MethodRecord, allowlist: set) -> DependencyClass:
    """STANDALONE iff every external reference is allowlisted."""
    for ref in record.external_refs:
        if ref not in allowlist:
            return DependencyClass.DEPENDENT
    return DependencyClass.STANDALONE


def loc_bucket(record: MethodRecord) -> LocBucket:
    """Half-open size buckets: [0,20) short, [20,40) medium, [40,inf) long."""
    if record.loc < 20:
        return LocBucket.SHORT
    if record.loc < 40:
        return LocBucket.MEDIUM
    return LocBucket.LONG


def spans_in_body(record: MethodRecord) -> list[LabeledSpan]:
    return list(record.spans)
