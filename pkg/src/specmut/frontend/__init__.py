"""Subject-source frontend: parsing, method records, filter metrics."""

from specmut.frontend.adapters import (
    ParsedUnit,
    RawMethod,
    RawRunResult,
    SubjectAdapter,
    get_adapter,
    register_adapter,
)
from specmut.frontend.ops import (
    classify_dependency,
    comment_quality,
    count_comment_words,
    cyclomatic_complexity,
    extract_methods,
    ingest_coverage,
    loc_bucket,
    method_coverage,
    parse_coverage_report,
    parse_unit,
)
from specmut.frontend.types import (
    CoverageTable,
    DependencyClass,
    LabeledSpan,
    LocBucket,
    MethodRecord,
    SourceUnit,
    SpanKind,
)

__all__ = [
    "CoverageTable",
    "DependencyClass",
    "LabeledSpan",
    "LocBucket",
    "MethodRecord",
    "ParsedUnit",
    "RawMethod",
    "RawRunResult",
    "SourceUnit",
    "SpanKind",
    "SubjectAdapter",
    "classify_dependency",
    "comment_quality",
    "count_comment_words",
    "cyclomatic_complexity",
    "extract_methods",
    "get_adapter",
    "ingest_coverage",
    "loc_bucket",
    "method_coverage",
    "parse_coverage_report",
    "parse_unit",
    "register_adapter",
]
