"""Domain types produced by subject-language frontends."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class SpanKind(enum.Enum):
    BINARY_OP = "BINARY_OP"
    UNARY_OP = "UNARY_OP"
    NUMERIC_LITERAL = "NUMERIC_LITERAL"
    STRING_LITERAL = "STRING_LITERAL"
    BOOLEAN_LITERAL = "BOOLEAN_LITERAL"
    RETURN_EXPR = "RETURN_EXPR"
    CONDITION = "CONDITION"
    LOOP_HEADER = "LOOP_HEADER"
    CALL = "CALL"
    CALL_ARG = "CALL_ARG"
    AUG_ASSIGN = "AUG_ASSIGN"
    ASSIGN_RHS = "ASSIGN_RHS"
    VOID_CALL_STMT = "VOID_CALL_STMT"
    KEYWORD_STMT = "KEYWORD_STMT"


@dataclass(frozen=True)
class LabeledSpan:
    """A mutation-relevant byte range of a source unit.

    ``payload`` is the exact UTF-8 slice ``text[byte_start:byte_end)``;
    spans of the same kind never overlap.
    """

    kind: SpanKind
    byte_start: int
    byte_end: int
    line: int
    payload: str


@dataclass
class SourceUnit:
    """One subject source file with its labeled spans materialized."""

    unit_id: str
    path: str
    text: str
    adapter_id: str
    spans: list[LabeledSpan] = field(default_factory=list)

    def slice(self, byte_start: int, byte_end: int) -> str:
        return self.text.encode("utf-8")[byte_start:byte_end].decode("utf-8")


@dataclass
class MethodRecord:
    """A parsed method with the metrics the selection filters need."""

    method_id: str
    unit_id: str
    signature: str
    doc_comment: str
    body_start: int
    body_end: int
    line: int
    loc: int
    cyclomatic: int
    comment_words: int
    coverage: float | None          # None means no executable lines mapped
    external_refs: list[str] = field(default_factory=list)
    spans: list[LabeledSpan] = field(default_factory=list)
    name: str = ""
    params: list[str] = field(default_factory=list)


@dataclass
class CoverageTable:
    """Normalized line-coverage data: (path, line) -> hit count."""

    entries: dict = field(default_factory=dict)          # (path, line) -> hits
    executable_lines: set = field(default_factory=set)   # set of (path, line)


class DependencyClass(enum.Enum):
    STANDALONE = "STANDALONE"
    DEPENDENT = "DEPENDENT"


class LocBucket(enum.Enum):
    SHORT = "SHORT"
    MEDIUM = "MEDIUM"
    LONG = "LONG"
