"""Labeled-span extraction and method analysis over fixture-language ASTs."""

from __future__ import annotations

from specmut.fixturelang import nodes as n
from specmut.fixturelang.lexer import tokenize
from specmut.frontend.types import LabeledSpan, SpanKind

BUILTIN_NAMES = {
    "len", "push", "min", "max", "abs", "range", "sorted", "copy",
    "log", "ensure",
}


def _slice(data: bytes, start: int, end: int) -> str:
    return data[start:end].decode("utf-8")


class _SpanCollector:
    def __init__(self, data: bytes):
        self.data = data
        self.spans: list[LabeledSpan] = []
        self.decision_points = 0
        self.calls: list[str] = []
        self.reads: list[str] = []
        self.locals: set[str] = set()

    def add(self, kind: SpanKind, start: int, end: int, line: int) -> None:
        self.spans.append(
            LabeledSpan(kind, start, end, line, _slice(self.data, start, end))
        )

    # -- statement walk ---------------------------------------------------

    def stmt(self, node: n.Node) -> None:
        if isinstance(node, n.Block):
            for s in node.stmts:
                self.stmt(s)
        elif isinstance(node, n.If):
            self.decision_points += 1
            self.add(SpanKind.CONDITION, node.cond.start, node.cond.end, node.cond.line)
            self.expr(node.cond, in_call=False)
            self.stmt(node.then)
            if node.orelse is not None:
                self.stmt(node.orelse)
        elif isinstance(node, n.While):
            self.decision_points += 1
            self.add(SpanKind.CONDITION, node.cond.start, node.cond.end, node.cond.line)
            self.expr(node.cond, in_call=False)
            self.stmt(node.body)
        elif isinstance(node, n.For):
            self.decision_points += 1
            self.add(SpanKind.LOOP_HEADER, node.header_start, node.header_end, node.line)
            self.locals.add(node.var)
            self.expr(node.iterable, in_call=False)
            self.stmt(node.body)
        elif isinstance(node, n.Return):
            if node.expr is not None:
                self.add(SpanKind.RETURN_EXPR, node.expr.start, node.expr.end, node.expr.line)
                self.expr(node.expr, in_call=False)
        elif isinstance(node, n.Assert):
            self.expr(node.expr, in_call=False)
        elif isinstance(node, n.Break):
            self.add(SpanKind.KEYWORD_STMT, node.kw_start, node.kw_end, node.line)
        elif isinstance(node, n.Continue):
            self.add(SpanKind.KEYWORD_STMT, node.kw_start, node.kw_end, node.line)
        elif isinstance(node, n.Assign):
            if isinstance(node.target, n.Name):
                self.locals.add(node.target.ident)
            else:
                self.expr(node.target, in_call=False)
            self.add(SpanKind.ASSIGN_RHS, node.expr.start, node.expr.end, node.expr.line)
            self.expr(node.expr, in_call=False)
        elif isinstance(node, n.AugAssign):
            self.locals.add(node.target.ident)
            self.reads.append(node.target.ident)
            self.add(SpanKind.AUG_ASSIGN, node.op_start, node.op_end, node.line)
            self.expr(node.expr, in_call=False)
        elif isinstance(node, n.ExprStmt):
            if isinstance(node.expr, n.Call):
                self.add(SpanKind.VOID_CALL_STMT, node.start, node.end, node.line)
            self.expr(node.expr, in_call=False)
        else:
            raise AssertionError(f"unhandled statement {type(node).__name__}")

    # -- expression walk ----------------------------------------------------

    def expr(self, node: n.Node, in_call: bool) -> None:
        if isinstance(node, n.BinOp):
            if node.op in ("&&", "||"):
                self.decision_points += 1
            self.add(SpanKind.BINARY_OP, node.op_start, node.op_end, node.line)
            self.expr(node.left, in_call)
            self.expr(node.right, in_call)
        elif isinstance(node, n.UnaryOp):
            self.add(SpanKind.UNARY_OP, node.op_start, node.op_end, node.line)
            self.expr(node.operand, in_call)
        elif isinstance(node, n.IntLit):
            self.add(SpanKind.NUMERIC_LITERAL, node.start, node.end, node.line)
        elif isinstance(node, n.StrLit):
            self.add(SpanKind.STRING_LITERAL, node.start, node.end, node.line)
        elif isinstance(node, n.BoolLit):
            self.add(SpanKind.BOOLEAN_LITERAL, node.start, node.end, node.line)
        elif isinstance(node, n.Call):
            self.calls.append(node.callee)
            if not in_call:
                # only outermost calls are labeled, keeping same-kind
                # spans non-overlapping under nesting
                self.add(SpanKind.CALL, node.start, node.end, node.line)
                for arg in node.args:
                    self.add(SpanKind.CALL_ARG, arg.start, arg.end, arg.line)
            for arg in node.args:
                self.expr(arg, in_call=True)
        elif isinstance(node, n.Name):
            self.reads.append(node.ident)
        elif isinstance(node, n.ListLit):
            for item in node.items:
                self.expr(item, in_call)
        elif isinstance(node, n.RecordLit):
            for _, value in node.fields:
                self.expr(value, in_call)
        elif isinstance(node, n.FieldAccess):
            self.expr(node.obj, in_call)
        elif isinstance(node, n.IndexAccess):
            self.expr(node.obj, in_call)
            self.expr(node.index, in_call)
        elif isinstance(node, n.NullLit):
            pass
        else:
            raise AssertionError(f"unhandled expression {type(node).__name__}")


def _count_loc(text: str, body_start: int, body_end: int) -> int:
    """Non-blank, non-comment-only lines inside the body byte range.

    A line counts when at least one real token (comments excluded)
    starts inside the range on that line, so brace-only lines count and
    comment-only or blank lines do not.
    """
    lines = set()
    for tok in tokenize(text):
        if tok.kind in ("DOC", "EOF"):
            continue
        if body_start <= tok.byte_start < body_end:
            lines.add(tok.line)
    return len(lines)


def analyze_function(func: n.Function, data: bytes, text: str):
    """Return (spans, decision_points, external_refs, loc) for one function."""
    collector = _SpanCollector(data)
    collector.stmt(func.body)
    spans = sorted(
        collector.spans, key=lambda s: (s.byte_start, s.byte_end, s.kind.value)
    )
    bound = set(func.params) | collector.locals
    refs = []
    for name in collector.calls + collector.reads:
        if name not in bound and name not in refs:
            refs.append(name)
    loc = _count_loc(text, func.body.start, func.body.end)
    return spans, collector.decision_points, refs, loc
