"""Parser, span labeling, and interpreter behavior of the bundled language."""

import pytest

from specmut.errors import ParseError
from specmut.fixturelang import Interpreter, parse_program
from specmut.fixturelang.parser import parse_expression
from specmut.frontend import SpanKind, parse_unit


def spans_of(src, kind=None):
    unit = parse_unit(src, "fixture")
    if kind is None:
        return unit.spans
    return [s for s in unit.spans if s.kind is kind]


class TestParsing:
    def test_empty_unit_has_no_spans(self):
        assert parse_unit("", "fixture").spans == []

    def test_comparison_return_spans(self):
        spans = spans_of("fn lt(a, b) { return a < b; }")
        kinds = [(s.kind, s.payload) for s in spans]
        assert (SpanKind.BINARY_OP, "<") in kinds
        assert (SpanKind.RETURN_EXPR, "a < b") in kinds
        assert all(s.kind is not SpanKind.CONDITION for s in spans)

    def test_condition_and_assign_spans(self):
        spans = spans_of("fn f(n) { if (n < 0) { n = 0; } return n; }")
        conditions = [s for s in spans if s.kind is SpanKind.CONDITION]
        assert [s.payload for s in conditions] == ["n < 0"]
        rhs = [s for s in spans if s.kind is SpanKind.ASSIGN_RHS]
        assert [s.payload for s in rhs] == ["0"]

    def test_payload_matches_byte_slice(self):
        src = 'fn f() { s = "héllo"; return s + "x"; }'
        unit = parse_unit(src, "fixture")
        data = src.encode("utf-8")
        for span in unit.spans:
            assert span.payload == data[span.byte_start:span.byte_end].decode("utf-8")

    def test_same_kind_spans_do_not_overlap(self):
        src = """fn f(xs, lo, hi) {
          v = max(lo, min(len(xs), hi));
          for (x in xs) {
            if (x > 0 && x < 9) {
              log(x);
            }
          }
          return v;
        }"""
        unit = parse_unit(src, "fixture")
        by_kind = {}
        for span in unit.spans:
            by_kind.setdefault(span.kind, []).append(span)
        for kind, spans in by_kind.items():
            spans.sort(key=lambda s: s.byte_start)
            for left, right in zip(spans, spans[1:]):
                assert left.byte_end <= right.byte_start, kind

    def test_nested_call_labels_outermost_only(self):
        spans = spans_of("fn f(a, b) { return max(a, min(a, b)); }", SpanKind.CALL)
        assert [s.payload for s in spans] == ["max(a, min(a, b))"]

    def test_call_args_of_outer_call(self):
        spans = spans_of("fn f(a, b) { return max(a, min(a, b)); }", SpanKind.CALL_ARG)
        assert [s.payload for s in spans] == ["a", "min(a, b)"]

    def test_keyword_and_void_call_spans(self):
        src = """fn f(xs) {
          for (x in xs) {
            if (x == 0) {
              break;
            }
            push(xs, x);
          }
        }"""
        unit = parse_unit(src, "fixture")
        kinds = {s.kind: s.payload for s in unit.spans}
        assert kinds[SpanKind.KEYWORD_STMT] == "break"
        assert kinds[SpanKind.VOID_CALL_STMT] == "push(xs, x);"
        assert kinds[SpanKind.LOOP_HEADER] == "x in xs"

    def test_reparse_is_byte_identical(self, corpus):
        for target in corpus.targets:
            text = (corpus.root / target.unit_path).read_text(encoding="utf-8")
            first = parse_unit(text, "fixture", path=target.unit_path)
            second = parse_unit(first.text, "fixture", path=target.unit_path)
            assert first.spans == second.spans

    def test_syntax_error_carries_line(self):
        with pytest.raises(ParseError) as err:
            parse_program("fn f() {\n  return ;;\n}")
        assert err.value.line == 2

    def test_expression_parser_rejects_trailing_input(self):
        with pytest.raises(ParseError):
            parse_expression("a + b c")


def run(subject, tests, timeout_ms=5000):
    return Interpreter([("s", subject), ("t", tests)]).run_tests(timeout_ms)


class TestInterpreter:
    def test_passing_suite(self):
        trace = run("fn add(a, b) { return a + b; }",
                    "fn test_add() { assert add(2, 3) == 5; }")
        assert trace.failed_tests == [] and trace.crash_message is None

    def test_assert_failure_is_recorded_not_fatal(self):
        trace = run(
            "fn add(a, b) { return a + b; }",
            "fn test_bad() { assert add(2, 3) == 6; }\n"
            "fn test_good() { assert add(1, 1) == 2; }",
        )
        assert trace.failed_tests == ["test_bad"]
        assert trace.tests_run == 2

    def test_crash_aborts_the_suite(self):
        trace = run(
            "fn div(a, b) { return a / b; }",
            "fn test_crash() { assert div(1, 0) == 0; }\n"
            "fn test_never() { assert true; }",
        )
        assert trace.crash_message is not None
        assert trace.tests_run == 1

    def test_equality_is_total_across_types(self):
        trace = run(
            "fn f() { return null; }",
            "fn test_eq() { assert f() != 5; assert f() != [1]; assert f() == null; }",
        )
        assert trace.failed_tests == [] and trace.crash_message is None

    def test_ordering_null_crashes(self):
        trace = run("fn f() { return null; }",
                    "fn test_ord() { assert f() >= 0; }")
        assert trace.crash_message is not None

    def test_division_floors(self):
        trace = run(
            "fn f(a, b) { return a / b; }",
            "fn test_floor() { assert f(7, 2) == 3; assert f(-7, 2) == -4; }",
        )
        assert trace.failed_tests == []

    def test_timeout(self):
        trace = run("fn spin() { i = 0; while (true) { i += 1; } return i; }",
                    "fn test_spin() { assert spin() == 0; }", timeout_ms=200)
        assert trace.timed_out

    def test_recursion_limit_is_a_crash(self):
        trace = run("fn down(n) { return down(n); }",
                    "fn test_deep() { assert down(1) == 0; }")
        assert trace.crash_message is not None
        assert "recursion" in trace.crash_message

    def test_records_and_field_access(self):
        trace = run(
            "fn make(a) { return {count: a, tag: \"x\"}; }",
            "fn test_rec() { r = make(3); assert r.count == 3; r.count = 4;"
            " assert r.count == 4; }",
        )
        assert trace.failed_tests == [] and trace.crash_message is None

    def test_missing_field_crashes(self):
        trace = run("fn make() { return {a: 1}; }",
                    "fn test_rec() { assert make().b == 1; }")
        assert trace.crash_message is not None

    def test_contract_violation_halts_test_and_continues(self):
        subject = """fn f(x) {
          ensure("c1", x > 0);
          return x;
        }"""
        tests = ("fn test_viol() { assert f(-1) == -1; }\n"
                 "fn test_ok() { assert f(2) == 2; }")
        trace = run(subject, tests)
        assert trace.violated_cond_ids == ["c1"]
        assert trace.failed_tests == []
        assert trace.tests_run == 2
        assert "POSTCOND_VIOLATION:c1" in trace.log_lines

    def test_builtins(self):
        trace = run(
            "fn f(xs) { return sorted(xs); }",
            "fn test_b() {"
            " assert len(\"abc\") == 3;"
            " assert min(2, 9) == 2; assert max(2, 9) == 9;"
            " assert abs(-4) == 4;"
            " assert range(1, 4) == [1, 2, 3];"
            " assert f([3, 1, 2]) == [1, 2, 3];"
            " ys = [1]; zs = copy(ys); push(zs, 2);"
            " assert ys == [1]; assert zs == [1, 2];"
            " }",
        )
        assert trace.failed_tests == [] and trace.crash_message is None

    def test_duplicate_function_is_load_crash(self):
        from specmut.fixturelang.interp import FixtureRuntimeError

        with pytest.raises(FixtureRuntimeError):
            Interpreter([("a", "fn f() { return 1; }"), ("b", "fn f() { return 2; }")])
