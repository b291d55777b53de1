"""Weaving, suite execution in both runner modes, outcome classification."""

import sys
import textwrap

import pytest

from specmut.errors import RenderError, SpawnFailureError, TemplateMissingError
from specmut.frontend import extract_methods, parse_unit
from specmut.harness import (
    EvalOutcome,
    OutcomeKind,
    PlainRun,
    Postcondition,
    PostconditionSet,
    RunnerMode,
    RunnerSpec,
    classify_plain_run,
    evaluate,
    instrument,
    run_suite,
)

SUBJECT = """fn clamp(x, lo, hi) {
  if (x < lo) {
    return lo;
  }
  if (x > hi) {
    return hi;
  }
  return x;
}
"""

TESTS = """fn test_inside() {
  assert clamp(5, 0, 10) == 5;
}
fn test_low() {
  assert clamp(-4, 0, 10) == 0;
}
"""


def unit_method(src=SUBJECT):
    unit = parse_unit(src, "fixture", path="subject.src")
    return unit, extract_methods(unit)[0]


def pset(*conds, set_id="s"):
    return PostconditionSet(
        set_id=set_id,
        conditions=[Postcondition(f"pc{i + 1}", text, old) for i, (text, old) in enumerate(conds)],
    )


def builtin_spec(tmp_path, tests=TESTS, timeout_ms=5000):
    (tmp_path / "tests.src").write_text(tests, encoding="utf-8")
    return RunnerSpec(
        mode=RunnerMode.BUILTIN,
        working_dir=str(tmp_path),
        test_files=["tests.src"],
        timeout_ms=timeout_ms,
    )


class TestInstrument:
    def test_empty_set_changes_only_placeholder_sites(self):
        unit, method = unit_method()
        woven = instrument(unit, method, pset(set_id="empty"))
        assert "{{POSTCONDITIONS}}" not in woven.text
        assert "{{OLD_SNAPSHOTS}}" not in woven.text
        assert woven.text.startswith(SUBJECT.replace("fn clamp", "fn clamp__impl", 1).rstrip("\n"))
        assert "ensure(" not in woven.text

    def test_single_condition_renders_one_guard(self):
        unit, method = unit_method()
        woven = instrument(unit, method, pset(("result >= 0", [])))
        assert woven.text.count("ensure(") == 1
        assert 'ensure("pc1", (result >= 0));' in woven.text

    def test_old_exprs_capture_before_body(self):
        unit, method = unit_method(
            "fn grow(xs, v) {\n  push(xs, v);\n  return xs;\n}\n"
        )
        woven = instrument(
            unit, method,
            pset(("len(xs) == old(len(xs)) + 1", ["len(xs)"])),
        )
        snapshot = woven.text.index("__old_0 = len(xs);")
        call = woven.text.index("result = grow__impl")
        assert snapshot < call
        assert 'ensure("pc1", (len(xs) == __old_0 + 1));' in woven.text

    def test_template_missing_for_unknown_method(self):
        unit, method = unit_method()
        method.name = "nope"
        with pytest.raises(TemplateMissingError):
            instrument(unit, method, pset())

    def test_render_error_on_bad_condition(self):
        unit, method = unit_method()
        with pytest.raises(RenderError):
            instrument(unit, method, pset(("result >==< 0", [])))


class TestBuiltinRuns:
    def test_all_pass(self, tmp_path):
        unit, method = unit_method()
        spec = builtin_spec(tmp_path)
        outcome = evaluate(unit, method, pset(("result != null", [])), spec)
        assert outcome.value == 1 and outcome.kind is OutcomeKind.ALL_PASS

    def test_violation_has_value_zero(self, tmp_path):
        unit, method = unit_method()
        spec = builtin_spec(tmp_path)
        outcome = evaluate(unit, method, pset(("result > 100", [])), spec)
        assert outcome.value == 0 and outcome.kind is OutcomeKind.VIOLATION
        assert outcome.violated_cond_ids == ["pc1"]

    def test_mutant_killed_by_boundary_sensitive_set(self, tmp_path):
        unit, method = unit_method()
        spec = builtin_spec(tmp_path)
        strong = pset(("!(x >= lo && x <= hi) || result == x", []))
        mutant = SUBJECT.replace("x < lo", "x <= lo")
        mutant_unit = parse_unit(mutant, "fixture", path="subject.src")
        tests = TESTS + "fn test_bound() { assert clamp(0, 0, 10) == 0; }\n"
        spec = builtin_spec(tmp_path, tests=tests)
        assert evaluate(unit, method, strong, spec).value == 1
        # boundary flip keeps values identical here, so the set holds
        assert evaluate(mutant_unit, method, strong, spec).value == 1
        flipped = parse_unit(SUBJECT.replace("x < lo", "x >= lo"), "fixture",
                             path="subject.src")
        assert evaluate(flipped, method, strong, spec).value == 0

    def test_crash_in_condition_is_minus_one(self, tmp_path):
        unit, method = unit_method(
            "fn make(a) {\n  return {count: a};\n}\n"
        )
        tests = "fn test_make() { assert make(2).count == 2; }\n"
        spec = builtin_spec(tmp_path, tests=tests)
        crashing = pset(("result.missing == 2", []))
        outcome = evaluate(unit, method, crashing, spec)
        assert outcome.value == -1 and outcome.kind is OutcomeKind.CRASH

    def test_test_failure_is_minus_one(self, tmp_path):
        unit, method = unit_method()
        tests = "fn test_wrong() { assert clamp(5, 0, 10) == 6; }\n"
        spec = builtin_spec(tmp_path, tests=tests)
        outcome = evaluate(unit, method, pset(("result != null", [])), spec)
        assert outcome.value == -1 and outcome.kind is OutcomeKind.TEST_FAIL

    def test_timeout_is_minus_one(self, tmp_path):
        unit, method = unit_method(
            "fn spin(n) {\n  while (n > 0) {\n    n += 0;\n  }\n  return n;\n}\n"
        )
        tests = "fn test_spin() { assert spin(1) == 0; }\n"
        spec = builtin_spec(tmp_path, tests=tests, timeout_ms=200)
        outcome = evaluate(unit, method, pset(("result == 0", [])), spec)
        assert outcome.value == -1 and outcome.kind is OutcomeKind.TIMEOUT

    def test_violation_dominates_later_failure(self, tmp_path):
        unit, method = unit_method()
        mutant = parse_unit(SUBJECT.replace("x > hi", "x >= hi"), "fixture",
                            path="subject.src")
        tests = (
            "fn test_hi() { assert clamp(10, 0, 10) == 10; }\n"
            "fn test_other() { assert clamp(99, 0, 10) == 11; }\n"
        )
        spec = builtin_spec(tmp_path, tests=tests)
        strong = pset(("!(x >= lo && x <= hi) || result == x", []))
        outcome = evaluate(mutant, method, strong, spec)
        assert outcome.kind is OutcomeKind.VIOLATION and outcome.value == 0

    def test_empty_set_outcome_matches_plain_run(self, tmp_path):
        unit, method = unit_method()
        for tests, expected in [
            (TESTS, 1),
            ("fn test_wrong() { assert clamp(1, 0, 10) == 2; }\n", -1),
        ]:
            spec = builtin_spec(tmp_path, tests=tests)
            woven_outcome = evaluate(unit, method, pset(set_id="empty"), spec)
            plain = run_suite(
                [unit] + [parse_unit(tests, "fixture", path="tests.src")],
                spec, contracts_woven=False,
            )
            assert woven_outcome.value == (1 if plain.value == 1 else -1)
            assert woven_outcome.value == expected

    def test_deterministic_outcomes(self, tmp_path):
        unit, method = unit_method()
        spec = builtin_spec(tmp_path)
        bad = pset(("result > 100", []), ("result > 200", []))
        first = evaluate(unit, method, bad, spec)
        second = evaluate(unit, method, bad, spec)
        assert first.value == second.value == 0
        assert first.violated_cond_ids == second.violated_cond_ids


class TestProcessRuns:
    def process_spec(self, tmp_path, script, timeout_ms=8000):
        (tmp_path / "suite.py").write_text(textwrap.dedent(script), encoding="utf-8")
        return RunnerSpec(
            mode=RunnerMode.PROCESS,
            working_dir=str(tmp_path),
            test_command=f"{sys.executable} suite.py",
            timeout_ms=timeout_ms,
        )

    def test_exit_zero_is_all_pass(self, tmp_path):
        spec = self.process_spec(tmp_path, "print('ok')\n")
        outcome = run_suite([], spec, contracts_woven=True)
        assert outcome.value == 1 and outcome.kind is OutcomeKind.ALL_PASS

    def test_marker_line_wins(self, tmp_path):
        spec = self.process_spec(
            tmp_path,
            """\
            import sys
            print("POSTCOND_VIOLATION:pc3", file=sys.stderr)
            sys.exit(1)
            """,
        )
        outcome = run_suite([], spec, contracts_woven=True)
        assert outcome.value == 0
        assert outcome.violated_cond_ids == ["pc3"]

    def test_marker_must_be_exact(self, tmp_path):
        spec = self.process_spec(
            tmp_path,
            """\
            import sys
            print("  POSTCOND_VIOLATION:pc3", file=sys.stderr)
            sys.exit(1)
            """,
        )
        outcome = run_suite([], spec, contracts_woven=True)
        assert outcome.kind is OutcomeKind.TEST_FAIL

    def test_exit_one_is_test_fail(self, tmp_path):
        spec = self.process_spec(tmp_path, "raise SystemExit(1)\n")
        assert run_suite([], spec, True).kind is OutcomeKind.TEST_FAIL

    def test_other_exit_is_crash(self, tmp_path):
        spec = self.process_spec(tmp_path, "raise SystemExit(7)\n")
        assert run_suite([], spec, True).kind is OutcomeKind.CRASH

    def test_timeout(self, tmp_path):
        spec = self.process_spec(
            tmp_path, "import time\ntime.sleep(30)\n", timeout_ms=400
        )
        assert run_suite([], spec, True).kind is OutcomeKind.TIMEOUT

    def test_spawn_failure_distinct_from_crash(self, tmp_path):
        spec = RunnerSpec(
            mode=RunnerMode.PROCESS,
            working_dir=str(tmp_path),
            test_command="/no/such/binary-anywhere",
            timeout_ms=1000,
        )
        with pytest.raises(SpawnFailureError):
            run_suite([], spec, contracts_woven=True)

    def test_units_materialized_into_isolated_copy(self, tmp_path):
        (tmp_path / "keep.txt").write_text("base", encoding="utf-8")
        spec = self.process_spec(
            tmp_path,
            """\
            from pathlib import Path
            assert Path("unit.src").read_text() == "mutated"
            assert Path("keep.txt").read_text() == "base"
            """,
        )
        from specmut.frontend.types import SourceUnit

        unit = SourceUnit(unit_id="u", path="unit.src", text="mutated",
                          adapter_id="fixture")
        assert run_suite([unit], spec, True).value == 1
        assert not (tmp_path / "unit.src").exists()


class TestClassifyPlain:
    def test_mapping(self):
        assert classify_plain_run(EvalOutcome.of(OutcomeKind.ALL_PASS)) is PlainRun.PASS
        assert classify_plain_run(EvalOutcome.of(OutcomeKind.TEST_FAIL)) is PlainRun.TEST_FAIL
        assert classify_plain_run(EvalOutcome.of(OutcomeKind.CRASH)) is PlainRun.CRASH
        assert classify_plain_run(EvalOutcome.of(OutcomeKind.TIMEOUT)) is PlainRun.TIMEOUT

    def test_violation_rejected_for_plain_runs(self):
        with pytest.raises(ValueError):
            classify_plain_run(EvalOutcome.of(OutcomeKind.VIOLATION, ["x"]))

    def test_value_always_in_range(self, tmp_path):
        unit, method = unit_method()
        spec = builtin_spec(tmp_path)
        for conds in [(), (("result != null", []),), (("result > 100", []),)]:
            outcome = evaluate(unit, method, pset(*conds), spec)
            assert outcome.value in (-1, 0, 1)
