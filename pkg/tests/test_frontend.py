"""Method extraction, filter metrics, coverage, and classification."""

import pytest

from specmut.errors import MalformedReportError, UnknownAdapterError
from specmut.frontend import (
    DependencyClass,
    LocBucket,
    MethodRecord,
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
from specmut.fixturelang.spans import BUILTIN_NAMES

TWO_METHODS = """/** First documented helper, which checks that one number is
 * smaller than another number in the usual strict integer ordering
 * sense and reports the answer as a boolean value. */
fn lt(a, b) {
  return a < b;
}

fn helper(x) {
  return x;
}
"""


def record(src: str, name: str = "") -> MethodRecord:
    unit = parse_unit(src, "fixture")
    methods = extract_methods(unit)
    if name:
        return next(m for m in methods if m.name == name)
    return methods[0]


class TestExtraction:
    def test_zero_methods(self):
        assert extract_methods(parse_unit("// nothing here\n", "fixture")) == []

    def test_declaration_order_and_verbatim_capture(self):
        unit = parse_unit(TWO_METHODS, "fixture")
        methods = extract_methods(unit)
        assert [m.name for m in methods] == ["lt", "helper"]
        assert methods[0].signature == "fn lt(a, b)"
        assert methods[0].doc_comment.startswith("/** First documented helper")
        assert methods[1].doc_comment == ""

    def test_spans_confined_to_body(self):
        unit = parse_unit(TWO_METHODS, "fixture")
        for method in extract_methods(unit):
            for span in method.spans:
                assert method.body_start <= span.byte_start
                assert span.byte_end <= method.body_end

    def test_unknown_adapter(self):
        with pytest.raises(UnknownAdapterError):
            parse_unit("x", "no-such-adapter")


class TestCyclomatic:
    def test_straight_line_is_one(self):
        assert cyclomatic_complexity(record("fn f(x) { return x; }")) == 1

    def test_single_if_is_two(self):
        assert cyclomatic_complexity(
            record("fn f(x) { if (x > 0) { return x; } return 0; }")
        ) == 2

    def test_if_and_while_is_three(self):
        src = """fn f(x) {
          if (x > 0) {
            while (x > 1) {
              x -= 1;
            }
          }
          return x;
        }"""
        assert cyclomatic_complexity(record(src)) == 3

    def test_short_circuit_operators_count(self):
        src = "fn f(a, b) { if (a > 0 && b > 0) { return 1; } return 0; }"
        assert cyclomatic_complexity(record(src)) == 3


class TestCommentQuality:
    def test_empty_comment(self):
        assert count_comment_words("") == (0, False)

    def test_exactly_fifteen_words_fails_strict_boundary(self):
        comment = " ".join(f"word{i}" for i in range(15))
        assert count_comment_words(comment) == (15, False)

    def test_nineteen_word_doc(self):
        doc = ("Returns the parent node of the given node or None when the "
               "node is the root of the tree.")
        assert count_comment_words(doc) == (19, True)

    def test_markers_and_digits_do_not_count(self):
        assert count_comment_words("/** 123 456 --- */") == (0, False)

    def test_monotone_in_word_count(self):
        words = []
        last = 0
        for i in range(40):
            words.append(f"w{i}")
            count, passes = count_comment_words(" ".join(words))
            assert count == i + 1 >= last
            assert passes == (count > 15)
            last = count

    def test_record_level_wrapper(self):
        rec = record(TWO_METHODS, "lt")
        count, passes = comment_quality(rec)
        assert passes and count == rec.comment_words


class TestCoverage:
    def write_report(self, tmp_path, rows):
        path = tmp_path / "cov.tsv"
        path.write_text("".join(f"{p}\t{l}\t{h}\n" for p, l, h in rows),
                        encoding="utf-8")
        return path

    def unit_and_method(self):
        src = ("fn f(x) {\n"          # line 1
               "  if (x > 0) {\n"     # line 2
               "    x = x + 1;\n"     # line 3
               "  }\n"
               "  x = x * 2;\n"       # line 5
               "  return x;\n"        # line 6
               "}\n")
        unit = parse_unit(src, "fixture", path="f.src")
        return unit, extract_methods(unit)[0]

    def test_partial_coverage(self, tmp_path):
        unit, method = self.unit_and_method()
        report = self.write_report(
            tmp_path, [("f.src", 2, 3), ("f.src", 3, 1), ("f.src", 5, 0), ("f.src", 6, 2)]
        )
        assert ingest_coverage(report, method, unit) == 0.75

    def test_full_coverage(self, tmp_path):
        unit, method = self.unit_and_method()
        report = self.write_report(tmp_path, [("f.src", 2, 1), ("f.src", 6, 1)])
        assert ingest_coverage(report, method, unit) == 1.0

    def test_absent_when_no_lines_map(self, tmp_path):
        unit, method = self.unit_and_method()
        report = self.write_report(tmp_path, [("other.src", 2, 1)])
        assert ingest_coverage(report, method, unit) is None

    def test_malformed_report(self, tmp_path):
        path = tmp_path / "cov.tsv"
        path.write_text("f.src\t2\t1\nf.src\toops\n", encoding="utf-8")
        with pytest.raises(MalformedReportError) as err:
            parse_coverage_report(path)
        assert err.value.line == 2

    def test_negative_hits_rejected(self, tmp_path):
        path = tmp_path / "cov.tsv"
        path.write_text("f.src\t2\t-1\n", encoding="utf-8")
        with pytest.raises(MalformedReportError):
            parse_coverage_report(path)

    def test_value_in_unit_interval(self, tmp_path):
        unit, method = self.unit_and_method()
        for hit_rows in ([("f.src", 2, 0)], [("f.src", 2, 1), ("f.src", 3, 0)]):
            report = self.write_report(tmp_path, hit_rows)
            value = ingest_coverage(report, method, unit)
            assert 0.0 <= value <= 1.0

    def test_bundled_corpus_coverage(self, corpus):
        table = parse_coverage_report(corpus.root / corpus.coverage_path)
        for target in corpus.targets:
            unit, method = corpus.load_method(target)
            value = method_coverage(table, method, unit)
            assert value is not None and value >= 0.9


class TestClassification:
    def test_allowlisted_refs_are_standalone(self):
        rec = record("fn f(xs) { return len(sorted(xs)); }")
        assert rec.external_refs == ["len", "sorted"]
        assert classify_dependency(rec, {"len", "sorted"}) is DependencyClass.STANDALONE

    def test_project_symbol_is_dependent(self):
        rec = record("fn f(x) { return internal_helper(x); }")
        assert classify_dependency(rec, BUILTIN_NAMES) is DependencyClass.DEPENDENT

    def test_no_refs_is_standalone(self):
        rec = record("fn f(x) { return x; }")
        assert classify_dependency(rec, set()) is DependencyClass.STANDALONE

    def test_monotone_in_allowlist(self):
        rec = record("fn f(xs) { return mystery(len(xs)); }")
        small = {"len"}
        big = {"len", "mystery"}
        first = classify_dependency(rec, small)
        second = classify_dependency(rec, big)
        assert first is DependencyClass.DEPENDENT
        assert second is DependencyClass.STANDALONE

    def test_loc_buckets(self):
        rec = record("fn f(x) { return x; }")
        for loc, bucket in [(0, LocBucket.SHORT), (19, LocBucket.SHORT),
                            (20, LocBucket.MEDIUM), (39, LocBucket.MEDIUM),
                            (40, LocBucket.LONG), (100, LocBucket.LONG)]:
            rec.loc = loc
            assert loc_bucket(rec) is bucket
