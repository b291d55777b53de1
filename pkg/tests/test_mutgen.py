"""Operator catalogs, site enumeration, single-span rewrites, LLM mutants."""

import json

import pytest

from specmut import llmclient
from specmut.errors import UnknownOperatorError
from specmut.frontend import extract_methods, parse_unit
from specmut.llmclient import Transport, TransportMode
from specmut.mutgen import (
    Mutant,
    MutantStatus,
    Scheme,
    apply_operator_mutation,
    apply_single_rule,
    dedup_across_schemes,
    enumerate_sites,
    first_matching_rule,
    generate_llm_mutants,
    generate_operator_mutants,
    load_catalog,
    render_diff,
    select_llm_mutation_targets,
)

CATALOG = load_catalog("fixture")
BY_NAME = {op.name: op for op in CATALOG}

CLAMP = """fn clamp(x, lo, hi) {
  if (x < lo) {
    return lo;
  }
  if (x > hi) {
    return hi;
  }
  return x;
}
"""


def unit_method(src):
    unit = parse_unit(src, "fixture", path="u.src")
    return unit, extract_methods(unit)[0]


class TestCatalog:
    def test_bundled_catalogs_load(self):
        for name, expected in [("fixture", 14), ("python-like", 11), ("java-like", 11)]:
            catalog = load_catalog(name)
            assert len(catalog) == expected
            assert len({op.name for op in catalog}) == len(catalog)

    def test_paper_operator_names_present(self):
        python_names = {op.name for op in load_catalog("python-like")}
        assert python_names == {
            "asymmetric_str_method_swap", "augassign_to_assign", "numeric_increments",
            "symmetric_str_method_swap", "unary_op_removal", "boolean_constant_flip",
            "arg_removal", "string_perturbation", "keyword_rewrite",
            "operator_replacement", "assignment_nullification",
        }
        java_names = {op.name for op in load_catalog("java-like")}
        assert java_names == {
            "conditionals_boundary", "false_returns", "invert_negatives",
            "true_returns", "increments", "math", "primitive_returns",
            "negate_conditionals", "empty_returns", "void_method_call",
            "null_returns",
        }


class TestSites:
    def test_no_matching_spans(self):
        _, method = unit_method("fn f(x) { return x; }")
        assert enumerate_sites(method, BY_NAME["conditionals_boundary"]) == []

    def test_boundary_sites_on_two_comparisons(self):
        _, method = unit_method(
            "fn f(a, b, x, y) { if (a < b) { return 1; } if (x >= y) { return 2; } return 0; }"
        )
        sites = enumerate_sites(method, BY_NAME["conditionals_boundary"])
        assert [s.payload for s in sites] == ["<", ">="]

    def test_augassign_site(self):
        _, method = unit_method("fn f(i) { i += 1; return i; }")
        sites = enumerate_sites(method, BY_NAME["augassign_to_assign"])
        assert [s.payload for s in sites] == ["+="]


class TestApply:
    def test_boundary_rewrite(self):
        unit, method = unit_method(CLAMP)
        site = enumerate_sites(method, BY_NAME["conditionals_boundary"])[0]
        mutant = apply_operator_mutation(unit, method, BY_NAME["conditionals_boundary"], site)
        assert "x <= lo" in mutant.rendered_text
        assert mutant.status is MutantStatus.CANDIDATE
        assert mutant.operator_name == "conditionals_boundary"

    def test_augassign_rewrite(self):
        unit, method = unit_method("fn f(i) { i += 1; return i; }")
        site = enumerate_sites(method, BY_NAME["augassign_to_assign"])[0]
        mutant = apply_operator_mutation(unit, method, BY_NAME["augassign_to_assign"], site)
        assert "i = 1;" in mutant.rendered_text

    def test_numeric_increment(self):
        unit, method = unit_method("fn f() { return 5; }")
        site = enumerate_sites(method, BY_NAME["numeric_increments"])[0]
        mutant = apply_operator_mutation(unit, method, BY_NAME["numeric_increments"], site)
        assert mutant.replacement == "6"

    def test_string_append(self):
        unit, method = unit_method('fn f() { return "abc"; }')
        site = enumerate_sites(method, BY_NAME["string_perturbation"])[0]
        mutant = apply_operator_mutation(unit, method, BY_NAME["string_perturbation"], site)
        assert mutant.replacement == '"abc_x"'

    def test_call_swap_and_drop_arg(self):
        unit, method = unit_method("fn f(a, b) { return min(a, b); }")
        swap = enumerate_sites(method, BY_NAME["symmetric_call_swap"])[0]
        assert apply_operator_mutation(
            unit, method, BY_NAME["symmetric_call_swap"], swap
        ).replacement == "max(a, b)"
        drop = enumerate_sites(method, BY_NAME["arg_removal"])[0]
        assert apply_operator_mutation(
            unit, method, BY_NAME["arg_removal"], drop
        ).replacement == "min(a)"

    def test_rendered_text_differs_in_exactly_one_span(self):
        unit, method = unit_method(CLAMP)
        for op in CATALOG:
            for site in enumerate_sites(method, op):
                mutant = apply_operator_mutation(unit, method, op, site)
                original = unit.text.encode("utf-8")
                rendered = mutant.rendered_text.encode("utf-8")
                assert original[: site.byte_start] == rendered[: site.byte_start]
                assert original[site.byte_end:] == rendered[
                    site.byte_start + len(mutant.replacement.encode("utf-8")):
                ]

    def test_no_rule_is_its_own_inverse(self):
        unit, method = unit_method(CLAMP)
        for op in CATALOG:
            for site in enumerate_sites(method, op):
                pattern, replacement = first_matching_rule(op, site.payload)
                mutant = apply_operator_mutation(unit, method, op, site)
                again = apply_single_rule(pattern, replacement, mutant.replacement)
                assert again != site.payload

    def test_unknown_payload_raises(self):
        unit, method = unit_method(CLAMP)
        span = method.spans[0]
        with pytest.raises(UnknownOperatorError):
            apply_operator_mutation(unit, method, BY_NAME["augassign_to_assign"], span)


class TestGenerate:
    def test_empty_catalog(self):
        unit, method = unit_method(CLAMP)
        assert generate_operator_mutants(unit, method, []) == []

    def test_clamp_meets_candidate_threshold(self):
        unit, method = unit_method(CLAMP)
        mutants = generate_operator_mutants(unit, method, CATALOG)
        assert len([m for m in mutants if m.status is MutantStatus.CANDIDATE]) >= 5

    def test_deterministic(self):
        unit, method = unit_method(CLAMP)
        first = generate_operator_mutants(unit, method, CATALOG)
        second = generate_operator_mutants(unit, method, CATALOG)
        assert [(m.mutant_id, m.rendered_text, m.status) for m in first] == [
            (m.mutant_id, m.rendered_text, m.status) for m in second
        ]

    def test_duplicate_rendered_text_collapsed(self):
        # negate_conditionals(<= -> >) and a crafted second operator both
        # rewrite the same span to the same text
        unit, method = unit_method("fn f(a, b) { if (a <= b) { return 1; } return 0; }")
        from specmut.mutgen import MutationOperator
        from specmut.frontend import SpanKind

        clone = MutationOperator(
            name="zz_clone",
            site_kinds={SpanKind.BINARY_OP},
            rules=[("<=", ">")],
        )
        mutants = generate_operator_mutants(
            unit, method, [BY_NAME["negate_conditionals"], clone]
        )
        same = [m for m in mutants if m.replacement == ">"]
        assert len(same) == 2
        statuses = {m.status for m in same}
        assert statuses == {MutantStatus.CANDIDATE, MutantStatus.DISCARDED_DUPLICATE}

    def test_candidates_have_unique_rendered_text(self, corpus):
        catalog = load_catalog("fixture")
        for target in corpus.targets:
            unit, method = corpus.load_method(target)
            mutants = generate_operator_mutants(unit, method, catalog)
            rendered = [
                m.rendered_text for m in mutants if m.status is MutantStatus.CANDIDATE
            ]
            assert len(rendered) == len(set(rendered))


class TestLlmMutation:
    def test_no_targets_for_straight_line(self):
        unit, method = unit_method("fn f(x) { return x + 1; }")
        assert select_llm_mutation_targets(unit, method) == []

    def test_targets_cover_condition_call_and_loop_lines(self):
        src = """fn f(xs, n) {
          if (n < 0) {
            n = 0;
          }
          total = sum_it(xs);
          for (x in xs) {
            total += x;
          }
          return total + n;
        }"""
        unit, method = unit_method(src)
        targets = select_llm_mutation_targets(unit, method)
        assert [t.line for t in targets] == [2, 5, 6]
        for target in targets:
            assert "<<MUTATE_THIS_LINE>>" in target.placeholder_text

    def test_one_target_per_line_with_condition_and_call(self):
        src = "fn f(x) {\n  if (check(x) && x > 0) {\n    return 1;\n  }\n  return 0;\n}"
        unit, method = unit_method(src)
        targets = select_llm_mutation_targets(unit, method)
        assert [t.line for t in targets] == [2]

    def make_transport(self, tmp_path, responses):
        path = tmp_path / "transcript.jsonl"
        lines = []
        for req, text in responses:
            lines.append(json.dumps(
                {"id": req.request_id,
                 "request": {"system": req.system, "user": req.user},
                 "response": text}
            ))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return Transport(mode=TransportMode.REPLAY, transcript_path=str(path))

    def requests_for(self, unit, method, targets):
        from specmut.llmclient import PromptRequest
        from specmut.mutgen import LLM_MUTATION_SYSTEM

        return [
            PromptRequest.build(
                LLM_MUTATION_SYSTEM,
                f"method: {method.method_id}\n\n{t.placeholder_text}",
            )
            for t in targets
        ]

    def test_replay_mutant_generated(self, tmp_path):
        unit, method = unit_method("fn f(n) {\n  if (n < 0) {\n    return 0;\n  }\n  return n;\n}")
        targets = select_llm_mutation_targets(unit, method)
        [req] = self.requests_for(unit, method, targets)
        transport = self.make_transport(tmp_path, [(req, "  if (n <= 0) {")])
        mutants = generate_llm_mutants(unit, method, targets, transport)
        assert len(mutants) == 1
        assert mutants[0].scheme is Scheme.LLM
        assert mutants[0].operator_name is None
        assert "if (n <= 0) {" in mutants[0].rendered_text
        assert mutants[0].line == 2

    def test_identity_response_dropped(self, tmp_path):
        unit, method = unit_method("fn f(n) {\n  if (n < 0) {\n    return 0;\n  }\n  return n;\n}")
        targets = select_llm_mutation_targets(unit, method)
        [req] = self.requests_for(unit, method, targets)
        transport = self.make_transport(tmp_path, [(req, "if (n < 0) {")])
        assert generate_llm_mutants(unit, method, targets, transport) == []

    def test_unparseable_response_dropped(self, tmp_path):
        unit, method = unit_method("fn f(n) {\n  if (n < 0) {\n    return 0;\n  }\n  return n;\n}")
        targets = select_llm_mutation_targets(unit, method)
        [req] = self.requests_for(unit, method, targets)
        transport = self.make_transport(tmp_path, [(req, "if (n < 0 {")])
        assert generate_llm_mutants(unit, method, targets, transport) == []

    def test_multiline_response_truncated_to_first_line(self, tmp_path):
        unit, method = unit_method("fn f(n) {\n  if (n < 0) {\n    return 0;\n  }\n  return n;\n}")
        targets = select_llm_mutation_targets(unit, method)
        [req] = self.requests_for(unit, method, targets)
        transport = self.make_transport(
            tmp_path, [(req, "  if (n <= 0) {\n    bogus trailing text")]
        )
        mutants = generate_llm_mutants(unit, method, targets, transport)
        assert len(mutants) == 1
        assert mutants[0].replacement == "  if (n <= 0) {"

    def test_zero_targets_yield_empty(self, tmp_path):
        unit, method = unit_method("fn f(x) { return x; }")
        transport = Transport(mode=TransportMode.REPLAY, transcript_path=str(tmp_path / "none.jsonl"))
        assert generate_llm_mutants(unit, method, [], transport) == []


class TestDedupAndDiff:
    def test_cross_scheme_dedup(self):
        unit, method = unit_method(CLAMP)
        mutants = generate_operator_mutants(unit, method, CATALOG)
        clone = Mutant(
            mutant_id="llm-clone", method_id=method.method_id, scheme=Scheme.LLM,
            operator_name=None, byte_start=0, byte_end=0, original_payload="",
            replacement="", rendered_text=mutants[0].rendered_text,
        )
        pool = dedup_across_schemes(mutants + [clone])
        assert pool[-1].status is MutantStatus.DISCARDED_DUPLICATE

    def test_unified_diff_shape(self):
        unit, method = unit_method(CLAMP)
        site = enumerate_sites(method, BY_NAME["conditionals_boundary"])[0]
        mutant = apply_operator_mutation(unit, method, BY_NAME["conditionals_boundary"], site)
        diff = render_diff(unit.text, mutant)
        assert "-  if (x < lo) {" in diff
        assert "+  if (x <= lo) {" in diff
        assert diff.count("@@") == 2
