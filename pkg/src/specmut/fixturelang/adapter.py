"""Subject-adapter implementation for the fixture language."""

from __future__ import annotations

from specmut.errors import ParseError, RenderError, TemplateMissingError
from specmut.fixturelang.interp import FixtureRuntimeError, Interpreter
from specmut.fixturelang.parser import parse_expression, parse_program
from specmut.fixturelang.spans import analyze_function
from specmut.frontend.adapters import ParsedUnit, RawMethod, RawRunResult

OLD_SNAPSHOTS = "{{OLD_SNAPSHOTS}}"
POSTCONDITIONS = "{{POSTCONDITIONS}}"


class FixtureAdapter:
    """Parses, instruments, and executes fixture-language units."""

    adapter_id = "fixture"

    # -- frontend -----------------------------------------------------------

    def parse(self, text: str) -> ParsedUnit:
        program = parse_program(text)
        data = text.encode("utf-8")
        unit = ParsedUnit()
        for func in program.functions:
            spans, decisions, refs, loc = analyze_function(func, data, text)
            unit.spans.extend(spans)
            unit.methods.append(
                RawMethod(
                    name=func.name,
                    signature=data[func.sig_start:func.sig_end].decode("utf-8"),
                    doc_comment=func.doc,
                    body_start=func.body.start,
                    body_end=func.body.end,
                    line=func.line,
                    params=list(func.params),
                    external_refs=refs,
                    decision_points=decisions,
                    loc=loc,
                )
            )
        unit.spans.sort(key=lambda s: (s.byte_start, s.byte_end, s.kind.value))
        return unit

    def check_expression(self, text: str) -> None:
        try:
            parse_expression(text)
        except ParseError as exc:
            raise RenderError(f"bad condition syntax: {exc}") from exc

    # -- weaving --------------------------------------------------------------

    def weaving_template(self, text: str, method_name: str) -> str:
        """Rename the method and append a contract wrapper with placeholders.

        The wrapper snapshots pre-state, delegates to the renamed
        implementation, then runs the guards against ``result``.
        """
        program = parse_program(text)
        target = None
        for func in program.functions:
            if func.name == method_name:
                target = func
                break
        if target is None:
            raise TemplateMissingError(
                f"method {method_name!r} not found in unit"
            )
        data = text.encode("utf-8")
        impl_name = f"{method_name}__impl"
        renamed = (
            data[: target.name_start]
            + impl_name.encode("utf-8")
            + data[target.name_end:]
        ).decode("utf-8")
        params = ", ".join(target.params)
        wrapper = (
            f"\n\nfn {method_name}({params}) {{\n"
            f"{OLD_SNAPSHOTS}\n"
            f"    result = {impl_name}({params});\n"
            f"{POSTCONDITIONS}\n"
            f"    return result;\n"
            f"}}\n"
        )
        return renamed + wrapper

    def render_snapshots(self, old_exprs: list[str]) -> str:
        lines = []
        for i, expr in enumerate(old_exprs):
            self.check_expression(expr)
            lines.append(f"    __old_{i} = {expr};")
        return "\n".join(lines)

    def render_guards(self, conditions: list, old_exprs: list[str]) -> str:
        lines = []
        for cond in conditions:
            self.check_expression(cond.source_text)
            rewritten = rewrite_old_refs(cond.source_text, old_exprs)
            lines.append(f'    ensure("{cond.cond_id}", ({rewritten}));')
        return "\n".join(lines)

    # -- execution ------------------------------------------------------------

    def run_builtin(self, unit_texts: list[str], timeout_ms: int) -> RawRunResult:
        try:
            interp = Interpreter(
                [(f"unit{i}", text) for i, text in enumerate(unit_texts)]
            )
        except (ParseError, FixtureRuntimeError) as exc:
            return RawRunResult(crash_message=f"load error: {exc}",
                                log_lines=[f"CRASH load: {exc}"])
        trace = interp.run_tests(timeout_ms)
        return RawRunResult(
            violated_cond_ids=trace.violated_cond_ids,
            failed_tests=trace.failed_tests,
            crash_message=trace.crash_message,
            timed_out=trace.timed_out,
            tests_run=trace.tests_run,
            log_lines=trace.log_lines,
        )


def rewrite_old_refs(condition: str, old_exprs: list[str]) -> str:
    """Replace ``old(<expr>)`` uses with their snapshot variable names.

    Matching is textual: the expression inside ``old(...)`` must be
    written exactly as it appears in the set's ``old_exprs`` list.
    Longer expressions are replaced first so no entry can clobber a
    larger one that contains it.
    """
    indexed = sorted(enumerate(old_exprs), key=lambda kv: -len(kv[1]))
    out = condition
    for i, expr in indexed:
        out = out.replace(f"old({expr})", f"__old_{i}")
    return out
