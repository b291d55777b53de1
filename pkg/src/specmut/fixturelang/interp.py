"""Tree-walking interpreter for the fixture language.

Semantics are deliberately strict: conditions must be booleans, ordering
comparisons and arithmetic are type-checked, list indexing is bounds
checked, and any violation surfaces as a runtime crash. Strictness makes
mutants observable: a nulled-out value crashes instead of silently
flowing on, which is exactly the behavior class the harness needs to
classify.

Equality is total and structural across types (``null == 5`` is false,
never an error), so tests can always compare a mutant's return value.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from specmut.fixturelang import nodes as n
from specmut.fixturelang.parser import parse_program

# Each language-level call burns several Python frames; keep the cap well
# under CPython's default recursion limit.
MAX_CALL_DEPTH = 64
_DEADLINE_CHECK_MASK = 0x3FF


class FixtureRuntimeError(Exception):
    """A crash inside subject code (type error, missing field, div by zero...)."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class AssertFailure(Exception):
    def __init__(self, line: int):
        self.line = line
        super().__init__(f"assertion failed at line {line}")


class ContractViolation(Exception):
    def __init__(self, cond_id: str):
        self.cond_id = cond_id
        super().__init__(cond_id)


class TimeoutSignal(Exception):
    pass


class _Return(Exception):
    def __init__(self, value):
        self.value = value


class _Break(Exception):
    pass


class _Continue(Exception):
    pass


@dataclass
class RunTrace:
    """Aggregated result of running every test function of a program."""

    violated_cond_ids: list[str] = field(default_factory=list)
    failed_tests: list[str] = field(default_factory=list)
    crash_message: str | None = None
    timed_out: bool = False
    tests_run: int = 0
    log_lines: list[str] = field(default_factory=list)
    executed_lines: dict = field(default_factory=dict)   # path -> set of lines


def _type_name(value) -> str:
    if value is None:
        return "null"
    if type(value) is bool:
        return "bool"
    if type(value) is int:
        return "int"
    if type(value) is str:
        return "str"
    if type(value) is list:
        return "list"
    if type(value) is dict:
        return "record"
    return type(value).__name__


def _values_equal(a, b) -> bool:
    ta, tb = _type_name(a), _type_name(b)
    if ta != tb:
        return False
    if ta == "list":
        return len(a) == len(b) and all(_values_equal(x, y) for x, y in zip(a, b))
    if ta == "record":
        return a.keys() == b.keys() and all(_values_equal(a[k], b[k]) for k in a)
    return a == b


class Interpreter:
    """Executes one program (a set of parsed units sharing a namespace)."""

    def __init__(self, units: list[tuple[str, str]], trace_lines: bool = False):
        """``units`` is a list of (path, text); duplicate fn names crash at load."""
        self.functions: dict[str, tuple[str, n.Function]] = {}
        self.trace_lines = trace_lines
        self.trace: dict[str, set] = {}
        self.log_lines: list[str] = []
        self._deadline = None
        self._steps = 0
        self._depth = 0
        for path, text in units:
            program = parse_program(text)
            for func in program.functions:
                if func.name in self.functions:
                    raise FixtureRuntimeError(
                        func.line, f"duplicate function {func.name!r}"
                    )
                self.functions[func.name] = (path, func)

    # -- public API -------------------------------------------------------

    def run_tests(self, timeout_ms: int) -> RunTrace:
        trace = RunTrace()
        self._deadline = time.monotonic() + timeout_ms / 1000.0
        seen_conds = set()
        test_items = [
            (path, func)
            for path, func in self.functions.values()
            if func.name.startswith("test_")
        ]
        for path, func in test_items:
            trace.tests_run += 1
            try:
                self.call_function(func.name, [])
            except ContractViolation as violation:
                trace.log_lines.append(f"POSTCOND_VIOLATION:{violation.cond_id}")
                if violation.cond_id not in seen_conds:
                    seen_conds.add(violation.cond_id)
                    trace.violated_cond_ids.append(violation.cond_id)
            except AssertFailure as failure:
                trace.failed_tests.append(func.name)
                trace.log_lines.append(f"FAIL {func.name}: {failure}")
            except FixtureRuntimeError as crash:
                trace.crash_message = f"{func.name}: {crash}"
                trace.log_lines.append(f"CRASH {func.name}: {crash}")
                break
            except TimeoutSignal:
                trace.timed_out = True
                break
            if time.monotonic() > self._deadline:
                trace.timed_out = True
                break
        trace.log_lines = self.log_lines + trace.log_lines
        trace.executed_lines = self.trace
        return trace

    def call_function(self, name: str, args: list):
        if name not in self.functions:
            raise FixtureRuntimeError(0, f"unknown function {name!r}")
        path, func = self.functions[name]
        if len(args) != len(func.params):
            raise FixtureRuntimeError(
                func.line,
                f"{name} expects {len(func.params)} arguments, got {len(args)}",
            )
        if self._depth >= MAX_CALL_DEPTH:
            raise FixtureRuntimeError(func.line, "recursion limit exceeded")
        env = dict(zip(func.params, args))
        self._depth += 1
        try:
            self.exec_block(func.body, env, path)
        except _Return as ret:
            return ret.value
        finally:
            self._depth -= 1
        return None

    def eval_expression_text(self, text: str, env: dict):
        """Evaluate standalone expression source in the given environment."""
        from specmut.fixturelang.parser import parse_expression

        return self.eval(parse_expression(text), env, "<expr>")

    # -- statements ---------------------------------------------------------

    def _tick(self, node: n.Node, path: str) -> None:
        self._steps += 1
        if (self._steps & _DEADLINE_CHECK_MASK) == 0:
            if self._deadline is not None and time.monotonic() > self._deadline:
                raise TimeoutSignal()
        if self.trace_lines:
            self.trace.setdefault(path, set()).add(node.line)

    def exec_block(self, block: n.Block, env: dict, path: str) -> None:
        for stmt in block.stmts:
            self.exec_stmt(stmt, env, path)

    def exec_stmt(self, node: n.Node, env: dict, path: str) -> None:
        self._tick(node, path)
        if isinstance(node, n.If):
            if self._condition(node.cond, env, path):
                self.exec_block(node.then, env, path)
            elif node.orelse is not None:
                self.exec_block(node.orelse, env, path)
        elif isinstance(node, n.While):
            while self._condition(node.cond, env, path):
                self._tick(node, path)
                try:
                    self.exec_block(node.body, env, path)
                except _Break:
                    break
                except _Continue:
                    continue
        elif isinstance(node, n.For):
            iterable = self.eval(node.iterable, env, path)
            if type(iterable) is not list:
                raise FixtureRuntimeError(
                    node.line, f"for-loop needs a list, got {_type_name(iterable)}"
                )
            for item in list(iterable):
                self._tick(node, path)
                env[node.var] = item
                try:
                    self.exec_block(node.body, env, path)
                except _Break:
                    break
                except _Continue:
                    continue
        elif isinstance(node, n.Return):
            value = None if node.expr is None else self.eval(node.expr, env, path)
            raise _Return(value)
        elif isinstance(node, n.Assert):
            value = self.eval(node.expr, env, path)
            if type(value) is not bool:
                raise FixtureRuntimeError(
                    node.line, f"assert needs a bool, got {_type_name(value)}"
                )
            if not value:
                raise AssertFailure(node.line)
        elif isinstance(node, n.Break):
            raise _Break()
        elif isinstance(node, n.Continue):
            raise _Continue()
        elif isinstance(node, n.Assign):
            value = self.eval(node.expr, env, path)
            self._assign(node.target, value, env, path)
        elif isinstance(node, n.AugAssign):
            name = node.target.ident
            if name not in env:
                raise FixtureRuntimeError(node.line, f"unknown variable {name!r}")
            current = env[name]
            value = self.eval(node.expr, env, path)
            env[name] = self._arith(node.op[0], current, value, node.line)
        elif isinstance(node, n.ExprStmt):
            self.eval(node.expr, env, path)
        else:
            raise AssertionError(f"unhandled statement {type(node).__name__}")

    def _assign(self, target: n.Node, value, env: dict, path: str) -> None:
        if isinstance(target, n.Name):
            env[target.ident] = value
        elif isinstance(target, n.FieldAccess):
            obj = self.eval(target.obj, env, path)
            if type(obj) is not dict:
                raise FixtureRuntimeError(
                    target.line, f"field assignment on {_type_name(obj)}"
                )
            obj[target.name] = value
        elif isinstance(target, n.IndexAccess):
            obj = self.eval(target.obj, env, path)
            index = self.eval(target.index, env, path)
            if type(obj) is not list or type(index) is not int:
                raise FixtureRuntimeError(target.line, "invalid index assignment")
            if not 0 <= index < len(obj):
                raise FixtureRuntimeError(target.line, f"index {index} out of range")
            obj[index] = value
        else:
            raise AssertionError("unhandled assignment target")

    def _condition(self, expr: n.Node, env: dict, path: str) -> bool:
        value = self.eval(expr, env, path)
        if type(value) is not bool:
            raise FixtureRuntimeError(
                expr.line, f"condition must be bool, got {_type_name(value)}"
            )
        return value

    # -- expressions ----------------------------------------------------------

    def eval(self, node: n.Node, env: dict, path: str):
        self._tick(node, path)
        if isinstance(node, n.IntLit):
            return node.value
        if isinstance(node, n.StrLit):
            return node.value
        if isinstance(node, n.BoolLit):
            return node.value
        if isinstance(node, n.NullLit):
            return None
        if isinstance(node, n.Name):
            if node.ident in env:
                return env[node.ident]
            raise FixtureRuntimeError(node.line, f"unknown variable {node.ident!r}")
        if isinstance(node, n.ListLit):
            return [self.eval(item, env, path) for item in node.items]
        if isinstance(node, n.RecordLit):
            return {name: self.eval(value, env, path) for name, value in node.fields}
        if isinstance(node, n.BinOp):
            return self._binop(node, env, path)
        if isinstance(node, n.UnaryOp):
            return self._unary(node, env, path)
        if isinstance(node, n.Call):
            return self._call(node, env, path)
        if isinstance(node, n.FieldAccess):
            obj = self.eval(node.obj, env, path)
            if type(obj) is not dict:
                raise FixtureRuntimeError(
                    node.line, f"field access on {_type_name(obj)}"
                )
            if node.name not in obj:
                raise FixtureRuntimeError(node.line, f"missing field {node.name!r}")
            return obj[node.name]
        if isinstance(node, n.IndexAccess):
            obj = self.eval(node.obj, env, path)
            index = self.eval(node.index, env, path)
            if type(obj) is not list:
                raise FixtureRuntimeError(node.line, f"indexing {_type_name(obj)}")
            if type(index) is not int:
                raise FixtureRuntimeError(node.line, "list index must be int")
            if not 0 <= index < len(obj):
                raise FixtureRuntimeError(node.line, f"index {index} out of range")
            return obj[index]
        raise AssertionError(f"unhandled expression {type(node).__name__}")

    def _binop(self, node: n.BinOp, env: dict, path: str):
        op = node.op
        if op == "&&":
            left = self.eval(node.left, env, path)
            if type(left) is not bool:
                raise FixtureRuntimeError(node.line, "&& needs booleans")
            if not left:
                return False
            right = self.eval(node.right, env, path)
            if type(right) is not bool:
                raise FixtureRuntimeError(node.line, "&& needs booleans")
            return right
        if op == "||":
            left = self.eval(node.left, env, path)
            if type(left) is not bool:
                raise FixtureRuntimeError(node.line, "|| needs booleans")
            if left:
                return True
            right = self.eval(node.right, env, path)
            if type(right) is not bool:
                raise FixtureRuntimeError(node.line, "|| needs booleans")
            return right

        left = self.eval(node.left, env, path)
        right = self.eval(node.right, env, path)
        if op == "==":
            return _values_equal(left, right)
        if op == "!=":
            return not _values_equal(left, right)
        if op in ("<", "<=", ">", ">="):
            lt, rt = _type_name(left), _type_name(right)
            if not (lt == rt and lt in ("int", "str")):
                raise FixtureRuntimeError(
                    node.line, f"cannot order {lt} against {rt}"
                )
            return {"<": left < right, "<=": left <= right,
                    ">": left > right, ">=": left >= right}[op]
        return self._arith(op, left, right, node.line)

    def _arith(self, op: str, left, right, line: int):
        lt, rt = _type_name(left), _type_name(right)
        if op == "+" and lt == rt and lt in ("str", "list"):
            return left + right
        if lt != "int" or rt != "int":
            raise FixtureRuntimeError(line, f"cannot apply {op} to {lt} and {rt}")
        if op == "+":
            return left + right
        if op == "-":
            return left - right
        if op == "*":
            return left * right
        if op == "/":
            if right == 0:
                raise FixtureRuntimeError(line, "division by zero")
            return left // right
        if op == "%":
            if right == 0:
                raise FixtureRuntimeError(line, "modulo by zero")
            return left % right
        raise AssertionError(f"unhandled operator {op}")

    def _unary(self, node: n.UnaryOp, env: dict, path: str):
        value = self.eval(node.operand, env, path)
        if node.op == "-":
            if type(value) is not int:
                raise FixtureRuntimeError(node.line, "unary minus needs an int")
            return -value
        if node.op == "!":
            if type(value) is not bool:
                raise FixtureRuntimeError(node.line, "! needs a bool")
            return not value
        raise AssertionError(f"unhandled unary {node.op}")

    # -- calls and builtins ---------------------------------------------------

    def _call(self, node: n.Call, env: dict, path: str):
        args = [self.eval(arg, env, path) for arg in node.args]
        name = node.callee
        if name in self.functions:
            return self.call_function(name, args)
        builtin = getattr(self, f"_builtin_{name}", None)
        if builtin is None:
            raise FixtureRuntimeError(node.line, f"unknown function {name!r}")
        return builtin(args, node.line)

    def _need(self, args: list, count: int, name: str, line: int) -> None:
        if len(args) != count:
            raise FixtureRuntimeError(
                line, f"{name} expects {count} arguments, got {len(args)}"
            )

    def _builtin_len(self, args, line):
        self._need(args, 1, "len", line)
        value = args[0]
        if type(value) in (str, list):
            return len(value)
        raise FixtureRuntimeError(line, f"len of {_type_name(value)}")

    def _builtin_push(self, args, line):
        self._need(args, 2, "push", line)
        target, value = args
        if type(target) is not list:
            raise FixtureRuntimeError(line, f"push into {_type_name(target)}")
        target.append(value)
        return None

    def _builtin_min(self, args, line):
        self._need(args, 2, "min", line)
        self._ints(args, "min", line)
        return min(args[0], args[1])

    def _builtin_max(self, args, line):
        self._need(args, 2, "max", line)
        self._ints(args, "max", line)
        return max(args[0], args[1])

    def _builtin_abs(self, args, line):
        self._need(args, 1, "abs", line)
        self._ints(args, "abs", line)
        return abs(args[0])

    def _builtin_range(self, args, line):
        self._need(args, 2, "range", line)
        self._ints(args, "range", line)
        return list(range(args[0], args[1]))

    def _builtin_sorted(self, args, line):
        self._need(args, 1, "sorted", line)
        value = args[0]
        if type(value) is not list:
            raise FixtureRuntimeError(line, f"sorted of {_type_name(value)}")
        kinds = {_type_name(v) for v in value}
        if len(kinds) > 1 or (kinds and not kinds <= {"int", "str"}):
            raise FixtureRuntimeError(line, "sorted needs a homogeneous list")
        return sorted(value)

    def _builtin_copy(self, args, line):
        self._need(args, 1, "copy", line)
        value = args[0]
        if type(value) is list:
            return list(value)
        if type(value) is dict:
            return dict(value)
        return value

    def _builtin_log(self, args, line):
        self._need(args, 1, "log", line)
        self.log_lines.append(f"LOG {args[0]!r}")
        return None

    def _builtin_ensure(self, args, line):
        self._need(args, 2, "ensure", line)
        cond_id, value = args
        if type(cond_id) is not str:
            raise FixtureRuntimeError(line, "ensure id must be a string")
        if type(value) is not bool:
            raise FixtureRuntimeError(
                line, f"postcondition value must be bool, got {_type_name(value)}"
            )
        if not value:
            raise ContractViolation(cond_id)
        return None

    def _ints(self, args, name, line):
        for value in args:
            if type(value) is not int:
                raise FixtureRuntimeError(
                    line, f"{name} needs ints, got {_type_name(value)}"
                )
