"""AST node definitions for the fixture language.

All nodes carry byte offsets (``start``/``end``) into the UTF-8 source.
Operator-bearing nodes additionally record the byte range of the operator
token itself, which is what mutation span labeling needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Node:
    start: int
    end: int
    line: int


# --- expressions -------------------------------------------------------------


@dataclass
class IntLit(Node):
    value: int


@dataclass
class StrLit(Node):
    value: str           # decoded content, without quotes


@dataclass
class BoolLit(Node):
    value: bool


@dataclass
class NullLit(Node):
    pass


@dataclass
class Name(Node):
    ident: str


@dataclass
class ListLit(Node):
    items: list


@dataclass
class RecordLit(Node):
    fields: list         # list of (name, expr)


@dataclass
class BinOp(Node):
    op: str
    left: Node
    right: Node
    op_start: int = 0
    op_end: int = 0


@dataclass
class UnaryOp(Node):
    op: str
    operand: Node
    op_start: int = 0
    op_end: int = 0


@dataclass
class Call(Node):
    callee: str
    args: list
    callee_start: int = 0
    callee_end: int = 0


@dataclass
class FieldAccess(Node):
    obj: Node
    name: str


@dataclass
class IndexAccess(Node):
    obj: Node
    index: Node


# --- statements --------------------------------------------------------------


@dataclass
class Block(Node):
    stmts: list = field(default_factory=list)


@dataclass
class If(Node):
    cond: Node
    then: Block
    orelse: Block | None


@dataclass
class While(Node):
    cond: Node
    body: Block


@dataclass
class For(Node):
    var: str
    iterable: Node
    body: Block
    header_start: int = 0    # byte range of "var in iterable"
    header_end: int = 0


@dataclass
class Return(Node):
    expr: Node | None


@dataclass
class Assert(Node):
    expr: Node


@dataclass
class Break(Node):
    kw_start: int = 0
    kw_end: int = 0


@dataclass
class Continue(Node):
    kw_start: int = 0
    kw_end: int = 0


@dataclass
class Assign(Node):
    target: Node             # Name, FieldAccess or IndexAccess
    expr: Node


@dataclass
class AugAssign(Node):
    target: Node             # Name only
    op: str                  # "+=", "-=", "*=", "/="
    expr: Node
    op_start: int = 0
    op_end: int = 0


@dataclass
class ExprStmt(Node):
    expr: Node


@dataclass
class Function(Node):
    name: str
    params: list
    body: Block
    doc: str                 # raw doc comment text, "" when absent
    sig_start: int = 0       # byte range of "fn name(params)"
    sig_end: int = 0
    name_start: int = 0      # byte range of the name token alone
    name_end: int = 0


@dataclass
class Program(Node):
    functions: list = field(default_factory=list)
