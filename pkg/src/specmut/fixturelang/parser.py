"""Recursive-descent parser for the fixture language.

Grammar (brace-delimited, semicolon-terminated):

    program   := { function }
    function  := [DOC] "fn" IDENT "(" [IDENT {"," IDENT}] ")" block
    block     := "{" {stmt} "}"
    stmt      := "if" "(" expr ")" block ["else" (block | if-stmt)]
               | "while" "(" expr ")" block
               | "for" "(" IDENT "in" expr ")" block
               | "return" [expr] ";"
               | "assert" expr ";"
               | ("break" | "continue") ";"
               | target ("=" | "+=" | "-=" | "*=" | "/=") expr ";"
               | expr ";"

Expression precedence, loosest first: "||", "&&", comparison
(non-associative chains parse left-to-right), additive, multiplicative,
unary ("-", "!"), postfix (call / index / field), primary.
"""

from __future__ import annotations

from specmut.errors import ParseError
from specmut.fixturelang import nodes as n
from specmut.fixturelang.lexer import Token, tokenize

COMPARE_OPS = {"==", "!=", "<", "<=", ">", ">="}
ADD_OPS = {"+", "-"}
MUL_OPS = {"*", "/", "%"}
AUG_OPS = {"+=", "-=", "*=", "/="}


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # -- token helpers --------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            raise ParseError(tok.line, f"expected {text!r}, found {tok.text!r}")
        return tok

    def expect_kind(self, kind: str) -> Token:
        tok = self.next()
        if tok.kind != kind:
            raise ParseError(tok.line, f"expected {kind}, found {tok.text!r}")
        return tok

    def at(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind in ("OP", "KEYWORD")

    # -- grammar --------------------------------------------------------

    def program(self) -> n.Program:
        functions = []
        while self.peek().kind != "EOF":
            doc = ""
            if self.peek().kind == "DOC":
                doc = self.next().text
            functions.append(self.function(doc))
        end = self.peek().byte_end
        return n.Program(0, end, 1, functions)

    def function(self, doc: str) -> n.Function:
        fn_tok = self.next()
        if fn_tok.text != "fn":
            raise ParseError(fn_tok.line, f"expected 'fn', found {fn_tok.text!r}")
        name_tok = self.expect_kind("IDENT")
        self.expect("(")
        params = []
        if not self.at(")"):
            params.append(self.expect_kind("IDENT").text)
            while self.at(","):
                self.next()
                params.append(self.expect_kind("IDENT").text)
        close = self.expect(")")
        body = self.block()
        return n.Function(
            fn_tok.byte_start, body.end, fn_tok.line,
            name_tok.text, params, body, doc,
            sig_start=fn_tok.byte_start, sig_end=close.byte_end,
            name_start=name_tok.byte_start, name_end=name_tok.byte_end,
        )

    def block(self) -> n.Block:
        open_tok = self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.peek().kind == "EOF":
                raise ParseError(open_tok.line, "unterminated block")
            stmts.append(self.statement())
        close = self.expect("}")
        return n.Block(open_tok.byte_start, close.byte_end, open_tok.line, stmts)

    def statement(self) -> n.Node:
        tok = self.peek()
        if tok.text == "if":
            return self.if_stmt()
        if tok.text == "while":
            self.next()
            self.expect("(")
            cond = self.expression()
            self.expect(")")
            body = self.block()
            return n.While(tok.byte_start, body.end, tok.line, cond, body)
        if tok.text == "for":
            self.next()
            self.expect("(")
            var_tok = self.expect_kind("IDENT")
            self.expect("in")
            iterable = self.expression()
            self.expect(")")
            body = self.block()
            return n.For(
                tok.byte_start, body.end, tok.line,
                var_tok.text, iterable, body,
                header_start=var_tok.byte_start, header_end=iterable.end,
            )
        if tok.text == "return":
            self.next()
            expr = None
            if not self.at(";"):
                expr = self.expression()
            semi = self.expect(";")
            return n.Return(tok.byte_start, semi.byte_end, tok.line, expr)
        if tok.text == "assert":
            self.next()
            expr = self.expression()
            semi = self.expect(";")
            return n.Assert(tok.byte_start, semi.byte_end, tok.line, expr)
        if tok.text == "break":
            self.next()
            semi = self.expect(";")
            return n.Break(tok.byte_start, semi.byte_end, tok.line,
                           kw_start=tok.byte_start, kw_end=tok.byte_end)
        if tok.text == "continue":
            self.next()
            semi = self.expect(";")
            return n.Continue(tok.byte_start, semi.byte_end, tok.line,
                              kw_start=tok.byte_start, kw_end=tok.byte_end)

        expr = self.expression()
        nxt = self.peek()
        if nxt.text == "=" and nxt.kind == "OP":
            if not isinstance(expr, (n.Name, n.FieldAccess, n.IndexAccess)):
                raise ParseError(nxt.line, "invalid assignment target")
            self.next()
            rhs = self.expression()
            semi = self.expect(";")
            return n.Assign(expr.start, semi.byte_end, expr.line, expr, rhs)
        if nxt.text in AUG_OPS and nxt.kind == "OP":
            if not isinstance(expr, n.Name):
                raise ParseError(nxt.line, "augmented assignment needs a plain name")
            op_tok = self.next()
            rhs = self.expression()
            semi = self.expect(";")
            return n.AugAssign(
                expr.start, semi.byte_end, expr.line, expr, op_tok.text, rhs,
                op_start=op_tok.byte_start, op_end=op_tok.byte_end,
            )
        semi = self.expect(";")
        return n.ExprStmt(expr.start, semi.byte_end, expr.line, expr)

    def if_stmt(self) -> n.If:
        tok = self.expect("if")
        self.expect("(")
        cond = self.expression()
        self.expect(")")
        then = self.block()
        orelse = None
        end = then.end
        if self.at("else"):
            self.next()
            if self.at("if"):
                nested = self.if_stmt()
                orelse = n.Block(nested.start, nested.end, nested.line, [nested])
            else:
                orelse = self.block()
            end = orelse.end
        return n.If(tok.byte_start, end, tok.line, cond, then, orelse)

    # -- expressions ----------------------------------------------------

    def expression(self) -> n.Node:
        return self.or_expr()

    def or_expr(self) -> n.Node:
        left = self.and_expr()
        while self.at("||"):
            op_tok = self.next()
            right = self.and_expr()
            left = n.BinOp(left.start, right.end, left.line, "||", left, right,
                           op_start=op_tok.byte_start, op_end=op_tok.byte_end)
        return left

    def and_expr(self) -> n.Node:
        left = self.compare_expr()
        while self.at("&&"):
            op_tok = self.next()
            right = self.compare_expr()
            left = n.BinOp(left.start, right.end, left.line, "&&", left, right,
                           op_start=op_tok.byte_start, op_end=op_tok.byte_end)
        return left

    def compare_expr(self) -> n.Node:
        left = self.add_expr()
        while self.peek().kind == "OP" and self.peek().text in COMPARE_OPS:
            op_tok = self.next()
            right = self.add_expr()
            left = n.BinOp(left.start, right.end, left.line, op_tok.text, left, right,
                           op_start=op_tok.byte_start, op_end=op_tok.byte_end)
        return left

    def add_expr(self) -> n.Node:
        left = self.mul_expr()
        while self.peek().kind == "OP" and self.peek().text in ADD_OPS:
            op_tok = self.next()
            right = self.mul_expr()
            left = n.BinOp(left.start, right.end, left.line, op_tok.text, left, right,
                           op_start=op_tok.byte_start, op_end=op_tok.byte_end)
        return left

    def mul_expr(self) -> n.Node:
        left = self.unary_expr()
        while self.peek().kind == "OP" and self.peek().text in MUL_OPS:
            op_tok = self.next()
            right = self.unary_expr()
            left = n.BinOp(left.start, right.end, left.line, op_tok.text, left, right,
                           op_start=op_tok.byte_start, op_end=op_tok.byte_end)
        return left

    def unary_expr(self) -> n.Node:
        tok = self.peek()
        if tok.kind == "OP" and tok.text in ("-", "!"):
            self.next()
            operand = self.unary_expr()
            return n.UnaryOp(tok.byte_start, operand.end, tok.line, tok.text, operand,
                             op_start=tok.byte_start, op_end=tok.byte_end)
        return self.postfix_expr()

    def postfix_expr(self) -> n.Node:
        expr = self.primary()
        while True:
            tok = self.peek()
            if tok.text == "(" and isinstance(expr, n.Name):
                self.next()
                args = []
                if not self.at(")"):
                    args.append(self.expression())
                    while self.at(","):
                        self.next()
                        args.append(self.expression())
                close = self.expect(")")
                expr = n.Call(expr.start, close.byte_end, expr.line,
                              expr.ident, args,
                              callee_start=expr.start, callee_end=expr.end)
            elif tok.text == "[":
                self.next()
                index = self.expression()
                close = self.expect("]")
                expr = n.IndexAccess(expr.start, close.byte_end, expr.line, expr, index)
            elif tok.text == ".":
                self.next()
                name_tok = self.expect_kind("IDENT")
                expr = n.FieldAccess(expr.start, name_tok.byte_end, expr.line,
                                     expr, name_tok.text)
            else:
                return expr

    def primary(self) -> n.Node:
        tok = self.next()
        if tok.kind == "INT":
            return n.IntLit(tok.byte_start, tok.byte_end, tok.line, int(tok.text))
        if tok.kind == "STRING":
            return n.StrLit(tok.byte_start, tok.byte_end, tok.line,
                            _decode_string(tok.text, tok.line))
        if tok.text == "true":
            return n.BoolLit(tok.byte_start, tok.byte_end, tok.line, True)
        if tok.text == "false":
            return n.BoolLit(tok.byte_start, tok.byte_end, tok.line, False)
        if tok.text == "null":
            return n.NullLit(tok.byte_start, tok.byte_end, tok.line)
        if tok.kind == "IDENT":
            return n.Name(tok.byte_start, tok.byte_end, tok.line, tok.text)
        if tok.text == "(":
            inner = self.expression()
            self.expect(")")
            return inner
        if tok.text == "[":
            items = []
            if not self.at("]"):
                items.append(self.expression())
                while self.at(","):
                    self.next()
                    items.append(self.expression())
            close = self.expect("]")
            return n.ListLit(tok.byte_start, close.byte_end, tok.line, items)
        if tok.text == "{":
            fields = []
            if not self.at("}"):
                fields.append(self._record_field())
                while self.at(","):
                    self.next()
                    fields.append(self._record_field())
            close = self.expect("}")
            return n.RecordLit(tok.byte_start, close.byte_end, tok.line, fields)
        raise ParseError(tok.line, f"unexpected token {tok.text!r}")

    def _record_field(self) -> tuple:
        name_tok = self.expect_kind("IDENT")
        self.expect(":")
        return (name_tok.text, self.expression())


def _decode_string(raw: str, line: int) -> str:
    body = raw[1:-1]
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            esc = body[i + 1]
            mapped = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc)
            if mapped is None:
                raise ParseError(line, f"unknown escape \\{esc}")
            out.append(mapped)
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def parse_program(text: str) -> n.Program:
    """Parse a full source unit. Raises ParseError with a 1-based line."""
    return _Parser(tokenize(text)).program()


def parse_expression(text: str) -> n.Node:
    """Parse a standalone expression (postcondition syntax checking)."""
    parser = _Parser(tokenize(text))
    expr = parser.expression()
    trailing = parser.peek()
    if trailing.kind != "EOF":
        raise ParseError(trailing.line, f"trailing input {trailing.text!r}")
    return expr
