"""Tokenizer for the fixture language.

Tokens carry byte offsets into the UTF-8 encoding of the source so that
downstream span bookkeeping and single-span rewrites are byte-exact even
for non-ASCII comments.
"""

from __future__ import annotations

from dataclasses import dataclass

from specmut.errors import ParseError

KEYWORDS = {
    "fn", "if", "else", "while", "for", "in", "return", "assert",
    "break", "continue", "true", "false", "null",
}

# Longest-first so that two-char operators win over their prefixes.
OPERATORS = [
    "==", "!=", "<=", ">=", "&&", "||", "+=", "-=", "*=", "/=",
    "<", ">", "=", "+", "-", "*", "/", "%", "!",
    "(", ")", "{", "}", "[", "]", ",", ";", ".", ":",
]


@dataclass(frozen=True)
class Token:
    kind: str        # IDENT, INT, STRING, OP, KEYWORD, DOC, EOF
    text: str        # exact source slice
    byte_start: int
    byte_end: int
    line: int

    @property
    def value(self) -> str:
        return self.text


def tokenize(text: str) -> list[Token]:
    """Tokenize source text; doc comments become DOC tokens, other comments vanish."""
    tokens: list[Token] = []
    i = 0           # char index
    b = 0           # byte index
    line = 1
    n = len(text)

    def advance(count: int) -> None:
        nonlocal i, b, line
        for _ in range(count):
            ch = text[i]
            b += len(ch.encode("utf-8"))
            if ch == "\n":
                line += 1
            i += 1

    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            advance(1)
            continue
        # comments
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                advance(1)
            continue
        if text.startswith("/*", i):
            is_doc = text.startswith("/**", i)
            start_b, start_line = b, line
            advance(2)
            while i < n and not text.startswith("*/", i):
                advance(1)
            if i >= n:
                raise ParseError(start_line, "unterminated block comment")
            advance(2)
            if is_doc:
                raw = text.encode("utf-8")[start_b:b].decode("utf-8")
                tokens.append(Token("DOC", raw, start_b, b, start_line))
            continue
        # string literal
        if ch == '"':
            start_b, start_line = b, line
            advance(1)
            while i < n and text[i] != '"':
                if text[i] == "\\":
                    if i + 1 >= n:
                        raise ParseError(start_line, "unterminated escape")
                    advance(2)
                elif text[i] == "\n":
                    raise ParseError(start_line, "newline in string literal")
                else:
                    advance(1)
            if i >= n:
                raise ParseError(start_line, "unterminated string literal")
            advance(1)
            raw = text.encode("utf-8")[start_b:b].decode("utf-8")
            tokens.append(Token("STRING", raw, start_b, b, start_line))
            continue
        # integer literal
        if ch.isdigit():
            start_b, start_line = b, line
            while i < n and text[i].isdigit():
                advance(1)
            raw = text.encode("utf-8")[start_b:b].decode("utf-8")
            tokens.append(Token("INT", raw, start_b, b, start_line))
            continue
        # identifier / keyword
        if ch.isalpha() or ch == "_":
            start_b, start_line = b, line
            while i < n and (text[i].isalnum() or text[i] == "_"):
                advance(1)
            raw = text.encode("utf-8")[start_b:b].decode("utf-8")
            kind = "KEYWORD" if raw in KEYWORDS else "IDENT"
            tokens.append(Token(kind, raw, start_b, b, start_line))
            continue
        # operators and punctuation
        for op in OPERATORS:
            if text.startswith(op, i):
                start_b, start_line = b, line
                advance(len(op))
                tokens.append(Token("OP", op, start_b, b, start_line))
                break
        else:
            raise ParseError(line, f"unexpected character {ch!r}")

    tokens.append(Token("EOF", "", b, b, line))
    return tokens
