from __future__ import annotations

import enum
from dataclasses import dataclass

from .ast import Loc

KEYWORDS = frozenset({
    "data", "mutable", "val", "rec", "and", "fun", "let", "in", "match",
    "with", "if", "then", "else", "begin", "end", "consumes",
})

# Longest first so that "<-" wins over "<".
PUNCTUATION = (
    "->", "<-", "<=", ">=",
    "(", ")", "[", "]", "{", "}", ",", ";", ":", ".", "=", "|", "@", "*",
    "<", ">",
)

_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", '"': '"'}


class TokenKind(enum.Enum):
    KEYWORD = "keyword"
    IDENT = "identifier"
    CIDENT = "capitalized-identifier"
    INT = "integer"
    STRING = "string"
    PUNCT = "punctuation"
    EOF = "end of input"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    loc: Loc

    @property
    def value(self):
        if self.kind is TokenKind.INT:
            return int(self.text)
        if self.kind is TokenKind.STRING:
            return _unescape(self.text)
        return self.text

    def is_(self, kind, text=None) -> bool:
        return self.kind is kind and (text is None or self.text == text)

    def __repr__(self):
        return f"Token({self.kind.name}, {self.text!r}, {self.loc})"


class LexError(Exception):
    def __init__(self, loc: Loc, message: str):
        super().__init__(f"{loc}: {message}")
        self.loc = loc
        self.message = message


def _unescape(text: str) -> str:
    body = text[1:-1]
    out = []
    i = 0
    while i < len(body):
        c = body[i]
        if c == "\\":
            out.append(_ESCAPES[body[i + 1]])
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def lex(source: str) -> list[Token]:
    """Split ``source`` into tokens. ``(* ... *)`` comments nest."""
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(source)

    def advance(k: int):
        nonlocal i, line, col
        for _ in range(k):
            if source[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = source[i]
        start = Loc(line, col)
        if c in " \t\r\n":
            advance(1)
        elif source.startswith("(*", i):
            depth = 0
            while True:
                if i >= n:
                    raise LexError(start, "unterminated comment")
                if source.startswith("(*", i):
                    depth += 1
                    advance(2)
                elif source.startswith("*)", i):
                    depth -= 1
                    advance(2)
                    if depth == 0:
                        break
                else:
                    advance(1)
        elif c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            if text in KEYWORDS:
                kind = TokenKind.KEYWORD
            elif text[0].isupper():
                kind = TokenKind.CIDENT
            else:
                kind = TokenKind.IDENT
            tokens.append(Token(kind, text, start))
            advance(j - i)
        elif c.isdigit() or (c == "-" and i + 1 < n and source[i + 1].isdigit()):
            j = i + 1
            while j < n and source[j].isdigit():
                j += 1
            tokens.append(Token(TokenKind.INT, source[i:j], start))
            advance(j - i)
        elif c == '"':
            j = i + 1
            while True:
                if j >= n or source[j] == "\n":
                    raise LexError(start, "unterminated string literal")
                if source[j] == "\\":
                    if j + 1 >= n or source[j + 1] not in _ESCAPES:
                        raise LexError(start, "bad escape in string literal")
                    j += 2
                elif source[j] == '"':
                    break
                else:
                    j += 1
            tokens.append(Token(TokenKind.STRING, source[i:j + 1], start))
            advance(j + 1 - i)
        else:
            for p in PUNCTUATION:
                if source.startswith(p, i):
                    tokens.append(Token(TokenKind.PUNCT, p, start))
                    advance(len(p))
                    break
            else:
                raise LexError(start, f"illegal character {c!r}")
    return tokens


def eof_token(tokens: list[Token]) -> Token:
    # Anchored on the last real token so error locations stay inside the text.
    loc = tokens[-1].loc if tokens else Loc(1, 1)
    return Token(TokenKind.EOF, "", loc)
