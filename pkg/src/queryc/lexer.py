"""Tokenizer for query expression text.

Splits on the unescaped operators ``+``, ``*`` (``×`` is accepted as a
synonym), ``(`` and ``)``.  Everything else accumulates into TEXT tokens
with surrounding whitespace trimmed and interior whitespace kept verbatim.
A backslash escapes any of ``\\ + * ( ) { }`` to the literal character;
other escape pairs keep the backslash.  Spans are byte offsets into the
original input; for TEXT containing escapes, placeholder error positions
are reported relative to the unescaped lexeme and can drift a few bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, auto

from .errors import EmptyAtomic, MalformedPlaceholder, TrailingEscape
from .nodes import ESCAPABLE, extract_placeholders


class TokenKind(Enum):
    TEXT = auto()
    PLUS = auto()
    STAR = auto()
    LPAREN = auto()
    RPAREN = auto()


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    lexeme: str
    span: tuple[int, int]


_OPERATORS = {
    "+": TokenKind.PLUS,
    "*": TokenKind.STAR,
    "×": TokenKind.STAR,
    "(": TokenKind.LPAREN,
    ")": TokenKind.RPAREN,
}
_BINARY = frozenset((TokenKind.PLUS, TokenKind.STAR))


def tokenize(expr: str) -> list[Token]:
    """Tokenize ``expr``, consuming every character exactly once.

    Raises :class:`TrailingEscape` for a backslash at end of input,
    :class:`EmptyAtomic` where operators leave a zero-length operand
    between them, and :class:`MalformedPlaceholder` from scanning the
    braces of each TEXT lexeme.
    """
    tokens: list[Token] = []
    pieces: list[tuple[str, int, int]] = []  # (char, start byte, end byte)

    def flush() -> None:
        lo, hi = 0, len(pieces)
        while lo < hi and pieces[lo][0].isspace():
            lo += 1
        while hi > lo and pieces[hi - 1][0].isspace():
            hi -= 1
        if lo < hi:
            lexeme = "".join(p[0] for p in pieces[lo:hi])
            tokens.append(Token(TokenKind.TEXT, lexeme, (pieces[lo][1], pieces[hi - 1][2])))
        pieces.clear()

    i = 0
    offset = 0  # byte offset of expr[i]
    while i < len(expr):
        ch = expr[i]
        width = len(ch.encode("utf-8"))
        if ch == "\\":
            if i + 1 == len(expr):
                raise TrailingEscape("dangling escape at end of input", (offset, offset + 1))
            nxt = expr[i + 1]
            nxt_width = len(nxt.encode("utf-8"))
            if nxt in ESCAPABLE:
                pieces.append((nxt, offset, offset + 1 + nxt_width))
            else:
                # unknown escape: keep the backslash as literal text
                pieces.append(("\\", offset, offset + 1))
                pieces.append((nxt, offset + 1, offset + 1 + nxt_width))
            i += 2
            offset += 1 + nxt_width
            continue
        kind = _OPERATORS.get(ch)
        if kind is not None:
            flush()
            tokens.append(Token(kind, ch, (offset, offset + width)))
        else:
            pieces.append((ch, offset, offset + width))
        i += 1
        offset += width
    flush()

    _reject_empty_operands(tokens)
    _scan_braces(tokens)
    return tokens


def _reject_empty_operands(tokens: list[Token]) -> None:
    for a, b in zip(tokens, tokens[1:]):
        gap = (a.span[1], b.span[0])
        if a.kind in _BINARY and b.kind in _BINARY:
            raise EmptyAtomic("nothing between two operators", gap)
        if a.kind in _BINARY and b.kind is TokenKind.RPAREN:
            raise EmptyAtomic("operator just before ')'", gap)
        if a.kind is TokenKind.LPAREN and b.kind in _BINARY:
            raise EmptyAtomic("operator just after '('", gap)


def _scan_braces(tokens: list[Token]) -> None:
    for tok in tokens:
        if tok.kind is not TokenKind.TEXT:
            continue
        try:
            extract_placeholders(tok.lexeme)
        except MalformedPlaceholder as exc:
            span = exc.span or (0, 0)
            shifted = (tok.span[0] + span[0], tok.span[0] + span[1])
            raise MalformedPlaceholder(exc.message, shifted) from None
