"""Recursive-descent parser from expression text to a query tree.

``*`` binds tighter than ``+``, so ``a * b + c`` is a list whose first
entry is the chain ``a * b``.  Chains are left-associative and kept
binary; ``+`` siblings flatten into a single list node.  A parenthesized
group parses to an atomic node wrapping a list, which is how a whole
sub-list takes the place of a single query.  The finished tree always
gets a single complex root.
"""

from __future__ import annotations

from .errors import (
    DepthExceeded,
    EmptyExpression,
    UnbalancedParenthesis,
    UnexpectedToken,
)
from .lexer import Token, TokenKind, tokenize
from .nodes import QueryNode, atomic, complex_root, dependent, group, list_of

MAX_NESTING = 64


class _Cursor:
    __slots__ = ("tokens", "pos", "end")

    def __init__(self, tokens: list[Token], end: int):
        self.tokens = tokens
        self.pos = 0
        self.end = end  # byte length of the input, for end-of-input spans

    def peek(self) -> Token | None:
        if self.pos < len(self.tokens):
            return self.tokens[self.pos]
        return None

    def take(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok


def parse(expr: str) -> QueryNode:
    """Compile ``expr`` to its tree; the root is always a Complex node.

    Lexical errors propagate from :func:`tokenize`.  Syntax errors raise
    :class:`UnexpectedToken`, :class:`UnbalancedParenthesis`,
    :class:`EmptyExpression`, or :class:`DepthExceeded`, each carrying a
    byte span into ``expr``.
    """
    tokens = tokenize(expr)
    if not tokens:
        raise EmptyExpression("expression contains no queries")
    cur = _Cursor(tokens, len(expr.encode("utf-8")))
    items = _parse_items(cur, depth=0)
    leftover = cur.peek()
    if leftover is not None:
        if leftover.kind is TokenKind.RPAREN:
            raise UnbalancedParenthesis("unmatched ')'", leftover.span)
        raise UnexpectedToken(f"unexpected {leftover.lexeme!r}", leftover.span)
    if len(items) == 1:
        return complex_root(items[0])
    return complex_root(list_of(items))


def _parse_items(cur: _Cursor, depth: int) -> list[QueryNode]:
    items = [_parse_dependent(cur, depth)]
    while (tok := cur.peek()) is not None and tok.kind is TokenKind.PLUS:
        cur.take()
        items.append(_parse_dependent(cur, depth))
    return items


def _parse_dependent(cur: _Cursor, depth: int) -> QueryNode:
    node = _parse_atomic(cur, depth)
    while (tok := cur.peek()) is not None and tok.kind is TokenKind.STAR:
        cur.take()
        node = dependent(node, _parse_atomic(cur, depth))
    return node


def _parse_atomic(cur: _Cursor, depth: int) -> QueryNode:
    tok = cur.peek()
    if tok is None:
        raise UnexpectedToken("expected a query, found end of input", (cur.end, cur.end))
    if tok.kind is TokenKind.TEXT:
        cur.take()
        return atomic(tok.lexeme)
    if tok.kind is TokenKind.LPAREN:
        if depth + 1 > MAX_NESTING:
            raise DepthExceeded(f"parentheses nested deeper than {MAX_NESTING}", tok.span)
        cur.take()
        items = _parse_items(cur, depth + 1)
        closing = cur.peek()
        if closing is None:
            raise UnbalancedParenthesis("unclosed '('", tok.span)
        if closing.kind is not TokenKind.RPAREN:
            raise UnexpectedToken(f"unexpected {closing.lexeme!r}", closing.span)
        cur.take()
        return group(list_of(items, allow_single=True))
    if tok.kind is TokenKind.RPAREN:
        if depth == 0:
            raise UnbalancedParenthesis("unmatched ')'", tok.span)
        raise UnexpectedToken("expected a query before ')'", tok.span)
    raise UnexpectedToken(f"expression may not start with {tok.lexeme!r}", tok.span)
