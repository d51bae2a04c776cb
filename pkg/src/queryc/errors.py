"""Exception types shared across the compiler and runtime.

Surface-syntax errors carry a byte span ``(start, end)`` into the original
expression so callers can point at the offending region.  Runtime errors
raised while executing a tree carry the path of the node that failed.
"""

from __future__ import annotations


class ExpressionError(Exception):
    """Base class for lexical and syntactic errors in query expressions."""

    def __init__(self, message: str, span: tuple[int, int] | None = None):
        self.message = message
        self.span = span
        if span is not None:
            message = f"{message} (bytes {span[0]}..{span[1]})"
        super().__init__(message)


class MalformedPlaceholder(ExpressionError):
    """Unclosed ``{``, empty ``{}``, or a newline inside a placeholder."""


class EmptyAtomic(ExpressionError):
    """An operator or parenthesis boundary encloses no text."""


class TrailingEscape(ExpressionError):
    """The expression ends with a lone backslash."""


class UnbalancedParenthesis(ExpressionError):
    """A ``(`` without its ``)`` or a stray ``)``."""


class UnexpectedToken(ExpressionError):
    """A token that no production can start or continue with."""


class EmptyExpression(ExpressionError):
    """The input contains no tokens at all."""


class DepthExceeded(ExpressionError):
    """Parenthesis nesting went past the supported maximum."""


class SchemaViolation(Exception):
    """A portable AST document does not satisfy the node invariants."""


class UnboundPlaceholder(KeyError):
    """Substitution hit a placeholder with no binding for its name."""

    def __init__(self, name: str, node_path: tuple[int, ...] = ()):
        self.name = name
        self.node_path = node_path
        where = f" at node {list(node_path)}" if node_path else ""
        super().__init__(f"no binding for placeholder {{{name}}}{where}")


class ConfigError(Exception):
    """Missing or malformed runtime configuration."""


class TransportError(Exception):
    """Network or HTTP failure talking to a backend endpoint."""


class ResponseFormatError(Exception):
    """A backend answered, but not in the expected wire shape."""


class NoValidExpression(Exception):
    """Every sampled completion failed to compile to a valid tree.

    ``rejected`` preserves each attempt with the reason it was turned down.
    """

    def __init__(self, rejected: list):
        self.rejected = rejected
        super().__init__(
            f"no valid expression after {len(rejected)} attempts"
        )


class BackendFailure(Exception):
    """Base for executor-side backend errors; carries the failing node path."""

    def __init__(self, node_path: tuple[int, ...], cause: Exception):
        self.node_path = node_path
        self.cause = cause
        super().__init__(f"at node {list(node_path)}: {cause}")


class RetrieverFailure(BackendFailure):
    """The retriever raised while fetching documents for a leaf."""


class GeneratorFailure(BackendFailure):
    """The generator raised while producing an answer."""
