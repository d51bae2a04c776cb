"""queryc: compile, validate and execute structured search queries.

A query expression combines free-text questions with two operators:
``+`` runs sub-queries in parallel, ``*`` feeds answers from the left
side into ``{placeholder}`` slots on the right.  This package parses
such expressions into trees, checks that every placeholder can be
bound, and walks the tree against pluggable retrieval and generation
backends.

>>> from queryc import parse, validate
>>> tree = parse("Who wrote Dune? * When was {author} born?")
>>> validate(tree).valid
True
"""

from .clients import ChatCompletionClient, ChatGenerator, RemoteRetriever
from .config import AppConfig, load_config
from .errors import (
    BackendFailure,
    ConfigError,
    DepthExceeded,
    EmptyAtomic,
    EmptyExpression,
    ExpressionError,
    GeneratorFailure,
    MalformedPlaceholder,
    NoValidExpression,
    ResponseFormatError,
    RetrieverFailure,
    SchemaViolation,
    TrailingEscape,
    TransportError,
    UnbalancedParenthesis,
    UnboundPlaceholder,
    UnexpectedToken,
)
from .evalkit import (
    MetricRow,
    TokenCounts,
    acc,
    aggregate_run,
    count_tokens,
    em,
    f1,
    load_eval_rows,
    normalize_answer,
    score_row,
    split_gold_aliases,
)
from .executor import (
    Binding,
    ExecutionTrace,
    Generator,
    NodeResult,
    Retriever,
    derive_bindings,
    execute,
    substitute,
)
from .lexer import Token, TokenKind, tokenize
from .nodes import (
    NodeKind,
    QueryNode,
    atomic,
    classify_shape,
    complex_root,
    dependent,
    escape_text,
    extract_placeholders,
    from_portable,
    group,
    list_of,
    portable_dumps,
    portable_loads,
    render_tree,
    to_expression,
    to_portable,
    unbound_placeholders,
)
from .parser import MAX_NESTING, parse
from .retrieval import Document, LexicalIndex, index_corpus, load_corpus
from .translator import (
    Rejection,
    SamplingSchedule,
    TranslationResult,
    build_training_pairs,
    clean_completion,
    extract_compiled_expression,
    translate,
)
from .validator import ValidationReport, Violation, ViolationKind, validate

__version__ = "0.1.0"

__all__ = [
    "AppConfig",
    "BackendFailure",
    "Binding",
    "ChatCompletionClient",
    "ChatGenerator",
    "ConfigError",
    "DepthExceeded",
    "Document",
    "EmptyAtomic",
    "EmptyExpression",
    "ExecutionTrace",
    "ExpressionError",
    "Generator",
    "GeneratorFailure",
    "LexicalIndex",
    "MAX_NESTING",
    "MalformedPlaceholder",
    "MetricRow",
    "NoValidExpression",
    "NodeKind",
    "NodeResult",
    "QueryNode",
    "Rejection",
    "RemoteRetriever",
    "ResponseFormatError",
    "Retriever",
    "RetrieverFailure",
    "SamplingSchedule",
    "SchemaViolation",
    "Token",
    "TokenCounts",
    "TokenKind",
    "TrailingEscape",
    "TranslationResult",
    "TransportError",
    "UnbalancedParenthesis",
    "UnboundPlaceholder",
    "UnexpectedToken",
    "ValidationReport",
    "Violation",
    "ViolationKind",
    "acc",
    "aggregate_run",
    "atomic",
    "build_training_pairs",
    "classify_shape",
    "clean_completion",
    "complex_root",
    "count_tokens",
    "dependent",
    "derive_bindings",
    "em",
    "escape_text",
    "execute",
    "extract_compiled_expression",
    "extract_placeholders",
    "f1",
    "from_portable",
    "group",
    "index_corpus",
    "list_of",
    "load_config",
    "load_corpus",
    "load_eval_rows",
    "normalize_answer",
    "parse",
    "portable_dumps",
    "portable_loads",
    "render_tree",
    "score_row",
    "split_gold_aliases",
    "substitute",
    "to_expression",
    "to_portable",
    "tokenize",
    "translate",
    "unbound_placeholders",
    "validate",
]
