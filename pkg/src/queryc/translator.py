"""Natural language to query expression, via a chat-completion backend.

A translation samples completions across a temperature ladder, compiles
and validates each candidate, and returns the first one that checks out;
nothing invalid ever leaves this module.  The same backend also powers
the training-data builder, which asks for chain-of-thought completions
and keeps only the pairs whose extracted expression compiles cleanly.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol

from .errors import (
    ExpressionError,
    NoValidExpression,
    ResponseFormatError,
    TransportError,
)
from .nodes import QueryNode
from .parser import parse
from .prompts import load_template, render
from .validator import ValidationReport, validate

log = logging.getLogger(__name__)

MAX_TOTAL_ATTEMPTS = 32

# drop reason for completions lacking the expression marker line
EXTRACTION_FAILED = "ExtractionFailed"

_MARKER = "compiled_expression ="


class CompletionClient(Protocol):
    def complete(self, messages: list[tuple[str, str]], temperature: float = 0.0,
                 max_tokens: int | None = None, timeout: float | None = None) -> str: ...


@dataclass(frozen=True)
class SamplingSchedule:
    """Temperature ladder for resampling, cheapest (deterministic) first."""

    temperatures: tuple[float, ...] = (0.0, 0.3, 0.7, 1.0)
    attempts_per_temperature: int = 2
    request_timeout: float = 60.0

    def __post_init__(self):
        object.__setattr__(self, "temperatures", tuple(self.temperatures))
        if not self.temperatures:
            raise ValueError("schedule needs at least one temperature")
        if any(t < 0 for t in self.temperatures):
            raise ValueError("temperatures must be non-negative")
        if self.attempts_per_temperature < 1:
            raise ValueError("attempts_per_temperature must be positive")
        if self.total_attempts > MAX_TOTAL_ATTEMPTS:
            raise ValueError(f"schedule exceeds {MAX_TOTAL_ATTEMPTS} total attempts")

    @property
    def total_attempts(self) -> int:
        return len(self.temperatures) * self.attempts_per_temperature

    def plan(self) -> Iterable[float]:
        for temperature in self.temperatures:
            for _ in range(self.attempts_per_temperature):
                yield temperature


@dataclass(frozen=True)
class Rejection:
    expression: str
    # why the candidate was turned down: a failed ValidationReport or the
    # ExpressionError the parser raised
    reason: ValidationReport | ExpressionError


@dataclass(frozen=True)
class TranslationResult:
    expression: str
    ast: QueryNode
    attempts_used: int
    rejected: tuple[Rejection, ...]


def render_system_prompt() -> str:
    """The fixed grammar-instruction system prompt, straight from the bundle."""
    return load_template("translator_system")


def clean_completion(text: str) -> str:
    """Reduce a noisy completion to its expression line.

    Drops markdown fences and keeps the last non-empty line; models often
    preface the expression with commentary.
    """
    lines = [line for line in text.splitlines() if not line.strip().startswith("```")]
    keep = [line.strip() for line in lines if line.strip()]
    return keep[-1] if keep else ""


def translate(query: str, schedule: SamplingSchedule | None = None, *,
              client: CompletionClient) -> TranslationResult:
    """Compile a natural-language query through the backend model.

    Walks the schedule in order, one request per attempt (the client
    handles transport retries), until a completion parses and validates.
    Raises :class:`NoValidExpression` with every rejection once the
    schedule is exhausted; transport errors propagate immediately.
    """
    schedule = schedule or SamplingSchedule()
    messages = [("system", render_system_prompt()), ("user", query)]
    rejected: list[Rejection] = []
    attempts = 0
    for temperature in schedule.plan():
        attempts += 1
        completion = client.complete(messages, temperature=temperature,
                                     timeout=schedule.request_timeout)
        expression = clean_completion(completion)
        try:
            tree = parse(expression)
        except ExpressionError as exc:
            rejected.append(Rejection(expression, exc))
            continue
        report = validate(tree)
        if report.valid:
            return TranslationResult(expression, tree, attempts, tuple(rejected))
        rejected.append(Rejection(expression, report))
    raise NoValidExpression(rejected)


def extract_compiled_expression(completion: str) -> str | None:
    """Pull the expression off the last "compiled_expression =" line."""
    expression = None
    for line in completion.splitlines():
        if _MARKER in line:
            candidate = line.split(_MARKER, 1)[1].strip().strip("`")
            if candidate:
                expression = candidate
    return expression


@dataclass(frozen=True)
class DroppedQuestion:
    question: str
    reason: str


@dataclass
class DataBuildReport:
    kept: int = 0
    dropped: int = 0
    out_path: str = ""
    drops: list[DroppedQuestion] = field(default_factory=list)


def build_training_pairs(questions: list[str], schedule: SamplingSchedule | None = None, *,
                         client: CompletionClient, out_path: str | Path) -> DataBuildReport:
    """Build a ⟨query, expression⟩ JSONL dataset from raw questions.

    One chain-of-thought completion per question, at the schedule's first
    temperature.  Questions whose completion has no expression line, or
    whose expression fails to compile or validate, are dropped with a
    reason; transport failures drop the question too, never the batch.
    """
    if not questions:
        raise ValueError("questions must be non-empty")
    schedule = schedule or SamplingSchedule()
    template = load_template("datagen")
    report = DataBuildReport(out_path=str(out_path))
    records = []
    for question in questions:
        prompt = render(template, question=question)
        try:
            completion = client.complete([("user", prompt)],
                                         temperature=schedule.temperatures[0],
                                         timeout=schedule.request_timeout)
        except (TransportError, ResponseFormatError) as exc:
            _drop(report, question, f"{type(exc).__name__}: {exc}")
            continue
        expression = extract_compiled_expression(completion)
        if expression is None:
            _drop(report, question, EXTRACTION_FAILED)
            continue
        try:
            tree = parse(expression)
        except ExpressionError as exc:
            _drop(report, question, f"parse: {exc}")
            continue
        result = validate(tree)
        if not result.valid:
            kinds = ", ".join(v.kind.value for v in result.violations)
            _drop(report, question, f"invalid: {kinds}")
            continue
        records.append({"query": question, "expression": expression})
        report.kept += 1
    lines = [json.dumps(r, ensure_ascii=False) for r in records]
    Path(out_path).write_text("\n".join(lines) + ("\n" if lines else ""), "utf-8")
    return report


def _drop(report: DataBuildReport, question: str, reason: str) -> None:
    log.warning("dropping %r: %s", question, reason)
    report.dropped += 1
    report.drops.append(DroppedQuestion(question, reason))
