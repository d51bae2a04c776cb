"""Recursive interpreter for compiled query trees.

Walks a validated tree depth-first.  An atomic leaf substitutes its
placeholders, retrieves top-k documents, and generates an answer from
them.  A dependent node runs its left side, derives one binding per
placeholder the right side references, then runs the right side under
those bindings.  List siblings share the inherited bindings and may run
concurrently up to a configured width; they never see each other's
derived values.  A complex root finishes with one synthesis generation
over the original question and every (sub-question, answer) pair.

Every node leaves a :class:`NodeResult` in the trace, keyed by its child
index path from the root; trace totals are the exact componentwise sum
of the per-node token counts.  Backends plug in via the
:class:`Retriever` and :class:`Generator` protocols; an implementation
that is not safe for concurrent calls can set ``concurrency_safe =
False`` and the executor degrades to serial lists.
"""

from __future__ import annotations

import json
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Mapping, Protocol

from .errors import GeneratorFailure, RetrieverFailure, UnboundPlaceholder
from .evalkit import TokenCounts, count_tokens
from .nodes import NodeKind, QueryNode
from .prompts import load_template, render
from .retrieval import Document


class Retriever(Protocol):
    def retrieve(self, query: str, k: int) -> list[Document]: ...


class Generator(Protocol):
    def generate(self, messages: list[tuple[str, str]]) -> str: ...


@dataclass(frozen=True)
class Binding:
    name: str
    value: str


@dataclass(frozen=True)
class NodeResult:
    substituted_query: str
    documents: tuple[Document, ...]
    answer: str
    bindings_out: tuple[Binding, ...]
    token_counts: TokenCounts
    wall_time: float


@dataclass(frozen=True)
class ExecutionTrace:
    nodes: dict[tuple[int, ...], NodeResult]
    final_answer: str
    totals: TokenCounts

    def to_json(self, pretty: bool = True) -> str:
        doc = {
            "final_answer": self.final_answer,
            "totals": self.totals.as_dict(),
            "nodes": [
                {
                    "path": list(path),
                    "substituted_query": r.substituted_query,
                    "documents": [
                        {"id": d.id, "title": d.title, "content": d.content, "score": d.score}
                        for d in r.documents
                    ],
                    "answer": r.answer,
                    "bindings_out": [{"name": b.name, "value": b.value} for b in r.bindings_out],
                    "token_counts": r.token_counts.as_dict(),
                    "wall_time": r.wall_time,
                }
                for path, r in sorted(self.nodes.items())
            ],
        }
        if pretty:
            return json.dumps(doc, indent=2, ensure_ascii=False)
        return json.dumps(doc, separators=(",", ":"), ensure_ascii=False)


_PLACEHOLDER = re.compile(r"\{([^{}\n]+)\}")


def _binding_table(bindings) -> dict[str, str]:
    if isinstance(bindings, Mapping):
        return dict(bindings)
    return {b.name: b.value for b in bindings}


def substitute(text: str, bindings) -> str:
    """Replace every ``{name}`` in ``text`` with its bound value.

    ``bindings`` is a mapping or a list of :class:`Binding`.  Values are
    inserted verbatim in a single pass (they are never re-scanned).
    Raises :class:`UnboundPlaceholder` for a name with no binding.
    """
    table = _binding_table(bindings)

    def repl(match: re.Match) -> str:
        name = match.group(1)
        if name not in table:
            raise UnboundPlaceholder(name)
        return table[name]

    return _PLACEHOLDER.sub(repl, text)


def _loose_substitute(text: str, table: dict[str, str]) -> str:
    # best-effort view for interior nodes; unknown names stay as-is
    return _PLACEHOLDER.sub(lambda m: table.get(m.group(1), m.group(0)), text)


def derive_bindings(left_result, placeholder_names: list[str], generator: Generator,
                    *, template: str | None = None) -> list[Binding]:
    """Turn a finished left side into one binding per placeholder name.

    ``left_result`` is a single :class:`NodeResult` or, when the left side
    finished as a list, that list's child results in order.  Three rules,
    first match wins per call:

    a. a list result with exactly one child per name binds child answers
       to names in order, no generator involved;
    b. otherwise the generator is asked to extract each name's value from
       the left answer;
    c. an empty extraction falls back to the full left answer text.
    """
    names = list(placeholder_names)
    if not names:
        raise ValueError("placeholder_names must be non-empty")
    if isinstance(left_result, NodeResult):
        question, answer = left_result.substituted_query, left_result.answer
    else:
        results = list(left_result)
        if len(results) == len(names):
            return [Binding(n, r.answer) for n, r in zip(names, results)]
        question = "\n".join(r.substituted_query for r in results)
        answer = "\n".join(r.answer for r in results)
    text = template if template is not None else load_template("binding_extract")
    bindings = []
    for name in names:
        prompt = render(text, name=name, question=question, answer=answer)
        try:
            reply = generator.generate([("user", prompt)])
        except GeneratorFailure:
            raise
        except Exception as exc:
            raise GeneratorFailure((), exc) from exc
        value = reply.strip()
        bindings.append(Binding(name, value if value else answer))
    return bindings


class _CountingGenerator:
    """Wraps a generator, accumulating token costs of every call."""

    def __init__(self, inner: Generator, counter: Callable[[str], int]):
        self.inner = inner
        self.counter = counter
        self.counts = TokenCounts()

    def generate(self, messages: list[tuple[str, str]]) -> str:
        prompt_tokens = sum(self.counter(content) for _, content in messages)
        reply = self.inner.generate(messages)
        self.counts = self.counts + TokenCounts(prompt=prompt_tokens, response=self.counter(reply))
        return reply


def execute(root: QueryNode, retriever: Retriever, generator: Generator,
            k: int = 3, parallelism: int = 1, *,
            question: str | None = None,
            templates: Mapping[str, str] | None = None,
            token_counter: Callable[[str], int] = count_tokens,
            clock: Callable[[], float] = time.perf_counter) -> ExecutionTrace:
    """Run a validated tree against the given backends.

    ``question`` is the original natural-language question used by the
    final synthesis step; it defaults to the root's expression text.
    ``templates`` may override the bundled ``leaf_answer``,
    ``binding_extract`` and ``synthesis`` prompt texts.  ``clock`` exists
    so tests can inject a deterministic time source.  The synthesis step
    only happens for a Complex root; a bare subtree simply returns its
    own aggregate answer.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if parallelism < 1:
        raise ValueError("parallelism must be positive")
    width = parallelism
    if not getattr(retriever, "concurrency_safe", True) or not getattr(generator, "concurrency_safe", True):
        width = 1
    prompt_texts = {name: load_template(name) for name in ("leaf_answer", "binding_extract", "synthesis")}
    if templates:
        prompt_texts.update(templates)
    rt = _Runtime(retriever, generator, k, width, prompt_texts, token_counter, clock)

    started = clock()
    if root.kind is NodeKind.COMPLEX:
        _, nodes = rt.run(root.children[0], (0,), {})
        final_answer, synthesis_result = rt.synthesize(root, question or root.value, nodes, started)
        nodes[()] = synthesis_result
    else:
        outcome, nodes = rt.run(root, (), {})
        final_answer = outcome.answer

    ordered = {path: nodes[path] for path in sorted(nodes)}
    totals = TokenCounts()
    for result in ordered.values():
        totals = totals + result.token_counts
    return ExecutionTrace(ordered, final_answer, totals)


@dataclass
class _Outcome:
    answer: str
    # child results when the node finished as a list, for order-matched
    # binding derivation downstream; None for plain leaves
    results: list[NodeResult] | None


class _Runtime:
    def __init__(self, retriever, generator, k, width, templates, counter, clock):
        self.retriever = retriever
        self.generator = generator
        self.k = k
        self.width = width
        self.templates = templates
        self.counter = counter
        self.clock = clock

    def run(self, node: QueryNode, path: tuple[int, ...], bindings: dict[str, str]):
        if node.kind is NodeKind.ATOMIC:
            if node.children:
                return self._group(node, path, bindings)
            return self._leaf(node, path, bindings)
        if node.kind is NodeKind.DEPENDENT:
            return self._dependent(node, path, bindings)
        if node.kind is NodeKind.LIST:
            return self._list(node, path, bindings)
        raise ValueError("Complex nodes may only appear at the root")

    def _generate(self, prompt: str, path: tuple[int, ...]) -> str:
        try:
            return self.generator.generate([("user", prompt)])
        except Exception as exc:
            raise GeneratorFailure(path, exc) from exc

    def _leaf(self, node, path, bindings):
        start = self.clock()
        try:
            query = substitute(node.value, bindings)
        except UnboundPlaceholder as exc:
            raise UnboundPlaceholder(exc.name, path) from None
        try:
            documents = self.retriever.retrieve(query, self.k)
        except Exception as exc:
            raise RetrieverFailure(path, exc) from exc
        doc_block = "\n".join(f"[{d.id}] {d.title}: {d.content}" for d in documents)
        prompt = render(self.templates["leaf_answer"], documents=doc_block, question=query)
        answer = self._generate(prompt, path)
        counts = TokenCounts(
            prompt=self.counter(render(self.templates["leaf_answer"], documents="", question=query)),
            documents=self.counter(doc_block),
            response=self.counter(answer),
        )
        result = NodeResult(query, tuple(documents), answer, (), counts, self.clock() - start)
        return _Outcome(answer, None), {path: result}

    def _group(self, node, path, bindings):
        start = self.clock()
        outcome, nodes = self.run(node.children[0], path + (0,), bindings)
        nodes[path] = NodeResult(
            _loose_substitute(node.value, bindings), (), outcome.answer, (),
            TokenCounts(), self.clock() - start,
        )
        return _Outcome(outcome.answer, outcome.results), nodes

    def _list(self, node, path, bindings):
        start = self.clock()
        jobs = list(enumerate(node.children))
        if self.width > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=min(self.width, len(jobs))) as pool:
                futures = [pool.submit(self.run, child, path + (i,), bindings) for i, child in jobs]
                outcomes = [future.result() for future in futures]
        else:
            outcomes = [self.run(child, path + (i,), bindings) for i, child in jobs]
        nodes: dict[tuple[int, ...], NodeResult] = {}
        for _, fragment in outcomes:
            nodes.update(fragment)
        answer = "\n".join(outcome.answer for outcome, _ in outcomes)
        nodes[path] = NodeResult(
            _loose_substitute(node.value, bindings), (), answer, (),
            TokenCounts(), self.clock() - start,
        )
        child_results = [nodes[path + (i,)] for i, _ in jobs]
        return _Outcome(answer, child_results), nodes

    def _dependent(self, node, path, bindings):
        start = self.clock()
        left, right = node.children
        left_outcome, nodes = self.run(left, path + (0,), bindings)
        names = right.placeholders
        extraction_costs = TokenCounts()
        derived: list[Binding] = []
        if names:
            counting = _CountingGenerator(self.generator, self.counter)
            left_arg = left_outcome.results if left_outcome.results is not None else nodes[path + (0,)]
            try:
                derived = derive_bindings(
                    left_arg, list(names), counting,
                    template=self.templates["binding_extract"],
                )
            except GeneratorFailure as exc:
                raise GeneratorFailure(path, exc.cause) from exc.cause
            extraction_costs = counting.counts
            nodes[path + (0,)] = replace(nodes[path + (0,)], bindings_out=tuple(derived))
        merged = dict(bindings)
        merged.update((b.name, b.value) for b in derived)
        right_outcome, right_nodes = self.run(right, path + (1,), merged)
        nodes.update(right_nodes)
        nodes[path] = NodeResult(
            _loose_substitute(node.value, bindings), (), right_outcome.answer, (),
            extraction_costs, self.clock() - start,
        )
        return _Outcome(right_outcome.answer, right_outcome.results), nodes

    def synthesize(self, root, question, nodes, started):
        pairs = []
        for path, node in root.walk():
            if node.kind is NodeKind.ATOMIC and not node.children:
                result = nodes[path]
                pairs.append(f"Sub-question: {result.substituted_query}\nAnswer: {result.answer}")
        prompt = render(self.templates["synthesis"], question=question, subqa="\n\n".join(pairs))
        answer = self._generate(prompt, ())
        counts = TokenCounts(prompt=self.counter(prompt), response=self.counter(answer))
        return answer, NodeResult(question, (), answer, (), counts, self.clock() - started)
