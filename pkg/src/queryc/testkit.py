"""Shared test assets: random trees, a naive validation oracle, scripted
backends, and the bundled fixture corpus.

Everything here is seeded and deterministic so tests can pin exact
outputs.  The oracle deliberately shares no code with the validator: it
enumerates root-to-leaf paths and replays each path's dependent edges to
recover the leaf's flag.
"""

from __future__ import annotations

import json
import random
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import httpx

from .clients import ChatCompletionClient
from .nodes import (
    NodeKind,
    QueryNode,
    atomic,
    complex_root,
    dependent,
    group,
    list_of,
)
from .prompts import data_path
from .retrieval import Document, load_corpus
from .validator import Violation, ViolationKind

_WORDS = (
    "find", "compare", "where", "when", "who", "review", "summarize",
    "origin", "latest", "cost", "nearby", "history", "caf\u00e9",
)
# tokens that force the printer to escape
_SPICE = ("2+2", "(draft)", "rate*time", "c:\\temp", "a+b")
_NAMES = ("x", "y", "item", "city", "person", "topic", "year")


# -- random trees --------------------------------------------------------------


def generate_random_ast(seed: int, max_depth: int = 6, max_width: int = 4) -> QueryNode:
    """A random valid tree of height at most ``max_depth``.

    Mirrors the grammar's inductive cases: leaves, dependent chains,
    lists, and parenthesized groups.  Leaves on the right side of a
    dependency get placeholders, everything else stays placeholder-free,
    so the result always validates.
    """
    rng = random.Random(seed)
    return complex_root(_gen_item(rng, max_depth - 1, max_width))


def generate_perturbed_ast(seed: int, max_depth: int = 6, max_width: int = 4) -> tuple[QueryNode, Violation]:
    """A tree made invalid by flipping one leaf, plus the expected violation.

    A placeholder-bearing leaf picked on the right of a ``*`` loses its
    placeholders (MissingDependency); a leaf with nothing before it gains
    one (ErroneousDependency).  Exactly one leaf changes, so the expected
    violation is the only one.
    """
    rng = random.Random(seed)
    base = complex_root(_gen_item(rng, max_depth - 1, max_width))
    leaves = _leaf_flags(base)
    path, flag, leaf = leaves[rng.randrange(len(leaves))]
    if flag == 1:
        stripped = _strip_placeholders(leaf.value)
        mutated = _replace_node(base, path, atomic(stripped))
        expected = Violation(path, ViolationKind.MISSING_DEPENDENCY, "injected")
    else:
        mutated = _replace_node(base, path, atomic(leaf.value + " {injected}"))
        expected = Violation(path, ViolationKind.ERRONEOUS_DEPENDENCY, "injected")
    return mutated, expected


def _gen_leaf(rng: random.Random, flag: int) -> QueryNode:
    words = [rng.choice(_WORDS) for _ in range(rng.randint(1, 4))]
    if rng.random() < 0.15:
        words.insert(rng.randrange(len(words) + 1), rng.choice(_SPICE))
    if flag == 1:
        for _ in range(rng.randint(1, 2)):
            words.insert(rng.randrange(len(words) + 1), "{%s}" % rng.choice(_NAMES))
    text = " ".join(words)
    if rng.random() < 0.25:
        text += "?"
    return atomic(text)


def _gen_dependent(rng: random.Random, budget: int, width: int) -> QueryNode:
    b = budget - 1
    roll = rng.random()
    if b >= 2 and roll < 0.35:
        left = _gen_dependent(rng, b, width)
    elif b >= 3 and roll < 0.55:
        left = _gen_group(rng, 0, b, width)
    else:
        left = _gen_leaf(rng, 0)
    if b >= 3 and rng.random() < 0.3:
        right = _gen_group(rng, 1, b, width)
    else:
        right = _gen_leaf(rng, 1)
    return dependent(left, right)


def _gen_group(rng: random.Random, flag: int, budget: int, width: int) -> QueryNode:
    b = budget - 2  # wrapper and inner list each take a level
    members = [_gen_member(rng, flag, b, width) for _ in range(rng.randint(1, width))]
    return group(list_of(members, allow_single=True))


def _gen_list(rng: random.Random, flag: int, budget: int, width: int) -> QueryNode:
    b = budget - 1
    members = [_gen_member(rng, flag, b, width) for _ in range(rng.randint(2, width))]
    return list_of(members)


def _gen_member(rng: random.Random, flag: int, budget: int, width: int) -> QueryNode:
    roll = rng.random()
    if budget >= 2 and roll < 0.35:
        return _gen_dependent(rng, budget, width)
    if budget >= 3 and roll < 0.5:
        return _gen_group(rng, flag, budget, width)
    return _gen_leaf(rng, flag)


def _gen_item(rng: random.Random, budget: int, width: int) -> QueryNode:
    if budget >= 2 and rng.random() < 0.35:
        return _gen_list(rng, 0, budget, width)
    return _gen_member(rng, 0, budget, width)


def _leaf_flags(root: QueryNode) -> list[tuple[tuple[int, ...], int, QueryNode]]:
    # generator-side bookkeeping of which leaves sit after a '*'
    out: list[tuple[tuple[int, ...], int, QueryNode]] = []

    def visit(node: QueryNode, flag: int, path: tuple[int, ...]) -> None:
        if node.kind is NodeKind.ATOMIC:
            if node.children:
                visit(node.children[0], flag, path + (0,))
            else:
                out.append((path, flag, node))
        elif node.kind is NodeKind.DEPENDENT:
            visit(node.children[0], 0, path + (0,))
            visit(node.children[1], 1, path + (1,))
        elif node.kind is NodeKind.LIST:
            for i, child in enumerate(node.children):
                visit(child, flag, path + (i,))
        else:
            visit(node.children[0], 0, path + (0,))

    visit(root, 0, ())
    return out


def _strip_placeholders(text: str) -> str:
    out, i = [], 0
    while i < len(text):
        if text[i] == "{":
            end = text.find("}", i + 1)
            out.append(text[i + 1 : end])
            i = end + 1
        else:
            out.append(text[i])
            i += 1
    return "".join(out)


def _replace_node(node: QueryNode, path: tuple[int, ...], new: QueryNode) -> QueryNode:
    if not path:
        return new
    kids = list(node.children)
    kids[path[0]] = _replace_node(kids[path[0]], path[1:], new)
    if node.kind is NodeKind.ATOMIC:
        return group(kids[0])
    if node.kind is NodeKind.DEPENDENT:
        return dependent(kids[0], kids[1])
    if node.kind is NodeKind.LIST:
        return list_of(kids, allow_single=len(kids) == 1)
    return complex_root(kids[0])


# -- independent oracle ---------------------------------------------------------


def oracle_validate(root: QueryNode) -> bool:
    """Naive reimplementation of the dependency rule for cross-checking.

    Enumerates every root-to-leaf path, replays the path's edges (only
    dependent edges move the flag: left resets 0, right sets 1), and
    demands that flagged leaves have placeholders and unflagged ones do
    not.
    """
    for edges, leaf in _enumerate_paths(root):
        flag = 0
        for kind, index in edges:
            if kind is NodeKind.DEPENDENT:
                flag = 1 if index == 1 else 0
        if (flag == 1) != bool(leaf.placeholders):
            return False
    return True


def _enumerate_paths(node: QueryNode):
    if not node.children:
        return [([], node)]
    paths = []
    for i, child in enumerate(node.children):
        for edges, leaf in _enumerate_paths(child):
            paths.append(([(node.kind, i)] + edges, leaf))
    return paths


# -- scripted backends ----------------------------------------------------------


@dataclass
class GeneratorCall:
    prompt: str
    reply: str
    started: float
    finished: float


class ScriptedGenerator:
    """Generator that answers from a (pattern, completion) script.

    The first pattern contained in the flattened prompt wins; unmatched
    prompts get the default reply.  Every call is logged with start and
    finish stamps so tests can assert ordering and overlap, and an
    optional latency simulates a slow model.
    """

    concurrency_safe = True

    def __init__(self, script: Mapping[str, str] | list | None = None,
                 default: str = "UNKNOWN", latency: float = 0.0):
        if isinstance(script, Mapping):
            items = list(script.items())
        else:
            items = [tuple(entry) for entry in (script or [])]
        self.script: list[tuple[str, str]] = items
        self.default = default
        self.latency = latency
        self.calls: list[GeneratorCall] = []
        self._lock = threading.Lock()

    def generate(self, messages: list[tuple[str, str]]) -> str:
        prompt = "\n".join(content for _, content in messages)
        started = time.perf_counter()
        if self.latency:
            time.sleep(self.latency)
        reply = next((completion for pattern, completion in self.script if pattern in prompt),
                     self.default)
        finished = time.perf_counter()
        with self._lock:
            self.calls.append(GeneratorCall(prompt, reply, started, finished))
        return reply


def scripted_generator(script: Mapping[str, str], default: str = "UNKNOWN",
                       latency: float = 0.0) -> ScriptedGenerator:
    return ScriptedGenerator(script, default, latency)


@dataclass
class RetrieverCall:
    query: str
    started: float
    finished: float


class TimedRetriever:
    """Wraps any retriever with a call log and optional latency."""

    def __init__(self, inner, latency: float = 0.0):
        self.inner = inner
        self.latency = latency
        self.concurrency_safe = getattr(inner, "concurrency_safe", True)
        self.calls: list[RetrieverCall] = []
        self._lock = threading.Lock()

    def retrieve(self, query: str, k: int) -> list[Document]:
        started = time.perf_counter()
        if self.latency:
            time.sleep(self.latency)
        documents = self.inner.retrieve(query, k)
        finished = time.perf_counter()
        with self._lock:
            self.calls.append(RetrieverCall(query, started, finished))
        return documents


class ScriptedEndpoint:
    """In-process chat-completion service for wire-level tests.

    Replays ``completions`` in request order (repeating the last once the
    script runs out) through an ``httpx.MockTransport``, so client code
    exercises the real request/response path without any network.
    Decoded request payloads are kept for assertions.
    """

    def __init__(self, completions: list[str]):
        if not completions:
            raise ValueError("need at least one completion")
        self.completions = list(completions)
        self.requests: list[dict] = []

    def _handle(self, request: httpx.Request) -> httpx.Response:
        self.requests.append(json.loads(request.content.decode("utf-8")))
        reply = self.completions[min(len(self.requests) - 1, len(self.completions) - 1)]
        return httpx.Response(200, json={"choices": [{"message": {"content": reply}}]})

    @property
    def transport(self) -> httpx.MockTransport:
        return httpx.MockTransport(self._handle)

    def client(self, model: str = "scripted") -> ChatCompletionClient:
        return ChatCompletionClient("http://scripted.invalid/v1/chat/completions",
                                    model, transport=self.transport)


# -- fixtures -------------------------------------------------------------------


def mini_corpus() -> list[Document]:
    """The bundled 12-document corpus used by offline runs and tests."""
    return load_corpus(data_path("mini_corpus.jsonl"))


def script_from_json(text: str) -> ScriptedGenerator:
    doc = json.loads(text)
    return ScriptedGenerator(doc["patterns"], doc.get("default", "UNKNOWN"),
                             doc.get("latency", 0.0))


def load_script(path: str | Path) -> ScriptedGenerator:
    """Load a {"patterns": [[pattern, completion]...], "default": ...} file."""
    return script_from_json(Path(path).read_text("utf-8"))


def chain_demo_generator() -> ScriptedGenerator:
    """Scripted generator for the bundled three-step chain example."""
    return script_from_json(data_path("chain3_script.json").read_text("utf-8"))


class StepClock:
    """Deterministic clock: each call returns the next multiple of ``step``."""

    def __init__(self, step: float = 0.001):
        self.step = step
        self._now = 0.0
        self._lock = threading.Lock()

    def __call__(self) -> float:
        with self._lock:
            now = self._now
            self._now += self.step
            return now
