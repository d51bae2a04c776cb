"""Corpus documents and a small in-memory lexical retriever.

The index is a deliberately simple offline stand-in for a real dense
retriever: case-folded keyword overlap, title hits worth double, ties
broken by ascending document id.  Deterministic by construction.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from pathlib import Path

_WORD = re.compile(r"[^\W_]+")


@dataclass(frozen=True)
class Document:
    id: str
    title: str
    content: str
    score: float = 0.0


def load_corpus(path: str | Path) -> list[Document]:
    """Read a JSON-lines corpus of {"id", "title", "content"} records."""
    docs = []
    for line in Path(path).read_text("utf-8").splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        docs.append(Document(rec["id"], rec["title"], rec["content"]))
    return docs


def _terms(text: str) -> frozenset[str]:
    return frozenset(_WORD.findall(text.casefold()))


class LexicalIndex:
    """Keyword-overlap retriever over an in-memory document list.

    A query term scores 2 if it appears in a document's title, else 1 if
    it appears in the content, else 0.  Every document is rankable, so
    asking for more than the corpus returns the whole corpus sorted.
    """

    concurrency_safe = True

    def __init__(self, documents: list[Document]):
        if not documents:
            raise ValueError("empty corpus")
        ids = [d.id for d in documents]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate document ids")
        self._docs = [
            (d, _terms(d.title), _terms(d.content)) for d in documents
        ]

    def __len__(self) -> int:
        return len(self._docs)

    def retrieve(self, query: str, k: int) -> list[Document]:
        if k < 1:
            raise ValueError("k must be positive")
        terms = _terms(query)
        scored = []
        for doc, title_terms, content_terms in self._docs:
            score = sum(
                2 if t in title_terms else 1 if t in content_terms else 0
                for t in terms
            )
            scored.append((-score, doc.id, doc))
        scored.sort(key=lambda item: item[:2])
        return [replace(doc, score=float(-neg)) for neg, _, doc in scored[:k]]


def index_corpus(documents: list[Document]) -> LexicalIndex:
    """Build the lexical index; kept as a function for symmetry with clients."""
    return LexicalIndex(documents)
