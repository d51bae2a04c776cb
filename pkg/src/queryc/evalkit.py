"""Answer metrics and token accounting.

EM/Acc/F1 follow the usual extractive-QA conventions: answers are
normalized (lowercase, punctuation stripped, articles dropped, whitespace
collapsed) before comparison, and each metric takes the best score over
the gold aliases.  Aliases in raw gold strings are separated by ';'.

Token counting is a deliberately simple heuristic (word runs plus
standalone punctuation); pass any callable ``text -> int`` where a
model-specific tokenizer matters.
"""

from __future__ import annotations

import json
import re
import string
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

_ARTICLES = re.compile(r"\b(a|an|the)\b")
_PUNCT = set(string.punctuation)
_TOKEN = re.compile(r"[^\W_]+|[^\w\s]|_")


def normalize_answer(text: str) -> str:
    text = text.lower()
    text = "".join(ch for ch in text if ch not in _PUNCT)
    text = _ARTICLES.sub(" ", text)
    return " ".join(text.split())


def split_gold_aliases(gold: str) -> list[str]:
    """Split a raw gold string like "in Rome; Rome; Roma" into aliases."""
    return [part.strip() for part in gold.split(";") if part.strip()]


def em(prediction: str, golds: list[str]) -> int:
    """1 iff the normalized prediction equals some normalized gold."""
    norm = normalize_answer(prediction)
    return int(any(normalize_answer(g) == norm for g in golds))


def acc(prediction: str, golds: list[str]) -> int:
    """1 iff some normalized gold appears inside the normalized prediction."""
    norm = normalize_answer(prediction)
    return int(any(normalize_answer(g) in norm for g in golds))


def f1(prediction: str, golds: list[str]) -> float:
    """Best token-overlap F1 against any gold alias."""
    pred_tokens = normalize_answer(prediction).split()
    best = 0.0
    for gold in golds:
        gold_tokens = normalize_answer(gold).split()
        if not pred_tokens or not gold_tokens:
            score = float(pred_tokens == gold_tokens)
        else:
            common = Counter(pred_tokens) & Counter(gold_tokens)
            overlap = sum(common.values())
            if overlap == 0:
                score = 0.0
            else:
                precision = overlap / len(pred_tokens)
                recall = overlap / len(gold_tokens)
                score = 2 * precision * recall / (precision + recall)
        best = max(best, score)
    return best


def count_tokens(text: str) -> int:
    """Heuristic size of ``text``: word runs plus standalone punctuation."""
    return len(_TOKEN.findall(text))


@dataclass(frozen=True)
class TokenCounts:
    prompt: int = 0
    documents: int = 0
    response: int = 0

    def __add__(self, other: TokenCounts) -> TokenCounts:
        return TokenCounts(
            self.prompt + other.prompt,
            self.documents + other.documents,
            self.response + other.response,
        )

    @property
    def total(self) -> int:
        return self.prompt + self.documents + self.response

    def as_dict(self) -> dict:
        return {
            "prompt": self.prompt,
            "documents": self.documents,
            "response": self.response,
        }


@dataclass(frozen=True)
class MetricRow:
    question_id: str
    em: int
    acc: int
    f1: float
    tokens: TokenCounts


def score_row(question_id: str, prediction: str, golds: list[str],
              tokens: TokenCounts = TokenCounts()) -> MetricRow:
    """Score one prediction; each gold entry may bundle ';'-separated aliases."""
    aliases = [a for g in golds for a in split_gold_aliases(g)]
    return MetricRow(
        question_id,
        em(prediction, aliases),
        acc(prediction, aliases),
        f1(prediction, aliases),
        tokens,
    )


def aggregate_run(rows: list[MetricRow]) -> dict:
    """Mean metrics as percentages with one decimal, plus mean token cost."""
    if not rows:
        return {"count": 0, "em": 0.0, "acc": 0.0, "f1": 0.0, "mean_tokens": 0.0}
    n = len(rows)
    return {
        "count": n,
        "em": round(100.0 * sum(r.em for r in rows) / n, 1),
        "acc": round(100.0 * sum(r.acc for r in rows) / n, 1),
        "f1": round(100.0 * sum(r.f1 for r in rows) / n, 1),
        "mean_tokens": round(sum(r.tokens.total for r in rows) / n, 1),
    }


def load_eval_rows(path: str | Path) -> list[dict]:
    """Read a JSON-lines eval set of {"id", "question", "golds"} records.

    Rows may carry an optional precompiled "expression" so batches can run
    without a translation endpoint.
    """
    rows = []
    for line in Path(path).read_text("utf-8").splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        for field in ("id", "question", "golds"):
            if field not in rec:
                raise ValueError(f"eval row missing {field!r}: {line[:80]}")
        rows.append(rec)
    return rows
