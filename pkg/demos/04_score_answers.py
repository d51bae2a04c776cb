"""Score predicted answers the way extractive-QA benchmarks do.

Three metrics, all computed on normalized text (lowercase, punctuation
stripped, articles dropped):

  em    1 if the prediction equals a gold alias exactly
  acc   1 if some gold alias appears inside the prediction
  f1    token-overlap harmonic mean against the best alias

Run me:  python3 demos/04_score_answers.py
"""

from queryc import (
    TokenCounts,
    aggregate_run,
    count_tokens,
    normalize_answer,
    score_row,
    split_gold_aliases,
)

# Normalization makes "The Rome!" and "rome" compare equal.
print(repr(normalize_answer("The Rome!")))
print(repr(normalize_answer("  A   spaced,  out  reply ")))
print()

# Gold strings often bundle aliases with ';'. Every metric takes the best
# score over the aliases.
gold = "for the conclave in Rome; Rome; Roma"
print("aliases:", split_gold_aliases(gold))

rows = [
    score_row("q1", "Rome", [gold], TokenCounts(prompt=40, response=1)),
    score_row("q2", "He left for the conclave in Rome.", [gold],
              TokenCounts(prompt=52, documents=80, response=8)),
    score_row("q3", "Venice", [gold], TokenCounts(prompt=44, response=1)),
]
for row in rows:
    print(f"  {row.question_id}: em={row.em} acc={row.acc} f1={row.f1:.3f}"
          f" tokens={row.tokens.total}")
print()

# A partial-overlap example: two shared tokens out of four predicted and
# two gold gives precision 0.5, recall 1.0, f1 2/3.
row = score_row("partial", "james cameron born 1954", ["james cameron"])
print(f"partial overlap f1: {row.f1:.4f}")
print()

# Aggregates are percentages with one decimal, plus the mean token cost
# per question; handy as a one-line run summary.
print(aggregate_run(rows))
print()

# The token counter is a simple heuristic (word runs plus standalone
# punctuation); swap in a model tokenizer where it matters.
for text in ("Who directed Titanic?", "a+b", "snake_case"):
    print(f"  count_tokens({text!r}) = {count_tokens(text)}")
