"""Translation loop: sampling schedule, rejection handling, data builder."""

from __future__ import annotations

import json

import pytest

from queryc import (
    ExpressionError,
    NoValidExpression,
    SamplingSchedule,
    ValidationReport,
    clean_completion,
    extract_compiled_expression,
    parse,
    translate,
    validate,
)
from queryc.translator import EXTRACTION_FAILED, build_training_pairs, render_system_prompt
from queryc.testkit import ScriptedEndpoint

FANOUT = ("What is JK. Rowling's most popular book? * (Find an introduction to {book}"
          " + Find reviews of {book} + Does the local library have {book}?)")


# ----------------------------------------------------------------- schedule

def test_default_schedule_shape():
    schedule = SamplingSchedule()
    assert schedule.temperatures == (0.0, 0.3, 0.7, 1.0)
    assert schedule.attempts_per_temperature == 2
    assert schedule.total_attempts == 8
    assert list(schedule.plan()) == [0.0, 0.0, 0.3, 0.3, 0.7, 0.7, 1.0, 1.0]


def test_schedule_rejects_nonsense():
    with pytest.raises(ValueError):
        SamplingSchedule(temperatures=())
    with pytest.raises(ValueError):
        SamplingSchedule(temperatures=(-0.1,))
    with pytest.raises(ValueError):
        SamplingSchedule(attempts_per_temperature=0)
    with pytest.raises(ValueError):
        SamplingSchedule(temperatures=(0.0,) * 11, attempts_per_temperature=3)


# ------------------------------------------------------------------ hygiene

def test_clean_completion_takes_last_line():
    assert clean_completion("thinking...\n\na * b uses {x}\n") == "a * b uses {x}"


def test_clean_completion_drops_fences():
    assert clean_completion("```\na * {x} b\n```") == "a * {x} b"
    assert clean_completion("```text\nq\n```\n") == "q"


def test_clean_completion_empty():
    assert clean_completion("") == ""
    assert clean_completion("```\n```") == ""


# ---------------------------------------------------------------- translate

def test_first_attempt_success():
    endpoint = ScriptedEndpoint([FANOUT])
    with endpoint.client() as client:
        result = translate("Tell me about JK Rowling's most popular book.",
                           client=client)
    assert result.expression == FANOUT
    assert result.attempts_used == 1
    assert result.rejected == ()
    assert validate(result.ast).valid
    assert result.ast == parse(FANOUT)


def test_wire_payload_shape():
    endpoint = ScriptedEndpoint([FANOUT])
    with endpoint.client(model="expr-3b") as client:
        translate("a question", client=client)
    payload = endpoint.requests[0]
    assert payload["model"] == "expr-3b"
    assert payload["temperature"] == 0.0
    assert payload["max_tokens"] > 0
    assert [m["role"] for m in payload["messages"]] == ["system", "user"]
    assert payload["messages"][1]["content"] == "a question"


def test_system_prompt_states_the_grammar():
    prompt = render_system_prompt()
    assert "<AtomicQuery> ::= w ∈ W | '(' <ListQuery> ')'" in prompt
    assert "{'+' (parallel), '*' (dependent)}" in prompt
    endpoint = ScriptedEndpoint([FANOUT])
    with endpoint.client() as client:
        translate("q", client=client)
    assert endpoint.requests[0]["messages"][0]["content"] == prompt


def test_invalid_candidates_recorded_then_success():
    endpoint = ScriptedEndpoint([
        "Find {book} reviews + Who wrote Dune?",  # validates false
        "a * b (",                                # fails to parse
        FANOUT,
    ])
    with endpoint.client() as client:
        result = translate("q", client=client)
    assert result.attempts_used == 3
    assert len(result.rejected) == 2
    assert isinstance(result.rejected[0].reason, ValidationReport)
    assert isinstance(result.rejected[1].reason, ExpressionError)
    assert len(endpoint.requests) == 3
    # third attempt climbs to the second temperature rung
    assert [r["temperature"] for r in endpoint.requests] == [0.0, 0.0, 0.3]


def test_exhaustion_raises_with_all_rejections():
    endpoint = ScriptedEndpoint(["Find {book} reviews"])
    with endpoint.client() as client:
        with pytest.raises(NoValidExpression) as info:
            translate("q", client=client)
    assert len(endpoint.requests) == 8
    assert len(info.value.rejected) == 8
    assert [r["temperature"] for r in endpoint.requests] == \
        [0.0, 0.0, 0.3, 0.3, 0.7, 0.7, 1.0, 1.0]


def test_custom_schedule_attempt_budget():
    endpoint = ScriptedEndpoint(["nope ("])
    schedule = SamplingSchedule(temperatures=(0.0, 0.5), attempts_per_temperature=1)
    with endpoint.client() as client:
        with pytest.raises(NoValidExpression):
            translate("q", schedule, client=client)
    assert len(endpoint.requests) == 2


def test_translate_deterministic_for_deterministic_endpoint():
    results = []
    for _ in range(2):
        with ScriptedEndpoint([FANOUT]).client() as client:
            results.append(translate("q", client=client))
    assert results[0] == results[1]


# --------------------------------------------------------------- extraction

def test_extract_takes_last_marker_line():
    completion = (
        "Step 1: compiled_expression = draft * wrong\n"
        "Better:\n"
        "compiled_expression = a * uses {x}\n"
    )
    assert extract_compiled_expression(completion) == "a * uses {x}"


def test_extract_strips_backticks():
    assert extract_compiled_expression("compiled_expression = `a + b`") == "a + b"


def test_extract_missing_marker():
    assert extract_compiled_expression("no expression here") is None
    assert extract_compiled_expression("compiled_expression =   ") is None


# -------------------------------------------------------------- data builder

def completion_for(expression: str) -> str:
    return f"Decomposition: ...\ncompiled_expression = {expression}\n"


def test_build_training_pairs_filters_invalid(tmp_path):
    out = tmp_path / "pairs.jsonl"
    completions = [
        completion_for("a * uses {x}"),
        completion_for("Find {book} reviews"),     # erroneous dependency
        completion_for("q1 + q2"),
        "no marker at all",
        completion_for("a * b ("),                 # parse error
        completion_for("solo question"),
    ]
    questions = [f"question {i}" for i in range(len(completions))]
    endpoint = ScriptedEndpoint(completions)
    with endpoint.client() as client:
        report = build_training_pairs(questions, client=client, out_path=out)
    assert report.kept == 3
    assert report.dropped == 3
    assert [d.question for d in report.drops] == ["question 1", "question 3", "question 4"]
    reasons = [d.reason for d in report.drops]
    assert reasons[0].startswith("invalid:")
    assert reasons[1] == EXTRACTION_FAILED
    assert reasons[2].startswith("parse:")

    rows = [json.loads(line) for line in out.read_text("utf-8").splitlines()]
    assert [r["query"] for r in rows] == ["question 0", "question 2", "question 5"]
    for row in rows:
        assert validate(parse(row["expression"])).valid


def test_build_training_pairs_one_request_per_question(tmp_path):
    questions = [f"q{i}" for i in range(4)]
    endpoint = ScriptedEndpoint([completion_for("a * uses {x}")])
    with endpoint.client() as client:
        build_training_pairs(questions, client=client, out_path=tmp_path / "o.jsonl")
    assert len(endpoint.requests) == 4
    assert all(r["temperature"] == 0.0 for r in endpoint.requests)
    # the chain-of-thought prompt embeds each raw question at the end
    for q, r in zip(questions, endpoint.requests):
        assert r["messages"][-1]["content"].rstrip().endswith(q)


def test_build_training_pairs_requires_questions(tmp_path):
    endpoint = ScriptedEndpoint(["x"])
    with endpoint.client() as client:
        with pytest.raises(ValueError):
            build_training_pairs([], client=client, out_path=tmp_path / "o.jsonl")


def test_empty_output_file_when_everything_drops(tmp_path):
    out = tmp_path / "pairs.jsonl"
    endpoint = ScriptedEndpoint(["never an expression"])
    with endpoint.client() as client:
        report = build_training_pairs(["q1", "q2"], client=client, out_path=out)
    assert report.kept == 0
    assert report.dropped == 2
    assert out.read_text("utf-8") == ""
