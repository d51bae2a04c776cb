"""Tree execution: substitution, binding derivation, ordering, accounting."""

from __future__ import annotations

import pytest

from queryc import (
    Binding,
    GeneratorFailure,
    LexicalIndex,
    NodeResult,
    RetrieverFailure,
    TokenCounts,
    UnboundPlaceholder,
    count_tokens,
    derive_bindings,
    execute,
    parse,
    substitute,
)
from queryc.testkit import (
    ScriptedGenerator,
    StepClock,
    TimedRetriever,
    chain_demo_generator,
    mini_corpus,
)


def make_result(query="q", answer="a", **kw):
    defaults = dict(substituted_query=query, documents=(), answer=answer,
                    bindings_out=(), token_counts=TokenCounts(), wall_time=0.0)
    defaults.update(kw)
    return NodeResult(**defaults)


def run_chain(**kw):
    tree = parse("Who is the creator of La Schiavona? * Where did {creator} die?"
                 " * Why did Roncalli leave {city}?")
    return execute(tree, LexicalIndex(mini_corpus()), chain_demo_generator(), **kw)


# --------------------------------------------------------------- substitute

def test_substitute_basic():
    assert substitute("Where did {creator} die?", {"creator": "Titian"}) == \
        "Where did Titian die?"


def test_substitute_accepts_binding_list():
    out = substitute("{a} and {b}", [Binding("a", "1"), Binding("b", "2")])
    assert out == "1 and 2"


def test_substitute_single_pass():
    # inserted values are never re-scanned for placeholders
    assert substitute("{x}", {"x": "{y}", "y": "nope"}) == "{y}"


def test_substitute_unbound_raises_with_name():
    with pytest.raises(UnboundPlaceholder) as info:
        substitute("ask {missing} now", {})
    assert info.value.name == "missing"


def test_substitute_repeated_name():
    assert substitute("{x} vs {x}", {"x": "A"}) == "A vs A"


# --------------------------------------------------------- derive_bindings

def test_order_matched_list_needs_no_generator():
    class Exploding:
        def generate(self, messages):
            raise AssertionError("generator must not be called")

    results = [make_result(answer="Europe"), make_result(answer="Portugal")]
    out = derive_bindings(results, ["continent", "country"], Exploding())
    assert out == [Binding("continent", "Europe"), Binding("country", "Portugal")]


def test_extraction_from_single_result():
    gen = ScriptedGenerator([("value of creator", "Titian")])
    out = derive_bindings(make_result("Who made it?", "Titian made it in 1510."),
                          ["creator"], gen)
    assert out == [Binding("creator", "Titian")]
    assert len(gen.calls) == 1
    assert "Who made it?" in gen.calls[0].prompt
    assert "Titian made it in 1510." in gen.calls[0].prompt


def test_mismatched_list_falls_back_to_extraction():
    gen = ScriptedGenerator(default="chosen")
    results = [make_result(answer="one"), make_result(answer="two")]
    out = derive_bindings(results, ["only"], gen)
    assert out == [Binding("only", "chosen")]
    assert "one\ntwo" in gen.calls[0].prompt


def test_empty_extraction_falls_back_to_full_answer():
    gen = ScriptedGenerator(default="   ")
    out = derive_bindings(make_result(answer="the whole answer"), ["x"], gen)
    assert out == [Binding("x", "the whole answer")]


def test_derive_requires_names():
    with pytest.raises(ValueError):
        derive_bindings(make_result(), [], ScriptedGenerator())


def test_generator_exception_wrapped():
    class Broken:
        def generate(self, messages):
            raise RuntimeError("boom")

    with pytest.raises(GeneratorFailure):
        derive_bindings(make_result(), ["x"], Broken())


# ------------------------------------------------------------ leaf and tree

def test_single_atomic_run_counts():
    retriever = TimedRetriever(LexicalIndex(mini_corpus()))
    gen = ScriptedGenerator([("Who directed Titanic?", "James Cameron")])
    trace = execute(parse("Who directed Titanic?"), retriever, gen, k=1)
    # one retrieval, one leaf generation, one synthesis generation
    assert len(retriever.calls) == 1
    assert len(gen.calls) == 2
    assert trace.nodes[(0,)].answer == "James Cameron"
    assert len(trace.nodes[(0,)].documents) == 1
    assert set(trace.nodes) == {(), (0,)}


def test_leaf_documents_respect_k():
    retriever = LexicalIndex(mini_corpus())
    gen = ScriptedGenerator()
    trace = execute(parse("anything at all"), retriever, gen, k=3)
    assert len(trace.nodes[(0,)].documents) == 3


def test_leaf_token_accounting_is_exact():
    retriever = LexicalIndex(mini_corpus())
    gen = ScriptedGenerator([("Who directed Titanic?", "James Cameron")])
    trace = execute(parse("Who directed Titanic?"), retriever, gen, k=2)
    leaf = trace.nodes[(0,)]
    doc_block = "\n".join(f"[{d.id}] {d.title}: {d.content}" for d in leaf.documents)
    assert leaf.token_counts.documents == count_tokens(doc_block)
    assert leaf.token_counts.response == count_tokens("James Cameron")
    assert leaf.token_counts.prompt > 0


def test_chain_executes_and_binds():
    trace = run_chain()
    assert trace.final_answer == "Roncalli left the city for the conclave in Rome."
    assert trace.nodes[(0, 0, 0)].bindings_out == (Binding("creator", "Titian"),)
    assert trace.nodes[(0, 0)].bindings_out == (Binding("city", "Venice"),)
    assert trace.nodes[(0, 1)].substituted_query == "Why did Roncalli leave Venice?"


def test_chain_node_paths():
    trace = run_chain()
    assert set(trace.nodes) == {(), (0,), (0, 0), (0, 0, 0), (0, 0, 1), (0, 1)}


def test_totals_are_componentwise_sums():
    trace = run_chain()
    recomputed = TokenCounts()
    for result in trace.nodes.values():
        recomputed = recomputed + result.token_counts
    assert trace.totals == recomputed


def test_dependent_right_starts_after_left_finishes():
    retriever = TimedRetriever(LexicalIndex(mini_corpus()))
    gen = chain_demo_generator()
    tree = parse("Who is the creator of La Schiavona? * Where did {creator} die?")
    execute(tree, retriever, gen)
    # identify leaf prompts by their trailing question line so document
    # text cannot alias the filters
    left_last = max(c.finished for c in gen.calls
                    if c.prompt.rstrip().endswith("Question: Who is the creator of La Schiavona?")
                    or c.prompt.startswith("Given the question"))
    right_first = min(c.started for c in gen.calls
                      if c.prompt.rstrip().endswith("Question: Where did Titian die?"))
    assert right_first >= left_last
    # retrieval for the right leaf also waits for the left side
    assert retriever.calls[1].started >= retriever.calls[0].finished


def test_retrieval_queries_are_fully_substituted():
    retriever = TimedRetriever(LexicalIndex(mini_corpus()))
    tree = parse("Who is the creator of La Schiavona? * Where did {creator} die?"
                 " * Why did Roncalli leave {city}?")
    execute(tree, retriever, chain_demo_generator())
    assert retriever.calls
    assert all("{" not in c.query for c in retriever.calls)


def test_list_answers_keep_child_order_even_when_later_finishes_first():
    tree = parse("alpha + beta + gamma")
    gen = ScriptedGenerator([("alpha", "A"), ("beta", "B"), ("gamma", "C")],
                            latency=0.02)
    retriever = LexicalIndex(mini_corpus())
    trace = execute(tree, retriever, gen, parallelism=3)
    assert trace.nodes[(0,)].answer == "A\nB\nC"


def test_list_siblings_do_not_share_bindings():
    # both branches bind {x} from their own left sides
    tree = parse("(one * needs {x}) + (two * wants {x})")
    gen = ScriptedGenerator([
        ("value of x.\n\nQuestion: one", "FIRST"),
        ("value of x.\n\nQuestion: two", "SECOND"),
        ("one", "one answer"),
        ("two", "two answer"),
    ])
    retriever = LexicalIndex(mini_corpus())
    trace = execute(tree, retriever, gen, parallelism=2)
    leaves = {r.substituted_query for r in trace.nodes.values()}
    assert "needs FIRST" in leaves
    assert "wants SECOND" in leaves
    assert "needs SECOND" not in leaves
    assert "wants FIRST" not in leaves


def test_outer_bindings_flow_into_groups():
    tree = parse("source * (use {val} here + also {val})")
    gen = ScriptedGenerator([("value of val", "X"), ("source", "src answer")])
    trace = execute(tree, LexicalIndex(mini_corpus()), gen)
    assert trace.nodes[(0, 1, 0, 0)].substituted_query == "use X here"
    assert trace.nodes[(0, 1, 0, 1)].substituted_query == "also X"


def test_synthesis_uses_original_question_and_leaf_answers():
    gen = ScriptedGenerator([("sub-questions and answers", "final synthesis")])
    trace = execute(parse("plain question"), LexicalIndex(mini_corpus()), gen,
                    question="What was asked originally?")
    synthesis_prompt = gen.calls[-1].prompt
    assert "What was asked originally?" in synthesis_prompt
    assert "Sub-question: plain question" in synthesis_prompt
    assert trace.final_answer == "final synthesis"
    assert trace.nodes[()].substituted_query == "What was asked originally?"


def test_bare_subtree_skips_synthesis():
    tree = parse("alpha + beta").children[0]
    gen = ScriptedGenerator([("alpha", "A"), ("beta", "B")])
    trace = execute(tree, LexicalIndex(mini_corpus()), gen)
    assert trace.final_answer == "A\nB"
    assert len(gen.calls) == 2  # no synthesis call


def test_identical_runs_are_byte_identical():
    clock_a, clock_b = StepClock(), StepClock()
    trace_a = run_chain(clock=clock_a)
    trace_b = run_chain(clock=clock_b)
    assert trace_a.to_json() == trace_b.to_json()


def test_unsafe_backend_degrades_to_serial():
    class SerialOnly(ScriptedGenerator):
        concurrency_safe = False

    gen = SerialOnly([("alpha", "A"), ("beta", "B")], latency=0.01)
    tree = parse("alpha + beta").children[0]
    execute(tree, LexicalIndex(mini_corpus()), gen, parallelism=4)
    first, second = gen.calls[0], gen.calls[1]
    assert second.started >= first.finished


def test_unbound_placeholder_carries_path():
    tree = parse("a + do {ghost}").children[0]  # skip validation on purpose
    with pytest.raises(UnboundPlaceholder) as info:
        execute(tree, LexicalIndex(mini_corpus()), ScriptedGenerator())
    assert info.value.name == "ghost"
    assert info.value.node_path == (1,)


def test_retriever_failure_carries_path():
    class Broken:
        def retrieve(self, query, k):
            raise IOError("disk gone")

    with pytest.raises(RetrieverFailure) as info:
        execute(parse("q"), Broken(), ScriptedGenerator())
    assert info.value.node_path == (0,)


def test_generator_failure_carries_path():
    class Broken:
        def generate(self, messages):
            raise RuntimeError("no model")

    with pytest.raises(GeneratorFailure) as info:
        execute(parse("q"), LexicalIndex(mini_corpus()), Broken())
    assert info.value.node_path == (0,)


def test_bad_arguments_rejected():
    gen = ScriptedGenerator()
    idx = LexicalIndex(mini_corpus())
    with pytest.raises(ValueError):
        execute(parse("q"), idx, gen, k=0)
    with pytest.raises(ValueError):
        execute(parse("q"), idx, gen, parallelism=0)


def test_template_override_changes_leaf_prompt():
    gen = ScriptedGenerator()
    execute(parse("q"), LexicalIndex(mini_corpus()), gen,
            templates={"leaf_answer": "CUSTOM $question [$documents]"})
    assert gen.calls[0].prompt.startswith("CUSTOM q")


def test_trace_json_shape():
    import json

    doc = json.loads(run_chain().to_json())
    assert list(doc) == ["final_answer", "totals", "nodes"]
    paths = [tuple(n["path"]) for n in doc["nodes"]]
    assert paths == sorted(paths)
    assert all(
        list(n) == ["path", "substituted_query", "documents", "answer",
                    "bindings_out", "token_counts", "wall_time"]
        for n in doc["nodes"]
    )
