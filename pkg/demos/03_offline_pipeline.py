"""Execute a compiled query end to end, completely offline.

The executor only needs two things: a retriever (query -> documents) and
a generator (prompt -> text).  Here both are the bundled offline stand-ins,
so this demo runs without any network or model weights:

  * LexicalIndex over the 12-document sample corpus
  * a scripted generator that answers the demo chain's prompts

Run me:  python3 demos/03_offline_pipeline.py
"""

import time

from queryc import LexicalIndex, execute, parse, validate
from queryc.testkit import ScriptedGenerator, TimedRetriever, chain_demo_generator, mini_corpus

# -- a three-step dependent chain -------------------------------------------

expression = (
    "Who is the creator of La Schiavona?"
    " * Where did {creator} die?"
    " * Why did Roncalli leave {city}?"
)
question = "Why did Roncalli leave the city where the creator of La Schiavona died?"

tree = parse(expression)
assert validate(tree).valid

trace = execute(
    tree,
    retriever=LexicalIndex(mini_corpus()),
    generator=chain_demo_generator(),
    k=3,
    question=question,
)

print("final answer:", trace.final_answer)
print("token totals:", trace.totals.as_dict())
print()

# The trace records one entry per node, keyed by child-index path from
# the root.  Leaves carry the fully substituted query they retrieved
# with; dependent left sides record the bindings derived from them.
for path in sorted(trace.nodes):
    result = trace.nodes[path]
    bound = {b.name: b.value for b in result.bindings_out}
    print(f"  {list(path)!s:12} {result.substituted_query[:58]!r}")
    if bound:
        print(f"  {'':12} derived bindings: {bound}")
print()

# -- parallel fan-out --------------------------------------------------------

# '+' siblings run concurrently up to the parallelism you allow.  With a
# deliberately slow backend the wall-clock difference is easy to see.

slow_list = parse("alpha + beta + gamma").children[0]


def timed_run(parallelism: int) -> float:
    retriever = TimedRetriever(LexicalIndex(mini_corpus()), latency=0.1)
    generator = ScriptedGenerator(
        [("alpha", "A"), ("beta", "B"), ("gamma", "C")], latency=0.1)
    started = time.perf_counter()
    execute(slow_list, retriever, generator, parallelism=parallelism)
    return time.perf_counter() - started


print(f"3 leaves, parallelism=1: {timed_run(1) * 1000:5.0f} ms")
print(f"3 leaves, parallelism=3: {timed_run(3) * 1000:5.0f} ms")
