"""Compile query expressions and look at what comes out.

A query expression mixes free-text questions with two operators:

    +   run both sides independently (parallel)
    *   feed the left side's answer into the right side's {placeholders}

Run me:  python3 demos/01_compile_and_inspect.py
"""

from queryc import parse, portable_dumps, render_tree, to_expression

# The simplest expression is a bare question.  The compiler wraps it in a
# root node so every compiled tree has the same top-level shape.
tree = parse("Who wrote Dune?")
print(render_tree(tree))
print()

# A dependent chain: each '*' step may reference values produced by the
# steps before it, written as {name}.
chain = parse(
    "Who is the creator of La Schiavona?"
    " * Where did {creator} die?"
    " * Why did Roncalli leave {city}?"
)
print(render_tree(chain))
print()

# '*' binds tighter than '+', and parentheses regroup, exactly like
# arithmetic.  Compare these two:
print(render_tree(parse("a * b + c")))
print()
print(render_tree(parse("a * (b + c)")))
print()

# Fan-out: one producer feeding three parallel consumers.
fanout = parse(
    "What is JK. Rowling's most popular book?"
    " * (Find an introduction to {book}"
    " + Find reviews of {book}"
    " + Does the local library have {book}?)"
)
print(render_tree(fanout))
print()

# Trees print back to canonical text, and the text re-parses to the same
# tree.  Operators inside question text survive via backslash escaping.
print("canonical:", to_expression(fanout))
weird = parse(r"what is 2\+2? * explain {answer}")
print("escaped leaf:", repr(weird.children[0].children[0].value))
print("re-printed:", to_expression(weird))
print()

# Every tree serializes to a stable JSON document, useful for caching
# compiled queries or shipping them between services.
print(portable_dumps(parse("a * uses {x}")))
