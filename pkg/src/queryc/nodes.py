"""Core tree representation for compiled query expressions.

A query expression compiles to a tree of :class:`QueryNode` values.  Four
kinds exist: atomic leaves (plain retrieval questions), dependent pairs
(left must run before right), lists (siblings that may run side by side),
and a single complex root wrapping the whole tree.

Values are canonical: an interior node's ``value`` is exactly the
sub-expression text it covers, and a node's ``placeholders`` are the
``{name}`` references extracted from its value in first-occurrence order,
deduplicated.  Trees should be built through the factory functions below
(:func:`atomic`, :func:`group`, :func:`dependent`, :func:`list_of`,
:func:`complex_root`), which maintain these invariants.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterator

from .errors import MalformedPlaceholder, SchemaViolation

# Characters with surface meaning; a backslash makes them literal text.
ESCAPABLE = "\\+*(){}"


class NodeKind(Enum):
    ATOMIC = "Atomic"
    DEPENDENT = "Dependent"
    LIST = "List"
    COMPLEX = "Complex"


@dataclass(frozen=True)
class QueryNode:
    """One node of a compiled query tree.  Immutable once built."""

    kind: NodeKind
    value: str
    children: tuple[QueryNode, ...] = ()
    placeholders: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        object.__setattr__(self, "placeholders", tuple(self.placeholders))

    def __repr__(self) -> str:
        return (
            f"QueryNode({self.kind.value}, {self.value!r}, "
            f"{len(self.children)} children)"
        )

    def walk(self, path: tuple[int, ...] = ()) -> Iterator[tuple[tuple[int, ...], QueryNode]]:
        """Yield ``(path, node)`` pairs in depth-first preorder."""
        yield path, self
        for i, child in enumerate(self.children):
            yield from child.walk(path + (i,))


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


def placeholder_occurrences(text: str) -> list[str]:
    """Every ``{name}`` reference in ``text``, in order, duplicates kept.

    A name is non-empty and contains no brace or newline.  An unclosed
    ``{``, an empty ``{}``, or a newline before the closing brace raises
    :class:`MalformedPlaceholder`.  A ``}`` with no opener is inert text.
    """
    names: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch != "{":
            i += 1
            continue
        end = text.find("}", i + 1)
        if end < 0:
            start = _byte_offset(text, i)
            raise MalformedPlaceholder("unclosed '{'", (start, start + 1))
        name = text[i + 1 : end]
        if not name or "{" in name or "\n" in name:
            raise MalformedPlaceholder(
                "bad placeholder name",
                (_byte_offset(text, i), _byte_offset(text, end) + 1),
            )
        names.append(name)
        i = end + 1
    return names


def extract_placeholders(text: str) -> tuple[str, ...]:
    """Placeholder names in ``text``, first-occurrence order, deduplicated."""
    return tuple(dict.fromkeys(placeholder_occurrences(text)))


def escape_text(text: str) -> str:
    """Escape operator characters so ``text`` survives re-lexing verbatim.

    Braces are left alone: braces in a node value always denote
    placeholders, so printing them bare round-trips.
    """
    out = []
    for ch in text:
        if ch in "\\+*()":
            out.append("\\")
        out.append(ch)
    return "".join(out)


def to_expression(node: QueryNode) -> str:
    """Print ``node`` back to canonical expression text.

    Leaf text is re-escaped, dependent chains print with `` * ``, list
    siblings with `` + ``, and a group prints its list in parentheses.
    For any valid tree, parsing the result reproduces the tree exactly.
    """
    if node.kind is NodeKind.ATOMIC:
        if node.children:
            return "(" + to_expression(node.children[0]) + ")"
        return escape_text(node.value)
    if node.kind is NodeKind.DEPENDENT:
        left, right = node.children
        return to_expression(left) + " * " + to_expression(right)
    if node.kind is NodeKind.LIST:
        return " + ".join(to_expression(c) for c in node.children)
    return to_expression(node.children[0])  # Complex


# -- factories ---------------------------------------------------------------


def atomic(text: str) -> QueryNode:
    """Build an atomic leaf from raw (unescaped) question text."""
    if not text.strip():
        raise ValueError("atomic text must be non-empty")
    if text != text.strip():
        # leading/trailing whitespace would be trimmed on re-lexing
        raise ValueError("atomic text must not have surrounding whitespace")
    return QueryNode(NodeKind.ATOMIC, text, (), extract_placeholders(text))


def group(inner: QueryNode) -> QueryNode:
    """Wrap a list node in parentheses, making it usable as an atomic."""
    if inner.kind is not NodeKind.LIST:
        raise ValueError(f"group wraps a List, not {inner.kind.value}")
    value = "(" + to_expression(inner) + ")"
    return QueryNode(NodeKind.ATOMIC, value, (inner,), extract_placeholders(value))


def dependent(left: QueryNode, right: QueryNode) -> QueryNode:
    """Chain ``left * right``; right runs after left's result is known."""
    if left.kind not in (NodeKind.ATOMIC, NodeKind.DEPENDENT):
        raise ValueError(f"dependent left must be Atomic or Dependent, got {left.kind.value}")
    if right.kind is not NodeKind.ATOMIC:
        raise ValueError(f"dependent right must be Atomic, got {right.kind.value}")
    value = to_expression(left) + " * " + to_expression(right)
    return QueryNode(NodeKind.DEPENDENT, value, (left, right), extract_placeholders(value))


def list_of(children: list[QueryNode] | tuple[QueryNode, ...], *, allow_single: bool = False) -> QueryNode:
    """Build a list of parallel siblings.

    Lists normally need two or more entries; a single entry is legal only
    inside parentheses (``allow_single``), where the group keeps the node
    from collapsing away.
    """
    children = tuple(children)
    if len(children) < (1 if allow_single else 2):
        raise ValueError("list needs at least two children")
    for c in children:
        if c.kind not in (NodeKind.ATOMIC, NodeKind.DEPENDENT):
            raise ValueError(f"list child must be Atomic or Dependent, got {c.kind.value}")
    value = " + ".join(to_expression(c) for c in children)
    return QueryNode(NodeKind.LIST, value, children, extract_placeholders(value))


def complex_root(item: QueryNode) -> QueryNode:
    """Wrap the finished tree in its single complex root."""
    if item.kind is NodeKind.COMPLEX:
        raise ValueError("complex nodes do not nest")
    return QueryNode(NodeKind.COMPLEX, to_expression(item), (item,), item.placeholders)


# -- shape and rendering ------------------------------------------------------


def _letters() -> Iterator[str]:
    # A..Z, then AA, AB, ... like spreadsheet columns
    n = 0
    while True:
        i, s = n, ""
        while True:
            s = chr(ord("A") + i % 26) + s
            i = i // 26 - 1
            if i < 0:
                break
        yield s
        n += 1


def classify_shape(node: QueryNode) -> str:
    """Summarize a tree's operator structure, one letter per leaf.

    Leaves are lettered in depth-first order, so e.g. a three-step chain
    is ``A*B*C`` and a fan-out after one step is ``A*(B+C+D)``.
    """
    letters = _letters()

    def walk(n: QueryNode) -> str:
        if n.kind is NodeKind.ATOMIC:
            if n.children:
                return "(" + walk(n.children[0]) + ")"
            return next(letters)
        if n.kind is NodeKind.DEPENDENT:
            return walk(n.children[0]) + "*" + walk(n.children[1])
        if n.kind is NodeKind.LIST:
            return "+".join(walk(c) for c in n.children)
        return walk(n.children[0])

    return walk(node)


def unbound_placeholders(node: QueryNode) -> tuple[str, ...]:
    """Placeholders a subtree needs from outside itself.

    A dependent's right side is fed by its left side, so only the left
    side's needs leak out; lists and groups just merge their children.
    """
    if node.kind is NodeKind.ATOMIC and not node.children:
        return node.placeholders
    if node.kind is NodeKind.DEPENDENT:
        return unbound_placeholders(node.children[0])
    names: list[str] = []
    for child in node.children:
        for name in unbound_placeholders(child):
            if name not in names:
                names.append(name)
    return tuple(names)


def render_tree(node: QueryNode, indent_step: int = 2) -> str:
    """Pretty-print a tree one node per line, indented by depth.

    Parenthesized groups print as a single list entry (the wrapper and its
    list are one line, keeping the parenthesized value).  Each line shows
    the node's value and, when the subtree still needs outside bindings,
    a ``placeholder=[...]`` list.
    """

    def line(kind: NodeKind, value: str, unbound: tuple[str, ...], open_children: bool) -> str:
        parts = [f"{kind.value}Query(value='{value}'"]
        if unbound:
            parts.append(f", placeholder={list(unbound)}")
        parts.append(", [" if open_children else ")")
        return "".join(parts)

    out: list[str] = []

    def walk(n: QueryNode, depth: int, comma: bool) -> None:
        pad = " " * (indent_step * depth)
        if n.kind is NodeKind.ATOMIC and n.children:
            # collapse wrapper + list into one parenthesized list entry
            kids = n.children[0].children
            out.append(pad + line(NodeKind.LIST, n.value, unbound_placeholders(n), True))
            for i, c in enumerate(kids):
                walk(c, depth + 1, i + 1 < len(kids))
            out.append(pad + "])" + ("," if comma else ""))
            return
        if not n.children:
            out.append(pad + line(n.kind, n.value, unbound_placeholders(n), False) + ("," if comma else ""))
            return
        out.append(pad + line(n.kind, n.value, unbound_placeholders(n), True))
        for i, c in enumerate(n.children):
            walk(c, depth + 1, i + 1 < len(n.children))
        out.append(pad + "])" + ("," if comma else ""))

    walk(node, 0, False)
    return "\n".join(out)


# -- portable JSON form --------------------------------------------------------

_KINDS = {k.value: k for k in NodeKind}


def to_portable(node: QueryNode) -> dict:
    """Encode a tree as plain dicts with a fixed field order."""
    return {
        "kind": node.kind.value,
        "value": node.value,
        "placeholders": list(node.placeholders),
        "children": [to_portable(c) for c in node.children],
    }


def from_portable(doc: dict) -> QueryNode:
    """Decode :func:`to_portable` output, checking every invariant.

    Raises :class:`SchemaViolation` on unknown kinds, missing or extra
    fields, arity violations, or stored values/placeholders that disagree
    with the canonical forms recomputed from the children.
    """
    node = _decode(doc, at_root=True, under_group=False)
    return node


def _decode(doc, *, at_root: bool, under_group: bool) -> QueryNode:
    if not isinstance(doc, dict):
        raise SchemaViolation(f"node must be an object, got {type(doc).__name__}")
    missing = {"kind", "value", "placeholders", "children"} - doc.keys()
    if missing:
        raise SchemaViolation(f"missing fields: {sorted(missing)}")
    extra = doc.keys() - {"kind", "value", "placeholders", "children"}
    if extra:
        raise SchemaViolation(f"unknown fields: {sorted(extra)}")
    kind = _KINDS.get(doc["kind"])
    if kind is None:
        raise SchemaViolation(f"unknown kind {doc['kind']!r}")
    value, placeholders, children = doc["value"], doc["placeholders"], doc["children"]
    if not isinstance(value, str):
        raise SchemaViolation("value must be a string")
    if not isinstance(placeholders, list) or not all(isinstance(p, str) for p in placeholders):
        raise SchemaViolation("placeholders must be a list of strings")
    if not isinstance(children, list):
        raise SchemaViolation("children must be a list")

    if kind is NodeKind.COMPLEX and not at_root:
        raise SchemaViolation("Complex nodes are only legal at the root")

    if kind is NodeKind.ATOMIC and not children:
        node = _rebuild_leaf(value)
    else:
        decoded = [
            _decode(c, at_root=False, under_group=(kind is NodeKind.ATOMIC))
            for c in children
        ]
        try:
            node = _rebuild(kind, decoded, under_group)
        except (ValueError, MalformedPlaceholder) as exc:
            raise SchemaViolation(str(exc)) from exc
        if node.value != value:
            raise SchemaViolation(
                f"stored value {value!r} is not the canonical form {node.value!r}"
            )
    if tuple(placeholders) != node.placeholders:
        raise SchemaViolation(
            f"stored placeholders {placeholders!r} disagree with value "
            f"(expected {list(node.placeholders)!r})"
        )
    return node


def _rebuild_leaf(value: str) -> QueryNode:
    try:
        return atomic(value)
    except (ValueError, MalformedPlaceholder) as exc:
        raise SchemaViolation(f"bad atomic value: {exc}") from exc


def _rebuild(kind: NodeKind, children: list[QueryNode], under_group: bool) -> QueryNode:
    if kind is NodeKind.ATOMIC:
        if len(children) != 1:
            raise SchemaViolation("an atomic node wraps exactly one list")
        return group(children[0])
    if kind is NodeKind.DEPENDENT:
        if len(children) != 2:
            raise SchemaViolation(f"Dependent needs 2 children, got {len(children)}")
        return dependent(children[0], children[1])
    if kind is NodeKind.LIST:
        if len(children) < (1 if under_group else 2):
            raise SchemaViolation("List is too short for its position")
        return list_of(children, allow_single=under_group)
    if len(children) != 1:
        raise SchemaViolation(f"Complex needs 1 child, got {len(children)}")
    return complex_root(children[0])


def portable_dumps(node: QueryNode, pretty: bool = True) -> str:
    """Serialize a tree to JSON text (2-space indent, or compact)."""
    doc = to_portable(node)
    if pretty:
        return json.dumps(doc, indent=2, ensure_ascii=False)
    return json.dumps(doc, separators=(",", ":"), ensure_ascii=False)


def portable_loads(text: str) -> QueryNode:
    """Parse JSON text produced by :func:`portable_dumps`."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"not valid JSON: {exc}") from exc
    return from_portable(doc)
