"""Dependency validation for compiled query trees.

A depth-first walk carries a flag saying whether the node being visited
runs after an earlier step.  The left side of a ``*`` gets flag 0, the
right side flag 1, and list members inherit their list's flag.  At the
leaves the flag must agree with placeholder use: a leaf that nothing
precedes must not reference ``{name}`` bindings (ErroneousDependency),
and a leaf directly after a ``*`` must reference at least one
(MissingDependency).  All violations are collected, not just the first.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .nodes import NodeKind, QueryNode, placeholder_occurrences


class ViolationKind(Enum):
    ERRONEOUS_DEPENDENCY = "ErroneousDependency"
    MISSING_DEPENDENCY = "MissingDependency"


@dataclass(frozen=True)
class Violation:
    node_path: tuple[int, ...]
    kind: ViolationKind
    message: str


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    violations: tuple[Violation, ...] = ()
    # strict-mode advisories; never affect `valid`
    warnings: tuple[str, ...] = ()


def validate(root: QueryNode, strict: bool = False) -> ValidationReport:
    """Check that every placeholder is fed by a preceding step.

    ``root`` is normally a Complex root; bare subtrees are accepted and
    checked as if they stood alone.  Node paths in the report are child
    indices from ``root``.  Strict mode additionally warns when one
    dependent step references the same placeholder twice (names are
    non-empty by construction, so only distinctness is left to check).
    """
    violations: list[Violation] = []
    warnings: list[str] = []
    node, path = root, ()
    if root.kind is NodeKind.COMPLEX:
        node, path = root.children[0], (0,)
    _check(node, 0, path, violations)
    if strict:
        _strict_scan(node, path, warnings)
    return ValidationReport(not violations, tuple(violations), tuple(warnings))


def _check(node: QueryNode, flag: int, path: tuple[int, ...], out: list[Violation]) -> None:
    if node.kind is NodeKind.ATOMIC:
        if node.children:
            _check(node.children[0], flag, path + (0,), out)
        elif flag == 0 and node.placeholders:
            names = ", ".join("{%s}" % p for p in node.placeholders)
            out.append(Violation(path, ViolationKind.ERRONEOUS_DEPENDENCY,
                                 f"no earlier step can bind {names}"))
        elif flag == 1 and not node.placeholders:
            out.append(Violation(path, ViolationKind.MISSING_DEPENDENCY,
                                 "follows '*' but references no placeholder"))
    elif node.kind is NodeKind.DEPENDENT:
        _check(node.children[0], 0, path + (0,), out)
        _check(node.children[1], 1, path + (1,), out)
    elif node.kind is NodeKind.LIST:
        for i, child in enumerate(node.children):
            _check(child, flag, path + (i,), out)
    else:
        raise ValueError("Complex nodes may only appear at the root")


def _strict_scan(node: QueryNode, path: tuple[int, ...], out: list[str]) -> None:
    if node.kind is NodeKind.DEPENDENT:
        right = node.children[1]
        occurrences = placeholder_occurrences(right.value)
        for name in sorted(set(n for n in occurrences if occurrences.count(n) > 1)):
            out.append(
                f"placeholder {{{name}}} referenced more than once at node {list(path + (1,))}"
            )
    for i, child in enumerate(node.children):
        _strict_scan(child, path + (i,), out)
