"""Dependency-flag checking against worked examples and the brute oracle."""

from __future__ import annotations

from queryc import ViolationKind, parse, validate
from queryc.testkit import generate_perturbed_ast, generate_random_ast, oracle_validate


def test_fanout_expression_is_valid():
    tree = parse("What is JK. Rowling's most popular book? * (Find an introduction"
                 " to {book} + Find reviews of {book} + Does the local library have {book}?)")
    report = validate(tree)
    assert report.valid
    assert report.violations == ()


def test_missing_dependency_located():
    report = validate(parse("Who directed Titanic? * When was he born?"))
    assert not report.valid
    assert len(report.violations) == 1
    v = report.violations[0]
    assert v.kind is ViolationKind.MISSING_DEPENDENCY
    assert v.node_path == (0, 1)


def test_erroneous_dependency_located():
    report = validate(parse("Find {book} reviews + Who wrote Dune?"))
    assert not report.valid
    assert len(report.violations) == 1
    v = report.violations[0]
    assert v.kind is ViolationKind.ERRONEOUS_DEPENDENCY
    assert v.node_path == (0, 0)


def test_single_atomic_with_placeholder_is_erroneous():
    report = validate(parse("Find {book} reviews"))
    assert [v.kind for v in report.violations] == [ViolationKind.ERRONEOUS_DEPENDENCY]
    assert report.violations[0].node_path == (0,)


def test_all_violations_collected():
    report = validate(parse("{a} bad + also {b} bad + c * d"))
    kinds = sorted(v.kind.value for v in report.violations)
    assert kinds == ["ErroneousDependency", "ErroneousDependency", "MissingDependency"]


def test_group_delegates_incoming_flag():
    # the parenthesized list sits on a dependent right edge, so its
    # members must all reference placeholders
    report = validate(parse("a * (uses {x} + plain b)"))
    assert not report.valid
    assert report.violations[0].node_path == (0, 1, 0, 1)
    assert report.violations[0].kind is ViolationKind.MISSING_DEPENDENCY


def test_left_edge_resets_flag():
    # inside a dependent-left position, a placeholder has no supplier
    report = validate(parse("({x} oops * b) * uses {y}"))
    assert any(v.kind is ViolationKind.ERRONEOUS_DEPENDENCY and v.node_path == (0, 0, 0, 0, 0)
               for v in report.violations)


def test_valid_matches_violation_emptiness():
    for seed in range(200):
        report = validate(generate_random_ast(seed))
        assert report.valid == (not report.violations)


def test_strict_mode_warns_on_duplicate_reference():
    report = validate(parse("who made it? * compare {y} with {y}"), strict=True)
    assert report.valid
    assert len(report.warnings) == 1
    assert "{y}" in report.warnings[0]


def test_strict_clean_tree_has_no_warnings():
    tree = parse("a * b uses {x}")
    assert validate(tree, strict=True).warnings == ()


def test_warnings_never_flip_validity():
    tree = parse("a * {x} twice {x}")
    assert validate(tree).valid
    assert validate(tree, strict=True).valid


def test_oracle_agrees_on_generated_trees():
    for seed in range(400):
        tree = generate_random_ast(seed)
        assert validate(tree).valid == oracle_validate(tree)


def test_oracle_agrees_on_perturbed_trees():
    for seed in range(400):
        tree, injected = generate_perturbed_ast(seed)
        report = validate(tree)
        assert report.valid == oracle_validate(tree) == False
        assert any(v.node_path == injected.node_path and v.kind == injected.kind
                   for v in report.violations)
