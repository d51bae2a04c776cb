"""Catch broken dependency structure before spending any model calls.

Two things can go wrong in a compiled expression:

  ErroneousDependency   a {placeholder} appears where nothing can bind it
  MissingDependency     a '*' right side references no placeholder at all

Run me:  python3 demos/02_validate.py
"""

from queryc import parse, validate


def show(expression: str, strict: bool = False) -> None:
    report = validate(parse(expression), strict=strict)
    print(f"  {expression!r}")
    print(f"    valid: {report.valid}")
    for violation in report.violations:
        print(f"    {violation.kind.value} at {list(violation.node_path)}:"
              f" {violation.message}")
    for warning in report.warnings:
        print(f"    warning: {warning}")
    print()


print("A well-formed chain:")
show("Who painted it? * Where did {painter} live?")

print("The classic pronoun mistake; the second step should say {director}:")
show("Who directed Titanic? * When was he born?")

print("A placeholder with no producer; nothing can fill {book} here:")
show("Find {book} reviews + Who wrote Dune?")

print("Both problems at once; every violation is reported, not just the first:")
show("{a} bad + also {b} bad + c * d")

print("Validation is structural, so a '+' branch may not leak values into"
      " its sibling:")
show("(find a recipe * cook {recipe}) + rate {recipe}")

print("Strict mode adds style warnings for repeated references"
      " (still valid):")
show("pick a city * compare {city} with {city}", strict=True)
