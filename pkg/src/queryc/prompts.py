"""Bundled prompt templates.

Templates use ``$name`` substitution (``string.Template``) so that literal
``{placeholder}`` text inside prompts passes through untouched.  The
bundled bytes are the canonical prompt wording; callers may pass override
text where a function accepts a template.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources
from string import Template

TEMPLATE_NAMES = (
    "translator_system",
    "datagen",
    "leaf_answer",
    "binding_extract",
    "synthesis",
)


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    if name not in TEMPLATE_NAMES:
        raise KeyError(f"unknown template {name!r}")
    return (resources.files(__package__) / "data" / f"{name}.txt").read_text("utf-8")


def render(template_text: str, **values: str) -> str:
    return Template(template_text).substitute(**values)


def data_path(filename: str):
    """Traversable handle to a bundled data file."""
    return resources.files(__package__) / "data" / filename
