"""Versioned prompt templates with ``{{placeholder}}`` substitution."""
from __future__ import annotations

import re
from importlib import resources
from pathlib import Path

_PLACEHOLDER = re.compile(r"\{\{\s*([A-Za-z_][A-Za-z0-9_]*)\s*\}\}")

# placeholders each bundled template must expose
REQUIRED = {
    "pairwise_judge": ("query", "documents", "answer_a", "answer_b"),
    "rag_answer": ("query", "documents", "language"),
    "answer_overlap": ("Question", "Label", "Response", "language"),
    "fluency": ("Question", "Documents", "Summary", "language"),
}


class TemplateError(ValueError):
    pass


def bundled_templates() -> list[str]:
    root = resources.files("arena_surrogate.cli").joinpath("templates")
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".txt"))


def load_template(name_or_path: str) -> str:
    """A bundled template name such as ``pairwise_judge.v1`` or a path to a text file."""
    p = Path(name_or_path)
    if p.suffix == ".txt" and p.exists():
        return p.read_text(encoding="utf-8")
    res = resources.files("arena_surrogate.cli").joinpath("templates", f"{name_or_path}.txt")
    if not res.is_file():
        raise TemplateError(f"unknown template {name_or_path!r}; bundled: {bundled_templates()}")
    return res.read_text(encoding="utf-8")


def placeholders(template: str) -> set[str]:
    return set(_PLACEHOLDER.findall(template))


def check_template(template: str, required) -> None:
    missing = sorted(set(required) - placeholders(template))
    if missing:
        raise TemplateError(f"template lacks placeholders: {missing}")


def render(template: str, **values: str) -> str:
    """Single-pass substitution, so braces inside values are left alone."""
    missing = sorted(placeholders(template) - set(values))
    if missing:
        raise TemplateError(f"no value for placeholders: {missing}")
    return _PLACEHOLDER.sub(lambda m: str(values[m.group(1)]), template)
