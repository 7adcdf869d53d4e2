"""Prompt templates: one ``{name}``-slotted text file per template, id = file stem."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from string import Formatter
from typing import Mapping

from .errors import TemplateError

LANGUAGES = ("en", "zh")


def placeholder_counts(body: str) -> Counter[str]:
    counts: Counter[str] = Counter()
    try:
        parsed = list(Formatter().parse(body))
    except ValueError as exc:
        raise TemplateError(f"malformed template: {exc}") from exc
    for _, name, spec, conversion in parsed:
        if name is None:
            continue
        if not name.isidentifier() or spec or conversion:
            raise TemplateError(f"unsupported placeholder {{{name}}}")
        counts[name] += 1
    return counts


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    body: str
    required_placeholders: frozenset[str]

    def __post_init__(self) -> None:
        counts = placeholder_counts(self.body)
        for name in self.required_placeholders:
            if counts[name] != 1:
                raise TemplateError(f"{self.id}: placeholder {{{name}}} appears {counts[name]} times")
        extra = set(counts) - set(self.required_placeholders)
        if extra:
            raise TemplateError(f"{self.id}: undeclared placeholders {sorted(extra)}")

    @classmethod
    def from_text(cls, id: str, body: str) -> PromptTemplate:
        return cls(id, body, frozenset(placeholder_counts(body)))

    def render(self, **binding: str) -> str:
        missing = self.required_placeholders - binding.keys()
        if missing:
            raise TemplateError(f"{self.id}: missing values for {sorted(missing)}")
        return self.body.format_map({k: binding[k] for k in self.required_placeholders})


def _default_dir(language: str) -> Path:
    return Path(str(resources.files("wardsim") / "prompts" / language))


@lru_cache(maxsize=None)
def _load_dir(directory: str) -> dict[str, PromptTemplate]:
    out = {}
    for path in sorted(Path(directory).glob("*.txt")):
        body = path.read_text(encoding="utf-8").rstrip("\n")
        out[path.stem] = PromptTemplate.from_text(path.stem, body)
    if not out:
        raise TemplateError(f"no templates found in {directory}")
    return out


def load_templates(language: str = "en", directory: str | Path | None = None) -> Mapping[str, PromptTemplate]:
    if language not in LANGUAGES:
        raise TemplateError(f"unknown language {language!r}")
    d = Path(directory) / language if directory else _default_dir(language)
    return _load_dir(str(d))


def get_template(template_id: str, language: str = "en") -> PromptTemplate:
    try:
        return load_templates(language)[template_id]
    except KeyError:
        raise TemplateError(f"no template {template_id!r} for language {language!r}") from None
