"""Bundled data: fixture corpus, dictionaries, attack suite and scripted backend responses."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any

from .backends import ScriptedBackend


def asset_path(*parts: str) -> Path:
    return Path(str(resources.files("wardsim").joinpath("fixtures", *parts)))


def corpus_dir() -> Path:
    return asset_path("corpus")


def scripts_dir() -> Path:
    return asset_path("scripts")


def diseases_path() -> Path:
    return asset_path("diseases.tsv")


def attack_queries(path: str | Path | None = None) -> list[str]:
    text = Path(path or asset_path("attack_queries.txt")).read_text(encoding="utf-8")
    return [l.strip() for l in text.splitlines() if l.strip() and not l.startswith("#")]


@lru_cache(maxsize=64)
def _load(path: str) -> dict[str, Any]:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def load_script(fixture_id: str, directory: str | Path | None = None) -> dict[str, Any]:
    """Script fixture ``{role: {record_id | "default": [responses...]}}``."""
    path = Path(directory or scripts_dir()) / f"{fixture_id}.json"
    if not path.is_file():
        raise FileNotFoundError(f"no scripted fixture {fixture_id!r} in {path.parent}")
    return _load(str(path.resolve()))


def scripted_responses(script: dict[str, Any], role: str, record_id: str) -> list[str]:
    by_record = script.get(role)
    if by_record is None:
        raise KeyError(f"fixture has no responses for role {role!r}")
    responses = by_record.get(record_id, by_record.get("default"))
    if responses is None:
        raise KeyError(f"fixture has no {role!r} responses for {record_id!r} and no default")
    return list(responses)


def scripted_backend(fixture_id: str, role: str, record_id: str, name: str | None = None,
                     directory: str | Path | None = None) -> ScriptedBackend:
    responses = scripted_responses(load_script(fixture_id, directory), role, record_id)
    return ScriptedBackend(responses, name=name or f"{fixture_id}:{role}")
