from __future__ import annotations

import json

import pytest

from wardsim.agents import DoctorAgent
from wardsim.assets import asset_path, corpus_dir, scripted_backend
from wardsim.backends import ScriptedBackend
from wardsim.engine import NPCBackends, SessionConfig
from wardsim.records import load_corpus

SENTINEL_PREFIX = "ZQX-"


@pytest.fixture(scope="session")
def corpus():
    return load_corpus(corpus_dir())


@pytest.fixture(scope="session")
def by_id(corpus):
    return {r.id: r for r in corpus}


@pytest.fixture(scope="session")
def case001(by_id):
    return by_id["case-001"]


@pytest.fixture(scope="session")
def schema():
    return json.loads(asset_path("record.schema.json").read_text(encoding="utf-8"))


def golden_doctor(record, seed=None, fixture="golden"):
    return DoctorAgent(scripted_backend(fixture, "doctor", record.id), name=fixture)


def golden_npc(record, seed=None):
    return NPCBackends(scripted_backend("golden", "patient", record.id))


@pytest.fixture
def config():
    return SessionConfig()


def report_text(results=("Acute appendicitis",), heads=None):
    heads = heads or ["Symptoms", "Medical Examinations", "Diagnostic Results", "Diagnostic Rationales",
                      "Treatment Plan"]
    bodies = ["fever", "CBC", "\n".join(f"({i}) {r}" for i, r in enumerate(results, 1)), "because", "surgery"]
    return "\n".join(f"# {h}\n{b}" for h, b in zip(heads, bodies))


def three_part(results=("Acute appendicitis",)):
    body = "\n".join(f"({i}) {r}" for i, r in enumerate(results, 1))
    return f"# Diagnostic Results\n{body}\n# Diagnostic Rationales\nwhy\n# Treatment Plan\nplan"


def backend(*responses, name=None):
    return ScriptedBackend(list(responses), name=name)


# acceptance summary: test_acceptance records one line per criterion here
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:>2}. {title}: {detail}")
