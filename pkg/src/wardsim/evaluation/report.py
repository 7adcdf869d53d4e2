"""Five-section diagnostic reports and a tolerant section-heading parser."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from ..errors import MissingSection


class Section(str, enum.Enum):
    SYMPTOMS = "Symptoms"
    EXAMINATIONS = "MedicalExaminations"
    RESULTS = "DiagnosticResults"
    RATIONALES = "DiagnosticRationales"
    TREATMENT = "TreatmentPlan"


SECTIONS = tuple(Section)

CANONICAL_HEADS = {
    "en": {
        Section.SYMPTOMS: "Symptoms",
        Section.EXAMINATIONS: "Medical Examinations",
        Section.RESULTS: "Diagnostic Results",
        Section.RATIONALES: "Diagnostic Rationales",
        Section.TREATMENT: "Treatment Plan",
    },
    "zh": {
        Section.SYMPTOMS: "症状",
        Section.EXAMINATIONS: "辅助检查",
        Section.RESULTS: "诊断结果",
        Section.RATIONALES: "诊断依据",
        Section.TREATMENT: "治疗方案",
    },
}

HEAD_ALIASES: dict[Section, tuple[str, ...]] = {
    Section.SYMPTOMS: (
        "symptoms", "symptom", "patient symptoms", "patient's symptoms", "present illness",
        "mastery of patient symptoms", "症状", "病人症状", "患者症状", "现病史",
    ),
    Section.EXAMINATIONS: (
        "medical examinations", "medical examination", "medical examination items",
        "medical examination results", "examination items", "examinations", "examination",
        "examination results", "auxiliary examinations", "auxiliary examination",
        "completeness of medical examination",
        "辅助检查", "医学检查", "医学检查项目", "检查项目", "检查结果", "检查",
    ),
    Section.RESULTS: (
        "diagnostic results", "diagnostic result", "diagnosis results", "diagnosis result",
        "diagnosis", "diagnoses", "final diagnosis", "诊断结果", "诊断",
    ),
    Section.RATIONALES: (
        "diagnostic rationales", "diagnostic rationale", "diagnostic basis", "diagnostic reasoning",
        "rationale", "rationales", "basis for diagnosis", "诊断依据",
    ),
    Section.TREATMENT: (
        "treatment plan", "treatment plans", "treatment", "treatment course",
        "treatment recommendations", "治疗方案", "治疗计划", "治疗",
    ),
}

_ALIAS_TO_SECTION = {a.casefold(): s for s, names in HEAD_ALIASES.items() for a in names}
_ALIAS_PATTERN = "|".join(
    re.escape(a) for a in sorted(_ALIAS_TO_SECTION, key=len, reverse=True)
)

_HEAD_RE = re.compile(
    r"""^\s*
    (?P<hash>\#{1,6})?\s*
    (?P<bold>\*\*|__)?\s*
    (?P<num>(?:[(（]?\d{1,2}\s*[.)、）]?|[一二三四五六七八九十]{1,2}\s*[、.．]|[①-⑩])\s*)?
    (?:\*\*|__)?\s*
    (?P<name>""" + _ALIAS_PATTERN + r""")
    \s*(?:\*\*|__)?\s*
    (?P<colon>[:：])?
    \s*(?:\*\*|__)?
    (?P<rest>.*?)\s*$""",
    re.IGNORECASE | re.VERBOSE,
)


@dataclass(frozen=True)
class _Head:
    line: int
    section: Section
    strong: bool
    rest: str


def _find_heads(lines: Sequence[str]) -> list[_Head]:
    heads = []
    for i, line in enumerate(lines):
        m = _HEAD_RE.match(line)
        if not m:
            continue
        num = m.group("num") or ""
        # a bare number glued to a word ("3rd") is not an enumeration
        if num and re.fullmatch(r"\d+", num.strip()):
            continue
        rest = m.group("rest")
        if rest and not m.group("colon"):
            continue
        strong = bool(m.group("hash") or m.group("bold") or num)
        heads.append(_Head(i, _ALIAS_TO_SECTION[m.group("name").casefold()], strong, rest))
    return heads


def parse_sections(raw: str, wanted: Iterable[Section] = SECTIONS) -> dict[Section, str]:
    """Extract the bodies of ``wanted`` sections; raise MissingSection for the first absent one.

    Markdown/numbered/bold headings win over bare or colon-style ones when at
    least three distinct sections use them; weak headings then only fill in
    sections the strong ones miss. A repeated heading for a section
    already seen is treated as body text.
    """
    wanted = tuple(wanted)
    lines = raw.splitlines()
    heads = _find_heads(lines)
    strong = [h for h in heads if h.strong]
    covered = {h.section for h in strong}
    if len(covered) >= min(3, len(wanted)):
        heads = [h for h in heads if h.strong or h.section not in covered]

    chosen: list[_Head] = []
    seen: set[Section] = set()
    for h in heads:
        if h.section in seen:
            continue
        seen.add(h.section)
        chosen.append(h)

    bodies: dict[Section, str] = {}
    for k, h in enumerate(chosen):
        end = chosen[k + 1].line if k + 1 < len(chosen) else len(lines)
        body_lines = ([h.rest] if h.rest else []) + lines[h.line + 1 : end]
        bodies[h.section] = "\n".join(body_lines).strip()

    for s in wanted:
        if s not in bodies:
            raise MissingSection(s.value)
    return {s: bodies[s] for s in wanted}


@dataclass(frozen=True)
class DiagnosticReport:
    symptoms: str
    examinations: str
    results: str
    rationales: str
    treatment: str

    _FIELDS = {
        Section.SYMPTOMS: "symptoms",
        Section.EXAMINATIONS: "examinations",
        Section.RESULTS: "results",
        Section.RATIONALES: "rationales",
        Section.TREATMENT: "treatment",
    }

    def section(self, s: Section) -> str:
        return getattr(self, self._FIELDS[s])

    @classmethod
    def from_sections(cls, bodies: dict[Section, str]) -> DiagnosticReport:
        return cls(**{field: bodies[s] for s, field in cls._FIELDS.items()})

    def replace(self, bodies: dict[Section, str]) -> DiagnosticReport:
        merged = {s: self.section(s) for s in SECTIONS}
        merged.update(bodies)
        return DiagnosticReport.from_sections(merged)

    def render(self, language: str = "en", sections: Iterable[Section] = SECTIONS, level: int = 1) -> str:
        heads = CANONICAL_HEADS[language]
        mark = "#" * level
        return "\n".join(f"{mark} {heads[s]}\n{self.section(s)}" for s in sections)

    def to_dict(self) -> dict[str, str]:
        return {s.value: self.section(s) for s in SECTIONS}


def parse_report(raw: str) -> DiagnosticReport:
    if not raw or not raw.strip():
        raise ValueError("empty report")
    return DiagnosticReport.from_sections(parse_sections(raw, SECTIONS))
