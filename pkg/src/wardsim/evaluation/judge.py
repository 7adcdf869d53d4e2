"""Rubric judging of a doctor's report by the chief physician."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

from ..backends import Backend, GenerationParams, user
from ..errors import JudgeFormatError, MissingSection
from ..records import MedicalRecord, describe_examinations
from ..templates import get_template
from .report import CANONICAL_HEADS, SECTIONS, DiagnosticReport, Section, parse_sections

# Options are listed best-first in the rubric while scores run 1 (poorest) .. 4 (excellent).
LETTER_SCORES = {"A": 4, "B": 3, "C": 2, "D": 1}

DIMENSIONS = SECTIONS

_OPTION_HEAD = re.compile(r"^\s*#{0,6}\s*(?:\*\*)?\s*(option|options|choice|选项|选择)\s*(?:\*\*)?\s*[:：]?\s*(.*)$", re.I)
_ANALYSIS_HEAD = re.compile(r"^\s*#{0,6}\s*(?:\*\*)?\s*(analysis|分析)\s*(?:\*\*)?\s*[:：]?\s*(.*)$", re.I)
_PAREN_LETTER = re.compile(r"[(（]\s*([A-Da-d])\s*[)）]")
_BARE_LETTER = re.compile(r"(?<![A-Za-z])([A-D])(?![A-Za-z])")
_LEAD_LETTER = re.compile(r"^\s*([a-d])\s*[.)、:]")


@dataclass(frozen=True)
class DimensionScore:
    score: int
    analysis: str


@dataclass(frozen=True)
class RubricScores:
    scores: dict[Section, DimensionScore]

    def __post_init__(self) -> None:
        if set(self.scores) != set(DIMENSIONS):
            raise ValueError("rubric needs exactly the five dimensions")
        for d in self.scores.values():
            if d.score not in (1, 2, 3, 4):
                raise ValueError(f"score {d.score} outside 1..4")

    def score(self, dim: Section) -> int:
        return self.scores[dim].score

    def as_list(self) -> list[int]:
        return [self.scores[d].score for d in DIMENSIONS]


def _option_letter(text: str) -> str | None:
    for pattern in (_PAREN_LETTER, _LEAD_LETTER, _BARE_LETTER):
        m = pattern.search(text) if pattern is not _LEAD_LETTER else pattern.match(text)
        if m:
            return m.group(1).upper()
    return None


def _parse_block(dim: Section, body: str) -> DimensionScore:
    lines = body.splitlines()
    option_at = next((i for i, l in enumerate(lines) if _OPTION_HEAD.match(l)), None)
    if option_at is None:
        raise JudgeFormatError(f"{dim.value}: no option heading")
    opt = _OPTION_HEAD.match(lines[option_at])
    tail = [opt.group(2)] + lines[option_at + 1 :]
    letter = None
    for line in tail:
        if _ANALYSIS_HEAD.match(line):
            break
        letter = _option_letter(line)
        if letter:
            break
    if letter is None:
        raise JudgeFormatError(f"{dim.value}: no option letter")

    analysis_lines: list[str] = []
    for i, line in enumerate(lines):
        m = _ANALYSIS_HEAD.match(line)
        if m:
            analysis_lines = [m.group(2)] + [l for l in lines[i + 1 : option_at if option_at > i else None]]
            break
    return DimensionScore(LETTER_SCORES[letter], "\n".join(analysis_lines).strip())


def parse_judgement(raw: str) -> RubricScores:
    try:
        blocks = parse_sections(raw, DIMENSIONS)
    except MissingSection as exc:
        raise JudgeFormatError(f"judge output lacks the {exc.name} block") from exc
    return RubricScores({dim: _parse_block(dim, blocks[dim]) for dim in DIMENSIONS})


def reference_report(record: MedicalRecord, language: str = "en") -> str:
    """The expert report the judge compares against: history, examinations, diagnosis, rationale, treatment."""
    heads = CANONICAL_HEADS[language]
    s = record.subjective
    history = "\n".join(x for x in (s.present_illness, s.past_history, s.personal_history) if x.strip())
    results = "\n".join(f"({i}) {r}" for i, r in enumerate(record.reference.results, 1))
    parts = [
        (heads[Section.SYMPTOMS], history),
        (heads[Section.EXAMINATIONS], describe_examinations(record.objective)),
        (heads[Section.RESULTS], results),
        (heads[Section.RATIONALES], record.reference.rationales),
        (heads[Section.TREATMENT], record.reference.treatment),
    ]
    return "\n".join(f"## {h}\n{body}" for h, body in parts)


def judge_prompt(report: DiagnosticReport, record: MedicalRecord, language: str = "en") -> tuple[str, str]:
    system = get_template("judge", language).render()
    body = get_template("judge_input", language).render(
        reference_report=reference_report(record, language),
        doctor_report=report.render(language, level=2),
    )
    return system, body


def judge_report(
    report: DiagnosticReport,
    record: MedicalRecord,
    backend: Backend,
    language: str = "en",
    params: GenerationParams | None = None,
) -> RubricScores:
    """Score ``report`` against the full record with one judge call."""
    system, body = judge_prompt(report, record, language)
    raw = backend.generate(system, [user(body)], params or GenerationParams(temperature=0.0))
    return parse_judgement(raw)


def option_block(letters: Sequence[str], language: str = "en") -> str:
    """Render a well-formed judge reply choosing ``letters`` (used by scripted judges and tests)."""
    heads = ["Symptoms", "Medical Examination Items", "Diagnostic Results", "Diagnostic Basis", "Treatment Plan"]
    if language == "zh":
        heads = ["症状", "医学检查项目", "诊断结果", "诊断依据", "治疗方案"]
    analysis, option = ("分析", "选项") if language == "zh" else ("Analysis", "Option")
    out = []
    for head, letter in zip(heads, letters):
        out.append(f"# {head}\n## {analysis}\n-\n## {option}\n({letter})")
    return "\n\n".join(out)
