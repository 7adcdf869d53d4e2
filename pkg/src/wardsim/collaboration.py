"""Multi-doctor consultation: fact exchange, moderated dispute rounds and a final report.

The discussion history ``H`` is seeded with every doctor's pre-diagnosis and
the consolidated facts. Each round every doctor revises against its peers
(and, with dispute resolution on, against the moderator's itemized
disputes); the moderator then either lists up to three disputes or answers
with the single line ``NONE``. At most ``M`` rounds run.
"""

from __future__ import annotations

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence, Union

from .agents import ChiefPhysicianAgent, ExaminerAgent, PatientAgent
from .backends import Backend, GenerationParams, assistant, user
from .engine import SessionResult
from .errors import (
    BackendError,
    CollaborationError,
    FinalizeParseError,
    FormatError,
    MissingSection,
    RevisionParseError,
)
from .evaluation.report import DiagnosticReport, Section, parse_sections
from .protocol import Role
from .templates import get_template

log = logging.getLogger(__name__)

MAX_DISPUTES = 3
CONSENSUS_SENTINEL = "NONE"
REVISED_SECTIONS = (Section.RESULTS, Section.RATIONALES, Section.TREATMENT)


@dataclass(frozen=True)
class CollabConfig:
    M: int = 4
    dispute_resolution: bool = True
    language: str = "en"
    parallelism: int = 1
    doctor_params: GenerationParams = field(default_factory=GenerationParams)
    chief_params: GenerationParams = field(default_factory=lambda: GenerationParams(temperature=0.0))

    def __post_init__(self) -> None:
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        return {
            "M": self.M,
            "dispute_resolution": self.dispute_resolution,
            "language": self.language,
            "parallelism": self.parallelism,
        }


@dataclass(frozen=True)
class PreDiagnosis:
    """Independent reports ``P``, keyed by doctor id in a fixed order."""

    reports: Mapping[str, DiagnosticReport]

    def __post_init__(self) -> None:
        if not self.reports:
            raise ValueError("pre-diagnosis needs at least one doctor")
        object.__setattr__(self, "reports", dict(self.reports))

    @property
    def doctors(self) -> list[str]:
        return list(self.reports)

    def __len__(self) -> int:
        return len(self.reports)

    @classmethod
    def from_results(cls, results: Sequence[SessionResult]) -> PreDiagnosis:
        """Doctors whose session produced no parseable report are left out with a warning."""
        reports = {}
        for r in results:
            if r.report is None:
                log.warning("doctor %s on %s has no parseable report; excluded", r.doctor, r.record_id)
                continue
            if r.doctor in reports:
                raise ValueError(f"duplicate doctor id {r.doctor!r}")
            reports[r.doctor] = r.report
        return cls(reports)


# history entries

@dataclass(frozen=True)
class Confirmation:
    question: str
    answerer: Role
    answer: str

    def __post_init__(self) -> None:
        if self.answerer not in (Role.PATIENT, Role.EXAMINER):
            raise ValueError("confirmations are answered by the Patient or the Examiner")


@dataclass(frozen=True)
class FactSummary:
    symptoms: str
    examinations: str
    confirmations: tuple[Confirmation, ...] = ()

    def render(self, language: str = "en") -> str:
        heads = {"en": ("# Symptoms", "# Medical Examinations"), "zh": ("# 症状", "# 辅助检查")}[language]
        return f"{heads[0]}\n{self.symptoms}\n{heads[1]}\n{self.examinations}"

    def to_dict(self) -> dict[str, Any]:
        return {
            "symptoms": self.symptoms,
            "examinations": self.examinations,
            "confirmations": [
                {"question": c.question, "answerer": c.answerer.value, "answer": c.answer} for c in self.confirmations
            ],
        }


@dataclass(frozen=True)
class DisputeList:
    items: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))
        if len(self.items) > MAX_DISPUTES:
            raise ValueError(f"at most {MAX_DISPUTES} disputes")

    @property
    def consensus(self) -> bool:
        return not self.items

    def __len__(self) -> int:
        return len(self.items)

    def render(self) -> str:
        return "\n".join(f"({i}) {item}" for i, item in enumerate(self.items, 1))


@dataclass(frozen=True)
class PreDiagnosisEntry:
    doctor: str
    report: DiagnosticReport


@dataclass(frozen=True)
class FactEntry:
    facts: FactSummary


@dataclass(frozen=True)
class DisputeEntry:
    round: int
    disputes: DisputeList


@dataclass(frozen=True)
class DoctorStatement:
    round: int
    doctor: str
    report: DiagnosticReport


HistoryEntry = Union[PreDiagnosisEntry, FactEntry, DisputeEntry, DoctorStatement]


class DiscussionHistory:
    """Append-only record ``H`` of the discussion."""

    def __init__(self) -> None:
        self._entries: list[HistoryEntry] = []

    def append(self, entry: HistoryEntry) -> None:
        self._entries.append(entry)

    @property
    def entries(self) -> tuple[HistoryEntry, ...]:
        return tuple(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def kinds(self) -> list[str]:
        return [type(e).__name__ for e in self._entries]

    def latest_reports(self) -> dict[str, DiagnosticReport]:
        out: dict[str, DiagnosticReport] = {}
        for e in self._entries:
            if isinstance(e, (PreDiagnosisEntry, DoctorStatement)):
                out[e.doctor] = e.report
        return out

    def facts(self) -> FactSummary | None:
        return next((e.facts for e in self._entries if isinstance(e, FactEntry)), None)

    def render(self, language: str = "en") -> str:
        parts = []
        for e in self._entries:
            if isinstance(e, PreDiagnosisEntry):
                parts.append(f"## {e.doctor} (initial report)\n{e.report.render(language, level=3)}")
            elif isinstance(e, DoctorStatement):
                parts.append(f"## {e.doctor} (round {e.round})\n{e.report.render(language, REVISED_SECTIONS, level=3)}")
            elif isinstance(e, DisputeEntry):
                body = e.disputes.render() or CONSENSUS_SENTINEL
                parts.append(f"## Medical director (round {e.round})\n{body}")
        return "\n\n".join(parts)


@dataclass
class CollabResult:
    final_report: DiagnosticReport
    rounds_used: int
    history: DiscussionHistory
    converged: bool
    dispute_counts: list[int]

    @property
    def convergence_round(self) -> int | None:
        return self.rounds_used if self.converged else None

    def to_trace(self, record_id: str | None = None) -> dict[str, Any]:
        rounds: dict[int, dict[str, Any]] = {}
        for e in self.history.entries:
            if isinstance(e, DisputeEntry):
                rounds.setdefault(e.round, {"round": e.round, "statements": {}})["disputes"] = list(e.disputes.items)
            elif isinstance(e, DoctorStatement):
                rounds.setdefault(e.round, {"round": e.round, "statements": {}})["statements"][e.doctor] = (
                    e.report.to_dict()
                )
        facts = self.history.facts()
        return {
            "record_id": record_id,
            "rounds_used": self.rounds_used,
            "converged": self.converged,
            "convergence_round": self.convergence_round,
            "dispute_counts": list(self.dispute_counts),
            "history_kinds": self.history.kinds(),
            "facts": facts.to_dict() if facts else None,
            "rounds": [rounds[k] for k in sorted(rounds)],
            "final_report": self.final_report.to_dict(),
        }


# fact exchange

_HEAD_LINE = re.compile(r"^\s*#+\s*(.+?)\s*$")
_FACT_HEADS = {
    "symptoms": "symptoms", "症状": "symptoms",
    "medical examinations": "examinations", "examinations": "examinations", "辅助检查": "examinations",
    "检查结果": "examinations",
    "points to confirm": "confirm", "待确认事项": "confirm",
}
_ANSWERERS = {"patient": Role.PATIENT, "病人": Role.PATIENT, "患者": Role.PATIENT,
              "examiner": Role.EXAMINER, "检查员": Role.EXAMINER}
_NONE_LINES = {"none", "无", "n/a"}


def _fact_blocks(raw: str) -> dict[str, list[str]]:
    blocks: dict[str, list[str]] = {}
    current: str | None = None
    for line in raw.splitlines():
        m = _HEAD_LINE.match(line)
        if m and m.group(1).casefold().rstrip(":：") in _FACT_HEADS:
            current = _FACT_HEADS[m.group(1).casefold().rstrip(":：")]
            blocks.setdefault(current, [])
        elif current is not None:
            blocks[current].append(line)
    return blocks


def parse_fact_points(lines: Sequence[str]) -> list[tuple[Role, str]]:
    points = []
    for line in lines:
        s = line.strip().lstrip("-*• ").strip()
        if not s or s.casefold().rstrip(".。") in _NONE_LINES:
            continue
        who, sep, question = re.split(r"([:：])", s, maxsplit=1) if re.search(r"[:：]", s) else (s, "", "")
        role = _ANSWERERS.get(who.strip().casefold())
        if not sep or role is None or not question.strip():
            raise FormatError(f"confirmation point needs 'Patient:' or 'Examiner:', got {line!r}")
        points.append((role, question.strip()))
    return points


def _parse_facts(raw: str, need_points: bool) -> tuple[str, str, list[tuple[Role, str]]]:
    blocks = _fact_blocks(raw)
    if "symptoms" not in blocks or "examinations" not in blocks:
        raise FormatError("fact summary needs symptoms and examinations sections")
    if need_points and "confirm" not in blocks:
        raise FormatError("fact summary needs a points-to-confirm section")
    points = parse_fact_points(blocks.get("confirm", [])) if need_points else []
    return "\n".join(blocks["symptoms"]).strip(), "\n".join(blocks["examinations"]).strip(), points


def _doctor_facts(pre: PreDiagnosis, language: str) -> str:
    return "\n\n".join(
        f"## {d}\n{r.render(language, (Section.SYMPTOMS, Section.EXAMINATIONS), level=3)}"
        for d, r in pre.reports.items()
    )


def exchange_facts(
    pre: PreDiagnosis,
    chief: ChiefPhysicianAgent,
    patient: PatientAgent | None = None,
    examiner: ExaminerAgent | None = None,
    language: str = "en",
) -> FactSummary:
    """Consolidate the doctors' facts; each disputed fact is confirmed with the Patient or Examiner."""
    if len(pre) < 1:
        raise ValueError("exchange_facts needs at least one doctor")
    system = get_template("fact_consolidate", language).render()
    messages = [user(_doctor_facts(pre, language))]
    raw = chief.backend.generate(system, messages, chief.params)
    symptoms, exams, points = _parse_facts(raw, need_points=True)
    if not points:
        return FactSummary(symptoms, exams)
    confirmations = []
    for role, question in points:
        if role == Role.PATIENT:
            if patient is None:
                raise ValueError("a patient agent is needed to confirm symptoms")
            answer = patient.answer(question, asker=Role.CHIEF)
        else:
            if examiner is None:
                raise ValueError("an examiner agent is needed to confirm examinations")
            answer, _ = examiner.respond(question)
        confirmations.append(Confirmation(question, role, answer))
    qa = "\n\n".join(f"[{c.answerer.value}] Q: {c.question}\nA: {c.answer}" for c in confirmations)
    synth = chief.backend.generate(
        get_template("fact_synthesize", language).render(),
        [*messages, assistant(raw), user(qa)],
        chief.params,
    )
    symptoms, exams, _ = _parse_facts(synth, need_points=False)
    return FactSummary(symptoms, exams, tuple(confirmations))


# disputes

_NUMBERED = re.compile(r"(?:^|\s)[(（]\s*(\d{1,2})\s*[)）]|^\s*(\d{1,2})\s*[.、)]\s", re.MULTILINE)


def parse_dispute_list(raw: str, cap: int = MAX_DISPUTES) -> DisputeList:
    lines = [l.strip() for l in raw.strip().splitlines() if l.strip()]
    if lines and all(l == CONSENSUS_SENTINEL for l in lines):
        return DisputeList()
    marks = list(_NUMBERED.finditer(raw))
    if not marks:
        raise FormatError("moderator output has neither numbered disputes nor NONE")
    items = []
    for m, nxt in zip(marks, [*marks[1:], None]):
        text = raw[m.end() : nxt.start() if nxt else len(raw)].strip()
        if text:
            items.append(" ".join(text.split()))
    if not items:
        raise FormatError("numbered disputes are empty")
    if len(items) > cap:
        log.warning("moderator listed %d disputes; keeping the first %d", len(items), cap)
        items = items[:cap]
    return DisputeList(tuple(items))


def parse_probe(raw: str) -> bool:
    """Binary consensus probe used without dispute resolution: True means consensus."""
    first = next((l.strip() for l in raw.splitlines() if l.strip()), "")
    word = first.strip(".。*# ").upper()
    if word == CONSENSUS_SENTINEL:
        return True
    if word == "CONTINUE":
        return False
    raise FormatError(f"consensus probe must answer NONE or CONTINUE, got {first!r}")


def _reports_message(reports: Mapping[str, DiagnosticReport], language: str) -> str:
    return "\n\n".join(
        f"## {d}\n{r.render(language, REVISED_SECTIONS, level=3)}" for d, r in reports.items()
    )


def _moderator_call(history: DiscussionHistory, chief: ChiefPhysicianAgent, doctors: Sequence[str],
                    template: str, language: str) -> str:
    reports = history.latest_reports()
    missing = [d for d in doctors if d not in reports]
    if missing:
        raise ValueError(f"no statements yet from {missing}")
    facts = history.facts()
    system = get_template(template, language).render(
        doctors=", ".join(doctors), facts=facts.render(language) if facts else ""
    )
    return chief.backend.generate(system, [user(_reports_message({d: reports[d] for d in doctors}, language))],
                                  chief.params)


def summarize_disputes(
    history: DiscussionHistory, chief: ChiefPhysicianAgent, doctors: Sequence[str], language: str = "en"
) -> DisputeList:
    return parse_dispute_list(_moderator_call(history, chief, doctors, "moderator", language))


def probe_consensus(
    history: DiscussionHistory, chief: ChiefPhysicianAgent, doctors: Sequence[str], language: str = "en"
) -> bool:
    return parse_probe(_moderator_call(history, chief, doctors, "moderator_probe", language))


# revision and final report

_DISPUTE_INTRO = {"en": "Controversial points raised by the medical director:", "zh": "主任医生提出的争议点："}
_PEER_INTRO = {"en": "Diagnostic reports from the other doctors:", "zh": "其他医生的诊断报告："}


def revise_report(
    doctor_id: str,
    own_report: DiagnosticReport,
    peer_reports: Mapping[str, DiagnosticReport],
    disputes: DisputeList,
    facts: FactSummary,
    backend: Backend,
    language: str = "en",
    params: GenerationParams | None = None,
) -> DiagnosticReport:
    """Revised results/rationales/treatment merged over the doctor's own symptom and exam sections."""
    system = get_template("collab_doctor", language).render(
        doctor_name=doctor_id,
        facts=facts.render(language),
        own_report=own_report.render(language, REVISED_SECTIONS, level=2),
    )
    parts = [f"{_PEER_INTRO[language]}\n\n{_reports_message(peer_reports, language)}"]
    if disputes.items:
        parts.append(f"{_DISPUTE_INTRO[language]}\n{disputes.render()}")
    messages = [user("\n\n".join(parts))]
    params = params or GenerationParams()
    raw = backend.generate(system, messages, params)
    try:
        return own_report.replace(parse_sections(raw, REVISED_SECTIONS))
    except MissingSection:
        pass
    messages += [assistant(raw), user(get_template("revision_reminder", language).render())]
    raw = backend.generate(system, messages, params)
    try:
        return own_report.replace(parse_sections(raw, REVISED_SECTIONS))
    except MissingSection as exc:
        raise RevisionParseError(f"{doctor_id}: revision unreadable after reminder ({exc})") from exc


def finalize(
    history: DiscussionHistory, chief: ChiefPhysicianAgent, language: str = "en"
) -> DiagnosticReport:
    facts = history.facts()
    system = get_template("finalize", language).render(facts=facts.render(language) if facts else "")
    messages = [user(history.render(language))]
    raw = chief.backend.generate(system, messages, chief.params)
    try:
        return DiagnosticReport.from_sections(parse_sections(raw))
    except MissingSection:
        pass
    messages += [assistant(raw), user(get_template("finalize_reminder", language).render())]
    raw = chief.backend.generate(system, messages, chief.params)
    try:
        return DiagnosticReport.from_sections(parse_sections(raw))
    except MissingSection as exc:
        raise FinalizeParseError(f"final report unreadable after reminder ({exc})") from exc


# the loop

def run_collaboration(
    pre: PreDiagnosis,
    config: CollabConfig,
    chief: ChiefPhysicianAgent,
    doctors: Mapping[str, Backend],
    patient: PatientAgent | None = None,
    examiner: ExaminerAgent | None = None,
) -> CollabResult:
    ids = pre.doctors
    if set(doctors) != set(ids):
        raise ValueError(f"doctor backends {sorted(doctors)} do not match pre-diagnoses {sorted(ids)}")
    lang = config.language
    history = DiscussionHistory()
    for d in ids:
        history.append(PreDiagnosisEntry(d, pre.reports[d]))
    counts: list[int] = []

    def check(m: int) -> bool:
        if config.dispute_resolution:
            disputes = summarize_disputes(history, chief, ids, lang)
            history.append(DisputeEntry(m, disputes))
            counts.append(len(disputes))
            return disputes.consensus
        agreed = probe_consensus(history, chief, ids, lang)
        counts.append(0 if agreed else 1)
        return agreed

    try:
        facts = exchange_facts(pre, chief, patient, examiner, lang)
        history.append(FactEntry(facts))
        consensus = check(0)
        m = 0
        while not consensus and m < config.M:
            m += 1
            current = history.latest_reports()
            last = history.entries[-1]
            disputes = last.disputes if isinstance(last, DisputeEntry) else DisputeList()

            def revise(d: str) -> DiagnosticReport:
                peers = {p: current[p] for p in ids if p != d}
                return revise_report(d, current[d], peers, disputes, facts, doctors[d], lang, config.doctor_params)

            if config.parallelism > 1 and len(ids) > 1:
                with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
                    revised = list(pool.map(revise, ids))
            else:
                revised = [revise(d) for d in ids]
            for d, report in zip(ids, revised):
                history.append(DoctorStatement(m, d, report))
            consensus = check(m)
        final = finalize(history, chief, lang)
    except (BackendError, FormatError, RevisionParseError, FinalizeParseError, ValueError) as exc:
        raise CollaborationError(exc, history) from exc
    return CollabResult(final, m, history, consensus, counts)


def rounds_histogram(results: Sequence[CollabResult], M: int) -> dict[str, int]:
    """Counts of discussion rounds needed for consensus; unconverged runs are counted separately."""
    hist = {str(k): 0 for k in range(M + 1)}
    hist["unconverged"] = 0
    for r in results:
        hist[str(r.rounds_used) if r.converged else "unconverged"] += 1
    return hist
