"""Patient, Examiner, Doctor and Chief Physician behaviour over the backend interface."""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable, Sequence

from .backends import Backend, ChatMessage, FunctionBackend, GenerationParams, assistant, user
from .errors import FormatError, NoItemsRequested, SchemaError
from .evaluation.judge import RubricScores, judge_report
from .evaluation.linking import normalize_mention
from .evaluation.report import DiagnosticReport
from .protocol import DEFAULT_ROUTING, Role, RoutingConfig, Transcript, Utterance, history_for, parse_utterance
from .records import (
    Examination,
    MedicalRecord,
    PatientView,
    describe_subjective,
    partition_views,
)
from .templates import get_template

NO_ABNORMALITIES = {"en": "No abnormalities", "zh": "无异常"}


# exam vocabulary

class ExamVocabulary:
    """Canonical examination names with aliases, shared by extraction and view matching."""

    def __init__(self, entries: dict[str, Iterable[str]]) -> None:
        self.canonical_names = list(entries)
        self._index: dict[str, str] = {}
        for canonical, aliases in entries.items():
            for name in (canonical, *aliases):
                key = normalize_mention(name)
                if key:
                    self._index.setdefault(key, canonical)
        # longest phrases first so "abdominal ct" wins over a shorter overlap
        self._phrases = sorted(self._index, key=len, reverse=True)

    def canonical(self, name: str) -> str | None:
        return self._index.get(normalize_mention(name))

    def key(self, name: str) -> str:
        c = self.canonical(name)
        return normalize_mention(c if c is not None else name)

    def find(self, text: str) -> list[str]:
        """Canonical names of every vocabulary phrase in ``text``, in order of appearance."""
        norm = normalize_mention(text)
        padded = f" {norm} "
        hits: list[tuple[int, int, str]] = []
        for phrase in self._phrases:
            cjk = any(_is_cjk(ch) for ch in phrase)
            needle = phrase if cjk else f" {phrase} "
            start = 0
            while True:
                i = padded.find(needle, start)
                if i < 0:
                    break
                hits.append((i, len(needle), self._index[phrase]))
                start = i + 1
        hits.sort(key=lambda h: (h[0], -h[1]))
        out: list[str] = []
        covered_until = -1
        for pos, length, canonical in hits:
            if pos < covered_until:
                continue
            covered_until = pos + length - 1
            if canonical not in out:
                out.append(canonical)
        return out

    @classmethod
    def from_tsv(cls, text: str) -> ExamVocabulary:
        entries: dict[str, list[str]] = {}
        for line in text.splitlines():
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            aliases = [a.strip() for a in cols[1].split("|")] if len(cols) > 1 else []
            entries[cols[0].strip()] = [a for a in aliases if a]
        return cls(entries)


def _is_cjk(ch: str) -> bool:
    return "CJK" in unicodedata.name(ch, "")


@lru_cache(maxsize=1)
def default_vocabulary() -> ExamVocabulary:
    text = (resources.files("wardsim") / "fixtures" / "exam_names.tsv").read_text(encoding="utf-8")
    return ExamVocabulary.from_tsv(text)


# examiner step 1: which examinations were requested

@dataclass(frozen=True)
class ExamItem:
    name: str

    def __post_init__(self) -> None:
        if not self.name.strip():
            raise ValueError("exam item name must be non-empty")


_ITEMS_HEADER = re.compile(
    r"^\s*#+\s*(?:medical\s+)?examination\s+items?\s*$|^\s*#+\s*(?:检查项目|医学检查项目)\s*$",
    re.IGNORECASE,
)
_NONE_ITEMS = {"none", "无", "n/a", "no"}

ITEMS_HEADER = {"en": "# Examination Item", "zh": "# 检查项目"}
NONE_ITEM = {"en": "None", "zh": "无"}


def parse_exam_items(text: str) -> list[ExamItem]:
    lines = text.splitlines()
    start = next((i for i, l in enumerate(lines) if _ITEMS_HEADER.match(l)), None)
    if start is None:
        raise FormatError("examination item block header not found")
    items: list[ExamItem] = []
    for line in lines[start + 1 :]:
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            break
        if not s.startswith(("-", "*", "•")):
            break
        name = s.lstrip("-*• ").strip()
        if name.casefold().rstrip(".。") in _NONE_ITEMS:
            continue
        if name:
            items.append(ExamItem(name))
    return items


def format_exam_items(names: Sequence[str], language: str = "en") -> str:
    body = [f"- {n}" for n in names] or [f"- {NONE_ITEM[language]}"]
    return "\n".join([ITEMS_HEADER[language], *body])


def rule_extractor_backend(
    vocabulary: ExamVocabulary | None = None, language: str = "en", name: str = "rule-extractor"
) -> FunctionBackend:
    """Offline step-1 extractor: dictionary phrase matching on the latest request."""
    vocab = vocabulary or default_vocabulary()
    return FunctionBackend(lambda query: format_exam_items(vocab.find(query), language), name=name)


def examiner_extract_items(
    query: str, backend: Backend, language: str = "en", params: GenerationParams | None = None
) -> list[ExamItem]:
    if not query or not query.strip():
        raise ValueError("empty examination request")
    system = get_template("examiner_extract", language).render()
    raw = backend.generate(system, [user(query)], params or GenerationParams(temperature=0.0))
    return parse_exam_items(raw)


# examiner step 2: report findings for requested items

def examiner_report(
    items: Sequence[ExamItem],
    view: Sequence[Examination],
    vocabulary: ExamVocabulary | None = None,
    language: str = "en",
) -> str:
    if not items:
        raise NoItemsRequested("no examination items requested")
    vocab = vocabulary or default_vocabulary()
    by_key: dict[str, Examination] = {}
    for exam in view:
        by_key.setdefault(vocab.key(exam.name), exam)
    blocks: list[str] = []
    reported: set[str] = set()
    for item in items:
        key = vocab.key(item.name)
        exam = by_key.get(key)
        if exam is None:
            blocks.append(f"{item.name}: {NO_ABNORMALITIES[language]}")
            continue
        if key in reported:
            continue
        reported.add(key)
        lines = [f"# {exam.name}"]
        lines += [f"- {i}: {v}" for i, v in exam.findings] or [f"- {NO_ABNORMALITIES[language]}"]
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)


# message formatting

def _speaker_tag(role: Role) -> str:
    return {Role.PATIENT: "Patient", Role.DOCTOR: "Doctor", Role.EXAMINER: "Examiner", Role.CHIEF: "Chief Physician"}[role]


def _as_messages(history: Sequence[Utterance], me: Role, routing: RoutingConfig) -> list[ChatMessage]:
    out = []
    for u in history:
        if u.speaker == me:
            text = u.content
            if me == Role.PATIENT:
                text = f"{routing.token_for(u.addressee)} {u.content}".strip()
                if u.terminal:
                    text = f"{text} {routing.end_token}"
            out.append(assistant(text or "..."))
        else:
            out.append(user(f"[{_speaker_tag(u.speaker)}] {u.content}"))
    return out


# agents

@dataclass
class PatientAgent:
    view: PatientView
    backend: Backend
    routing: RoutingConfig = DEFAULT_ROUTING
    language: str = "en"
    params: GenerationParams = field(default_factory=GenerationParams)

    @classmethod
    def from_record(cls, record: MedicalRecord, backend: Backend, **kw) -> PatientAgent:
        return cls(partition_views(record, kw.get("language", "en")).patient_view, backend, **kw)

    def system_prompt(self) -> str:
        return get_template("patient", self.language).render(
            persona=self.view.persona,
            basic_info=describe_subjective(self.view.subjective, self.language),
            doctor_token=self.routing.token_for(Role.DOCTOR),
            examiner_token=self.routing.token_for(Role.EXAMINER),
            end_token=self.routing.end_token,
        )

    def answer(self, question: str, asker: Role = Role.CHIEF) -> str:
        """Answer a one-off question outside the consultation (fact confirmation)."""
        raw = self.backend.generate(
            self.system_prompt(), [user(f"[{_speaker_tag(asker)}] {question}")], self.params
        )
        return parse_utterance(raw, Role.PATIENT, self.routing, last_interlocutor=asker).content


@dataclass
class ExaminerAgent:
    view: tuple[Examination, ...]
    backend: Backend
    language: str = "en"
    vocabulary: ExamVocabulary = field(default_factory=default_vocabulary)
    params: GenerationParams = field(default_factory=lambda: GenerationParams(temperature=0.0))

    @classmethod
    def from_record(cls, record: MedicalRecord, backend: Backend | None = None, **kw) -> ExaminerAgent:
        language = kw.get("language", "en")
        return cls(partition_views(record).examiner_view, backend or rule_extractor_backend(language=language), **kw)

    def respond(self, query: str) -> tuple[str, list[ExamItem]]:
        """Findings for explicitly requested examinations, or a request to be specific."""
        items = examiner_extract_items(query, self.backend, self.language, self.params)
        if not items:
            return get_template("examiner_reject", self.language).render(), []
        return examiner_report(items, self.view, self.vocabulary, self.language), items


@dataclass
class DoctorAgent:
    backend: Backend
    name: str = "doctor"
    language: str = "en"
    routing: RoutingConfig = DEFAULT_ROUTING
    params: GenerationParams = field(default_factory=GenerationParams)

    def system_prompt(self) -> str:
        return get_template("doctor", self.language).render()


@dataclass
class ChiefPhysicianAgent:
    """Judge (with the full record) or discussion moderator (without one)."""

    backend: Backend
    chief_view: MedicalRecord | None = None
    language: str = "en"
    params: GenerationParams = field(default_factory=lambda: GenerationParams(temperature=0.0))

    def judge(self, report: DiagnosticReport) -> RubricScores:
        if self.chief_view is None:
            raise ValueError("judging needs the full record")
        return judge_report(report, self.chief_view, self.backend, self.language, self.params)


# operations

def make_persona(record: MedicalRecord, backend: Backend, language: str = "en",
                 params: GenerationParams | None = None) -> str:
    if record.subjective.is_empty():
        raise SchemaError("subjective", "persona generation needs subjective content")
    system = get_template("persona", language).render(basic_info=describe_subjective(record.subjective, language))
    request = get_template("persona_request", language).render()
    return backend.generate(system, [user(request)], params or GenerationParams()).strip()


def make_chief_complaint(
    record: MedicalRecord,
    backend: Backend,
    language: str = "en",
    routing: RoutingConfig = DEFAULT_ROUTING,
    params: GenerationParams | None = None,
) -> Utterance:
    """Opening patient utterance; a recorded hint is used verbatim without a backend call."""
    view = partition_views(record, language).patient_view
    if view.subjective.is_empty():
        raise SchemaError("subjective", "no patient-visible content")
    hint = view.subjective.chief_complaint_hint
    if hint and hint.strip():
        return Utterance(Role.PATIENT, Role.DOCTOR, hint.strip())
    system = get_template("chief_complaint", language).render(
        persona=view.persona, basic_info=describe_subjective(view.subjective, language)
    )
    raw = backend.generate(system, [user(get_template("chief_complaint_request", language).render())],
                           params or GenerationParams())
    parsed = parse_utterance(raw, Role.PATIENT, routing, last_interlocutor=Role.DOCTOR)
    return Utterance(Role.PATIENT, Role.DOCTOR, parsed.content)


def patient_turn(agent: PatientAgent, history: Sequence[Utterance], last_interlocutor: Role | None = None) -> Utterance:
    if last_interlocutor is None:
        last_interlocutor = next(
            (u.speaker for u in reversed(history) if u.addressee == Role.PATIENT), None
        )
    messages = _as_messages(history, Role.PATIENT, agent.routing)
    raw = agent.backend.generate(agent.system_prompt(), messages, agent.params)
    return parse_utterance(raw, Role.PATIENT, agent.routing, last_interlocutor=last_interlocutor)


def doctor_turn(agent: DoctorAgent, history: Sequence[Utterance]) -> Utterance:
    messages = _as_messages(history, Role.DOCTOR, agent.routing)
    raw = agent.backend.generate(agent.system_prompt(), messages, agent.params).strip()
    token = agent.routing.token_for(Role.PATIENT)
    if raw.casefold().startswith(token.casefold()):
        raw = raw[len(token):].strip()
    return Utterance(Role.DOCTOR, Role.PATIENT, raw)


def solicit_report(doctor: DoctorAgent, transcript: Transcript | Sequence[Utterance], reminder: bool = False) -> str:
    """Ask the doctor for the five-section summary; ``reminder`` uses the stricter wording."""
    utterances = transcript.utterances if isinstance(transcript, Transcript) else list(transcript)
    if not utterances:
        raise ValueError("cannot solicit a report from an empty transcript")
    history = history_for(utterances, Role.DOCTOR)
    messages = _as_messages(history, Role.DOCTOR, doctor.routing)
    template = "report_reminder" if reminder else "report_request"
    messages.append(user(get_template(template, doctor.language).render()))
    return doctor.backend.generate(doctor.system_prompt(), messages, doctor.params)
