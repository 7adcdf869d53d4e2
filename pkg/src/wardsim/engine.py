"""Consultation sessions: chief complaint, routed turn loop, termination, report solicitation."""

from __future__ import annotations

import dataclasses
import enum
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .agents import (
    DoctorAgent,
    ExaminerAgent,
    PatientAgent,
    default_vocabulary,
    doctor_turn,
    make_chief_complaint,
    patient_turn,
    rule_extractor_backend,
    solicit_report,
)
from .backends import Backend, GenerationParams
from .errors import BackendError, FormatError, MissingSection, SessionAborted
from .evaluation.report import DiagnosticReport, parse_report
from .protocol import DEFAULT_ROUTING, Role, RoutingConfig, Transcript, Utterance, history_for
from .records import MedicalRecord, partition_views
from .templates import get_template, load_templates

log = logging.getLogger(__name__)

DEFAULT_MAX_ROUNDS = 10
# Patient->Examiner queries allowed inside one round before the round is cut short.
DEFAULT_EXAMINER_QUERY_CAP = 5


class Termination(str, enum.Enum):
    END_TOKEN = "EndToken"
    MAX_ROUNDS = "MaxRounds"
    ABORTED = "Aborted"


def _default_params() -> dict[Role, GenerationParams]:
    return {
        Role.PATIENT: GenerationParams(),
        Role.DOCTOR: GenerationParams(),
        Role.EXAMINER: GenerationParams(temperature=0.0),
        Role.CHIEF: GenerationParams(temperature=0.0),
    }


@dataclass(frozen=True)
class SessionConfig:
    max_rounds: int = DEFAULT_MAX_ROUNDS
    routing: RoutingConfig = DEFAULT_ROUTING
    language: str = "en"
    params: Mapping[Role, GenerationParams] = field(default_factory=_default_params)
    examiner_query_cap: int = DEFAULT_EXAMINER_QUERY_CAP

    def __post_init__(self) -> None:
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if self.language not in ("en", "zh"):
            raise ValueError(f"unsupported language {self.language!r}")
        if self.examiner_query_cap < 1:
            raise ValueError("examiner_query_cap must be >= 1")
        object.__setattr__(self, "params", {**_default_params(), **{Role(k): v for k, v in self.params.items()}})

    def params_for(self, role: Role, seed: int | None = None) -> GenerationParams:
        p = self.params[role]
        return p if seed is None else dataclasses.replace(p, seed=seed)

    def to_dict(self) -> dict[str, Any]:
        return {
            "max_rounds": self.max_rounds,
            "language": self.language,
            "routing": {
                "addressee_tokens": {r.value: t for r, t in self.routing.addressee_tokens.items()},
                "end_token": self.routing.end_token,
            },
            "params": {r.value: dataclasses.asdict(p) for r, p in self.params.items()},
            "examiner_query_cap": self.examiner_query_cap,
        }


@dataclass
class NPCBackends:
    """Session-local backends for the framework-controlled roles."""

    patient: Backend
    examiner: Backend | None = None  # step-1 extractor; rule-based when absent


@dataclass
class SessionResult:
    record_id: str
    transcript: Transcript
    report_raw: str | None
    report: DiagnosticReport | None
    rounds_used: int
    termination: Termination
    errors: list[str] = field(default_factory=list)
    doctor: str = "doctor"

    def to_dict(self) -> dict[str, Any]:
        return {
            "record_id": self.record_id,
            "doctor": self.doctor,
            "rounds_used": self.rounds_used,
            "termination": self.termination.value,
            "errors": list(self.errors),
            "report_raw": self.report_raw,
            "report": self.report.to_dict() if self.report else None,
            "transcript_sha256": self.transcript.digest(),
        }


def _claim(backend: Backend, owner: str) -> None:
    claim = getattr(backend, "claim", None)
    if claim is not None:
        claim(owner)


def _solicit(doctor: DoctorAgent, transcript: Transcript, errors: list[str]) -> tuple[str, DiagnosticReport | None]:
    raw = solicit_report(doctor, transcript)
    try:
        return raw, parse_report(raw)
    except MissingSection as exc:
        errors.append(f"report parse failed ({exc}); retrying with reminder")
    raw = solicit_report(doctor, transcript, reminder=True)
    try:
        return raw, parse_report(raw)
    except MissingSection as exc:
        errors.append(f"report parse failed after reminder ({exc})")
        return raw, None


def run_consultation(
    record: MedicalRecord,
    doctor: DoctorAgent,
    config: SessionConfig,
    npc: NPCBackends,
    seed: int | None = None,
) -> SessionResult:
    """One doctor consults one simulated patient until ``<end>`` or ``max_rounds`` doctor turns.

    Backend failures raise :class:`SessionAborted` carrying the partial transcript.
    """
    lang = config.language
    for b in (npc.patient, npc.examiner, doctor.backend):
        if b is not None:
            _claim(b, record.id)
    views = partition_views(record, lang)
    patient = PatientAgent(
        views.patient_view, npc.patient, config.routing, lang, config.params_for(Role.PATIENT, seed)
    )
    examiner = ExaminerAgent(
        views.examiner_view,
        npc.examiner or rule_extractor_backend(language=lang),
        lang,
        default_vocabulary(),
        config.params_for(Role.EXAMINER, seed),
    )
    transcript = Transcript(record.id)
    errors: list[str] = []
    rounds = 0
    termination = Termination.MAX_ROUNDS
    try:
        opening = make_chief_complaint(
            record, npc.patient, lang, config.routing, config.params_for(Role.PATIENT, seed)
        )
        transcript.append(opening, 0)
        while rounds < config.max_rounds and termination != Termination.END_TOKEN:
            rounds += 1
            transcript.append(doctor_turn(doctor, history_for(transcript, Role.DOCTOR)), rounds)
            queries = 0
            while True:
                reply = patient_turn(patient, history_for(transcript, Role.PATIENT))
                transcript.append(reply, rounds)
                if reply.terminal:
                    termination = Termination.END_TOKEN
                    break
                if reply.addressee == Role.EXAMINER:
                    queries += 1
                    transcript.append(_examiner_reply(examiner, reply.content, errors), rounds)
                    if queries >= config.examiner_query_cap:
                        errors.append(f"round {rounds}: examiner query cap {config.examiner_query_cap} reached")
                        break
                    continue
                if reply.addressee != Role.DOCTOR:
                    errors.append(f"round {rounds}: patient addressed {reply.addressee.value}, handing back to doctor")
                break
        report_raw, report = _solicit(doctor, transcript, errors)
    except BackendError as exc:
        raise SessionAborted(exc, transcript.snapshot()) from exc
    return SessionResult(record.id, transcript, report_raw, report, rounds, termination, errors, doctor.name)


def _examiner_reply(examiner: ExaminerAgent, query: str, errors: list[str]) -> Utterance:
    try:
        text, _ = examiner.respond(query)
    except FormatError as exc:
        errors.append(f"examiner extraction unreadable ({exc}); treated as no items")
        text = get_template("examiner_reject", examiner.language).render()
    return Utterance(Role.EXAMINER, Role.PATIENT, text)


def aborted_result(record_id: str, exc: BaseException, doctor: str = "doctor") -> SessionResult:
    transcript = exc.transcript if isinstance(exc, SessionAborted) else Transcript(record_id)
    cause = exc.cause if isinstance(exc, SessionAborted) else exc
    rounds = sum(1 for u in transcript.utterances if u.speaker == Role.DOCTOR)
    return SessionResult(
        record_id, transcript, None, None, rounds, Termination.ABORTED,
        [f"{type(cause).__name__}: {cause}"], doctor,
    )


def record_seeds(seed: int, n: int) -> list[int]:
    """Independent per-record seeds derived from one run seed."""
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n)]


DoctorFactory = Callable[[MedicalRecord, int], DoctorAgent]
NPCFactory = Callable[[MedicalRecord, int], NPCBackends]


def run_batch(
    corpus: Sequence[MedicalRecord],
    doctor_factory: DoctorFactory,
    config: SessionConfig,
    npc_factory: NPCFactory,
    parallelism: int = 1,
    seed: int = 0,
) -> list[SessionResult]:
    """Run every record; results keep corpus order and per-record failures are kept in place."""
    if not corpus:
        raise ValueError("corpus must be non-empty")
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    seeds = record_seeds(seed, len(corpus))

    def one(i: int) -> SessionResult:
        record = corpus[i]
        name = "doctor"
        try:
            doctor = doctor_factory(record, seeds[i])
            name = doctor.name
            return run_consultation(record, doctor, config, npc_factory(record, seeds[i]), seeds[i])
        except (SessionAborted, BackendError) as exc:
            log.warning("record %s aborted: %s", record.id, exc)
            return aborted_result(record.id, exc, name)

    results: list[SessionResult | None] = [None] * len(corpus)
    if parallelism == 1:
        for i in range(len(corpus)):
            results[i] = one(i)
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            for i, res in zip(range(len(corpus)), pool.map(one, range(len(corpus)))):
                results[i] = res
    return [r for r in results if r is not None]


# exports

def export_transcripts(results: Sequence[SessionResult]) -> str:
    """All transcripts as JSONL, one utterance per line tagged with its session id."""
    lines = []
    for r in results:
        for line in r.transcript.to_jsonl().splitlines():
            obj = {"session_id": r.transcript.session_id, "doctor": r.doctor, **json.loads(line)}
            lines.append(json.dumps(obj, ensure_ascii=False))
    return "".join(l + "\n" for l in lines)


def import_transcripts(text: str) -> dict[tuple[str, str], Transcript]:
    grouped: dict[tuple[str, str], list[str]] = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        key = (obj.pop("session_id"), obj.pop("doctor", "doctor"))
        grouped.setdefault(key, []).append(json.dumps(obj, ensure_ascii=False))
    return {k: Transcript.from_jsonl(k[0], "\n".join(v)) for k, v in grouped.items()}


def run_manifest(
    config: SessionConfig,
    seed: int,
    record_ids: Sequence[str],
    backends: Mapping[str, Any],
    extra: Mapping[str, Any] | None = None,
) -> dict[str, Any]:
    return {
        "session_config": config.to_dict(),
        "seed": seed,
        "record_seeds": dict(zip(record_ids, record_seeds(seed, len(record_ids)))),
        "template_ids": sorted(load_templates(config.language)),
        "backends": dict(backends),
        **(dict(extra) if extra else {}),
    }
