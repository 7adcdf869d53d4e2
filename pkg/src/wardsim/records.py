"""Medical records: schema, parsing, canonical rendering and role-scoped views.

A record is split into what the patient can say (subjective), what only an
examination reveals (objective) and the reference diagnosis. Each agent is
built from exactly one of these views.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping

from .errors import DuplicateId, SchemaError

DEFAULT_PERSONA = {
    "en": "An ordinary patient who answers plainly, briefly and honestly.",
    "zh": "一位普通患者，说话朴实、简短且诚实。",
}

SUBJECTIVE_FIELDS = ("present_illness", "past_history", "personal_history", "basic_profile")


@dataclass(frozen=True)
class SubjectiveInfo:
    present_illness: str = ""
    past_history: str = ""
    personal_history: str = ""
    basic_profile: str = ""
    chief_complaint_hint: str | None = None

    def is_empty(self) -> bool:
        values = [getattr(self, name) for name in SUBJECTIVE_FIELDS]
        values.append(self.chief_complaint_hint or "")
        return not any(v.strip() for v in values)


@dataclass(frozen=True)
class Examination:
    name: str
    findings: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class ReferenceDiagnosis:
    results: tuple[str, ...]
    rationales: str = ""
    treatment: str = ""


@dataclass(frozen=True)
class MedicalRecord:
    id: str
    department: str
    subjective: SubjectiveInfo
    objective: tuple[Examination, ...]
    reference: ReferenceDiagnosis
    persona: str | None = None

    def effective_persona(self, language: str = "en") -> str:
        if self.persona and self.persona.strip():
            return self.persona
        return DEFAULT_PERSONA[language]


@dataclass(frozen=True)
class PatientView:
    subjective: SubjectiveInfo
    persona: str


@dataclass(frozen=True)
class DoctorView:
    """The doctor starts with no record content at all."""

    def is_empty(self) -> bool:
        return True


@dataclass(frozen=True)
class AccessViews:
    patient_view: PatientView
    examiner_view: tuple[Examination, ...]
    chief_view: MedicalRecord
    doctor_view: DoctorView = field(default_factory=DoctorView)


def _require_str(obj: Mapping[str, Any], key: str, path: str, *, allow_empty: bool = True) -> str:
    if key not in obj:
        raise SchemaError(f"{path}{key}", "missing")
    value = obj[key]
    if not isinstance(value, str):
        raise SchemaError(f"{path}{key}", "expected a string")
    if not allow_empty and not value.strip():
        raise SchemaError(f"{path}{key}", "must be non-empty")
    return value


def _optional_str(obj: Mapping[str, Any], key: str, path: str) -> str | None:
    value = obj.get(key)
    if value is None:
        return None
    if not isinstance(value, str):
        raise SchemaError(f"{path}{key}", "expected a string")
    return value


def record_from_dict(data: Mapping[str, Any]) -> MedicalRecord:
    if not isinstance(data, Mapping):
        raise SchemaError("record", "expected a JSON object")
    record_id = _require_str(data, "id", "", allow_empty=False)
    department = _require_str(data, "department", "", allow_empty=False)

    subj = data.get("subjective")
    if not isinstance(subj, Mapping):
        raise SchemaError("subjective", "missing or not an object")
    subjective = SubjectiveInfo(
        present_illness=_optional_str(subj, "present_illness", "subjective.") or "",
        past_history=_optional_str(subj, "past_history", "subjective.") or "",
        personal_history=_optional_str(subj, "personal_history", "subjective.") or "",
        basic_profile=_optional_str(subj, "basic_profile", "subjective.") or "",
        chief_complaint_hint=_optional_str(subj, "chief_complaint_hint", "subjective."),
    )
    if subjective.is_empty():
        raise SchemaError("subjective", "at least one field must be non-empty")

    objective_raw = data.get("objective")
    if not isinstance(objective_raw, list):
        raise SchemaError("objective", "missing or not a list")
    exams = []
    for i, exam in enumerate(objective_raw):
        path = f"objective[{i}]."
        if not isinstance(exam, Mapping):
            raise SchemaError(f"objective[{i}]", "expected an object")
        name = _require_str(exam, "name", path, allow_empty=False)
        findings_raw = exam.get("findings", [])
        if not isinstance(findings_raw, list):
            raise SchemaError(f"{path}findings", "expected a list")
        findings = []
        for j, f in enumerate(findings_raw):
            fpath = f"{path}findings[{j}]."
            if not isinstance(f, Mapping):
                raise SchemaError(f"{path}findings[{j}]", "expected an object")
            findings.append((_require_str(f, "item", fpath), _require_str(f, "value", fpath)))
        exams.append(Examination(name=name, findings=tuple(findings)))

    ref = data.get("reference")
    if not isinstance(ref, Mapping):
        raise SchemaError("reference", "missing or not an object")
    results = ref.get("results")
    if not isinstance(results, list) or not all(isinstance(r, str) for r in results):
        raise SchemaError("reference.results", "expected a list of strings")
    if not [r for r in results if r.strip()]:
        raise SchemaError("reference.results", "must be non-empty")
    reference = ReferenceDiagnosis(
        results=tuple(results),
        rationales=_optional_str(ref, "rationales", "reference.") or "",
        treatment=_optional_str(ref, "treatment", "reference.") or "",
    )
    return MedicalRecord(
        id=record_id,
        department=department,
        subjective=subjective,
        objective=tuple(exams),
        reference=reference,
        persona=_optional_str(data, "persona", ""),
    )


def record_to_dict(record: MedicalRecord) -> dict[str, Any]:
    subj: dict[str, Any] = {}
    if record.subjective.chief_complaint_hint is not None:
        subj["chief_complaint_hint"] = record.subjective.chief_complaint_hint
    for name in SUBJECTIVE_FIELDS:
        subj[name] = getattr(record.subjective, name)
    out: dict[str, Any] = {
        "id": record.id,
        "department": record.department,
        "subjective": subj,
        "objective": [
            {"name": e.name, "findings": [{"item": i, "value": v} for i, v in e.findings]}
            for e in record.objective
        ],
        "reference": {
            "results": list(record.reference.results),
            "rationales": record.reference.rationales,
            "treatment": record.reference.treatment,
        },
    }
    if record.persona is not None:
        out["persona"] = record.persona
    return out


def parse_record(raw: str) -> MedicalRecord:
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaError("record", f"invalid JSON: {exc}") from exc
    return record_from_dict(data)


def render_record(record: MedicalRecord) -> str:
    """Canonical text form: 2-space indented JSON, fixed key order, trailing newline."""
    return json.dumps(record_to_dict(record), ensure_ascii=False, indent=2) + "\n"


def with_persona(record: MedicalRecord, persona: str) -> MedicalRecord:
    return MedicalRecord(
        id=record.id,
        department=record.department,
        subjective=record.subjective,
        objective=record.objective,
        reference=record.reference,
        persona=persona,
    )


def partition_views(record: MedicalRecord, language: str = "en") -> AccessViews:
    return AccessViews(
        patient_view=PatientView(record.subjective, record.effective_persona(language)),
        examiner_view=record.objective,
        chief_view=record,
        doctor_view=DoctorView(),
    )


_LABELS = {
    "en": {
        "chief_complaint_hint": "Chief complaint",
        "present_illness": "Present illness",
        "past_history": "Past medical history",
        "personal_history": "Personal history",
        "basic_profile": "Basic profile",
    },
    "zh": {
        "chief_complaint_hint": "主诉",
        "present_illness": "现病史",
        "past_history": "既往史",
        "personal_history": "个人史",
        "basic_profile": "基本信息",
    },
}


def describe_subjective(subjective: SubjectiveInfo, language: str = "en") -> str:
    labels = _LABELS[language]
    lines = []
    if subjective.chief_complaint_hint:
        lines.append(f"{labels['chief_complaint_hint']}: {subjective.chief_complaint_hint}")
    for name in ("basic_profile",) + SUBJECTIVE_FIELDS[:3]:
        value = getattr(subjective, name)
        if value.strip():
            lines.append(f"{labels[name]}: {value}")
    return "\n".join(lines)


def describe_examinations(exams: Iterable[Examination]) -> str:
    blocks = []
    for exam in exams:
        lines = [f"# {exam.name}"]
        lines.extend(f"- {item}: {value}" for item, value in exam.findings)
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)


# corpus handling

@dataclass(frozen=True)
class ManifestEntry:
    """Id/department pair; enough for department statistics without full records."""

    id: str
    department: str


@dataclass(frozen=True)
class DepartmentHistogram:
    counts: dict[str, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def corpus_stats(corpus: Iterable[MedicalRecord | ManifestEntry]) -> DepartmentHistogram:
    seen: set[str] = set()
    counts: Counter[str] = Counter()
    for rec in corpus:
        if rec.id in seen:
            raise DuplicateId(rec.id)
        seen.add(rec.id)
        counts[rec.department] += 1
    return DepartmentHistogram(dict(counts))


def load_corpus(path: str | Path) -> list[MedicalRecord]:
    """Load a directory of ``*.json`` records (sorted by name) or a JSON-Lines file."""
    path = Path(path)
    if path.is_dir():
        records = [parse_record(p.read_text(encoding="utf-8")) for p in sorted(path.glob("*.json"))]
    else:
        records = []
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                records.append(record_from_dict(json.loads(line)))
            except json.JSONDecodeError as exc:
                raise SchemaError(f"line {lineno}", f"invalid JSON: {exc}") from exc
    corpus_stats(records)  # rejects duplicate ids
    return records


def load_manifest(path: str | Path) -> list[ManifestEntry]:
    entries = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            obj = json.loads(line)
            entries.append(ManifestEntry(id=obj["id"], department=obj["department"]))
    return entries


# Third-party corpus formats plug in here; nothing is registered by default.
_IMPORTERS: dict[str, Callable[[Mapping[str, Any]], MedicalRecord]] = {}


def register_importer(name: str, fn: Callable[[Mapping[str, Any]], MedicalRecord]) -> None:
    _IMPORTERS[name] = fn


def import_record(name: str, data: Mapping[str, Any]) -> MedicalRecord:
    try:
        fn = _IMPORTERS[name]
    except KeyError:
        raise KeyError(f"no importer registered under {name!r}") from None
    return fn(data)
