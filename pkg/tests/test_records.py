import json
import re

import jsonschema
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wardsim.assets import asset_path, corpus_dir
from wardsim.errors import DuplicateId, SchemaError
from wardsim.records import (
    DoctorView,
    ManifestEntry,
    corpus_stats,
    describe_subjective,
    load_corpus,
    load_manifest,
    parse_record,
    partition_views,
    record_from_dict,
    record_to_dict,
    render_record,
    with_persona,
)

MINIMAL = {
    "id": "m-1",
    "department": "Surgery",
    "subjective": {"present_illness": "pain", "past_history": "", "personal_history": "", "basic_profile": ""},
    "objective": [],
    "reference": {"results": ["acute appendicitis"], "rationales": "", "treatment": ""},
}


def test_minimal_round_trip():
    canonical = json.dumps(MINIMAL, indent=2) + "\n"
    assert render_record(parse_record(canonical)) == canonical


def test_case001_shape(case001):
    assert len(case001.objective) == 2
    assert len(case001.reference.results) == 1


def test_fixtures_satisfy_independent_schema(schema):
    files = sorted(corpus_dir().glob("*.json"))
    assert len(files) >= 6
    for path in files:
        jsonschema.validate(json.loads(path.read_text(encoding="utf-8")), schema)


def test_fixture_corpus_spans_departments(corpus):
    assert len({r.department for r in corpus}) >= 3


def test_fixtures_round_trip_byte_identical():
    for path in sorted(corpus_dir().glob("*.json")):
        raw = path.read_text(encoding="utf-8")
        assert render_record(parse_record(raw)) == raw


@pytest.mark.parametrize(
    "mutate, field",
    [
        (lambda d: d.pop("reference"), "reference"),
        (lambda d: d.__setitem__("id", ""), "id"),
        (lambda d: d["reference"].__setitem__("results", []), "reference.results"),
        (lambda d: d["reference"].__setitem__("results", ["  "]), "reference.results"),
        (lambda d: d.__setitem__("subjective", {"present_illness": ""}), "subjective"),
        (lambda d: d.__setitem__("objective", [{"name": ""}]), "objective[0].name"),
        (lambda d: d.__setitem__("objective", "x"), "objective"),
    ],
)
def test_schema_errors_name_the_field(mutate, field):
    d = json.loads(json.dumps(MINIMAL))
    mutate(d)
    with pytest.raises(SchemaError) as info:
        record_from_dict(d)
    assert info.value.field == field


def test_invalid_json():
    with pytest.raises(SchemaError):
        parse_record("{not json")


def test_views(case001):
    v = partition_views(case001)
    assert v.doctor_view == DoctorView() and v.doctor_view.is_empty()
    assert v.chief_view == case001
    assert v.examiner_view == case001.objective
    assert not hasattr(v.patient_view, "objective")


def _sentinels(text, kind):
    return set(re.findall(rf"ZQX-{kind}-\d{{3}}", text))


def test_views_never_leak_sentinels(corpus):
    for r in corpus:
        v = partition_views(r)
        patient_text = describe_subjective(v.patient_view.subjective) + v.patient_view.persona
        examiner_text = json.dumps([record_to_dict(r)["objective"]])
        assert not _sentinels(patient_text, "OBJ") and not _sentinels(patient_text, "REF")
        assert _sentinels(patient_text, "SUBJ")  # positive control
        assert not _sentinels(examiner_text, "SUBJ") and not _sentinels(examiner_text, "REF")
        assert _sentinels(examiner_text, "OBJ")


def test_sentinels_unique_per_section(corpus):
    seen = set()
    for r in corpus:
        d = record_to_dict(r)
        for kind, part in (("SUBJ", d["subjective"]), ("OBJ", d["objective"]), ("REF", d["reference"])):
            found = _sentinels(json.dumps(part), kind)
            assert len(found) == 1
            assert not found & seen
            seen |= found


def test_default_persona_and_override(by_id):
    r = by_id["case-002"]
    assert r.persona is None
    assert partition_views(r).patient_view.persona
    assert partition_views(with_persona(r, "a calm farmer")).patient_view.persona == "a calm farmer"


def test_department_manifest():
    hist = corpus_stats(load_manifest(asset_path("department_manifest.jsonl")))
    assert dict(hist.counts) == {
        "Surgery": 180, "Internal Medicine": 153, "Obstetrics and Gynecology": 94,
        "Pediatrics": 29, "Otorhinolaryngology": 23, "Others": 27,
    }
    assert hist.total == 506


def test_corpus_stats_edge_cases(corpus):
    assert corpus_stats([]).total == 0
    with pytest.raises(DuplicateId):
        corpus_stats([corpus[0], corpus[0]])


@given(st.lists(st.sampled_from(["A", "B", "C", "D"]), max_size=40))
def test_corpus_stats_total_property(depts):
    entries = [ManifestEntry(f"id{i}", d) for i, d in enumerate(depts)]
    hist = corpus_stats(entries)
    assert hist.total == len(entries)
    assert sum(hist.counts.values()) == len(entries)


def test_load_corpus_jsonl(tmp_path, corpus):
    p = tmp_path / "c.jsonl"
    p.write_text("".join(json.dumps(record_to_dict(r)) + "\n" for r in corpus), encoding="utf-8")
    assert load_corpus(p) == load_corpus(corpus_dir())
