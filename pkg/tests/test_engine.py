import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wardsim.agents import DoctorAgent
from wardsim.backends import FunctionBackend
from wardsim.engine import (
    NPCBackends,
    SessionConfig,
    Termination,
    export_transcripts,
    import_transcripts,
    record_seeds,
    run_batch,
    run_consultation,
    run_manifest,
)
from wardsim.errors import Exhausted, SessionAborted
from wardsim.protocol import Role

from conftest import backend, golden_doctor, golden_npc, report_text


def _check_invariants(result, max_rounds):
    utts = result.transcript.utterances
    assert result.rounds_used <= max_rounds
    assert sum(u.speaker == Role.DOCTOR for u in utts) == result.rounds_used
    assert all(not u.terminal for u in utts[:-1])
    if result.termination == Termination.END_TOKEN:
        assert utts[-1].speaker == Role.PATIENT and utts[-1].terminal
    for i, u in enumerate(utts):
        if u.speaker == Role.EXAMINER:
            assert utts[i - 1].speaker == Role.PATIENT and utts[i - 1].addressee == Role.EXAMINER


def test_golden_session(case001, config):
    res = run_consultation(case001, golden_doctor(case001), config, golden_npc(case001))
    assert res.termination == Termination.END_TOKEN
    assert res.rounds_used == 3
    assert res.report is not None and res.errors == []
    assert len(res.report.to_dict()) == 5
    utts = res.transcript.utterances
    assert (utts[0].speaker, utts[0].addressee) == (Role.PATIENT, Role.DOCTOR)
    assert any(u.speaker == Role.EXAMINER for u in utts)
    _check_invariants(res, config.max_rounds)


def test_golden_hash_stable(case001, config):
    digests = {run_consultation(case001, golden_doctor(case001), config, golden_npc(case001)).transcript.digest()
               for _ in range(5)}
    assert len(digests) == 1


def test_never_diagnose_hits_max_rounds(case001):
    cfg = SessionConfig(max_rounds=2)
    doctor = DoctorAgent(backend("Any cough?", "Any fever?", report_text()))
    npc = NPCBackends(backend("I have chest pain.", "<To the doctor> Yes.", "<To the doctor> No."))
    res = run_consultation(case001, doctor, cfg, npc)
    assert res.termination == Termination.MAX_ROUNDS
    assert res.rounds_used == 2
    assert res.report is not None
    _check_invariants(res, 2)


def test_patient_exhausted_aborts_with_partial_transcript(case001, config):
    doctor = DoctorAgent(backend("Any cough?", "Any fever?"))
    npc = NPCBackends(backend("I have chest pain.", "<To the doctor> Yes."))
    with pytest.raises(SessionAborted) as info:
        run_consultation(case001, doctor, config, npc)
    assert isinstance(info.value.cause, Exhausted)
    assert [u.content for u in info.value.transcript.utterances] == [
        "I have chest pain.", "Any cough?", "Yes.", "Any fever?",
    ]


def test_report_retry_then_absent(case001):
    cfg = SessionConfig(max_rounds=1)
    doctor = DoctorAgent(backend("Any cough?", "no sections here", "still nothing"))
    npc = NPCBackends(backend("Chest pain.", "<end>"))
    res = run_consultation(case001, doctor, cfg, npc)
    assert res.report is None and res.report_raw == "still nothing"
    assert len(res.errors) == 2
    assert len(doctor.backend.audit) == 3


def test_report_retry_succeeds(case001):
    doctor = DoctorAgent(backend("Any cough?", "oops", report_text()))
    res = run_consultation(case001, doctor, SessionConfig(max_rounds=1), NPCBackends(backend("x", "<end>")))
    assert res.report is not None and len(res.errors) == 1
    assert "could not be read" in doctor.backend.audit.entries[-1].prompt_text()
    assert res.report_raw == report_text()


def test_examiner_query_cap(case001):
    cfg = SessionConfig(max_rounds=1, examiner_query_cap=2)
    npc = NPCBackends(backend("Chest pain.", "<To the examiner> chest ct", "<To the examiner> lung biopsy"))
    res = run_consultation(case001, DoctorAgent(backend("Q?", report_text())), cfg, npc)
    assert sum(u.speaker == Role.EXAMINER for u in res.transcript.utterances) == 2
    assert any("cap" in e for e in res.errors)
    _check_invariants(res, 1)


def test_patient_misroute_recorded(case001):
    npc = NPCBackends(backend("Pain.", "<To the chief physician> help", "<end>"))
    res = run_consultation(case001, DoctorAgent(backend("Q1?", "Q2?", report_text())), SessionConfig(), npc)
    assert any("chief" in e.lower() for e in res.errors)
    assert res.rounds_used == 2


def test_examiner_format_error_is_recoverable(case001):
    npc = NPCBackends(backend("Pain.", "<To the examiner> CT please", "<end>"), examiner=backend("no header"))
    res = run_consultation(case001, DoctorAgent(backend("Q?", report_text())), SessionConfig(), npc)
    assert res.termination == Termination.END_TOKEN and res.errors


def test_empty_corpus(config):
    with pytest.raises(ValueError):
        run_batch([], golden_doctor, config, golden_npc)


def test_batch_order_and_determinism(corpus, config):
    serial = run_batch(corpus, golden_doctor, config, golden_npc, parallelism=1, seed=7)
    parallel = run_batch(corpus, golden_doctor, config, golden_npc, parallelism=4, seed=7)
    assert [r.record_id for r in parallel] == [r.id for r in corpus]
    assert export_transcripts(serial) == export_transcripts(parallel)
    assert all(r.termination == Termination.END_TOKEN for r in parallel)


def test_batch_records_failures_in_place(corpus, config):
    def npc(record, seed):
        if record.id == "case-003":
            return NPCBackends(backend())
        return golden_npc(record)
    results = run_batch(corpus, golden_doctor, config, npc, parallelism=3)
    assert len(results) == len(corpus)
    bad = results[2]
    assert bad.termination == Termination.ABORTED and bad.report is None and bad.errors
    assert all(r.termination == Termination.END_TOKEN for i, r in enumerate(results) if i != 2)


def test_export_round_trip(corpus, config):
    results = run_batch(corpus[:2], golden_doctor, config, golden_npc)
    back = import_transcripts(export_transcripts(results))
    for r in results:
        assert back[(r.record_id, r.doctor)].digest() == r.transcript.digest()


def test_manifest(corpus, config):
    m = run_manifest(config, 3, [r.id for r in corpus], {"doctor": "scripted:golden"})
    json.dumps(m)
    assert m["record_seeds"]["case-001"] == record_seeds(3, len(corpus))[0]
    assert "patient" in m["template_ids"]
    assert m["session_config"]["max_rounds"] == 10


def test_config_validation():
    with pytest.raises(ValueError):
        SessionConfig(max_rounds=0)
    with pytest.raises(ValueError):
        SessionConfig(language="fr")


@settings(max_examples=40, deadline=None)
@given(
    max_rounds=st.integers(1, 5),
    plan=st.lists(st.sampled_from(["doctor", "examiner", "end", "bare"]), min_size=1, max_size=20),
)
def test_session_invariants_under_random_patients(case001, max_rounds, plan):
    tokens = {"doctor": "<To the doctor> ok", "examiner": "<To the examiner> chest ct please",
              "end": "Thanks <end>", "bare": "hmm"}
    queue = ["Chest pain."] + [tokens[p] for p in plan]

    def patient(last):
        return queue.pop(0) if queue else "<end>"

    doctor = DoctorAgent(FunctionBackend(lambda last: report_text() if "# Symptoms" in last else "Q?"))
    res = run_consultation(case001, doctor, SessionConfig(max_rounds=max_rounds), NPCBackends(FunctionBackend(patient)))
    _check_invariants(res, max_rounds)
