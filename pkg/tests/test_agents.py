import pytest

from wardsim.agents import (
    ChiefPhysicianAgent,
    DoctorAgent,
    ExaminerAgent,
    ExamItem,
    ExamVocabulary,
    PatientAgent,
    default_vocabulary,
    doctor_turn,
    examiner_extract_items,
    examiner_report,
    make_chief_complaint,
    make_persona,
    parse_exam_items,
    patient_turn,
    rule_extractor_backend,
    solicit_report,
)
from wardsim.assets import attack_queries, scripted_backend
from wardsim.errors import Exhausted, FormatError, NoItemsRequested
from wardsim.evaluation.report import parse_report
from wardsim.protocol import Role, Transcript, Utterance
from wardsim.records import partition_views, with_persona

from conftest import backend

BIOPSY_REQUEST = (
    "Hi, my doctor went over the CT and PET-CT with me. There is a nodule of about 2.6 by 1.9 cm in the right "
    "upper lobe and some faint shadows lower down in both lungs, so I was told the next step is a biopsy."
)


# persona and chief complaint

def test_persona_pass_through(case001):
    b = backend("anxious retired teacher, plain-spoken")
    assert make_persona(case001, b) == "anxious retired teacher, plain-spoken"


def test_persona_prompt_has_no_objective_or_reference(corpus):
    for r in corpus:
        b = backend("a persona")
        make_persona(r, b)
        prompt = b.audit.entries[0].prompt_text()
        assert "ZQX-OBJ" not in prompt and "ZQX-REF" not in prompt and "ZQX-SUBJ" in prompt


def test_chief_complaint_hint_bypasses_backend(by_id):
    r = by_id["case-005"]
    b = backend()
    u = make_chief_complaint(r, b)
    assert u == Utterance(Role.PATIENT, Role.DOCTOR, r.subjective.chief_complaint_hint)
    assert len(b.audit) == 0


def test_chief_complaint_generated(by_id):
    u = make_chief_complaint(by_id["case-002"], backend("My stomach hurts."))
    assert u == Utterance(Role.PATIENT, Role.DOCTOR, "My stomach hurts.")


def test_chief_complaint_exhausted(by_id):
    with pytest.raises(Exhausted):
        make_chief_complaint(by_id["case-002"], backend())


# patient

@pytest.fixture
def patient(by_id):
    def make(*responses):
        return PatientAgent.from_record(by_id["case-002"], backend(*responses))
    return make


def test_patient_routes(patient):
    assert patient_turn(patient("<To the doctor> The pain started yesterday."), []).addressee == Role.DOCTOR
    assert patient_turn(patient("<To the examiner> I need the blood test results."), []).addressee == Role.EXAMINER
    u = patient_turn(patient("Thanks, I understand. <end>"), [])
    assert u.terminal


def test_patient_fallback_uses_last_interlocutor(patient):
    hist = [Utterance(Role.PATIENT, Role.EXAMINER, "CBC please"), Utterance(Role.EXAMINER, Role.PATIENT, "WBC 14")]
    assert patient_turn(patient("okay thanks"), hist).addressee == Role.EXAMINER


def test_patient_prompt_only_subjective(patient):
    agent = patient("<To the doctor> hi")
    patient_turn(agent, [])
    prompt = agent.backend.audit.entries[0].prompt_text()
    assert "ZQX-SUBJ-002" in prompt and "ZQX-OBJ" not in prompt and "ZQX-REF" not in prompt
    assert "<To the doctor>" in prompt and "<end>" in prompt


def test_patient_persona_in_prompt(by_id):
    r = with_persona(by_id["case-002"], "a cheerful baker")
    agent = PatientAgent.from_record(r, backend("<To the doctor> hi"))
    patient_turn(agent, [])
    assert "a cheerful baker" in agent.backend.audit.entries[0].system_prompt


# examiner step 1

def test_extract_biopsy_request_scripted():
    items = examiner_extract_items(BIOPSY_REQUEST, backend("# Medical Examination Items\n- Lung biopsy"))
    assert items == [ExamItem("Lung biopsy")]


def test_extract_none_scripted():
    q = "Could you tell me what my examination results were?"
    assert examiner_extract_items(q, backend("# Examination Item\n- None")) == []


def test_extract_block_order():
    items = examiner_extract_items("x", backend("# Examination Item\n- complete blood count\n- urinalysis"))
    assert [i.name for i in items] == ["complete blood count", "urinalysis"]


@pytest.mark.parametrize("text, names", [
    ("# Examination Item\n- a\n- b", ["a", "b"]),
    ("Sure.\n## Examination Items\n* a\n\nThanks", ["a"]),
    ("# 检查项目\n- 血常规\n- 无", ["血常规"]),
    ("# Examination Item\n- None.", []),
    ("# examination item\n- a\n# Other\n- b", ["a"]),
])
def test_parse_exam_items_variants(text, names):
    assert [i.name for i in parse_exam_items(text)] == names


def test_extract_missing_header():
    with pytest.raises(FormatError):
        examiner_extract_items("x", backend("- complete blood count"))


def test_exam_item_non_empty():
    with pytest.raises(ValueError):
        ExamItem(" ")


def test_rule_extractor_finds_named_exams():
    b = rule_extractor_backend()
    items = examiner_extract_items("Could I have the CBC, a chest x-ray and my liver function please?", b)
    assert [i.name for i in items] == ["Complete Blood Count", "Chest X-ray", "Liver Function Tests"]
    assert examiner_extract_items("我需要血常规和胸部CT的结果", rule_extractor_backend(language="zh"))


def test_rule_extractor_prefers_longest_phrase():
    vocab = ExamVocabulary({"Abdominal CT": ["abdominal ct scan"], "CT": ["ct scan"]})
    assert vocab.find("an abdominal ct scan today") == ["Abdominal CT"]


def test_attack_queries_name_no_exam():
    vocab = default_vocabulary()
    queries = attack_queries()
    assert len(queries) == 50
    assert all(vocab.find(q) == [] for q in queries)


# examiner step 2

def test_report_matched_items(case001):
    text = examiner_report([ExamItem("lung biopsy")], case001.objective)
    assert text == "# Lung Biopsy\n- Pathology: Adenocarcinoma cells\n- TTF-1: Positive"


def test_report_alias_match(case001):
    text = examiner_report([ExamItem("CT of the chest")], case001.objective)
    assert text.startswith("# Chest CT\n- Right upper lobe")


def test_report_unmatched(case001):
    assert examiner_report([ExamItem("abdominal ultrasound")], case001.objective) == (
        "abdominal ultrasound: No abnormalities"
    )


def test_report_empty_findings(by_id):
    text = examiner_report([ExamItem("blood pressure")], by_id["case-006"].objective)
    assert text == "# Blood Pressure\n- No abnormalities"


def test_report_no_items(case001):
    with pytest.raises(NoItemsRequested):
        examiner_report([], case001.objective)


def test_report_pure(case001):
    items = [ExamItem("chest ct"), ExamItem("urinalysis")]
    assert examiner_report(items, case001.objective) == examiner_report(items, case001.objective)


def test_examiner_rejects_vague(case001):
    ex = ExaminerAgent.from_record(case001)
    text, items = ex.respond("Please give me all of my results.")
    assert items == [] and "Pathology" not in text and "ZQX-OBJ" not in text


def test_examiner_prompt_has_only_query(case001):
    ex = ExaminerAgent.from_record(case001, backend("# Examination Item\n- Lung biopsy"))
    ex.respond("I need my lung biopsy")
    entry = ex.backend.audit.entries[0]
    assert [c for _, c in entry.messages] == ["I need my lung biopsy"]


# doctor

def test_doctor_turn():
    d = DoctorAgent(backend("How long have you had the fever?"))
    assert doctor_turn(d, []) == Utterance(Role.DOCTOR, Role.PATIENT, "How long have you had the fever?")


def test_doctor_turn_exhausted():
    with pytest.raises(Exhausted):
        doctor_turn(DoctorAgent(backend()), [])


def test_doctor_diagnosis_is_not_terminal():
    u = doctor_turn(DoctorAgent(backend("You have appendicitis. <end>")), [])
    assert not u.terminal and u.addressee == Role.PATIENT


def test_doctor_has_no_record_state():
    d = DoctorAgent(backend())
    assert set(vars(d)) == {"backend", "name", "language", "routing", "params"}


def test_solicit_report(by_id):
    r = by_id["case-002"]
    d = DoctorAgent(scripted_backend("golden", "doctor", r.id))
    t = Transcript(r.id)
    t.append(Utterance(Role.PATIENT, Role.DOCTOR, "My belly hurts"), 0)
    for _ in range(3):
        doctor_turn(d, t.utterances)
    raw = solicit_report(d, t)
    for head in ("Symptoms", "Medical Examinations", "Diagnostic Results", "Diagnostic Rationales",
                 "Treatment Plan"):
        assert f"# {head}" in raw
    parse_report(raw)


def test_solicit_report_errors():
    with pytest.raises(ValueError):
        solicit_report(DoctorAgent(backend("x")), Transcript("s"))
    t = Transcript("s")
    t.append(Utterance(Role.PATIENT, Role.DOCTOR, "hi"), 0)
    with pytest.raises(Exhausted):
        solicit_report(DoctorAgent(backend()), t)


# chief

def test_chief_is_only_full_record_agent(case001):
    views = partition_views(case001)
    chief = ChiefPhysicianAgent(backend(), views.chief_view)
    assert chief.chief_view is case001
    with pytest.raises(ValueError):
        ChiefPhysicianAgent(backend()).judge(None)
