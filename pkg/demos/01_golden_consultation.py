"""
A scripted consultation, turn by turn
=====================================

Replays the bundled scripted doctor and patient against one fixture record
and prints the routed transcript and the doctor's five-section report.
"""

from wardsim import DoctorAgent, NPCBackends, SessionConfig, run_consultation
from wardsim.assets import corpus_dir, scripted_backend
from wardsim.records import load_corpus

# the bundled corpus holds six sentinel-tagged records
corpus = load_corpus(corpus_dir())
record = corpus[0]
print(record.id, "-", record.department)

# scripted backends replay fixed responses, so the run is deterministic
doctor = DoctorAgent(scripted_backend("golden", "doctor", record.id), name="golden")
npc = NPCBackends(patient=scripted_backend("golden", "patient", record.id))
result = run_consultation(record, doctor, SessionConfig(), npc)

# each utterance carries its speaker, addressee and round
for e in result.transcript.entries:
    u = e.utterance
    end = " [end]" if u.terminal else ""
    print(f"[{e.round}] {u.speaker.value} -> {u.addressee.value}: {u.content}{end}")

print("termination:", result.termination.value, "| rounds:", result.rounds_used)
print("transcript sha256:", result.transcript.digest())

# the report is parsed into its five sections
for name, body in result.report.to_dict().items():
    print(f"\n## {name}\n{body}")
