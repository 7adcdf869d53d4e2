"""
Doctors resolving a dispute under a moderator
=============================================

Two doctors start from different pre-diagnoses. The chief physician
consolidates facts, lists disputes, and the doctors revise until the
moderator reports consensus or the round budget runs out.
"""

from wardsim.agents import ChiefPhysicianAgent
from wardsim.assets import load_script, scripted_backend
from wardsim.collaboration import CollabConfig, PreDiagnosis, rounds_histogram, run_collaboration
from wardsim.evaluation import parse_report

record_id = "case-001"
# the last scripted doctor reply of each consultation fixture is its report
golden = load_script("golden")["doctor"][record_id][-1]
other = load_script("golden_b")["doctor"][record_id][-1]
pre = PreDiagnosis({"a": parse_report(golden), "b": parse_report(other)})
for doctor, report in pre.reports.items():
    print(f"{doctor} pre-diagnosis: {report.results}")

chief = ChiefPhysicianAgent(scripted_backend("c", "chief", record_id))
doctors = {d: scripted_backend(d, "doctor", record_id) for d in pre.doctors}
result = run_collaboration(pre, CollabConfig(M=4), chief, doctors)

# the discussion history is append-only
print("\nhistory:", " > ".join(result.history.kinds()))
print("disputes per check:", result.dispute_counts)
print("rounds used:", result.rounds_used, "| converged:", result.converged)
print("\nfinal diagnosis:", result.final_report.results)
print("rounds histogram:", rounds_histogram([result], 4))
