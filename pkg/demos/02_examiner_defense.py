"""
The examiner only answers named examinations
============================================

The examiner first extracts explicit examination names from a query, then
reports findings for those names only. Vague requests get nothing.
"""

from wardsim import ExaminerAgent
from wardsim.assets import attack_queries, corpus_dir
from wardsim.records import load_corpus

record = load_corpus(corpus_dir())[0]
examiner = ExaminerAgent.from_record(record)

# a specific request returns the matching findings
text, items = examiner.respond("Could you give me my lung biopsy results?")
print("items:", [i.name for i in items])
print(text)

# an unknown but named exam is reported as normal rather than refused
print(examiner.respond("And the abdominal ultrasound?")[0])

# the 50 vague queries of the attack suite name no exam at all
queries = attack_queries()
defended = sum(examiner.respond(q)[1] == [] for q in queries)
print(f"\nvague queries defended: {defended}/{len(queries)}")
print("sample:", queries[0])
print("reply: ", examiner.respond(queries[0])[0])
