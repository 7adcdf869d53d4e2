"""
Diagnoses as linked disease entities
====================================

Extracts disease mentions from a diagnostic-results section, links them to
a small ICD-style dictionary and scores the linked set against the reference.
"""

from wardsim.assets import diseases_path
from wardsim.evaluation import (
    DiseaseDictionary,
    average_entity_metrics,
    entity_metrics,
    extract_disease_mentions,
    link_mention,
    score_diagnosis,
)

dictionary = DiseaseDictionary.load(diseases_path())
print(len(dictionary), "dictionary entries")

section = "(1) Suspected acute appendicitis (2) localized peritonitis (3) quantum fever"
mentions = extract_disease_mentions(section)
print("mentions:", mentions)
for m in mentions:
    print(f"  {m!r:28} -> {link_mention(m, dictionary)}")

# set-level precision, recall and F1 for one record
m = score_diagnosis(section, ["Acute appendicitis"], dictionary)
print(f"\ncount={m.count:.0f}  P={m.precision:.2f}  R={m.recall:.2f}  F1={m.f1:.2f}")

# corpus metrics: macro averages per-record P and R, micro pools the counts
per_record = [m, entity_metrics({"J18"}, {"J18", "E86"}), entity_metrics(set(), set())]
for average in ("macro", "micro"):
    a = average_entity_metrics(per_record, average)
    print(f"{average}: #={a.count:.2f}  P={a.precision:.3f}  R={a.recall:.3f}  F1={a.f1:.3f}")
