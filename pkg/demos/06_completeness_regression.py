"""
Does inquiry completeness predict diagnostic quality?
=====================================================

Fits a least-squares line between symptom completeness and diagnosis
scores, and tallies the misdiagnosis failure labels.
"""

import numpy as np

from wardsim.assets import asset_path
from wardsim.evaluation import fit_linear, load_failure_labels, tally_failures

# synthetic per-doctor normalized scores with a built-in linear trend
rng = np.random.default_rng(3)
symptoms = rng.uniform(20, 80, size=12)
results = 0.6 * symptoms + 5 + rng.normal(0, 4, size=12)

fit = fit_linear(symptoms, results)
print(f"results ~ {fit.slope:.3f} * symptoms + {fit.intercept:.2f}   (r = {fit.r:.3f})")

# a point on the fitted line leaves the fit unchanged
again = fit_linear([*symptoms, 50.0], [*results, fit.predict(50.0)])
print("unchanged after on-line point:", np.isclose(again.slope, fit.slope))

# failure taxonomy of the shipped label file
tally = tally_failures(load_failure_labels(asset_path("failure_labels.txt")))
for label, n in tally.items():
    print(f"{label.value:36} {n}")
print("total", sum(tally.values()))
