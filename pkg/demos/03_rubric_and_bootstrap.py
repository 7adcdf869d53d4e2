"""
Rubric scores, normalization and bootstrap spread
=================================================

A judge picks one option letter per report dimension. Letters map to 1..4,
scores are rescaled to 0..100, and a bootstrap gives the spread of the mean.
"""

import numpy as np

from wardsim.evaluation import aggregate_scores, normalize_rubric, option_block, parse_judgement

# a well-formed judge reply choosing A, B, C, D, A
raw = option_block(list("ABCDA"))
print(raw.split("\n\n")[0], "\n...")
scores = parse_judgement(raw)
print("scores:", scores.as_list())
print("normalized:", [round(normalize_rubric(s), 2) for s in scores.as_list()])

# simulated per-record normalized scores for one dimension
rng = np.random.default_rng(0)
values = [normalize_rubric(int(s)) for s in rng.integers(1, 5, size=120)]
agg = aggregate_scores(values, B=1000, seed=0)
print(f"\nmean (bootstrap sd): {agg}")

# the bootstrap sd tracks the closed-form standard error s/sqrt(n)
se = np.std(values, ddof=1) / np.sqrt(len(values))
print(f"closed-form standard error: {se:.2f}")

# identical samples have no spread at all
print("constant sample:", aggregate_scores([50.0] * 10))
