"""Score normalization to 0-100 and bootstrap aggregation."""

from __future__ import annotations

import enum
import numbers
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from ..errors import EmptySample, OutOfRange

DEFAULT_RESAMPLES = 1000


class ConsistencyLevel(enum.IntEnum):
    SIGNIFICANTLY_INCONSISTENT = 1
    SLIGHTLY_INCONSISTENT = 2
    MOSTLY_CONSISTENT = 3


def _as_int_in(value, lo: int, hi: int) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise OutOfRange(f"expected an integer in [{lo}, {hi}], got {value!r}")
    if not lo <= value <= hi:
        raise OutOfRange(f"{value} outside [{lo}, {hi}]")
    return int(value)


def normalize_rubric(score: int) -> float:
    """Map a 1..4 rubric score onto 0..100 (1 -> 0, 4 -> 100)."""
    return (_as_int_in(score, 1, 4) - 1) / 3 * 100


def consistency_to_score(level: int) -> float:
    """Map a 1..3 consistency level onto 0..100 (1 -> 0, 3 -> 100)."""
    return (_as_int_in(level, 1, 3) - 1) / 2 * 100


@dataclass(frozen=True)
class AggregateScore:
    mean: float
    bootstrap_sd: float
    n: int
    B: int
    seed: int | None

    def to_dict(self) -> dict:
        return asdict(self)

    def __str__(self) -> str:
        return f"{self.mean:.2f} ({self.bootstrap_sd:.2f})"


def aggregate_scores(values: Sequence[float], B: int = DEFAULT_RESAMPLES, seed: int | None = 0) -> AggregateScore:
    """Mean of ``values`` with the standard deviation of ``B`` bootstrap resample means."""
    data = np.asarray(values, dtype=float)
    if data.size == 0:
        raise EmptySample("cannot aggregate an empty sample")
    if B < 1:
        raise ValueError("B must be >= 1")
    n = data.size
    mean = float(data.mean())
    if np.all(data == data[0]):
        return AggregateScore(mean, 0.0, n, B, seed)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(B, n))
    resampled = data[idx].mean(axis=1)
    return AggregateScore(mean, float(resampled.std()), n, B, seed)


def aggregate_consistency(levels: Sequence[int], B: int = DEFAULT_RESAMPLES, seed: int | None = 0) -> AggregateScore:
    return aggregate_scores([consistency_to_score(l) for l in levels], B, seed)
