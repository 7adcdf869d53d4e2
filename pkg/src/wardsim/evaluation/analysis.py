"""Completeness-vs-quality regression and misdiagnosis failure tallies."""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..errors import DegenerateX, LengthMismatch, UnknownLabel


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r: float

    def predict(self, x: float) -> float:
        return self.slope * x + self.intercept


def fit_linear(x: Sequence[float], y: Sequence[float]) -> LinearFit:
    """Ordinary least squares line with Pearson r (nan when y is constant)."""
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise LengthMismatch(f"x has {xs.size} values, y has {ys.size}")
    if xs.size < 2 or np.all(xs == xs[0]):
        raise DegenerateX("x must take at least two distinct values")
    dx = xs - xs.mean()
    dy = ys - ys.mean()
    sxx = float(dx @ dx)
    sxy = float(dx @ dy)
    syy = float(dy @ dy)
    slope = sxy / sxx
    intercept = float(ys.mean() - slope * xs.mean())
    r = sxy / math.sqrt(sxx * syy) if syy > 0 else math.nan
    return LinearFit(slope, intercept, r)


class FailureLabel(str, enum.Enum):
    OMISSION_OF_AUXILIARY_EXAMINATIONS = "OmissionOfAuxiliaryExaminations"
    EXCLUSIVE_FOCUS_ON_COMPLICATIONS = "ExclusiveFocusOnComplications"
    ERRONEOUS_JUDGMENT = "ErroneousJudgment"


def parse_failure_labels(text: str) -> list[FailureLabel]:
    """One label token per line; blank lines and ``#`` comments are skipped."""
    labels = []
    for lineno, line in enumerate(text.splitlines(), 1):
        token = line.strip()
        if not token or token.startswith("#"):
            continue
        try:
            labels.append(FailureLabel(token))
        except ValueError:
            raise UnknownLabel(f"line {lineno}: unknown failure label {token!r}") from None
    return labels


def load_failure_labels(path: str | Path) -> list[FailureLabel]:
    return parse_failure_labels(Path(path).read_text(encoding="utf-8"))


def tally_failures(labels: Iterable[FailureLabel]) -> dict[FailureLabel, int]:
    counts = Counter(FailureLabel(l) for l in labels)
    return {label: counts.get(label, 0) for label in FailureLabel}
