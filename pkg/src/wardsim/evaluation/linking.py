"""Disease-mention extraction, dictionary linking and set-level entity metrics."""

from __future__ import annotations

import re
import unicodedata
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

from ..errors import DictionaryError


def normalize_mention(text: str) -> str:
    """NFKC, case-fold, punctuation to spaces, collapsed whitespace."""
    text = unicodedata.normalize("NFKC", text).casefold()
    text = re.sub(r"[\W_]+", " ", text)
    return " ".join(text.split())


@dataclass(frozen=True)
class DiseaseEntry:
    canonical_id: str
    canonical_name: str
    aliases: frozenset[str] = frozenset()


class DiseaseDictionary:
    def __init__(self, entries: Iterable[DiseaseEntry]) -> None:
        self.entries: list[DiseaseEntry] = list(entries)
        self._index: dict[str, str] = {}
        ids: set[str] = set()
        for e in self.entries:
            if not e.canonical_id or e.canonical_id in ids:
                raise DictionaryError(f"duplicate or empty canonical id {e.canonical_id!r}")
            ids.add(e.canonical_id)
            for name in {e.canonical_name, *e.aliases}:
                key = normalize_mention(name)
                if not key:
                    continue
                owner = self._index.get(key)
                if owner is not None and owner != e.canonical_id:
                    raise DictionaryError(f"name {name!r} maps to both {owner} and {e.canonical_id}")
                self._index[key] = e.canonical_id

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, mention: str) -> str | None:
        return self._index.get(normalize_mention(mention))

    @classmethod
    def from_tsv(cls, text: str) -> DiseaseDictionary:
        entries = []
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) < 2:
                raise DictionaryError(f"line {lineno}: expected id<TAB>name[<TAB>aliases]")
            aliases = cols[2].split("|") if len(cols) > 2 and cols[2].strip() else []
            entries.append(
                DiseaseEntry(cols[0].strip(), cols[1].strip(), frozenset(a.strip() for a in aliases if a.strip()))
            )
        return cls(entries)

    @classmethod
    def load(cls, path: str | Path) -> DiseaseDictionary:
        return cls.from_tsv(Path(path).read_text(encoding="utf-8"))


class _Unlinked:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Unlinked"

    def __bool__(self) -> bool:
        return False


Unlinked = _Unlinked()


def link_mention(mention: str, dictionary: DiseaseDictionary) -> str | _Unlinked:
    cid = dictionary.lookup(mention)
    return Unlinked if cid is None else cid


# Mention extraction. Each list item in a results section is one candidate
# mention; hedges and labels around it are removed.
_ENUM_SPLIT = re.compile(
    r"""
    [(（]\s*\d{1,2}\s*[)）]          # (1)  （1）
    | [①-⑳]
    | (?:^|(?<=\s))\d{1,2}\s*[.、)](?!\d)   # 1.  1、  1)
    | ^\s*[-*•·]\s+                  # bullets
    | [;；\n]
    | 、
    """,
    re.VERBOSE | re.MULTILINE,
)

_LABEL_PREFIX = re.compile(
    r"^(?:(?:preliminary|initial|final|primary|secondary|differential)\s+)?"
    r"(?:diagnos[ie]s|diagnostic results?|impression)\s*[:：]\s*"
    r"|^(?:初步诊断|诊断结果|诊断|印象)\s*[:：]\s*",
    re.IGNORECASE,
)
_HEDGE_PREFIX = re.compile(
    r"^(?:suspected|suspicion of|possible|possibly|probable|probably|likely|query|consider|"
    r"rule out|r/o|presumed|疑似|考虑|可能)\s*",
    re.IGNORECASE,
)
_HEDGE_SUFFIX = re.compile(
    r"\s*(?:[(（]\s*(?:suspected|possible|probable|likely|to be confirmed|待排|待查|可能)\s*[)）]"
    r"|\?+|？+|待排|待查|可能性大|可能)$",
    re.IGNORECASE,
)
_TRIM = " \t.,:;。，：；!！\"'“”‘’"


def _clean_item(item: str) -> str:
    item = item.strip(_TRIM)
    for _ in range(3):
        before = item
        item = _LABEL_PREFIX.sub("", item).strip(_TRIM)
        item = _HEDGE_PREFIX.sub("", item).strip(_TRIM)
        item = _HEDGE_SUFFIX.sub("", item).strip(_TRIM)
        if item == before:
            break
    return item


def extract_disease_mentions(results_section: str) -> list[str]:
    if not results_section or not results_section.strip():
        return []
    out: list[str] = []
    seen: set[str] = set()
    for piece in _ENUM_SPLIT.split(results_section):
        item = _clean_item(piece)
        key = normalize_mention(item)
        if not key or key in seen:
            continue
        seen.add(key)
        out.append(item)
    return out


@dataclass(frozen=True)
class EntityMetrics:
    count: float
    precision: float
    recall: float
    f1: float
    tp: int = 0
    n_pred: int = 0
    n_gold: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def _f1(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def _prf(tp: int, n_pred: int, n_gold: int) -> tuple[float, float, float]:
    if n_pred == 0 and n_gold == 0:
        return 1.0, 1.0, 1.0
    p = tp / n_pred if n_pred else 0.0
    r = tp / n_gold if n_gold else 0.0
    return p, r, _f1(p, r)


def entity_metrics(pred: Iterable[str], gold: Iterable[str], count: float | None = None) -> EntityMetrics:
    """Set-level P/R/F1 of linked ids.

    Both sets empty scores 1/1/1; when exactly one is empty the undefined
    ratio is 0. ``count`` defaults to ``len(pred)`` and should include
    unlinked mentions when the caller has them.
    """
    pred, gold = set(pred), set(gold)
    tp = len(pred & gold)
    p, r, f = _prf(tp, len(pred), len(gold))
    return EntityMetrics(float(len(pred) if count is None else count), p, r, f, tp, len(pred), len(gold))


def link_all(mentions: Sequence[str], dictionary: DiseaseDictionary) -> set[str]:
    return {cid for cid in (link_mention(m, dictionary) for m in mentions) if cid is not Unlinked}


def score_diagnosis(predicted_results: str, gold_results: Sequence[str], dictionary: DiseaseDictionary) -> EntityMetrics:
    """Entity metrics for one record: predicted results section vs reference result statements."""
    pred_mentions = extract_disease_mentions(predicted_results)
    gold_mentions = [m for r in gold_results for m in extract_disease_mentions(r)]
    return entity_metrics(
        link_all(pred_mentions, dictionary), link_all(gold_mentions, dictionary), count=len(pred_mentions)
    )


def average_entity_metrics(per_record: Sequence[EntityMetrics], average: str = "macro") -> EntityMetrics:
    """Corpus-level metrics; ``count`` is always the mean predicted-mention count per record.

    Macro: P and R are per-record means and F1 is their harmonic mean.
    """
    if not per_record:
        raise ValueError("no records to average")
    n = len(per_record)
    count = sum(m.count for m in per_record) / n
    tp = sum(m.tp for m in per_record)
    n_pred = sum(m.n_pred for m in per_record)
    n_gold = sum(m.n_gold for m in per_record)
    if average == "macro":
        p = sum(m.precision for m in per_record) / n
        r = sum(m.recall for m in per_record) / n
        f = _f1(p, r)
    elif average == "micro":
        p, r, f = _prf(tp, n_pred, n_gold)
    else:
        raise ValueError(f"unknown averaging {average!r}")
    return EntityMetrics(count, p, r, f, tp, n_pred, n_gold)
