"""Multi-view evaluation: rubric judging, normalization, bootstrap, entity metrics, analysis."""

from .analysis import (
    FailureLabel,
    LinearFit,
    fit_linear,
    load_failure_labels,
    parse_failure_labels,
    tally_failures,
)
from .judge import (
    DIMENSIONS,
    LETTER_SCORES,
    DimensionScore,
    RubricScores,
    judge_report,
    option_block,
    parse_judgement,
)
from .linking import (
    DiseaseDictionary,
    DiseaseEntry,
    EntityMetrics,
    Unlinked,
    average_entity_metrics,
    entity_metrics,
    extract_disease_mentions,
    link_mention,
    normalize_mention,
    score_diagnosis,
)
from .report import (
    CANONICAL_HEADS,
    SECTIONS,
    DiagnosticReport,
    Section,
    parse_report,
    parse_sections,
)
from .scores import (
    AggregateScore,
    ConsistencyLevel,
    aggregate_consistency,
    aggregate_scores,
    consistency_to_score,
    normalize_rubric,
)

__all__ = [
    "AggregateScore",
    "CANONICAL_HEADS",
    "ConsistencyLevel",
    "DIMENSIONS",
    "DiagnosticReport",
    "DimensionScore",
    "DiseaseDictionary",
    "DiseaseEntry",
    "EntityMetrics",
    "FailureLabel",
    "LETTER_SCORES",
    "LinearFit",
    "RubricScores",
    "SECTIONS",
    "Section",
    "Unlinked",
    "aggregate_consistency",
    "aggregate_scores",
    "average_entity_metrics",
    "consistency_to_score",
    "entity_metrics",
    "extract_disease_mentions",
    "fit_linear",
    "judge_report",
    "link_mention",
    "load_failure_labels",
    "normalize_mention",
    "normalize_rubric",
    "option_block",
    "parse_failure_labels",
    "parse_judgement",
    "parse_report",
    "parse_sections",
    "score_diagnosis",
    "tally_failures",
]
