"""Presentation attack detection evaluation toolkit (ISO/IEC 30107-3 metrics)."""

__version__ = "0.1.0"

from padeval.model import ClassTaxonomy, ScoreRecord, ScoreSet, decide, parse_manifest, parse_scores  # noqa: E402
from padeval.metrics import acer, acer_from_rates, apcer_pais, apcer_worst, bpcer, bpcer_at_ap, confusion_matrix, eer  # noqa: E402

__all__ = [
    "ClassTaxonomy",
    "ScoreRecord",
    "ScoreSet",
    "acer",
    "acer_from_rates",
    "apcer_pais",
    "apcer_worst",
    "bpcer",
    "bpcer_at_ap",
    "confusion_matrix",
    "decide",
    "eer",
    "parse_manifest",
    "parse_scores",
]
