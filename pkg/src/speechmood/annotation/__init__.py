from .store import (
    AggregatedLabel,
    INSPECTION_FLAGS,
    NotReadyError,
    RatingLog,
    RatingRecord,
    RatingValidationError,
    aggregate_records,
    corpus_stats,
    normalize_rating,
)
from .service import AnnotationService, create_app

__all__ = [
    "RatingRecord", "RatingLog", "AggregatedLabel", "INSPECTION_FLAGS",
    "aggregate_records", "corpus_stats", "normalize_rating",
    "NotReadyError", "RatingValidationError",
    "AnnotationService", "create_app",
]
