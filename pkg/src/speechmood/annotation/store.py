"""Rating persistence and label aggregation.

Storage is an append-only JSONL log, one rating record per line, fsynced
before the caller sees an ack.  Aggregation is a pure fold over the log:
re-ratings by the same annotator overwrite (latest wins), any inspection
flag excludes the segment, and a usable label needs at least two ratings.
"""

from __future__ import annotations

import datetime as dt
import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ..metrics import UndefinedMetricError, pcc
from ..stats import pearson_significance

__all__ = ["INSPECTION_FLAGS", "RatingRecord", "RatingLog", "AggregatedLabel",
           "aggregate_records", "corpus_stats", "normalize_rating",
           "NotReadyError", "RatingValidationError"]

INSPECTION_FLAGS = (
    "noise_dominant",
    "under_two_seconds_speech",
    "not_talking_to_phone",
    "emotion_varies",
    "identifiable_info",
)

MIN_RATINGS = 2


class RatingValidationError(ValueError):
    pass


class NotReadyError(LookupError):
    """No ratings exist yet for the requested segment."""


def normalize_rating(x: float) -> float:
    """Map the 9-point scale onto [-1, 1] by centering at the midpoint 5."""
    return (x - 5.0) / 4.0


@dataclass(frozen=True)
class RatingRecord:
    annotator_id: str
    segment_id: str
    activation: Optional[int] = None
    valence: Optional[int] = None
    flags: frozenset = frozenset()
    session_id: str = ""
    timestamp: str = ""

    def __post_init__(self):
        object.__setattr__(self, "flags", frozenset(self.flags))
        for f in self.flags:
            if f not in INSPECTION_FLAGS:
                raise RatingValidationError(f"unknown flag {f!r}")
        for name, v in (("activation", self.activation), ("valence", self.valence)):
            if v is not None and not (1 <= v <= 9):
                raise RatingValidationError(f"{name} must be in 1..9, got {v}")
        if not self.flags and (self.activation is None or self.valence is None):
            raise RatingValidationError("a record needs both ratings or at least one flag")
        if not self.timestamp:
            object.__setattr__(self, "timestamp",
                               dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"))

    @property
    def has_ratings(self) -> bool:
        return self.activation is not None and self.valence is not None

    def to_dict(self) -> dict:
        return {
            "timestamp": self.timestamp,
            "annotator_id": self.annotator_id,
            "segment_id": self.segment_id,
            "activation": self.activation,
            "valence": self.valence,
            "flags": sorted(self.flags),
            "session_id": self.session_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RatingRecord":
        return cls(annotator_id=d["annotator_id"], segment_id=d["segment_id"],
                   activation=d.get("activation"), valence=d.get("valence"),
                   flags=frozenset(d.get("flags", [])), session_id=d.get("session_id", ""),
                   timestamp=d.get("timestamp", ""))


class RatingLog:
    """Append-only JSONL rating log with serialized, durable appends."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records: list[RatingRecord] = []
        if self.path.exists():
            with self.path.open("r", encoding="utf-8") as fh:
                for line_no, line in enumerate(fh, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        self._records.append(RatingRecord.from_dict(json.loads(line)))
                    except (json.JSONDecodeError, KeyError, RatingValidationError) as e:
                        raise RatingValidationError(f"{self.path}:{line_no}: bad record: {e}") from e

    def append(self, record: RatingRecord) -> None:
        line = json.dumps(record.to_dict(), sort_keys=True)
        with self._lock:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._records.append(record)

    def records(self) -> list[RatingRecord]:
        with self._lock:
            return list(self._records)

    def records_for(self, segment_id: str) -> list[RatingRecord]:
        return [r for r in self.records() if r.segment_id == segment_id]

    def __len__(self) -> int:
        return len(self.records())


@dataclass(frozen=True)
class AggregatedLabel:
    segment_id: str
    n_ratings: int
    activation_raw: Optional[float]
    valence_raw: Optional[float]
    activation: Optional[float]
    valence: Optional[float]
    excluded: bool
    reason: str = ""


def aggregate_records(segment_id: str, records: list[RatingRecord]) -> AggregatedLabel:
    """Fold one segment's records into its aggregated label.

    Latest record per annotator wins; any flag excludes the segment; fewer
    than two usable ratings excludes it as well.
    """
    segment_records = [r for r in records if r.segment_id == segment_id]
    if not segment_records:
        raise NotReadyError(f"no ratings for segment {segment_id!r}")
    latest: dict[str, RatingRecord] = {}
    for r in segment_records:
        latest[r.annotator_id] = r
    flagged = sorted({f for r in latest.values() for f in r.flags})
    rated = [r for r in latest.values() if r.has_ratings]
    if flagged:
        return AggregatedLabel(segment_id=segment_id, n_ratings=len(rated),
                               activation_raw=None, valence_raw=None,
                               activation=None, valence=None,
                               excluded=True, reason="flagged: " + ", ".join(flagged))
    if len(rated) < MIN_RATINGS:
        return AggregatedLabel(segment_id=segment_id, n_ratings=len(rated),
                               activation_raw=None, valence_raw=None,
                               activation=None, valence=None,
                               excluded=True,
                               reason=f"only {len(rated)} ratings (need >= {MIN_RATINGS})")
    act_raw = sum(r.activation for r in rated) / len(rated)
    val_raw = sum(r.valence for r in rated) / len(rated)
    return AggregatedLabel(segment_id=segment_id, n_ratings=len(rated),
                           activation_raw=act_raw, valence_raw=val_raw,
                           activation=normalize_rating(act_raw),
                           valence=normalize_rating(val_raw), excluded=False)


def corpus_stats(records: list[RatingRecord]) -> dict:
    """Histograms, labels-per-segment distribution, and the activation/valence
    correlation over aggregated (non-excluded) labels."""
    segment_ids = sorted({r.segment_id for r in records})
    if len(segment_ids) < 2:
        raise ValueError("corpus stats need ratings on at least 2 segments")
    hist = {"activation": {str(i): 0 for i in range(1, 10)},
            "valence": {str(i): 0 for i in range(1, 10)}}
    for r in records:
        if r.activation is not None:
            hist["activation"][str(r.activation)] += 1
        if r.valence is not None:
            hist["valence"][str(r.valence)] += 1
    aggregated = [aggregate_records(s, records) for s in segment_ids]
    per_segment: dict[str, int] = {}
    for a in aggregated:
        per_segment[str(a.n_ratings)] = per_segment.get(str(a.n_ratings), 0) + 1
    usable = [a for a in aggregated if not a.excluded]
    corr: dict = {"n_segments": len(usable)}
    if len(usable) >= 3:
        acts = [a.activation for a in usable]
        vals = [a.valence for a in usable]
        try:
            r_val = pcc(acts, vals)
            test = pearson_significance(r_val, len(usable))
            corr.update({"pcc": r_val, "p": test.p_value})
        except UndefinedMetricError:
            corr["pcc"] = None
            corr["note"] = "not applicable (zero variance)"
    else:
        corr["pcc"] = None
        corr["note"] = "not applicable (fewer than 3 usable segments)"
    return {
        "n_rating_records": len(records),
        "n_segments_rated": len(segment_ids),
        "n_segments_usable": len(usable),
        "n_segments_excluded": len(aggregated) - len(usable),
        "rating_histograms": hist,
        "labels_per_segment": per_segment,
        "activation_valence_correlation": corr,
    }
