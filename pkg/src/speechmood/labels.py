"""Segment label files: one schema shared by aggregated human annotations and
the synthetic generator's ground truth, so the training pipeline consumes
either interchangeably.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

__all__ = ["SegmentLabel", "save_labels", "load_labels"]


@dataclass(frozen=True)
class SegmentLabel:
    segment_id: str
    activation: float                    # normalized, [-1, 1]
    valence: float
    n_ratings: Optional[int] = None      # None for generator ground truth
    excluded: bool = False
    reason: str = ""

    def __post_init__(self):
        if not self.excluded:
            for name, v in (("activation", self.activation), ("valence", self.valence)):
                if not -1.0 <= v <= 1.0:
                    raise ValueError(f"{self.segment_id}: {name} out of [-1, 1]: {v}")

    def to_dict(self) -> dict:
        d = {"segment_id": self.segment_id, "activation": self.activation,
             "valence": self.valence, "excluded": self.excluded}
        if self.n_ratings is not None:
            d["n_ratings"] = self.n_ratings
        if self.reason:
            d["reason"] = self.reason
        return d


def save_labels(labels: list[SegmentLabel], path) -> None:
    doc = {"labels": [l.to_dict() for l in labels]}
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def load_labels(path) -> list[SegmentLabel]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    out = []
    for rec in doc["labels"]:
        out.append(SegmentLabel(
            segment_id=rec["segment_id"],
            activation=float(rec["activation"]),
            valence=float(rec["valence"]),
            n_ratings=rec.get("n_ratings"),
            excluded=bool(rec.get("excluded", False)),
            reason=rec.get("reason", ""),
        ))
    return out
