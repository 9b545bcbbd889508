"""Annotation-candidate selection: capped uniform sampling from assessment
calls and assessment-proximity-weighted sampling from personal calls.

The selection file written here is self-contained (segment bounds, subject,
audio path), so the annotation service can serve audio without re-reading
the manifest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .corpus import Assessment, Call, Manifest, Segment, days_to_next_assessment

__all__ = ["weight", "SamplingPlan", "sample_assessment_segments",
           "sample_personal_segments", "weighted_sample_without_replacement",
           "CapacityError", "SelectedSegment", "build_selection",
           "save_selection", "load_selection"]


class CapacityError(ValueError):
    """Requested more samples than are available."""


def weight(d: Optional[int]) -> int:
    """Call weight from days-to-next-assessment: max(4 - d, 1), or 1 for
    calls with no future assessment."""
    if d is None:
        return 1
    if d < 0:
        raise ValueError(f"days to assessment must be >= 0, got {d}")
    return max(4 - d, 1)


@dataclass(frozen=True)
class SamplingPlan:
    assessment_cap: int = 10
    personal_budget: int = 1200
    seed: int = 0
    weight_function: str = "max(4-d,1)"

    def __post_init__(self):
        if self.assessment_cap < 1:
            raise ValueError("assessment_cap must be >= 1")
        if self.personal_budget < 0:
            raise ValueError("personal_budget must be >= 0")

    def to_dict(self) -> dict:
        return {
            "assessment_cap": self.assessment_cap,
            "personal_budget": self.personal_budget,
            "seed": self.seed,
            "weight_function": self.weight_function,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SamplingPlan":
        return cls(**d)


def sample_assessment_segments(segments: Sequence[Segment], cap: int,
                               rng: np.random.Generator) -> list[Segment]:
    """Up to ``cap`` segments drawn uniformly without replacement.

    Output preserves the input ordering so a fixed seed gives a bitwise
    identical selection.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if len(segments) <= cap:
        return list(segments)
    chosen = rng.choice(len(segments), size=cap, replace=False)
    return [segments[i] for i in sorted(chosen)]


def weighted_sample_without_replacement(items: Sequence, weights: Sequence[float], n: int,
                                        rng: np.random.Generator) -> list:
    """Weighted sampling without replacement by the exponential-keys method.

    Each item gets key = Exp(1) / weight; the n smallest keys win.  For a
    single draw the inclusion probability is exactly weight-proportional.
    """
    if len(items) != len(weights):
        raise ValueError("items and weights must have equal length")
    if n > len(items):
        raise CapacityError(f"requested {n} of {len(items)} available")
    if n < 0:
        raise ValueError("n must be >= 0")
    w = np.asarray(weights, dtype=np.float64)
    if (w <= 0).any():
        raise ValueError("weights must be positive")
    keys = rng.exponential(size=len(items)) / w
    chosen = np.argpartition(keys, n - 1)[:n] if n > 0 else np.empty(0, dtype=int)
    return [items[i] for i in sorted(chosen.tolist())]


def sample_personal_segments(segments: Sequence[Segment], calls: Sequence[Call],
                             assessments: Sequence[Assessment], n: int,
                             rng: np.random.Generator) -> list[Segment]:
    """Sample ``n`` personal-call segments, each weighted by its call's
    proximity-to-assessment weight."""
    call_by_id = {c.call_id: c for c in calls}
    weights = []
    for seg in segments:
        call = call_by_id.get(seg.call_id)
        if call is None:
            raise ValueError(f"segment {seg.segment_id}: unknown call {seg.call_id!r}")
        weights.append(float(weight(days_to_next_assessment(call, list(assessments)))))
    return weighted_sample_without_replacement(list(segments), weights, n, rng)


@dataclass(frozen=True)
class SelectedSegment:
    segment_id: str
    call_id: str
    subject_id: str
    start_s: float
    end_s: float
    audio_path: str

    def to_dict(self) -> dict:
        return {"segment_id": self.segment_id, "call_id": self.call_id,
                "subject_id": self.subject_id, "start_s": self.start_s,
                "end_s": self.end_s, "audio_path": self.audio_path}


def build_selection(manifest: Manifest, segments: Sequence[Segment],
                    plan: SamplingPlan) -> list[SelectedSegment]:
    """Run both samplers over eligibility-filtered segments.

    Assessment-call segments are capped per call; personal-call segments are
    drawn by call weight against the whole personal budget (clamped to what
    is available).
    """
    rng = np.random.default_rng(plan.seed)
    calls = {c.call_id: c for c in manifest.calls}
    eligible = [s for s in segments if s.annotation_eligible]
    by_call: dict[str, list[Segment]] = {}
    for s in eligible:
        by_call.setdefault(s.call_id, []).append(s)
    chosen: list[Segment] = []
    for call_id in sorted(by_call):
        if calls[call_id].kind.value == "assessment":
            chosen.extend(sample_assessment_segments(by_call[call_id], plan.assessment_cap, rng))
    personal = [s for s in eligible if calls[s.call_id].kind.value == "personal"]
    n_personal = min(plan.personal_budget, len(personal))
    if n_personal:
        chosen.extend(sample_personal_segments(personal, manifest.calls,
                                               manifest.assessments, n_personal, rng))
    return [SelectedSegment(segment_id=s.segment_id, call_id=s.call_id,
                            subject_id=calls[s.call_id].subject_id,
                            start_s=s.start_s, end_s=s.end_s,
                            audio_path=calls[s.call_id].audio_path)
            for s in chosen]


def save_selection(selected: Sequence[SelectedSegment], plan: SamplingPlan, path) -> None:
    doc = {"plan": plan.to_dict(), "segments": [s.to_dict() for s in selected]}
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def load_selection(path) -> tuple[SamplingPlan, list[SelectedSegment]]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    plan = SamplingPlan.from_dict(doc["plan"])
    segments = [SelectedSegment(**rec) for rec in doc["segments"]]
    return plan, segments
