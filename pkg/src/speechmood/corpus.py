"""Corpus domain model: subjects, calls, clinical assessments, speech
segments, mood labeling from HamD/YMRS scores, and manifest persistence.

The manifest is a single JSON document with canonical key ordering so that
save -> load -> save is byte-stable.
"""

from __future__ import annotations

import datetime as dt
import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

__all__ = [
    "MoodLabel",
    "Sex",
    "CallKind",
    "Subject",
    "Assessment",
    "Call",
    "Segment",
    "Manifest",
    "ManifestError",
    "label_mood",
    "days_to_next_assessment",
    "load_manifest",
    "save_manifest",
    "HAMD_MAX",
    "YMRS_MAX",
    "MIN_SEGMENT_S",
    "MAX_SEGMENT_S",
    "MAX_CALL_S",
]

HAMD_MAX = 52
YMRS_MAX = 60
MIN_SEGMENT_S = 3.0
MAX_SEGMENT_S = 30.0
MAX_CALL_S = 3600.0


class ManifestError(ValueError):
    """Manifest parse or validation failure, with field-level context."""


class MoodLabel(str, enum.Enum):
    EUTHYMIC = "euthymic"
    MANIC = "manic"
    DEPRESSED = "depressed"
    EXCLUDED = "excluded"


class Sex(str, enum.Enum):
    FEMALE = "female"
    MALE = "male"
    UNSPECIFIED = "unspecified"


class CallKind(str, enum.Enum):
    ASSESSMENT = "assessment"
    PERSONAL = "personal"


def label_mood(hamd: int, ymrs: int) -> MoodLabel:
    """Map a (HamD, YMRS) score pair to a mood label.

    Euthymic: both scales <= 6.  Manic: YMRS >= 10 and HamD < 10.
    Depressed: HamD >= 10 and YMRS < 10.  Everything else is excluded.
    The three named rules are mutually exclusive, so this is a total function
    returning exactly one label.
    """
    if hamd < 0 or ymrs < 0:
        raise ValueError(f"scores must be nonnegative, got hamd={hamd}, ymrs={ymrs}")
    if hamd <= 6 and ymrs <= 6:
        return MoodLabel.EUTHYMIC
    if ymrs >= 10 and hamd < 10:
        return MoodLabel.MANIC
    if hamd >= 10 and ymrs < 10:
        return MoodLabel.DEPRESSED
    return MoodLabel.EXCLUDED


@dataclass(frozen=True)
class Subject:
    subject_id: str
    sex: Sex = Sex.UNSPECIFIED
    age_years: Optional[int] = None

    def __post_init__(self):
        if not self.subject_id:
            raise ManifestError("subject_id must be nonempty")
        if self.age_years is not None and self.age_years < 18:
            raise ManifestError(f"subject {self.subject_id}: age_years must be >= 18, got {self.age_years}")


@dataclass(frozen=True)
class Assessment:
    assessment_id: str
    subject_id: str
    date: dt.date
    hamd: int
    ymrs: int

    def __post_init__(self):
        if not 0 <= self.hamd <= HAMD_MAX:
            raise ManifestError(f"assessment {self.assessment_id}: hamd out of range 0..{HAMD_MAX}: {self.hamd}")
        if not 0 <= self.ymrs <= YMRS_MAX:
            raise ManifestError(f"assessment {self.assessment_id}: ymrs out of range 0..{YMRS_MAX}: {self.ymrs}")

    @property
    def mood(self) -> MoodLabel:
        return label_mood(self.hamd, self.ymrs)


@dataclass(frozen=True)
class Call:
    call_id: str
    subject_id: str
    kind: CallKind
    start_time: dt.datetime
    duration_s: float
    audio_path: str
    linked_assessment_id: Optional[str] = None

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ManifestError(f"call {self.call_id}: duration_s must be > 0, got {self.duration_s}")
        if self.kind is CallKind.ASSESSMENT and not self.linked_assessment_id:
            raise ManifestError(f"call {self.call_id}: assessment calls must reference an assessment")

    @property
    def date(self) -> dt.date:
        return self.start_time.date()


@dataclass(frozen=True)
class Segment:
    segment_id: str
    call_id: str
    start_s: float
    end_s: float

    def __post_init__(self):
        if not 0.0 <= self.start_s < self.end_s:
            raise ManifestError(f"segment {self.segment_id}: invalid bounds [{self.start_s}, {self.end_s}]")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s

    @property
    def annotation_eligible(self) -> bool:
        return MIN_SEGMENT_S <= self.duration_s <= MAX_SEGMENT_S


def days_to_next_assessment(call: Call, assessments: list[Assessment]) -> Optional[int]:
    """Whole days from a call to the subject's next assessment on/after it.

    Returns 0 for calls on the assessment day itself and None when the
    subject has no assessment dated on or after the call.
    """
    call_date = call.date
    future = [a.date for a in assessments if a.subject_id == call.subject_id and a.date >= call_date]
    if not future:
        return None
    return (min(future) - call_date).days


@dataclass
class Manifest:
    subjects: list[Subject] = field(default_factory=list)
    assessments: list[Assessment] = field(default_factory=list)
    calls: list[Call] = field(default_factory=list)
    segments: list[Segment] = field(default_factory=list)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        _check_unique("subject_id", [s.subject_id for s in self.subjects])
        _check_unique("assessment_id", [a.assessment_id for a in self.assessments])
        _check_unique("call_id", [c.call_id for c in self.calls])
        _check_unique("segment_id", [s.segment_id for s in self.segments])
        subject_ids = {s.subject_id for s in self.subjects}
        assessment_ids = {a.assessment_id for a in self.assessments}
        call_ids = {c.call_id for c in self.calls}
        for a in self.assessments:
            if a.subject_id not in subject_ids:
                raise ManifestError(f"assessment {a.assessment_id}: unknown subject_id {a.subject_id!r}")
        for c in self.calls:
            if c.subject_id not in subject_ids:
                raise ManifestError(f"call {c.call_id}: unknown subject_id {c.subject_id!r}")
            if c.linked_assessment_id is not None and c.linked_assessment_id not in assessment_ids:
                raise ManifestError(f"call {c.call_id}: unknown linked_assessment_id {c.linked_assessment_id!r}")
        for s in self.segments:
            if s.call_id not in call_ids:
                raise ManifestError(f"segment {s.segment_id}: unknown call_id {s.call_id!r}")

    # Convenience lookups (manifests are immutable after load in practice,
    # so these are safe to cache by the caller if needed).
    def subject(self, subject_id: str) -> Subject:
        for s in self.subjects:
            if s.subject_id == subject_id:
                return s
        raise KeyError(subject_id)

    def call(self, call_id: str) -> Call:
        for c in self.calls:
            if c.call_id == call_id:
                return c
        raise KeyError(call_id)

    def assessment(self, assessment_id: str) -> Assessment:
        for a in self.assessments:
            if a.assessment_id == assessment_id:
                return a
        raise KeyError(assessment_id)

    def segments_of_call(self, call_id: str) -> list[Segment]:
        return [s for s in self.segments if s.call_id == call_id]

    def calls_of_subject(self, subject_id: str) -> list[Call]:
        return [c for c in self.calls if c.subject_id == subject_id]

    def assessments_of_subject(self, subject_id: str) -> list[Assessment]:
        return [a for a in self.assessments if a.subject_id == subject_id]


def _check_unique(name, ids):
    seen = set()
    for i in ids:
        if i in seen:
            raise ManifestError(f"duplicate {name}: {i!r}")
        seen.add(i)


def _subject_to_dict(s: Subject) -> dict:
    d = {"subject_id": s.subject_id, "sex": s.sex.value}
    if s.age_years is not None:
        d["age_years"] = s.age_years
    return d


def _assessment_to_dict(a: Assessment) -> dict:
    return {
        "assessment_id": a.assessment_id,
        "subject_id": a.subject_id,
        "date": a.date.isoformat(),
        "hamd": a.hamd,
        "ymrs": a.ymrs,
        "mood": a.mood.value,
    }


def _call_to_dict(c: Call) -> dict:
    d = {
        "call_id": c.call_id,
        "subject_id": c.subject_id,
        "kind": c.kind.value,
        "start_time": c.start_time.isoformat(),
        "duration_s": c.duration_s,
        "audio_path": c.audio_path,
    }
    if c.linked_assessment_id is not None:
        d["linked_assessment_id"] = c.linked_assessment_id
    return d


def _segment_to_dict(s: Segment) -> dict:
    return {"segment_id": s.segment_id, "call_id": s.call_id, "start_s": s.start_s, "end_s": s.end_s}


def manifest_to_dict(manifest: Manifest) -> dict:
    return {
        "subjects": [_subject_to_dict(s) for s in manifest.subjects],
        "assessments": [_assessment_to_dict(a) for a in manifest.assessments],
        "calls": [_call_to_dict(c) for c in manifest.calls],
        "segments": [_segment_to_dict(s) for s in manifest.segments],
    }


def _require(record: dict, key: str, where: str):
    if key not in record:
        raise ManifestError(f"{where}: missing field {key!r}")
    return record[key]


def manifest_from_dict(doc: dict) -> Manifest:
    if not isinstance(doc, dict):
        raise ManifestError(f"manifest root must be an object, got {type(doc).__name__}")
    subjects = []
    for rec in doc.get("subjects", []):
        where = f"subject {rec.get('subject_id', '?')!r}"
        subjects.append(Subject(
            subject_id=_require(rec, "subject_id", where),
            sex=_parse_enum(Sex, rec.get("sex", "unspecified"), where, "sex"),
            age_years=rec.get("age_years"),
        ))
    assessments = []
    for rec in doc.get("assessments", []):
        where = f"assessment {rec.get('assessment_id', '?')!r}"
        a = Assessment(
            assessment_id=_require(rec, "assessment_id", where),
            subject_id=_require(rec, "subject_id", where),
            date=_parse_date(_require(rec, "date", where), where),
            hamd=int(_require(rec, "hamd", where)),
            ymrs=int(_require(rec, "ymrs", where)),
        )
        if "mood" in rec and rec["mood"] != a.mood.value:
            raise ManifestError(f"{where}: stored mood {rec['mood']!r} disagrees with scores "
                                f"(hamd={a.hamd}, ymrs={a.ymrs} -> {a.mood.value})")
        assessments.append(a)
    calls = []
    for rec in doc.get("calls", []):
        where = f"call {rec.get('call_id', '?')!r}"
        calls.append(Call(
            call_id=_require(rec, "call_id", where),
            subject_id=_require(rec, "subject_id", where),
            kind=_parse_enum(CallKind, _require(rec, "kind", where), where, "kind"),
            start_time=_parse_datetime(_require(rec, "start_time", where), where),
            duration_s=float(_require(rec, "duration_s", where)),
            audio_path=_require(rec, "audio_path", where),
            linked_assessment_id=rec.get("linked_assessment_id"),
        ))
    segments = []
    for rec in doc.get("segments", []):
        where = f"segment {rec.get('segment_id', '?')!r}"
        segments.append(Segment(
            segment_id=_require(rec, "segment_id", where),
            call_id=_require(rec, "call_id", where),
            start_s=float(_require(rec, "start_s", where)),
            end_s=float(_require(rec, "end_s", where)),
        ))
    return Manifest(subjects=subjects, assessments=assessments, calls=calls, segments=segments)


def _parse_enum(cls, value, where, fieldname):
    try:
        return cls(value)
    except ValueError:
        allowed = [m.value for m in cls]
        raise ManifestError(f"{where}: {fieldname} must be one of {allowed}, got {value!r}") from None


def _parse_date(value, where) -> dt.date:
    try:
        return dt.date.fromisoformat(value)
    except (TypeError, ValueError):
        raise ManifestError(f"{where}: invalid ISO date {value!r}") from None


def _parse_datetime(value, where) -> dt.datetime:
    try:
        return dt.datetime.fromisoformat(value)
    except (TypeError, ValueError):
        raise ManifestError(f"{where}: invalid ISO timestamp {value!r}") from None


def save_manifest(manifest: Manifest, path) -> None:
    text = json.dumps(manifest_to_dict(manifest), sort_keys=True, indent=2) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def load_manifest(path) -> Manifest:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise ManifestError(f"cannot read manifest {p}: {e}") from e
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ManifestError(f"{p}: malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e
    return manifest_from_dict(doc)
