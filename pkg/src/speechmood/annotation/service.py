"""HTTP annotation workflow: sessions with participant-blocked random
queues, audio delivery, rating submission, and live corpus statistics.

The server cursor is the source of truth for queue position; ratings are
durable in the JSONL log before any ack is returned.
"""

from __future__ import annotations

import io
import threading
import uuid
import wave
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel, Field

from ..audio import AudioBuffer, read_wav
from ..sampling import SelectedSegment
from .store import (
    NotReadyError,
    RatingLog,
    RatingRecord,
    RatingValidationError,
    aggregate_records,
    corpus_stats,
)

__all__ = ["AnnotationService", "SessionState", "create_app"]


@dataclass
class SessionState:
    session_id: str
    annotator_id: str
    queue: list[str]                      # segment ids, participant-blocked
    cursor: int = 0

    @property
    def done(self) -> bool:
        return self.cursor >= len(self.queue)

    def progress(self) -> dict:
        return {"position": self.cursor, "total": len(self.queue)}


def _stable_key(annotator_id: str, seed: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(zlib.crc32(annotator_id.encode()),)))


class AnnotationService:
    """In-process core of the annotation server; the FastAPI app is a thin
    shell over these methods so tests can exercise them directly."""

    def __init__(self, selection: Sequence[SelectedSegment], log: RatingLog,
                 audio_root=".", annotator_roster: Optional[Sequence[str]] = None):
        if not selection:
            raise ValueError("selected-segments set is empty")
        self.selection = {s.segment_id: s for s in selection}
        if len(self.selection) != len(selection):
            raise ValueError("duplicate segment ids in selection")
        self.log = log
        self.audio_root = Path(audio_root)
        self.roster = set(annotator_roster) if annotator_roster is not None else None
        self.sessions: dict[str, SessionState] = {}
        self._lock = threading.Lock()
        self._audio_cache: dict[str, AudioBuffer] = {}

    def create_session(self, annotator_id: str, seed: int = 0) -> SessionState:
        """Participant-blocked random queue: participants in random order, and
        within each participant its segments in random order.  Deterministic
        per (annotator_id, seed)."""
        if not annotator_id:
            raise PermissionError("annotator_id must be nonempty")
        if self.roster is not None and annotator_id not in self.roster:
            raise PermissionError(f"unknown annotator {annotator_id!r}")
        rng = _stable_key(annotator_id, seed)
        by_participant: dict[str, list[str]] = {}
        for seg in self.selection.values():
            by_participant.setdefault(seg.subject_id, []).append(seg.segment_id)
        participants = sorted(by_participant)
        rng.shuffle(participants)
        queue: list[str] = []
        for p in participants:
            segs = sorted(by_participant[p])
            rng.shuffle(segs)
            queue.extend(segs)
        state = SessionState(session_id=uuid.uuid4().hex, annotator_id=annotator_id, queue=queue)
        with self._lock:
            self.sessions[state.session_id] = state
        return state

    def session(self, session_id: str) -> SessionState:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise LookupError(f"unknown session {session_id!r}") from None

    def next_item(self, session_id: str) -> dict:
        s = self.session(session_id)
        if s.done:
            return {"done": True, "progress": s.progress()}
        seg_id = s.queue[s.cursor]
        return {"done": False, "segment_id": seg_id,
                "audio_url": f"/segments/{seg_id}/audio", "progress": s.progress()}

    def submit(self, record: RatingRecord) -> dict:
        s = self.session(record.session_id)
        if record.annotator_id != s.annotator_id:
            raise PermissionError("annotator does not own this session")
        if record.segment_id not in self.selection:
            raise LookupError(f"unknown segment {record.segment_id!r}")
        if record.segment_id not in s.queue:
            raise LookupError(f"segment {record.segment_id!r} is not in this session")
        # Durable append before any state change or ack.
        self.log.append(record)
        if not s.done and s.queue[s.cursor] == record.segment_id:
            s.cursor += 1
        return {"status": "ok", "progress": s.progress()}

    def segment_audio_wav(self, segment_id: str) -> bytes:
        seg = self.selection.get(segment_id)
        if seg is None:
            raise LookupError(f"unknown segment {segment_id!r}")
        if seg.audio_path not in self._audio_cache:
            self._audio_cache[seg.audio_path] = read_wav(self.audio_root / seg.audio_path)
        clip = self._audio_cache[seg.audio_path].slice_seconds(seg.start_s, seg.end_s)
        buf = io.BytesIO()
        with wave.open(buf, "wb") as w:
            w.setnchannels(1)
            w.setsampwidth(2)
            w.setframerate(clip.sample_rate_hz)
            pcm = np.round(np.clip(clip.samples, -1.0, 32767.0 / 32768.0) * 32768.0).astype("<i2")
            w.writeframes(pcm.tobytes())
        return buf.getvalue()

    def stats(self) -> dict:
        return corpus_stats(self.log.records())

    def aggregated(self, segment_id: str):
        return aggregate_records(segment_id, self.log.records())


class SessionRequest(BaseModel):
    annotator_id: str
    seed: int = 0


class RatingRequest(BaseModel):
    session_id: str
    annotator_id: str
    segment_id: str
    activation: Optional[int] = Field(default=None, ge=1, le=9)
    valence: Optional[int] = Field(default=None, ge=1, le=9)
    flags: list[str] = Field(default_factory=list)


def create_app(service: AnnotationService) -> FastAPI:
    app = FastAPI(title="speechmood annotation service")

    @app.post("/sessions")
    def post_session(req: SessionRequest):
        try:
            s = service.create_session(req.annotator_id, req.seed)
        except PermissionError as e:
            raise HTTPException(status_code=401, detail=str(e))
        return {"session_id": s.session_id, "annotator_id": s.annotator_id,
                "progress": s.progress()}

    @app.get("/sessions/{session_id}/next")
    def get_next(session_id: str):
        try:
            return service.next_item(session_id)
        except LookupError as e:
            raise HTTPException(status_code=404, detail=str(e))

    @app.post("/ratings")
    def post_rating(req: RatingRequest):
        try:
            record = RatingRecord(annotator_id=req.annotator_id, segment_id=req.segment_id,
                                  activation=req.activation, valence=req.valence,
                                  flags=frozenset(req.flags), session_id=req.session_id)
            return service.submit(record)
        except RatingValidationError as e:
            raise HTTPException(status_code=400, detail=str(e))
        except PermissionError as e:
            raise HTTPException(status_code=403, detail=str(e))
        except LookupError as e:
            raise HTTPException(status_code=404, detail=str(e))

    @app.get("/segments/{segment_id}/audio")
    def get_audio(segment_id: str):
        try:
            data = service.segment_audio_wav(segment_id)
        except LookupError as e:
            raise HTTPException(status_code=404, detail=str(e))
        return Response(content=data, media_type="audio/wav")

    @app.get("/segments/{segment_id}/label")
    def get_label(segment_id: str):
        try:
            a = service.aggregated(segment_id)
        except NotReadyError as e:
            raise HTTPException(status_code=409, detail=str(e))
        return a.__dict__

    @app.get("/stats")
    def get_stats():
        try:
            return service.stats()
        except ValueError as e:
            raise HTTPException(status_code=409, detail=str(e))

    return app
