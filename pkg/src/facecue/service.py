"""Caregiver review API: read-only projections of session journals plus an
append-only annotation store, served as HTTP/JSON under /api/v1.

Read endpoints are pure functions of the files on disk: identical data yields
byte-identical response bodies (canonical JSON, sorted keys). The service
never modifies session journals; annotations live in a sidecar journal
(<session>.annotations.agsj) per session. Binds to loopback by default;
authentication is out of scope and left as a deployment-side extension point.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from .highlights import detect_highlights
from .journal import JournalError, JournalWriter, canonical_json, encode_record, read_session
from .metrics import MetricsError, face_visibility_timeline, progress_series, session_summary
from .types import Annotation, ExpressionLabel, SessionJournal, SessionMeta

SCHEMA_VERSION = 1
MAX_ANNOTATION_CHARS = 2000
MAX_TRACK_POINTS = 2000

ANNOTATION_SUFFIX = ".annotations.agsj"
JOURNAL_SUFFIX = ".agsj"


class ServiceError(Exception):
    def __init__(self, status: int, code: str, detail: str):
        self.status = status
        self.code = code
        self.detail = detail
        super().__init__(detail)


@dataclass
class _CachedSession:
    stamp: tuple[int, int]
    journal: SessionJournal


@dataclass
class SessionStore:
    """Journal files in one data directory, cached by (mtime, size)."""

    data_dir: Path
    _cache: dict[Path, _CachedSession] = field(default_factory=dict)

    def scan(self) -> tuple[list[tuple[Path, SessionJournal]], list[dict]]:
        sessions = []
        warnings = []
        for path in sorted(self.data_dir.glob(f"*{JOURNAL_SUFFIX}")):
            if path.name.endswith(ANNOTATION_SUFFIX):
                continue
            try:
                journal = self._load(path)
            except (JournalError, OSError) as exc:
                warnings.append({"file": path.name, "error": str(exc)})
                continue
            if journal.meta is None:
                warnings.append({"file": path.name, "error": "journal has no SessionMeta record"})
                continue
            sessions.append((path, journal))
        return sessions, warnings

    def _load(self, path: Path) -> SessionJournal:
        st = path.stat()
        stamp = (st.st_mtime_ns, st.st_size)
        cached = self._cache.get(path)
        if cached is None or cached.stamp != stamp:
            cached = _CachedSession(stamp=stamp, journal=read_session(path))
            self._cache[path] = cached
        return cached.journal

    def find(self, session_id: str) -> tuple[Path, SessionJournal]:
        sessions, _ = self.scan()
        for path, journal in sessions:
            if journal.meta.session_id == session_id:
                return path, journal
        raise ServiceError(404, "not_found", f"unknown session {session_id!r}")

    # --- annotations ---------------------------------------------------------

    def _annotation_path(self, journal_path: Path) -> Path:
        return journal_path.with_name(journal_path.name[: -len(JOURNAL_SUFFIX)] + ANNOTATION_SUFFIX)

    def annotations(self, journal_path: Path) -> list[Annotation]:
        path = self._annotation_path(journal_path)
        if not path.exists():
            return []
        return self._load(path).annotations

    def append_annotation(self, journal_path: Path, meta: SessionMeta, annotation: Annotation) -> int:
        """Durably append; returns the server-assigned id (store index)."""
        path = self._annotation_path(journal_path)
        existing = self.annotations(journal_path)
        if existing and annotation.created_at_us < existing[-1].created_at_us:
            # wall clock went backwards; keep the store append-ordered
            annotation = replace(annotation, created_at_us=existing[-1].created_at_us)
        if not path.exists():
            with JournalWriter(path, meta) as writer:
                writer.append(annotation)
        else:
            with open(path, "ab") as fh:
                fh.write(encode_record(annotation))
        self._cache.pop(path, None)
        return len(existing)


def _label_name(label: ExpressionLabel) -> str:
    return label.name.lower()


def _annotation_view(a: Annotation, idx: int) -> dict:
    return {
        "id": idx,
        "author": a.author,
        "timestamp_in_session_us": a.timestamp_in_session_us,
        "text": a.text,
        "created_at_us": a.created_at_us,
    }


def create_app(data_dir: str | Path, highlight_pad_us: int = 2_000_000, now_us=None) -> FastAPI:
    """Build the review app over one data directory.

    now_us supplies annotation creation timestamps (unix microseconds);
    injectable for deterministic tests.
    """
    store = SessionStore(data_dir=Path(data_dir))
    if now_us is None:
        now_us = lambda: time.time_ns() // 1000

    app = FastAPI(title="facecue review service", docs_url=None, redoc_url=None)

    def reply(doc: dict, status: int = 200) -> Response:
        return Response(content=canonical_json(doc), media_type="application/json", status_code=status)

    @app.exception_handler(ServiceError)
    async def _service_error(_request: Request, exc: ServiceError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": {"code": exc.code, "detail": exc.detail}},
        )

    @app.get("/api/v1/sessions")
    def list_sessions() -> Response:
        if not store.data_dir.is_dir():
            raise ServiceError(500, "data_dir_unreadable", f"not a directory: {store.data_dir}")
        sessions, warnings = store.scan()
        entries = []
        for _path, journal in sessions:
            _, session_end = face_visibility_timeline(journal)
            issued = sum(1 for c in journal.cues if not c.suppressed)
            entries.append(
                {
                    "session_id": journal.meta.session_id,
                    "subject": journal.meta.subject,
                    "started_at_us": journal.meta.started_at_us,
                    "frame_rate_hz": journal.meta.frame_rate_hz,
                    "duration_us": session_end,
                    "event_count": len(journal.events),
                    "issued_cue_count": issued,
                }
            )
        entries.sort(key=lambda e: (-e["started_at_us"], e["session_id"]))
        return reply({"schema_version": SCHEMA_VERSION, "sessions": entries, "warnings": warnings})

    @app.get("/api/v1/sessions/{session_id}/timeline")
    def get_timeline(session_id: str) -> Response:
        path, journal = store.find(session_id)
        timeline, session_end = face_visibility_timeline(journal)
        events = journal.events
        clips = detect_highlights(events, highlight_pad_us, session_end)
        scores = journal.score_records
        tracks = {}
        if scores:
            stride = max(1, -(-len(scores) // MAX_TRACK_POINTS))  # ceil division
            sampled = scores[::stride]
            tracks = {
                "timestamps_us": [s.timestamp_us for s in sampled],
                "labels": {
                    _label_name(lbl): [float(s.scores[int(lbl)]) for s in sampled]
                    for lbl in ExpressionLabel
                },
            }
        annotations = store.annotations(path)
        ordered = sorted(enumerate(annotations), key=lambda pair: (pair[1].timestamp_in_session_us, pair[0]))
        return reply(
            {
                "schema_version": SCHEMA_VERSION,
                "session_id": session_id,
                "session_end_us": session_end,
                "events": [
                    {
                        "label": _label_name(e.label),
                        "start_us": e.start_us,
                        "end_us": e.end_us,
                        "peak_score": e.peak_score,
                    }
                    for e in events
                ],
                "cues": [
                    {
                        "label": _label_name(c.label),
                        "issued_at_us": c.issued_at_us,
                        "channel": c.channel.value,
                        "suppressed": c.suppressed,
                        "suppress_reason": c.suppress_reason.value if c.suppress_reason else None,
                    }
                    for c in journal.cues
                ],
                "clips": [
                    {
                        "clip_index": i,
                        "start_us": c.start_us,
                        "end_us": c.end_us,
                        "event_refs": list(c.event_refs),
                        "dominant_label": _label_name(c.dominant_label),
                    }
                    for i, c in enumerate(clips)
                ],
                "visibility_spans_us": [[s, e] for s, e in timeline],
                "score_tracks": tracks,
                "annotations": [_annotation_view(a, idx) for idx, a in ordered],
            }
        )

    @app.get("/api/v1/sessions/{session_id}/metrics")
    def get_metrics(session_id: str) -> Response:
        _path, journal = store.find(session_id)
        try:
            summary = session_summary(journal)
        except MetricsError as exc:
            raise ServiceError(422, "metrics_unavailable", str(exc))
        return reply({"schema_version": SCHEMA_VERSION, **summary.to_dict()})

    @app.get("/api/v1/sessions/{session_id}/highlights/{clip_index}/frames")
    def get_clip_frames(session_id: str, clip_index: int) -> Response:
        _path, journal = store.find(session_id)
        _timeline, session_end = face_visibility_timeline(journal)
        clips = detect_highlights(journal.events, highlight_pad_us, session_end)
        if clip_index < 0 or clip_index >= len(clips):
            raise ServiceError(404, "not_found", f"session {session_id!r} has no clip {clip_index}")
        clip = clips[clip_index]
        landmarks = {f.timestamp_us: f for f in journal.landmark_frames}
        frames = []
        stamped = journal.frame_metas or journal.landmark_frames
        for rec in stamped:
            t = rec.timestamp_us
            if not (clip.start_us <= t <= clip.end_us):
                continue
            entry = {
                "timestamp_us": t,
                "face_present": rec.face_present,
                "blob_hash": getattr(rec, "blob_hash", None),
            }
            lm = landmarks.get(t)
            if lm is not None and lm.face_present:
                entry["points"] = [[float(x), float(y)] for x, y in lm.points]
            frames.append(entry)
        return reply(
            {
                "schema_version": SCHEMA_VERSION,
                "session_id": session_id,
                "clip_index": clip_index,
                "start_us": clip.start_us,
                "end_us": clip.end_us,
                "frames": frames,
            }
        )

    @app.post("/api/v1/sessions/{session_id}/annotations")
    async def post_annotation(session_id: str, request: Request) -> Response:
        path, journal = store.find(session_id)
        try:
            body = await request.json()
        except Exception:
            raise ServiceError(400, "bad_request", "body must be JSON")
        if not isinstance(body, dict):
            raise ServiceError(400, "bad_request", "body must be a JSON object")
        author = body.get("author", "")
        text = body.get("text", "")
        ts = body.get("timestamp_in_session_us")
        if not isinstance(text, str) or not text.strip():
            raise ServiceError(400, "empty_text", "annotation text must be non-empty")
        if len(text) > MAX_ANNOTATION_CHARS:
            raise ServiceError(400, "text_too_long", f"annotation text exceeds {MAX_ANNOTATION_CHARS} characters")
        if not isinstance(ts, int):
            raise ServiceError(400, "bad_request", "timestamp_in_session_us must be an integer")
        _timeline, session_end = face_visibility_timeline(journal)
        if ts < 0 or ts > session_end:
            raise ServiceError(
                400, "timestamp_out_of_range", f"timestamp {ts} outside session [0, {session_end}]"
            )
        annotation = Annotation(
            session_id=session_id,
            author=str(author),
            timestamp_in_session_us=ts,
            text=text,
            created_at_us=now_us(),
        )
        idx = store.append_annotation(path, journal.meta, annotation)
        return reply({"schema_version": SCHEMA_VERSION, **_annotation_view(annotation, idx)}, status=201)

    @app.get("/api/v1/subjects/{subject}/progress")
    def get_progress(subject: str) -> Response:
        sessions, _warnings = store.scan()
        mine = [(j.meta, session_summary(j)) for _p, j in sessions if j.meta.subject == subject]
        if not mine:
            raise ServiceError(404, "not_found", f"unknown subject {subject!r}")
        series = progress_series(subject, mine)
        return reply({"schema_version": SCHEMA_VERSION, **series.to_dict()})

    @app.exception_handler(404)
    async def _not_found(_request: Request, _exc):
        return JSONResponse(status_code=404, content={"error": {"code": "not_found", "detail": "unknown route"}})

    return app
