"""Append-only session journal: the AGSJ file format.

Layout, all integers little-endian:

    file   = magic "AGSJ" | format_version u16 | record*
    record = kind u8 | payload_len u32 | payload | crc32 u32

The CRC (CRC-32/ISO-HDLC, i.e. zlib.crc32) covers kind + payload_len + payload.
Payloads are canonical JSON: UTF-8, keys sorted lexicographically, no
insignificant whitespace. Canonical form is what makes write -> read -> write
bit-exact, so every change here is a format change.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable

import numpy as np

from .types import (
    Annotation,
    ClassScores,
    Cue,
    CueChannel,
    ExpressionLabel,
    ExpressiveEvent,
    FrameMeta,
    GameTrial,
    HeadPoseSample,
    LandmarkFrame,
    SessionJournal,
    SessionMeta,
    SpeechActivitySpan,
    SuppressReason,
)

MAGIC = b"AGSJ"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<4sH")
_RECORD_HEAD = struct.Struct("<BI")
_CRC = struct.Struct("<I")

KIND_SESSION_META = 1
KIND_FRAME_META = 2
KIND_LANDMARKS = 3
KIND_SCORES = 4
KIND_EVENT = 5
KIND_CUE = 6
KIND_POSE = 7
KIND_SPEECH_SPAN = 8
KIND_ANNOTATION = 9
KIND_GAME_TRIAL = 10

KIND_NAMES = {
    KIND_SESSION_META: "SessionMeta",
    KIND_FRAME_META: "FrameMeta",
    KIND_LANDMARKS: "Landmarks",
    KIND_SCORES: "Scores",
    KIND_EVENT: "Event",
    KIND_CUE: "Cue",
    KIND_POSE: "Pose",
    KIND_SPEECH_SPAN: "SpeechSpan",
    KIND_ANNOTATION: "Annotation",
    KIND_GAME_TRIAL: "GameTrial",
}


class JournalError(Exception):
    pass


class BadMagicError(JournalError):
    pass


class UnsupportedVersionError(JournalError):
    pass


class CrcMismatchError(JournalError):
    def __init__(self, record_index: int, byte_offset: int):
        self.record_index = record_index
        self.byte_offset = byte_offset
        super().__init__(f"CRC mismatch at record {record_index} (byte offset {byte_offset})")


class TruncatedJournalError(JournalError):
    def __init__(self, byte_offset: int, detail: str = "truncated record"):
        self.byte_offset = byte_offset
        super().__init__(f"{detail} at byte offset {byte_offset}")


class OutOfOrderError(JournalError):
    pass


class WriterClosedError(JournalError):
    pass


def canonical_json(obj) -> bytes:
    """Canonical JSON bytes: sorted keys, compact separators, UTF-8, no NaN/Inf."""
    return json.dumps(
        obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False
    ).encode("utf-8")


# --- payload codecs ---------------------------------------------------------

def _points_to_list(points: np.ndarray) -> list[list[float]]:
    return [[float(x), float(y)] for x, y in points]


def record_kind(record) -> int:
    kind = _KIND_BY_TYPE.get(type(record))
    if kind is None:
        raise JournalError(f"unsupported record type {type(record).__name__}")
    return kind


def record_payload(record) -> dict:
    """The record's canonical payload dict (also used for wire messages)."""
    return _TO_PAYLOAD[record_kind(record)](record)


def record_from_payload(kind: int, payload: dict):
    decoder = _FROM_PAYLOAD.get(kind)
    if decoder is None:
        raise JournalError(f"unknown record kind {kind}")
    try:
        return decoder(payload)
    except (KeyError, TypeError, ValueError) as exc:
        raise JournalError(f"malformed {KIND_NAMES.get(kind, kind)} payload: {exc}") from exc


def record_order_key(record) -> int:
    """The per-kind append-ordering key (microseconds, or trial index for GameTrial)."""
    return _ORDER_KEY[record_kind(record)](record)


def _meta_payload(m: SessionMeta) -> dict:
    return {
        "session_id": m.session_id,
        "subject": m.subject,
        "started_at_us": m.started_at_us,
        "frame_rate_hz": m.frame_rate_hz,
    }


def _meta_from(p: dict) -> SessionMeta:
    return SessionMeta(
        session_id=p["session_id"],
        subject=p["subject"],
        started_at_us=int(p["started_at_us"]),
        frame_rate_hz=float(p["frame_rate_hz"]),
    )


def _frame_meta_payload(f: FrameMeta) -> dict:
    return {"timestamp_us": f.timestamp_us, "face_present": f.face_present, "blob_hash": f.blob_hash}


def _frame_meta_from(p: dict) -> FrameMeta:
    return FrameMeta(
        timestamp_us=int(p["timestamp_us"]),
        face_present=bool(p["face_present"]),
        blob_hash=p.get("blob_hash"),
    )


def landmark_frame_payload(f: LandmarkFrame) -> dict:
    p = {"timestamp_us": f.timestamp_us, "face_present": f.face_present}
    if f.face_present:
        p["points"] = _points_to_list(f.points)
    if f.face_box is not None:
        p["face_box"] = [float(v) for v in f.face_box]
    return p


def landmark_frame_from_payload(p: dict) -> LandmarkFrame:
    box = p.get("face_box")
    return LandmarkFrame(
        timestamp_us=int(p["timestamp_us"]),
        face_present=bool(p["face_present"]),
        points=np.array(p["points"], dtype=np.float64) if p.get("face_present") else None,
        face_box=tuple(box) if box is not None else None,
    )


def _scores_payload(s: ClassScores) -> dict:
    return {"timestamp_us": s.timestamp_us, "scores": [float(v) for v in s.scores]}


def _scores_from(p: dict) -> ClassScores:
    return ClassScores(timestamp_us=int(p["timestamp_us"]), scores=np.array(p["scores"], dtype=np.float64))


def _event_payload(e: ExpressiveEvent) -> dict:
    return {
        "label": int(e.label),
        "start_us": e.start_us,
        "end_us": e.end_us,
        "peak_score": e.peak_score,
    }


def _event_from(p: dict) -> ExpressiveEvent:
    return ExpressiveEvent(
        label=ExpressionLabel(int(p["label"])),
        start_us=int(p["start_us"]),
        end_us=int(p["end_us"]),
        peak_score=float(p["peak_score"]),
    )


def cue_payload(c: Cue) -> dict:
    return {
        "label": int(c.label),
        "issued_at_us": c.issued_at_us,
        "channel": c.channel.value,
        "suppressed": c.suppressed,
        "suppress_reason": c.suppress_reason.value if c.suppress_reason else None,
    }


def cue_from_payload(p: dict) -> Cue:
    reason = p.get("suppress_reason")
    return Cue(
        label=ExpressionLabel(int(p["label"])),
        issued_at_us=int(p["issued_at_us"]),
        channel=CueChannel(p["channel"]),
        suppressed=bool(p["suppressed"]),
        suppress_reason=SuppressReason(reason) if reason is not None else None,
    )


def _pose_payload(s: HeadPoseSample) -> dict:
    return {
        "timestamp_us": s.timestamp_us,
        "yaw_deg": s.yaw_deg,
        "pitch_deg": s.pitch_deg,
        "roll_deg": s.roll_deg,
    }


def _pose_from(p: dict) -> HeadPoseSample:
    return HeadPoseSample(
        timestamp_us=int(p["timestamp_us"]),
        yaw_deg=float(p["yaw_deg"]),
        pitch_deg=float(p["pitch_deg"]),
        roll_deg=float(p["roll_deg"]),
    )


def _speech_payload(s: SpeechActivitySpan) -> dict:
    return {"speaker_id": s.speaker_id, "start_us": s.start_us, "end_us": s.end_us}


def _speech_from(p: dict) -> SpeechActivitySpan:
    return SpeechActivitySpan(speaker_id=p["speaker_id"], start_us=int(p["start_us"]), end_us=int(p["end_us"]))


def _annotation_payload(a: Annotation) -> dict:
    return {
        "session_id": a.session_id,
        "author": a.author,
        "timestamp_in_session_us": a.timestamp_in_session_us,
        "text": a.text,
        "created_at_us": a.created_at_us,
    }


def _annotation_from(p: dict) -> Annotation:
    return Annotation(
        session_id=p["session_id"],
        author=p["author"],
        timestamp_in_session_us=int(p["timestamp_in_session_us"]),
        text=p["text"],
        created_at_us=int(p["created_at_us"]),
    )


def _trial_payload(t: GameTrial) -> dict:
    return {
        "session_id": t.session_id,
        "trial_index": t.trial_index,
        "prompted_label": int(t.prompted_label),
        "responded_label": int(t.responded_label),
        "correct": t.correct,
    }


def _trial_from(p: dict) -> GameTrial:
    return GameTrial(
        session_id=p["session_id"],
        trial_index=int(p["trial_index"]),
        prompted_label=ExpressionLabel(int(p["prompted_label"])),
        responded_label=ExpressionLabel(int(p["responded_label"])),
        correct=bool(p["correct"]),
    )


_KIND_BY_TYPE = {
    SessionMeta: KIND_SESSION_META,
    FrameMeta: KIND_FRAME_META,
    LandmarkFrame: KIND_LANDMARKS,
    ClassScores: KIND_SCORES,
    ExpressiveEvent: KIND_EVENT,
    Cue: KIND_CUE,
    HeadPoseSample: KIND_POSE,
    SpeechActivitySpan: KIND_SPEECH_SPAN,
    Annotation: KIND_ANNOTATION,
    GameTrial: KIND_GAME_TRIAL,
}

_TO_PAYLOAD = {
    KIND_SESSION_META: _meta_payload,
    KIND_FRAME_META: _frame_meta_payload,
    KIND_LANDMARKS: landmark_frame_payload,
    KIND_SCORES: _scores_payload,
    KIND_EVENT: _event_payload,
    KIND_CUE: cue_payload,
    KIND_POSE: _pose_payload,
    KIND_SPEECH_SPAN: _speech_payload,
    KIND_ANNOTATION: _annotation_payload,
    KIND_GAME_TRIAL: _trial_payload,
}

_FROM_PAYLOAD = {
    KIND_SESSION_META: _meta_from,
    KIND_FRAME_META: _frame_meta_from,
    KIND_LANDMARKS: landmark_frame_from_payload,
    KIND_SCORES: _scores_from,
    KIND_EVENT: _event_from,
    KIND_CUE: cue_from_payload,
    KIND_POSE: _pose_from,
    KIND_SPEECH_SPAN: _speech_from,
    KIND_ANNOTATION: _annotation_from,
    KIND_GAME_TRIAL: _trial_from,
}

# Ordering key per kind. SessionMeta is pinned to 0 (it opens the file); records
# without an in-session timestamp order by their natural sequence field instead:
# annotations by server arrival time, game trials by trial index.
_ORDER_KEY = {
    KIND_SESSION_META: lambda r: 0,
    KIND_FRAME_META: lambda r: r.timestamp_us,
    KIND_LANDMARKS: lambda r: r.timestamp_us,
    KIND_SCORES: lambda r: r.timestamp_us,
    KIND_EVENT: lambda r: r.start_us,
    KIND_CUE: lambda r: r.issued_at_us,
    KIND_POSE: lambda r: r.timestamp_us,
    KIND_SPEECH_SPAN: lambda r: r.start_us,
    KIND_ANNOTATION: lambda r: r.created_at_us,
    KIND_GAME_TRIAL: lambda r: r.trial_index,
}


def encode_record(record) -> bytes:
    kind = record_kind(record)
    payload = canonical_json(record_payload(record))
    head = _RECORD_HEAD.pack(kind, len(payload))
    crc = zlib.crc32(head + payload) & 0xFFFFFFFF
    return head + payload + _CRC.pack(crc)


class JournalWriter:
    """Single-writer, append-only journal. Opens with the session's meta record.

    Records of the same kind must arrive with non-decreasing ordering keys;
    LandmarkFrame/FrameMeta/Scores additionally require strict increase, matching
    the strictly-increasing-timestamp contract of their streams.
    """

    _STRICT_KINDS = frozenset({KIND_FRAME_META, KIND_LANDMARKS, KIND_SCORES, KIND_POSE})

    def __init__(self, target: str | Path | BinaryIO, meta: SessionMeta):
        if hasattr(target, "write"):
            self._fh: BinaryIO = target
            self._owns_fh = False
        else:
            self._fh = open(target, "wb")
            self._owns_fh = True
        self._closed = False
        self._last_key: dict[int, int] = {}
        self._fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION))
        self._append_unchecked(meta)

    def append(self, record) -> None:
        if self._closed:
            raise WriterClosedError("journal writer is closed")
        kind = record_kind(record)
        if kind == KIND_SESSION_META:
            raise JournalError("SessionMeta may only appear as the first record")
        key = record_order_key(record)
        last = self._last_key.get(kind)
        if last is not None:
            if kind in self._STRICT_KINDS and key <= last:
                raise OutOfOrderError(
                    f"{KIND_NAMES[kind]} key {key} not after previous {last}"
                )
            if key < last:
                raise OutOfOrderError(
                    f"{KIND_NAMES[kind]} key {key} before previous {last}"
                )
        self._append_unchecked(record)

    def append_all(self, records: Iterable) -> None:
        for r in records:
            self.append(r)

    def _append_unchecked(self, record) -> None:
        self._fh.write(encode_record(record))
        self._last_key[record_kind(record)] = record_order_key(record)

    def close(self) -> None:
        if not self._closed:
            self._fh.flush()
            if self._owns_fh:
                self._fh.close()
            self._closed = True

    def __enter__(self) -> "JournalWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_session(source: str | Path | BinaryIO | bytes) -> SessionJournal:
    """Read and validate a journal: magic, version, and every record's CRC.

    Raises BadMagicError / UnsupportedVersionError / CrcMismatchError (with the
    failing record's index) / TruncatedJournalError (with the byte offset of the
    incomplete tail).
    """
    if isinstance(source, bytes):
        data = source
    elif hasattr(source, "read"):
        data = source.read()
    else:
        data = Path(source).read_bytes()

    if len(data) < _HEADER.size:
        raise BadMagicError(f"file too short for header ({len(data)} bytes)")
    magic, version = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"unsupported format version {version}")

    records = []
    offset = _HEADER.size
    index = 0
    while offset < len(data):
        if len(data) - offset < _RECORD_HEAD.size:
            raise TruncatedJournalError(offset, "truncated record header")
        kind, length = _RECORD_HEAD.unpack_from(data, offset)
        body_end = offset + _RECORD_HEAD.size + length
        if body_end + _CRC.size > len(data):
            raise TruncatedJournalError(offset, "record extends past end of file")
        stored = _CRC.unpack_from(data, body_end)[0]
        actual = zlib.crc32(data[offset:body_end]) & 0xFFFFFFFF
        if stored != actual:
            raise CrcMismatchError(index, offset)
        payload_bytes = data[offset + _RECORD_HEAD.size : body_end]
        try:
            payload = json.loads(payload_bytes.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise JournalError(f"record {index}: invalid JSON payload: {exc}") from exc
        records.append(record_from_payload(kind, payload))
        offset = body_end + _CRC.size
        index += 1

    meta = records[0] if records and isinstance(records[0], SessionMeta) else None
    return SessionJournal(meta=meta, records=records)


def records_equal(a, b) -> bool:
    """Structural record equality via the canonical serialized form."""
    return type(a) is type(b) and encode_record(a) == encode_record(b)


def write_session(target: str | Path | BinaryIO, meta: SessionMeta, record_groups: Iterable[Iterable]) -> None:
    """Write a complete journal: meta first, then each record group in order.
    Groups must individually satisfy the per-kind ordering contract."""
    with JournalWriter(target, meta) as writer:
        for group in record_groups:
            for record in group:
                writer.append(record)
