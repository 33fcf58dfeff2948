"""Shared domain types: labels, frames, scores, events, cues, spans, and session metadata.

All in-session timestamps are integer microseconds from session start. Wall-clock
time appears only in SessionMeta (unix microseconds). Durations in config files
are milliseconds; everything internal is microseconds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum

import numpy as np

NUM_LANDMARKS = 68
NUM_LABELS = 8

US_PER_MS = 1_000
US_PER_SECOND = 1_000_000


class ExpressionLabel(IntEnum):
    """The 8 expression classes. Wire codes are frozen: do not reorder."""

    NEUTRAL = 0
    HAPPINESS = 1
    SADNESS = 2
    ANGER = 3
    FEAR = 4
    SURPRISE = 5
    DISGUST = 6
    CONTEMPT = 7


NON_NEUTRAL_LABELS: tuple[ExpressionLabel, ...] = tuple(
    lbl for lbl in ExpressionLabel if lbl is not ExpressionLabel.NEUTRAL
)


class CueChannel(str, Enum):
    VISUAL = "visual"
    AUDIO = "audio"


class SuppressReason(str, Enum):
    COOLDOWN = "cooldown"
    RATE_LIMIT = "rate_limit"
    NEUTRAL = "neutral"
    POLICY_OFF = "policy_off"


@dataclass(frozen=True)
class SessionMeta:
    session_id: str
    subject: str
    started_at_us: int  # wall clock, unix epoch microseconds
    frame_rate_hz: float

    def frame_period_us(self) -> int:
        if self.frame_rate_hz <= 0:
            raise ValueError(f"frame_rate_hz must be positive, got {self.frame_rate_hz}")
        return round(US_PER_SECOND / self.frame_rate_hz)


@dataclass(eq=False)
class LandmarkFrame:
    """One timestamped 68-point face observation, coordinates in image pixels."""

    timestamp_us: int
    face_present: bool
    points: np.ndarray | None = None  # (68, 2) float64 when face_present
    face_box: tuple[float, float, float, float] | None = None  # x, y, w, h

    def __post_init__(self):
        if self.timestamp_us < 0:
            raise ValueError(f"timestamp_us must be non-negative, got {self.timestamp_us}")
        if self.face_present:
            if self.points is None:
                raise ValueError("face_present frame requires points")
            self.points = np.asarray(self.points, dtype=np.float64)
            if self.points.shape != (NUM_LANDMARKS, 2):
                raise ValueError(f"expected ({NUM_LANDMARKS}, 2) points, got {self.points.shape}")
        elif self.points is not None:
            raise ValueError("faceless frame must not carry points")


@dataclass(eq=False)
class FrameMeta:
    """Per-frame bookkeeping record; pixel data lives outside the journal as blobs."""

    timestamp_us: int
    face_present: bool
    blob_hash: str | None = None  # hex key into the blobs/ directory


@dataclass(eq=False)
class ClassScores:
    """Probability distribution over the 8 labels at one frame."""

    timestamp_us: int
    scores: np.ndarray  # (8,) float64, sums to 1

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.scores.shape != (NUM_LABELS,):
            raise ValueError(f"expected ({NUM_LABELS},) scores, got {self.scores.shape}")

    def validate(self) -> None:
        if not np.isfinite(self.scores).all():
            raise ValueError("scores must be finite")
        if (self.scores < 0).any() or (self.scores > 1).any():
            raise ValueError("scores must lie in [0, 1]")
        if abs(float(self.scores.sum()) - 1.0) > 1e-9:
            raise ValueError(f"scores must sum to 1, got {self.scores.sum()!r}")


@dataclass(frozen=True)
class ExpressiveEvent:
    """A contiguous episode of one non-neutral expression."""

    label: ExpressionLabel
    start_us: int
    end_us: int
    peak_score: float

    def __post_init__(self):
        if self.label is ExpressionLabel.NEUTRAL:
            raise ValueError("events are never neutral")
        if self.end_us < self.start_us:
            raise ValueError(f"event end {self.end_us} before start {self.start_us}")
        if not (0.0 < self.peak_score <= 1.0):
            raise ValueError(f"peak_score must be in (0, 1], got {self.peak_score}")


@dataclass(frozen=True)
class Cue:
    """A social cue decision for one event; suppressed cues are kept, not dropped."""

    label: ExpressionLabel
    issued_at_us: int
    channel: CueChannel
    suppressed: bool
    suppress_reason: SuppressReason | None = None

    def __post_init__(self):
        if self.suppressed != (self.suppress_reason is not None):
            raise ValueError("suppressed is true iff suppress_reason is present")


@dataclass(frozen=True)
class SpeechActivitySpan:
    speaker_id: str
    start_us: int
    end_us: int

    def __post_init__(self):
        if self.start_us >= self.end_us:
            raise ValueError(f"speech span must have start < end, got [{self.start_us}, {self.end_us}]")


@dataclass(frozen=True)
class HeadPoseSample:
    """Head orientation in degrees; yaw/pitch/roll each clamped to [-90, 90]."""

    timestamp_us: int
    yaw_deg: float
    pitch_deg: float
    roll_deg: float

    def __post_init__(self):
        for name in ("yaw_deg", "pitch_deg", "roll_deg"):
            v = getattr(self, name)
            if not -90.0 <= v <= 90.0:
                raise ValueError(f"{name} out of [-90, 90]: {v}")


@dataclass(frozen=True)
class GameTrial:
    session_id: str
    trial_index: int
    prompted_label: ExpressionLabel
    responded_label: ExpressionLabel
    correct: bool

    def __post_init__(self):
        if self.correct != (self.prompted_label == self.responded_label):
            raise ValueError("correct must equal (prompted_label == responded_label)")


@dataclass(frozen=True)
class Annotation:
    session_id: str
    author: str
    timestamp_in_session_us: int
    text: str
    created_at_us: int  # wall clock, unix epoch microseconds


@dataclass(frozen=True)
class HighlightClip:
    """A padded, merged interval around one or more expressive events."""

    start_us: int
    end_us: int
    event_refs: tuple[int, ...]  # indices into the session's event list
    dominant_label: ExpressionLabel

    def __post_init__(self):
        if not self.event_refs:
            raise ValueError("a clip must contain at least one event")
        if self.end_us <= self.start_us:
            raise ValueError("clip must have positive length")


@dataclass
class SessionJournal:
    """An in-memory view of one session's records, in file order.

    The first record of a well-formed journal is its SessionMeta; readers of
    damaged or foreign files may see meta=None and must handle it downstream.
    """

    meta: SessionMeta | None
    records: list = field(default_factory=list)

    def of_kind(self, cls) -> list:
        return [r for r in self.records if isinstance(r, cls)]

    @property
    def frame_metas(self) -> list[FrameMeta]:
        return self.of_kind(FrameMeta)

    @property
    def landmark_frames(self) -> list[LandmarkFrame]:
        return self.of_kind(LandmarkFrame)

    @property
    def score_records(self) -> list[ClassScores]:
        return self.of_kind(ClassScores)

    @property
    def events(self) -> list[ExpressiveEvent]:
        return self.of_kind(ExpressiveEvent)

    @property
    def cues(self) -> list[Cue]:
        return self.of_kind(Cue)

    @property
    def poses(self) -> list[HeadPoseSample]:
        return self.of_kind(HeadPoseSample)

    @property
    def speech_spans(self) -> list[SpeechActivitySpan]:
        return self.of_kind(SpeechActivitySpan)

    @property
    def annotations(self) -> list[Annotation]:
        return self.of_kind(Annotation)

    @property
    def game_trials(self) -> list[GameTrial]:
        return self.of_kind(GameTrial)
