"""Engagement metrics: interval math over visibility/speech timelines, head-pose
habits, game-accuracy trends, and whole-session summaries.

Denominator conventions (ours, documented here once): face_in_view_fraction
divides by session length; gaze_while_speaking divides by the speaker's total
speech time and is absent (None) when that is zero; facing means |yaw| <= 15
degrees. All interval arithmetic is over half-open [start, end) microsecond
spans.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .types import (
    Annotation,
    ClassScores,
    Cue,
    ExpressionLabel,
    ExpressiveEvent,
    FrameMeta,
    GameTrial,
    HeadPoseSample,
    LandmarkFrame,
    SessionJournal,
    SessionMeta,
    SpeechActivitySpan,
)

Span = tuple[int, int]

FACING_YAW_LIMIT_DEG = 15.0
YAW_BIN_EDGES = tuple(range(-90, 91, 20))  # 9 bins of 20 degrees


class MetricsError(Exception):
    pass


class MissingSessionMetaError(MetricsError):
    pass


def merge_spans(spans: list[Span]) -> list[Span]:
    """Sort and coalesce overlapping or touching spans; drops empty ones."""
    cleaned = sorted((int(s), int(e)) for s, e in spans if e > s)
    out: list[Span] = []
    for s, e in cleaned:
        if out and s <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], e))
        else:
            out.append((s, e))
    return out


def total_length(spans: list[Span]) -> int:
    return sum(e - s for s, e in spans)


def intersect_spans(a: list[Span], b: list[Span]) -> list[Span]:
    """Intersection of two normalized span lists (two-pointer sweep)."""
    out: list[Span] = []
    i = j = 0
    while i < len(a) and j < len(b):
        s = max(a[i][0], b[j][0])
        e = min(a[i][1], b[j][1])
        if s < e:
            out.append((s, e))
        if a[i][1] <= b[j][1]:
            i += 1
        else:
            j += 1
    return out


def face_in_view_fraction(timeline: list[Span], session_end_us: int) -> float:
    """Fraction of the session during which a face was tracked."""
    if session_end_us <= 0:
        raise MetricsError(f"session_end_us must be positive, got {session_end_us}")
    return total_length(merge_spans(timeline)) / session_end_us


def gaze_while_speaking(timeline: list[Span], speech_spans: list[Span]) -> float | None:
    """Fraction of the speaker's talking time with a face in view; None when
    the speaker never speaks (undefined ratio, distinct from zero)."""
    speech = merge_spans(speech_spans)
    denom = total_length(speech)
    if denom == 0:
        return None
    inter = intersect_spans(merge_spans(timeline), speech)
    return total_length(inter) / denom


@dataclass
class PoseHabits:
    mean_abs_yaw_deg: float
    yaw_histogram: list[int]  # 9 bins of 20 degrees over [-90, 90]
    facing_fraction: float
    sample_count: int

    def to_dict(self) -> dict:
        return {
            "mean_abs_yaw_deg": self.mean_abs_yaw_deg,
            "yaw_histogram": self.yaw_histogram,
            "yaw_bin_edges_deg": list(YAW_BIN_EDGES),
            "facing_fraction": self.facing_fraction,
            "sample_count": self.sample_count,
        }


def pose_habits(samples: list[HeadPoseSample]) -> PoseHabits:
    """Yaw summary: mean |yaw|, 20-degree histogram, facing fraction.
    Empty streams yield zeros with sample_count 0."""
    if not samples:
        return PoseHabits(0.0, [0] * (len(YAW_BIN_EDGES) - 1), 0.0, 0)
    yaw = np.array([s.yaw_deg for s in samples])
    hist, _ = np.histogram(yaw, bins=np.array(YAW_BIN_EDGES, dtype=np.float64))
    return PoseHabits(
        mean_abs_yaw_deg=float(np.mean(np.abs(yaw))),
        yaw_histogram=hist.tolist(),
        facing_fraction=float(np.mean(np.abs(yaw) <= FACING_YAW_LIMIT_DEG)),
        sample_count=len(samples),
    )


def ols_slope(values: list[float]) -> float | None:
    """OLS slope of values against index 0..n-1; None for n < 2."""
    n = len(values)
    if n < 2:
        return None
    x = np.arange(n, dtype=np.float64)
    y = np.asarray(values, dtype=np.float64)
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))


def game_accuracy_trend(trials_by_session: list[list[GameTrial]]) -> tuple[list[float], float | None]:
    """Per-session game accuracy plus the OLS slope over session index."""
    accuracies = []
    for i, trials in enumerate(trials_by_session):
        if not trials:
            raise MetricsError(f"session {i} has no trials")
        accuracies.append(sum(t.correct for t in trials) / len(trials))
    return accuracies, ols_slope(accuracies)


@dataclass
class EngagementMetrics:
    session_id: str
    session_end_us: int
    face_in_view_fraction: float
    gaze_while_speaking: dict[str, float]  # speaker -> fraction; silent speakers absent
    gaze_while_speaking_strict: dict[str, float]  # additionally requires |yaw| <= 15 deg
    pose: PoseHabits
    event_counts: dict[str, int]
    cue_counts_issued: dict[str, int]
    cue_counts_suppressed: dict[str, int]
    game_accuracy: float | None

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "session_end_us": self.session_end_us,
            "face_in_view_fraction": self.face_in_view_fraction,
            "gaze_while_speaking": self.gaze_while_speaking,
            "gaze_while_speaking_strict": self.gaze_while_speaking_strict,
            "pose": self.pose.to_dict(),
            "event_counts": self.event_counts,
            "cue_counts_issued": self.cue_counts_issued,
            "cue_counts_suppressed": self.cue_counts_suppressed,
            "game_accuracy": self.game_accuracy,
        }


def face_visibility_timeline(journal: SessionJournal) -> tuple[list[Span], int]:
    """Derive (face-present spans, session_end) from a journal's frame records.

    Each face-present frame covers one frame period; consecutive runs merge.
    FrameMeta records are authoritative when present, otherwise Landmarks
    records stand in. session_end is the end of the last frame, or the last
    record timestamp for journals without frames.
    """
    if journal.meta is None:
        raise MissingSessionMetaError("journal has no SessionMeta record")
    period = journal.meta.frame_period_us() if journal.meta.frame_rate_hz > 0 else 0
    metas = journal.frame_metas
    if metas:
        stamped = [(m.timestamp_us, m.face_present) for m in metas]
    else:
        stamped = [(f.timestamp_us, f.face_present) for f in journal.landmark_frames]

    spans = [(t, t + period) for t, present in stamped if present]
    session_end = stamped[-1][0] + period if stamped else 0
    for ev in journal.events:
        session_end = max(session_end, ev.end_us)
    for cue in journal.cues:
        session_end = max(session_end, cue.issued_at_us)
    for pose in journal.poses:
        session_end = max(session_end, pose.timestamp_us + period)
    for span in journal.speech_spans:
        session_end = max(session_end, span.end_us)
    return merge_spans(spans), session_end


def facing_spans(samples: list[HeadPoseSample], period_us: int) -> list[Span]:
    """Spans where |yaw| <= 15 degrees, each sample covering one frame period."""
    return merge_spans(
        [(s.timestamp_us, s.timestamp_us + period_us) for s in samples if abs(s.yaw_deg) <= FACING_YAW_LIMIT_DEG]
    )


def _per_label_counts(labels) -> dict[str, int]:
    counts = {lbl.name.lower(): 0 for lbl in ExpressionLabel if lbl is not ExpressionLabel.NEUTRAL}
    for lbl in labels:
        counts[lbl.name.lower()] += 1
    return counts


def session_summary(journal: SessionJournal) -> EngagementMetrics:
    """All engagement metrics for one session journal. Pure function of the
    journal's records."""
    if journal.meta is None:
        raise MissingSessionMetaError("journal has no SessionMeta record")
    timeline, session_end = face_visibility_timeline(journal)

    speech_by_speaker: dict[str, list[Span]] = {}
    for span in journal.speech_spans:
        speech_by_speaker.setdefault(span.speaker_id, []).append((span.start_us, span.end_us))

    gaze = {}
    gaze_strict = {}
    period = journal.meta.frame_period_us() if journal.meta.frame_rate_hz > 0 else 0
    strict_timeline = intersect_spans(timeline, facing_spans(journal.poses, period))
    for speaker, spans in sorted(speech_by_speaker.items()):
        frac = gaze_while_speaking(timeline, spans)
        if frac is not None:
            gaze[speaker] = frac
        strict = gaze_while_speaking(strict_timeline, spans)
        if strict is not None:
            gaze_strict[speaker] = strict

    fraction = (
        face_in_view_fraction(timeline, session_end) if session_end > 0 else 0.0
    )

    trials = journal.game_trials
    accuracy = (sum(t.correct for t in trials) / len(trials)) if trials else None

    return EngagementMetrics(
        session_id=journal.meta.session_id,
        session_end_us=session_end,
        face_in_view_fraction=fraction,
        gaze_while_speaking=gaze,
        gaze_while_speaking_strict=gaze_strict,
        pose=pose_habits(journal.poses),
        event_counts=_per_label_counts(e.label for e in journal.events),
        cue_counts_issued=_per_label_counts(c.label for c in journal.cues if not c.suppressed),
        cue_counts_suppressed=_per_label_counts(c.label for c in journal.cues if c.suppressed),
        game_accuracy=accuracy,
    )


# --- cross-session progress --------------------------------------------------

TREND_METRICS = ("face_in_view_fraction", "facing_fraction", "mean_abs_yaw_deg", "game_accuracy")


@dataclass
class ProgressPoint:
    session_id: str
    started_at_us: int
    values: dict[str, float | None]


@dataclass
class ProgressSeries:
    subject: str
    points: list[ProgressPoint] = field(default_factory=list)
    slopes: dict[str, float | None] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "subject": self.subject,
            "points": [
                {"session_id": p.session_id, "started_at_us": p.started_at_us, **p.values}
                for p in self.points
            ],
            "slopes": self.slopes,
        }


def progress_series(subject: str, sessions: list[tuple[SessionMeta, EngagementMetrics]]) -> ProgressSeries:
    """Per-session metric points in started_at order, plus an OLS trend slope
    per metric (absent with fewer than 2 sessions carrying that metric)."""
    ordered = sorted(sessions, key=lambda pair: (pair[0].started_at_us, pair[0].session_id))
    points = []
    for meta, summary in ordered:
        points.append(
            ProgressPoint(
                session_id=meta.session_id,
                started_at_us=meta.started_at_us,
                values={
                    "face_in_view_fraction": summary.face_in_view_fraction,
                    "facing_fraction": summary.pose.facing_fraction,
                    "mean_abs_yaw_deg": summary.pose.mean_abs_yaw_deg,
                    "game_accuracy": summary.game_accuracy,
                },
            )
        )
    slopes: dict[str, float | None] = {}
    for metric in TREND_METRICS:
        series = [p.values[metric] for p in points if p.values[metric] is not None]
        slopes[metric] = ols_slope(series)
    return ProgressSeries(subject=subject, points=points, slopes=slopes)
