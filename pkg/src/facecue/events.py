"""Temporal logic: score smoothing, hysteresis event segmentation, cue policy.

Each stage exists in two forms with identical semantics: a streaming class
(push one frame at a time; what the live link runs) and a batch function over
whole streams (what replay and the bulk pipeline run, backed by the accel
kernels). The oracle tests hold both to a frame-by-frame reference automaton.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import accel
from .types import (
    ClassScores,
    Cue,
    CueChannel,
    ExpressionLabel,
    ExpressiveEvent,
    NON_NEUTRAL_LABELS,
    NUM_LABELS,
    SuppressReason,
    US_PER_SECOND,
)

RATE_WINDOW_US = 60 * US_PER_SECOND


@dataclass(frozen=True)
class SmoothingConfig:
    alpha: float = 0.3

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")


@dataclass(frozen=True)
class SegmenterConfig:
    enter_threshold: float = 0.65
    exit_threshold: float = 0.45
    min_duration_us: int = 500_000

    def __post_init__(self):
        if not (0.0 < self.enter_threshold < 1.0) or not (0.0 < self.exit_threshold < 1.0):
            raise ValueError("thresholds must lie in (0, 1)")
        if self.exit_threshold >= self.enter_threshold:
            raise ValueError(
                f"hysteresis gap required: exit {self.exit_threshold} must be below enter {self.enter_threshold}"
            )
        if self.min_duration_us <= 0:
            raise ValueError("min_duration_us must be positive")


@dataclass(frozen=True)
class CuePolicyConfig:
    per_label_cooldown_us: int = 5_000_000
    global_rate_limit_per_minute: int = 12
    channel: CueChannel = CueChannel.VISUAL
    enabled_labels: frozenset[ExpressionLabel] = frozenset(NON_NEUTRAL_LABELS)

    def __post_init__(self):
        if self.per_label_cooldown_us < 0:
            raise ValueError("cooldown must be non-negative")
        if self.global_rate_limit_per_minute < 1:
            raise ValueError("rate limit must be at least 1 per minute")


# --- smoothing ---------------------------------------------------------------

class ScoreSmoother:
    """Streaming per-label EMA: s_t = alpha * p_t + (1 - alpha) * s_{t-1}, s_0 = p_0."""

    def __init__(self, config: SmoothingConfig):
        self.alpha = config.alpha
        self._state: np.ndarray | None = None

    def push(self, scores: np.ndarray) -> np.ndarray:
        if self._state is None:
            self._state = np.asarray(scores, dtype=np.float64).copy()
        else:
            self._state = self.alpha * np.asarray(scores, dtype=np.float64) + (1.0 - self.alpha) * self._state
        return self._state.copy()


def smooth(stream: list[ClassScores], config: SmoothingConfig) -> list[ClassScores]:
    """Batch EMA over a timestamp-ordered score stream; timestamps preserved."""
    if not stream:
        return []
    block = np.stack([s.scores for s in stream])
    out, _ = accel.kernels().ema_batch(block, config.alpha, None)
    return [ClassScores(timestamp_us=s.timestamp_us, scores=out[i]) for i, s in enumerate(stream)]


# --- segmentation ------------------------------------------------------------

@dataclass
class _LabelState:
    active: bool = False
    start_us: int = 0
    end_us: int = 0
    peak: float = 0.0


class StreamSegmenter:
    """Per-label hysteresis automaton, one push per frame.

    push() returns (confirmations, completed): confirmations fire once per
    event, at the first frame where the episode has persisted min_duration
    (this is when the live pipeline decides the cue); completed events arrive
    when the episode terminates, end already known.
    """

    def __init__(self, config: SegmenterConfig):
        self.config = config
        self._labels = [_LabelState() for _ in range(NUM_LABELS)]
        self._confirmed = [False] * NUM_LABELS

    def push(self, timestamp_us: int, smoothed: np.ndarray) -> tuple[list[tuple[ExpressionLabel, int]], list[ExpressiveEvent]]:
        cfg = self.config
        confirmations: list[tuple[ExpressionLabel, int]] = []
        completed: list[ExpressiveEvent] = []
        best = int(np.argmax(smoothed))
        for lbl in range(1, NUM_LABELS):
            st = self._labels[lbl]
            v = float(smoothed[lbl])
            if st.active:
                if v <= cfg.exit_threshold:
                    if st.end_us - st.start_us >= cfg.min_duration_us:
                        completed.append(
                            ExpressiveEvent(
                                label=ExpressionLabel(lbl),
                                start_us=st.start_us,
                                end_us=st.end_us,
                                peak_score=st.peak,
                            )
                        )
                    st.active = False
                    self._confirmed[lbl] = False
                else:
                    st.end_us = timestamp_us
                    if v > st.peak:
                        st.peak = v
                    if not self._confirmed[lbl] and timestamp_us - st.start_us >= cfg.min_duration_us:
                        self._confirmed[lbl] = True
                        confirmations.append((ExpressionLabel(lbl), st.start_us))
            elif v >= cfg.enter_threshold and lbl == best:
                st.active = True
                st.start_us = timestamp_us
                st.end_us = timestamp_us
                st.peak = v
        return confirmations, completed

    def finish(self) -> list[ExpressiveEvent]:
        """Terminate still-active episodes at the last frame seen."""
        completed = []
        for lbl in range(1, NUM_LABELS):
            st = self._labels[lbl]
            if st.active and st.end_us - st.start_us >= self.config.min_duration_us:
                completed.append(
                    ExpressiveEvent(
                        label=ExpressionLabel(lbl),
                        start_us=st.start_us,
                        end_us=st.end_us,
                        peak_score=st.peak,
                    )
                )
            st.active = False
            self._confirmed[lbl] = False
        completed.sort(key=lambda e: (e.start_us, int(e.label)))
        return completed


class BlockSegmenter:
    """Chunk-oriented wrapper over the accel segmentation kernel; carries
    automaton state across blocks so block boundaries are invisible."""

    def __init__(self, config: SegmenterConfig):
        self.config = config
        self._active = np.zeros(NUM_LABELS, dtype=np.bool_)
        self._start = np.zeros(NUM_LABELS, dtype=np.int64)
        self._end = np.zeros(NUM_LABELS, dtype=np.int64)
        self._peak = np.zeros(NUM_LABELS, dtype=np.float64)

    def push_block(self, ts: np.ndarray, smoothed: np.ndarray) -> list[ExpressiveEvent]:
        cfg = self.config
        labels, starts, ends, peaks = accel.kernels().segment_batch(
            ts, smoothed, cfg.enter_threshold, cfg.exit_threshold, cfg.min_duration_us,
            self._active, self._start, self._end, self._peak,
        )
        return [
            ExpressiveEvent(
                label=ExpressionLabel(int(labels[i])),
                start_us=int(starts[i]),
                end_us=int(ends[i]),
                peak_score=float(peaks[i]),
            )
            for i in range(labels.shape[0])
        ]

    def finish(self) -> list[ExpressiveEvent]:
        out = []
        for lbl in range(1, NUM_LABELS):
            if self._active[lbl] and self._end[lbl] - self._start[lbl] >= self.config.min_duration_us:
                out.append(
                    ExpressiveEvent(
                        label=ExpressionLabel(lbl),
                        start_us=int(self._start[lbl]),
                        end_us=int(self._end[lbl]),
                        peak_score=float(self._peak[lbl]),
                    )
                )
            self._active[lbl] = False
        return out


def segment_events(stream: list[ClassScores], config: SegmenterConfig) -> list[ExpressiveEvent]:
    """Segment a smoothed, timestamp-ordered score stream into expressive events,
    sorted by start (ties by label code)."""
    if not stream:
        return []
    seg = BlockSegmenter(config)
    ts = np.fromiter((s.timestamp_us for s in stream), dtype=np.int64, count=len(stream))
    block = np.stack([s.scores for s in stream])
    events = seg.push_block(ts, block)
    events.extend(seg.finish())
    events.sort(key=lambda e: (e.start_us, int(e.label)))
    return events


# --- cue policy --------------------------------------------------------------

class CuePolicy:
    """Stateful suppression rules: policy_off, per-label cooldown, rolling
    60 s global rate limit — checked in that order. Suppressed cues never
    count toward cooldown or the rate window."""

    def __init__(self, config: CuePolicyConfig):
        self.config = config
        self._last_issued_us: dict[ExpressionLabel, int] = {}
        self._issued_window: deque[int] = deque()

    def decide(self, label: ExpressionLabel, at_us: int) -> Cue:
        cfg = self.config
        reason = None
        if label is ExpressionLabel.NEUTRAL:
            reason = SuppressReason.NEUTRAL
        elif label not in cfg.enabled_labels:
            reason = SuppressReason.POLICY_OFF
        else:
            last = self._last_issued_us.get(label)
            if last is not None and at_us - last < cfg.per_label_cooldown_us:
                reason = SuppressReason.COOLDOWN
            else:
                while self._issued_window and self._issued_window[0] <= at_us - RATE_WINDOW_US:
                    self._issued_window.popleft()
                if len(self._issued_window) >= cfg.global_rate_limit_per_minute:
                    reason = SuppressReason.RATE_LIMIT
        if reason is None:
            self._last_issued_us[label] = at_us
            self._issued_window.append(at_us)
        return Cue(
            label=label,
            issued_at_us=at_us,
            channel=cfg.channel,
            suppressed=reason is not None,
            suppress_reason=reason,
        )


def decide_cues(events: list[ExpressiveEvent], config: CuePolicyConfig) -> list[Cue]:
    """One cue decision per event, in start order. Suppression preserves the
    record: output length always equals input length."""
    for prev, cur in zip(events, events[1:]):
        if cur.start_us < prev.start_us:
            raise ValueError("events must be sorted by start")
    policy = CuePolicy(config)
    return [policy.decide(ev.label, ev.start_us) for ev in events]
