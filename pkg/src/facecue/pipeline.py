"""Pipeline composition: landmarks -> features -> class scores -> smoothed
scores -> events -> cue decisions.

Two engines share identical semantics:

  * RealtimePipeline — one frame at a time; what the device link and the CLI
    replay run. Cue decisions fire at event confirmation (persistence reaches
    the segmenter's minimum duration), carrying the event's start timestamp.
  * BulkPipeline — block-at-a-time over frame arrays for high-volume replay
    and benchmarks, built on the accel kernels with state carried across
    blocks so results do not depend on the blocking.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import accel
from .affect import ClassifierModel, predict_proba
from .events import (
    CuePolicy,
    CuePolicyConfig,
    ScoreSmoother,
    SegmenterConfig,
    SmoothingConfig,
    StreamSegmenter,
    BlockSegmenter,
    decide_cues,
)
from .types import ClassScores, Cue, ExpressiveEvent, LandmarkFrame


@dataclass
class FrameResult:
    scores: ClassScores | None  # None for faceless frames
    cues: list[Cue] = field(default_factory=list)  # decided at this frame
    completed_events: list[ExpressiveEvent] = field(default_factory=list)


class RealtimePipeline:
    """Streaming engine. Faceless frames pass through untouched: the smoother
    and automaton only ever see face-present frames."""

    def __init__(
        self,
        model: ClassifierModel,
        baseline_dists: np.ndarray | None,
        smoothing: SmoothingConfig = SmoothingConfig(),
        segmenter: SegmenterConfig = SegmenterConfig(),
        cue_policy: CuePolicyConfig = CuePolicyConfig(),
    ):
        self.model = model
        self.baseline_dists = baseline_dists
        self._smoother = ScoreSmoother(smoothing)
        self._segmenter = StreamSegmenter(segmenter)
        self._policy = CuePolicy(cue_policy)
        self._events: list[ExpressiveEvent] = []
        self._cues: list[Cue] = []

    def process_frame(self, frame: LandmarkFrame) -> FrameResult:
        if not frame.face_present:
            return FrameResult(scores=None)
        kern = accel.kernels()
        canon, iod = kern.normalize_batch(frame.points[None, :, :])
        if iod[0] < 1e-12:
            return FrameResult(scores=None)  # degenerate landmarks: treat as no face
        feats = kern.features_batch(canon, self.baseline_dists)
        probs = predict_proba(self.model, feats[0])
        smoothed = self._smoother.push(probs)
        confirmations, completed = self._segmenter.push(frame.timestamp_us, smoothed)
        confirmations.sort(key=lambda c: (c[1], int(c[0])))  # keep cue order = event start order
        cues = [self._policy.decide(label, start_us) for label, start_us in confirmations]
        self._events.extend(completed)
        self._cues.extend(cues)
        return FrameResult(
            scores=ClassScores(timestamp_us=frame.timestamp_us, scores=probs),
            cues=cues,
            completed_events=completed,
        )

    def finish(self) -> tuple[list[ExpressiveEvent], list[Cue]]:
        """Close open episodes; returns all events (start-ordered) and all cues."""
        self._events.extend(self._segmenter.finish())
        self._events.sort(key=lambda e: (e.start_us, int(e.label)))
        return self._events, self._cues


@dataclass
class ReplayResult:
    scores: list[ClassScores]
    events: list[ExpressiveEvent]
    cues: list[Cue]


def replay_frames(
    frames: list[LandmarkFrame],
    model: ClassifierModel,
    baseline_dists: np.ndarray | None,
    smoothing: SmoothingConfig = SmoothingConfig(),
    segmenter: SegmenterConfig = SegmenterConfig(),
    cue_policy: CuePolicyConfig = CuePolicyConfig(),
) -> ReplayResult:
    """Frame-accurate offline replay via the streaming engine."""
    pipe = RealtimePipeline(model, baseline_dists, smoothing, segmenter, cue_policy)
    scores = []
    for frame in frames:
        result = pipe.process_frame(frame)
        if result.scores is not None:
            scores.append(result.scores)
    events, cues = pipe.finish()
    return ReplayResult(scores=scores, events=events, cues=cues)


class BulkPipeline:
    """Block replay over (N, 68, 2) face-present frame arrays. Feed blocks in
    timestamp order. Event boundaries and cue decisions do not depend on the
    blocking; raw scores (and therefore peak_score) are reproducible across
    different blockings only to ~1e-12, since BLAS matmul rounding varies with
    the block height. A fixed blocking is bit-deterministic."""

    def __init__(
        self,
        model: ClassifierModel,
        baseline_dists: np.ndarray | None,
        smoothing: SmoothingConfig = SmoothingConfig(),
        segmenter: SegmenterConfig = SegmenterConfig(),
        cue_policy: CuePolicyConfig = CuePolicyConfig(),
    ):
        self.model = model
        self.baseline_dists = baseline_dists
        self._alpha = smoothing.alpha
        self._carry: np.ndarray | None = None
        self._segmenter = BlockSegmenter(segmenter)
        self._cue_policy = cue_policy
        self._events: list[ExpressiveEvent] = []
        self.frames_processed = 0

    def process_block(self, ts: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Run one block; returns the block's raw class scores (N, 8)."""
        kern = accel.kernels()
        canon, _ = kern.normalize_batch(points)
        feats = kern.features_batch(canon, self.baseline_dists)
        probs = predict_proba(self.model, feats)
        smoothed, self._carry = kern.ema_batch(probs, self._alpha, self._carry)
        self._events.extend(self._segmenter.push_block(np.asarray(ts, dtype=np.int64), smoothed))
        self.frames_processed += ts.shape[0]
        return probs

    def finish(self) -> tuple[list[ExpressiveEvent], list[Cue]]:
        self._events.extend(self._segmenter.finish())
        self._events.sort(key=lambda e: (e.start_us, int(e.label)))
        cues = decide_cues(self._events, self._cue_policy)
        return self._events, cues
