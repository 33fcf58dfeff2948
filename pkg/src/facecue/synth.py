"""Deterministic synthetic scenarios: scripted expression episodes rendered as
landmark streams with known ground truth.

Synthesis interpolates the neutral face toward per-label landmark templates
(offsets shipped in data/expression_templates.json), ramps intensities with a
100 ms smoothstep at episode edges, adds seeded Gaussian jitter, and embeds the
result into a fixed pixel frame. Pose scripts emit HeadPoseSample streams
directly; generated landmarks stay frontal (pose recovery has its own
projection-based tests).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .affect import LabeledDataset
from .types import (
    ExpressionLabel,
    HeadPoseSample,
    LandmarkFrame,
    SpeechActivitySpan,
    US_PER_MS,
    US_PER_SECOND,
)
from .vision import ReferenceFaceModel, load_reference_model, normalize_points, pairwise_distances
from . import accel

RAMP_US = 100 * US_PER_MS

# Fixed pixel embedding for generated frames: interocular pixels and image center.
PIXEL_SCALE = 120.0
PIXEL_CENTER = (320.0, 240.0)


class SynthError(Exception):
    pass


@dataclass(frozen=True)
class ScriptedExpression:
    label: ExpressionLabel
    start_us: int
    end_us: int
    intensity: float = 1.0

    def __post_init__(self):
        if self.label is ExpressionLabel.NEUTRAL:
            raise SynthError("script entries must be non-neutral")
        if not (0.0 < self.intensity <= 1.0):
            raise SynthError(f"intensity must be in (0, 1], got {self.intensity}")
        if self.start_us >= self.end_us:
            raise SynthError("script entry must have start < end")


@dataclass
class Scenario:
    duration_us: int
    frame_rate_hz: float = 30.0
    script: list[ScriptedExpression] = field(default_factory=list)
    face_gaps: list[tuple[int, int]] = field(default_factory=list)
    speech_spans: list[SpeechActivitySpan] = field(default_factory=list)
    pose_script: list[tuple[int, int, float, float, float]] = field(default_factory=list)
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.duration_us <= 0 or self.frame_rate_hz <= 0:
            raise SynthError("duration and frame rate must be positive")
        by_label: dict[ExpressionLabel, list[ScriptedExpression]] = {}
        for entry in self.script:
            if entry.start_us < 0 or entry.end_us > self.duration_us:
                raise SynthError(f"script entry {entry} outside [0, duration]")
            by_label.setdefault(entry.label, []).append(entry)
        for label, entries in by_label.items():
            entries = sorted(entries, key=lambda e: e.start_us)
            for a, b in zip(entries, entries[1:]):
                if b.start_us < a.end_us:
                    raise SynthError(f"overlapping {label.name} script entries")

    @classmethod
    def from_json(cls, source: str | Path | dict) -> "Scenario":
        """Scenario files carry times in milliseconds; internal times are us."""
        doc = source if isinstance(source, dict) else json.loads(Path(source).read_text())
        ms = lambda v: int(round(float(v) * US_PER_MS))
        return cls(
            duration_us=ms(doc["duration_ms"]),
            frame_rate_hz=float(doc.get("frame_rate_hz", 30.0)),
            script=[
                ScriptedExpression(
                    label=ExpressionLabel[e["label"].upper()],
                    start_us=ms(e["start_ms"]),
                    end_us=ms(e["end_ms"]),
                    intensity=float(e.get("intensity", 1.0)),
                )
                for e in doc.get("script", [])
            ],
            face_gaps=[(ms(g["start_ms"]), ms(g["end_ms"])) for g in doc.get("face_gaps", [])],
            speech_spans=[
                SpeechActivitySpan(
                    speaker_id=s["speaker_id"], start_us=ms(s["start_ms"]), end_us=ms(s["end_ms"])
                )
                for s in doc.get("speech_spans", [])
            ],
            pose_script=[
                (ms(p["start_ms"]), ms(p["end_ms"]), float(p["yaw_deg"]),
                 float(p.get("pitch_deg", 0.0)), float(p.get("roll_deg", 0.0)))
                for p in doc.get("pose_script", [])
            ],
            noise_sigma=float(doc.get("noise_sigma", 0.0)),
            seed=int(doc.get("seed", 0)),
        )


class ExpressionTemplates:
    """Per-label canonical landmark targets: neutral frontal face + offsets."""

    def __init__(self, model: ReferenceFaceModel, offsets: dict[str, list], version: str):
        self.version = version
        self.neutral = normalize_points(model.frontal_projection())
        self._templates: dict[ExpressionLabel, np.ndarray] = {}
        for label in ExpressionLabel:
            pts = self.neutral.copy()
            for idx, dx, dy in offsets.get(label.name.lower(), []):
                pts[int(idx) - 1, 0] += dx  # offsets use 1-based point indices
                pts[int(idx) - 1, 1] += dy
            self._templates[label] = pts

    def raw_template(self, label: ExpressionLabel) -> np.ndarray:
        """Neutral + offsets, before re-normalization (what synthesis interpolates)."""
        return self._templates[label].copy()

    def canonical_template(self, label: ExpressionLabel) -> np.ndarray:
        return normalize_points(self._templates[label])

    def neutral_baseline_distances(self) -> np.ndarray:
        return pairwise_distances(self.neutral)


def load_templates(model: ReferenceFaceModel | None = None, path: str | Path | None = None) -> ExpressionTemplates:
    if model is None:
        model = load_reference_model()
    if path is None:
        raw = resources.files("facecue.data").joinpath("expression_templates.json").read_text()
    else:
        raw = Path(path).read_text()
    doc = json.loads(raw)
    return ExpressionTemplates(model, doc["offsets"], doc["template_version"])


def smoothstep(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def _intensity_curve(entry: ScriptedExpression, ts: np.ndarray) -> np.ndarray:
    """Scripted intensity at each timestamp: smoothstep edges, flat middle."""
    up = smoothstep((ts - entry.start_us) / RAMP_US)
    down = smoothstep((entry.end_us - ts) / RAMP_US)
    inside = (ts >= entry.start_us) & (ts < entry.end_us)
    return entry.intensity * np.where(inside, np.minimum(up, down), 0.0)


@dataclass
class GeneratedSession:
    frames: list[LandmarkFrame]
    poses: list[HeadPoseSample]
    speech_spans: list[SpeechActivitySpan]
    truth: list[ScriptedExpression]


def generate(scenario: Scenario, templates: ExpressionTemplates | None = None) -> GeneratedSession:
    """Render a scenario into streams. Bit-deterministic for a given seed."""
    if templates is None:
        templates = load_templates()
    period = round(US_PER_SECOND / scenario.frame_rate_hz)
    n = scenario.duration_us // period
    ts = np.arange(n, dtype=np.int64) * period

    neutral = templates.neutral
    drift = np.zeros((n, 68, 2))
    for entry in scenario.script:
        lam = _intensity_curve(entry, ts)
        delta = templates.raw_template(entry.label) - neutral
        drift += lam[:, None, None] * delta[None, :, :]

    rng = np.random.default_rng(scenario.seed)
    pts = neutral[None, :, :] + drift
    if scenario.noise_sigma > 0:
        pts = pts + rng.normal(0.0, scenario.noise_sigma, size=pts.shape)
    pixels = pts * PIXEL_SCALE + np.asarray(PIXEL_CENTER)

    in_gap = np.zeros(n, dtype=bool)
    for gs, ge in scenario.face_gaps:
        in_gap |= (ts >= gs) & (ts < ge)

    frames = [
        LandmarkFrame(timestamp_us=int(t), face_present=False)
        if in_gap[i]
        else LandmarkFrame(timestamp_us=int(t), face_present=True, points=pixels[i])
        for i, t in enumerate(ts)
    ]

    poses = []
    for ps, pe, yaw, pitch, roll in scenario.pose_script:
        for t in ts[(ts >= ps) & (ts < pe)]:
            poses.append(HeadPoseSample(timestamp_us=int(t), yaw_deg=yaw, pitch_deg=pitch, roll_deg=roll))
    poses.sort(key=lambda p: p.timestamp_us)

    truth = sorted(scenario.script, key=lambda e: (e.start_us, int(e.label)))
    return GeneratedSession(frames=frames, poses=poses, speech_spans=list(scenario.speech_spans), truth=truth)


def make_training_set(
    per_class_count: int,
    noise_sigma: float,
    seed: int,
    templates: ExpressionTemplates | None = None,
) -> LabeledDataset:
    """Balanced labeled features from jittered templates, one label per template.

    Feature extraction matches the live pipeline: canonical normalization, then
    distances + deltas against the shipped neutral baseline.
    """
    if per_class_count < 1:
        raise SynthError("per_class_count must be at least 1")
    if templates is None:
        templates = load_templates()
    rng = np.random.default_rng(seed)
    baseline = templates.neutral_baseline_distances()
    kern = accel.kernels()

    blocks = []
    labels = []
    for label in ExpressionLabel:
        base = templates.raw_template(label)
        samples = base[None, :, :] + rng.normal(0.0, noise_sigma, size=(per_class_count, 68, 2))
        canon, _ = kern.normalize_batch(samples * PIXEL_SCALE + np.asarray(PIXEL_CENTER))
        blocks.append(kern.features_batch(canon, baseline))
        labels.extend([int(label)] * per_class_count)
    return LabeledDataset(
        features=np.concatenate(blocks, axis=0),
        labels=np.array(labels, dtype=np.int64),
        provenance=f"synthetic templates {templates.version}, {per_class_count}/class, sigma={noise_sigma}, seed={seed}",
    )
