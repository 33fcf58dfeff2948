"""End-to-end pipeline tests: scripted scenarios recovered, streaming and bulk
engines agree, blocking is invisible."""

import numpy as np
import pytest

from facecue.events import CuePolicyConfig, SegmenterConfig, SmoothingConfig
from facecue.pipeline import BulkPipeline, RealtimePipeline, replay_frames
from facecue.synth import Scenario, ScriptedExpression, generate
from facecue.types import ExpressionLabel

S = 1_000_000


@pytest.fixture(scope="module")
def scripted_session(templates):
    sc = Scenario(
        duration_us=10 * S,
        noise_sigma=0.002,
        seed=21,
        script=[
            ScriptedExpression(ExpressionLabel.HAPPINESS, 2 * S, 6 * S, 1.0),
            ScriptedExpression(ExpressionLabel.SURPRISE, 7 * S, 9 * S, 1.0),
        ],
    )
    return generate(sc, templates)


def test_scripted_events_recovered(scripted_session, trained_model, neutral_baseline):
    result = replay_frames(scripted_session.frames, trained_model, neutral_baseline)
    assert [e.label for e in result.events] == [ExpressionLabel.HAPPINESS, ExpressionLabel.SURPRISE]
    for event, truth in zip(result.events, scripted_session.truth):
        assert abs(event.start_us - truth.start_us) <= 250_000
        assert abs(event.end_us - truth.end_us) <= 250_000
    assert len(result.cues) == 2
    assert all(not c.suppressed for c in result.cues)
    assert [c.issued_at_us for c in result.cues] == [e.start_us for e in result.events]


def test_faceless_frames_skipped(scripted_session, trained_model, neutral_baseline):
    sc = Scenario(duration_us=2 * S, face_gaps=[(0, 500_000)], seed=3)
    gen = generate(sc)
    result = replay_frames(gen.frames, trained_model, neutral_baseline)
    present = sum(1 for f in gen.frames if f.face_present)
    assert len(result.scores) == present


def test_streaming_and_bulk_agree(scripted_session, trained_model, neutral_baseline):
    frames = [f for f in scripted_session.frames if f.face_present]
    stream_result = replay_frames(frames, trained_model, neutral_baseline)

    bulk = BulkPipeline(trained_model, neutral_baseline)
    ts = np.array([f.timestamp_us for f in frames], dtype=np.int64)
    pts = np.stack([f.points for f in frames])
    probs = []
    for lo in range(0, len(frames), 97):  # deliberately odd block size
        probs.append(bulk.process_block(ts[lo : lo + 97], pts[lo : lo + 97]))
    events, cues = bulk.finish()

    assert [(e.label, e.start_us, e.end_us) for e in events] == [
        (e.label, e.start_us, e.end_us) for e in stream_result.events
    ]
    assert cues == stream_result.cues
    stacked = np.concatenate(probs)
    streamed = np.stack([s.scores for s in stream_result.scores])
    assert np.abs(stacked - streamed).max() < 1e-9


def test_bulk_blocking_invariance(scripted_session, trained_model, neutral_baseline):
    """Event boundaries and cues are exact across re-blockings; peak scores are
    only BLAS-reproducible (last-ulp drift with block height)."""
    frames = [f for f in scripted_session.frames if f.face_present]
    ts = np.array([f.timestamp_us for f in frames], dtype=np.int64)
    pts = np.stack([f.points for f in frames])

    outcomes = []
    for block in (17, 300, len(frames)):
        bulk = BulkPipeline(trained_model, neutral_baseline)
        for lo in range(0, len(frames), block):
            bulk.process_block(ts[lo : lo + block], pts[lo : lo + block])
        events, cues = bulk.finish()
        outcomes.append(([(e.label, e.start_us, e.end_us) for e in events],
                         [e.peak_score for e in events], cues))
    assert outcomes[0][0] == outcomes[1][0] == outcomes[2][0]
    assert outcomes[0][2] == outcomes[1][2] == outcomes[2][2]
    for peaks in (outcomes[1][1], outcomes[2][1]):
        assert np.abs(np.array(peaks) - np.array(outcomes[0][1])).max() < 1e-9


def test_cue_timing_follows_confirmation(trained_model, neutral_baseline, templates):
    """Cues are decided once the episode persists min_duration, carrying the
    event's start time."""
    sc = Scenario(duration_us=4 * S, noise_sigma=0.0, seed=1,
                  script=[ScriptedExpression(ExpressionLabel.ANGER, 1 * S, 3 * S, 1.0)])
    gen = generate(sc, templates)
    pipe = RealtimePipeline(trained_model, neutral_baseline,
                            SmoothingConfig(), SegmenterConfig(), CuePolicyConfig())
    cue_frame_ts = None
    for frame in gen.frames:
        result = pipe.process_frame(frame)
        if result.cues and cue_frame_ts is None:
            cue_frame_ts = frame.timestamp_us
            cue = result.cues[0]
    events, cues = pipe.finish()
    assert len(cues) == 1 and cue_frame_ts is not None
    event = events[0]
    assert cue.issued_at_us == event.start_us
    assert cue_frame_ts >= event.start_us + SegmenterConfig().min_duration_us


def test_degenerate_frame_treated_as_no_face(trained_model, neutral_baseline):
    from facecue.types import LandmarkFrame

    pipe = RealtimePipeline(trained_model, neutral_baseline)
    frame = LandmarkFrame(timestamp_us=0, face_present=True, points=np.zeros((68, 2)))
    result = pipe.process_frame(frame)
    assert result.scores is None
