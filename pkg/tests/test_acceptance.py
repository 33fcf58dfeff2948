"""Acceptance suite: one test per release criterion, each printing a PASS/FAIL
line with its measured numbers. Tolerances and runtime budgets are pinned here
and nowhere else; run with `pytest tests/test_acceptance.py -v -s`.
"""

import io
import time

import numpy as np
import pytest

from facecue import accel, affect, linkproto, synth
from facecue.affect import Hyperparams, LabeledDataset, gradient, loss_value, train
from facecue.events import (
    CuePolicyConfig,
    RATE_WINDOW_US,
    SegmenterConfig,
    decide_cues,
    segment_events,
)
from facecue.journal import encode_record, read_session, write_session
from facecue.linkproto import FakeClock, LoopbackTransport, decode_bytes, encode
from facecue.metrics import face_in_view_fraction, gaze_while_speaking
from facecue.pipeline import BulkPipeline, RealtimePipeline, replay_frames
from facecue.synth import Scenario, ScriptedExpression, generate
from facecue.types import ExpressionLabel, SessionMeta
from facecue.vision import FEATURE_LENGTH, FEATURE_SPEC_VERSION, project_weak_perspective, pose_from_points

from test_events import oracle_segment, as_tuples, random_stream, random_config, random_schedule
from test_journal import META as JOURNAL_META, random_records
from test_linkproto import random_message
from test_metrics import grid_fraction, grid_gaze, random_spans

S = 1_000_000
MS = 1_000


def report(name: str, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


# 1 ------------------------------------------------------------------------------

def test_gradient_correctness():
    """Analytic gradient vs central finite differences: 100 random instances,
    max relative error < 1e-5, under 10 s."""
    rng = np.random.default_rng(20240801)
    h = 1e-5
    started = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        model = affect.ClassifierModel(
            weights=rng.normal(scale=0.5, size=(8, FEATURE_LENGTH)),
            biases=rng.normal(scale=0.5, size=8),
            feature_spec_version=FEATURE_SPEC_VERSION,
            training=affect.TrainingInfo(epochs=0, final_loss=0.0, seed=0),
        )
        dataset = LabeledDataset(
            features=rng.normal(size=(6, FEATURE_LENGTH)),
            labels=rng.integers(0, 8, size=6),
        )
        l2 = float(rng.uniform(0.0, 1e-3))
        dw, db = gradient(model, dataset, l2)
        flat_params = [("w", idx) for idx in np.ndindex(model.weights.shape)] + [("b", (k,)) for k in range(8)]
        fd = np.empty(len(flat_params))
        for i, (kind, idx) in enumerate(flat_params):
            arr = model.weights if kind == "w" else model.biases
            arr[idx] += h
            up = loss_value(model, dataset, l2)
            arr[idx] -= 2 * h
            down = loss_value(model, dataset, l2)
            arr[idx] += h
            fd[i] = (up - down) / (2 * h)
        analytic = np.concatenate([dw.ravel(), db])
        denom = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(fd)))
        worst = max(worst, float((np.abs(analytic - fd) / denom).max()))
    elapsed = time.perf_counter() - started
    report(
        "gradient-correctness",
        worst < 1e-5 and elapsed < 10.0,
        f"max rel err {worst:.2e} over 100 instances in {elapsed:.1f}s",
    )


# 2 ------------------------------------------------------------------------------

def test_classifier_competence(templates):
    """Default hyperparameters reach >= 95% training accuracy on the synthetic
    set (50/class, sigma 0.005, fixed seed) in under 60 s."""
    started = time.perf_counter()
    dataset = synth.make_training_set(50, 0.005, seed=123, templates=templates)
    model = train(dataset, Hyperparams())
    accuracy = affect.evaluate(model, dataset).accuracy
    elapsed = time.perf_counter() - started
    report(
        "classifier-competence",
        accuracy >= 0.95 and elapsed < 60.0,
        f"training accuracy {accuracy:.3f} in {elapsed:.1f}s",
    )


# 3 ------------------------------------------------------------------------------

def test_segmentation_oracle_equivalence():
    """1,000 seeded random score streams: segment_events equals the independent
    frame-by-frame automaton, exactly, in under 30 s."""
    rng = np.random.default_rng(777)
    started = time.perf_counter()
    mismatches = 0
    for _ in range(1000):
        stream = random_stream(rng, n=int(rng.integers(20, 260)))
        cfg = random_config(rng)
        if as_tuples(segment_events(stream, cfg)) != oracle_segment(stream, cfg):
            mismatches += 1
    elapsed = time.perf_counter() - started
    report(
        "segmentation-oracle-equivalence",
        mismatches == 0 and elapsed < 30.0,
        f"{mismatches} mismatches over 1000 streams in {elapsed:.1f}s",
    )


# 4 ------------------------------------------------------------------------------

def test_cue_policy_invariants():
    """100 random event schedules: zero cooldown violations, zero rolling-60 s
    rate violations, one cue per event, in under 10 s."""
    rng = np.random.default_rng(888)
    started = time.perf_counter()
    violations = 0
    for _ in range(100):
        events = random_schedule(rng)
        policy = CuePolicyConfig(
            per_label_cooldown_us=int(rng.integers(0, 12 * S)),
            global_rate_limit_per_minute=int(rng.integers(1, 20)),
        )
        cues = decide_cues(events, policy)
        if len(cues) != len(events):
            violations += 1
            continue
        issued = [c for c in cues if not c.suppressed]
        by_label = {}
        for c in issued:
            by_label.setdefault(c.label, []).append(c.issued_at_us)
        for times in by_label.values():
            for a, b in zip(times, times[1:]):
                if b - a < policy.per_label_cooldown_us:
                    violations += 1
        times = [c.issued_at_us for c in issued]
        for i, t in enumerate(times):
            if len([u for u in times[: i + 1] if u > t - RATE_WINDOW_US]) > policy.global_rate_limit_per_minute:
                violations += 1
    elapsed = time.perf_counter() - started
    report(
        "cue-policy-invariants",
        violations == 0 and elapsed < 10.0,
        f"{violations} violations over 100 schedules in {elapsed:.1f}s",
    )


# 5 ------------------------------------------------------------------------------

def test_pose_recovery(reference_model):
    """Weak-perspective pose over the [-40, 40] degree grid (5 degree step):
    noiseless error < 0.5 degrees per angle; with sigma 0.01 landmark noise,
    median error < 3 degrees. Under 30 s."""
    rng = np.random.default_rng(999)
    started = time.perf_counter()
    grid = np.arange(-40, 41, 5, dtype=float)
    worst_clean = 0.0
    noisy_errors = []
    for yaw in grid:
        for pitch in grid:
            for roll in grid:
                scale = float(rng.uniform(0.5, 2.0))
                proj = project_weak_perspective(reference_model.points3d, yaw, pitch, roll, scale=scale)
                got = np.array(pose_from_points(proj, reference_model))
                worst_clean = max(worst_clean, float(np.abs(got - (yaw, pitch, roll)).max()))
                noisy = proj + rng.normal(scale=0.01 * scale, size=proj.shape)
                got_n = np.array(pose_from_points(noisy, reference_model))
                noisy_errors.append(float(np.abs(got_n - (yaw, pitch, roll)).max()))
    median_noisy = float(np.median(noisy_errors))
    elapsed = time.perf_counter() - started
    report(
        "pose-recovery",
        worst_clean < 0.5 and median_noisy < 3.0 and elapsed < 30.0,
        f"noiseless max {worst_clean:.3f} deg, noisy median {median_noisy:.2f} deg, "
        f"{len(noisy_errors)} poses in {elapsed:.1f}s",
    )


# 6 ------------------------------------------------------------------------------

def test_interval_metric_oracle():
    """100 random timelines and speech spans: fractions match a 1 ms grid
    brute force within 1e-6."""
    rng = np.random.default_rng(1234)
    end = 120 * S
    worst = 0.0
    for _ in range(100):
        timeline = random_spans(rng, end)
        speech = random_spans(rng, end)
        worst = max(worst, abs(face_in_view_fraction(timeline, end) - grid_fraction(timeline, end)))
        expected = grid_gaze(timeline, speech, end)
        got = gaze_while_speaking(timeline, speech)
        if expected is None:
            assert got is None
        else:
            worst = max(worst, abs(got - expected))
    report("interval-metric-oracle", worst <= 1e-6, f"max deviation {worst:.2e} over 100 instances")


# 7 ------------------------------------------------------------------------------

def _random_scenario(rng, index):
    labels = [l for l in ExpressionLabel if l is not ExpressionLabel.NEUTRAL]
    n_events = int(rng.integers(2, 5))
    script = []
    cursor = int(rng.integers(1, 3)) * S
    for _ in range(n_events):
        dur = int(rng.integers(1_500, 3_000)) * MS
        label = labels[int(rng.integers(0, len(labels)))]
        script.append(ScriptedExpression(label, cursor, cursor + dur, float(rng.uniform(0.9, 1.0))))
        cursor += dur + int(rng.integers(2_000, 4_000)) * MS
    return Scenario(
        duration_us=cursor + 2 * S,
        noise_sigma=0.002,
        seed=9000 + index,
        script=script,
    )


def test_end_to_end_event_recovery(templates, trained_model, neutral_baseline):
    """20 scenarios at sigma <= 0.002: >= 90% of scripted events detected with
    the right label and boundaries within 250 ms; zero spurious events."""
    rng = np.random.default_rng(4321)
    total = recovered = spurious = 0
    for i in range(20):
        scenario = _random_scenario(rng, i)
        gen = generate(scenario, templates)
        result = replay_frames(
            gen.frames, trained_model, neutral_baseline,
            cue_policy=CuePolicyConfig(per_label_cooldown_us=0, global_rate_limit_per_minute=1000),
        )
        matched_truth = set()
        for ev in result.events:
            hit = None
            for t_idx, truth in enumerate(gen.truth):
                if (
                    t_idx not in matched_truth
                    and ev.label is truth.label
                    and abs(ev.start_us - truth.start_us) <= 250 * MS
                    and abs(ev.end_us - truth.end_us) <= 250 * MS
                ):
                    hit = t_idx
                    break
            if hit is None:
                spurious += 1
            else:
                matched_truth.add(hit)
        total += len(gen.truth)
        recovered += len(matched_truth)
    recall = recovered / total
    report(
        "end-to-end-event-recovery",
        recall >= 0.90 and spurious == 0,
        f"recall {recall:.3f} ({recovered}/{total}), {spurious} spurious",
    )


# 8 ------------------------------------------------------------------------------

def test_format_robustness():
    """Round-trip identity on 10,000 random journal records and 10,000 random
    protocol messages; exhaustive single-byte flips fully detected; the decoder
    survives 1,000,000 bytes of seeded fuzz."""
    rng = np.random.default_rng(555)

    records = random_records(rng, 10_000)
    buf = io.BytesIO()
    write_session(buf, JOURNAL_META, [records])
    reread = read_session(buf.getvalue())
    journal_ok = all(
        encode_record(a) == encode_record(b) for a, b in zip([JOURNAL_META] + records, reread.records)
    )

    messages = [random_message(rng) for _ in range(10_000)]
    blob = b"".join(encode(m) for m in messages)
    decoded, errors = decode_bytes(blob)
    proto_ok = decoded == messages and not errors

    # exhaustive flips: journal file
    small = random_records(rng, 10)
    jbuf = io.BytesIO()
    write_session(jbuf, JOURNAL_META, [small])
    jdata = jbuf.getvalue()
    undetected = 0
    for pos in range(len(jdata)):
        corrupted = bytearray(jdata)
        corrupted[pos] ^= 0x01
        try:
            again = read_session(bytes(corrupted))
            same = all(
                encode_record(a) == encode_record(b)
                for a, b in zip([JOURNAL_META] + small, again.records)
            ) and len(again.records) == len(small) + 1
            if not same:
                undetected += 1
        except Exception:
            pass

    # exhaustive flips: protocol frames
    frames = [random_message(rng) for _ in range(6)]
    fblob = b"".join(encode(m) for m in frames)
    for pos in range(len(fblob)):
        corrupted = bytearray(fblob)
        corrupted[pos] ^= 0x01
        got, errs = decode_bytes(bytes(corrupted))
        if got == frames and not errs:
            undetected += 1

    # fuzz: one million bytes of garbage with a few real frames sprinkled in
    fuzz = bytearray(rng.integers(0, 256, size=1_000_000, dtype=np.uint8).tobytes())
    for at in range(0, len(fuzz) - 100, 97_001):
        frame = encode(random_message(rng))
        fuzz[at : at + len(frame)] = frame
    crashed = False
    try:
        decode_bytes(bytes(fuzz))
    except Exception:
        crashed = True

    ok = journal_ok and proto_ok and undetected == 0 and not crashed
    report(
        "format-robustness",
        ok,
        f"journal round-trip {journal_ok}, protocol round-trip {proto_ok}, "
        f"{undetected} undetected flips, fuzz crash {crashed}",
    )


# 9 ------------------------------------------------------------------------------

def test_throughput_budget(templates, trained_model, neutral_baseline):
    """8,000 minutes of 30 Hz landmark traffic (14.4 M frames, synthetic)
    through the full pipeline in under 5 minutes of wall clock."""
    total_frames = 14_400_000
    block_frames = 144_000
    period = 33_333

    base = Scenario(
        duration_us=(block_frames // 30 + 1) * S,
        noise_sigma=0.002,
        seed=5150,
        script=[
            ScriptedExpression(ExpressionLabel.HAPPINESS, 2 * S, 6 * S, 1.0),
            ScriptedExpression(ExpressionLabel.ANGER, 60 * S, 64 * S, 1.0),
        ],
    )
    gen = generate(base, templates)
    pts = np.stack([f.points for f in gen.frames[:block_frames]])
    assert pts.shape[0] == block_frames

    pipe = BulkPipeline(trained_model, neutral_baseline)
    started = time.perf_counter()
    for block in range(total_frames // block_frames):
        ts = (np.arange(block_frames, dtype=np.int64) + block * block_frames) * period
        pipe.process_block(ts, pts)
    events, cues = pipe.finish()
    elapsed = time.perf_counter() - started
    fps = pipe.frames_processed / elapsed
    report(
        "throughput-budget",
        pipe.frames_processed == total_frames and elapsed < 300.0,
        f"{pipe.frames_processed / 1e6:.1f}M frames in {elapsed:.1f}s "
        f"({fps / 1e3:.0f}k fps, {len(events)} events, backend {accel.backend_name()})",
    )


# 10 -----------------------------------------------------------------------------

def test_latency_budget(templates, trained_model, neutral_baseline):
    """Landmark-in to cue-decision p95 < 15 ms at 30 Hz through the link demo."""
    scenario = Scenario(
        duration_us=20 * S,
        noise_sigma=0.002,
        seed=616,
        script=[
            ScriptedExpression(ExpressionLabel.SURPRISE, 3 * S, 7 * S, 1.0),
            ScriptedExpression(ExpressionLabel.SADNESS, 10 * S, 14 * S, 1.0),
        ],
    )
    gen = generate(scenario, templates)
    meta = SessionMeta(session_id="bench", subject="synthetic", started_at_us=0, frame_rate_hz=30.0)
    pair = LoopbackTransport(FakeClock())
    linkproto.run_scripted_client(pair.endpoint_a(), meta, gen.frames)
    pipeline = RealtimePipeline(trained_model, neutral_baseline)
    result = linkproto.run_link_session(pair.endpoint_b(), pipeline, io.BytesIO(), clock=pair.clock)
    p95 = result.latency_p95_ms()
    report(
        "latency-budget",
        p95 is not None and p95 < 15.0 and len(result.latencies_s) == len(gen.frames),
        f"p95 {p95:.3f} ms over {len(result.latencies_s)} frames",
    )
