#!/usr/bin/env python3
"""Regenerate the frontend's recorded API fixtures and the demo data directory.

Builds three deterministic sessions for one subject (plus a corrupt journal),
then records the live service's JSON responses into frontend/fixtures/. The
fixtures are committed; rerun after changing pipeline defaults or view schemas.

    python3 frontend/scripts/make_fixtures.py
"""

import json
from pathlib import Path

from fastapi.testclient import TestClient

from facecue import affect, synth
from facecue.pipeline import replay_frames
from facecue.service import create_app
from facecue.synth import Scenario, ScriptedExpression, generate
from facecue.journal import write_session
from facecue.types import ExpressionLabel, FrameMeta, GameTrial, SessionMeta

S = 1_000_000
ROOT = Path(__file__).resolve().parents[1]
FIXTURE_DIR = ROOT / "fixtures"
DATA_DIR = ROOT / "demo-data"


def trials(session_id, accuracy, total=4):
    correct = round(accuracy * total)
    return [
        GameTrial(
            session_id=session_id,
            trial_index=i,
            prompted_label=ExpressionLabel.HAPPINESS,
            responded_label=ExpressionLabel.HAPPINESS if i < correct else ExpressionLabel.FEAR,
            correct=i < correct,
        )
        for i in range(total)
    ]


def write_replay(path, meta, frames, result, poses=(), speech=(), game=()):
    frame_metas = [FrameMeta(timestamp_us=f.timestamp_us, face_present=f.face_present) for f in frames]
    write_session(
        path,
        meta,
        [
            frame_metas,
            [f for f in frames if f.face_present],
            result.scores,
            result.events,
            result.cues,
            list(poses),
            list(speech),
            list(game),
        ],
    )


def build_data_dir():
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    for old in DATA_DIR.glob("*.agsj"):
        old.unlink()
    templates = synth.load_templates()
    model = affect.train(synth.make_training_set(50, 0.005, seed=123, templates=templates))
    baseline = templates.neutral_baseline_distances()

    main = Scenario(
        duration_us=12 * S,
        noise_sigma=0.002,
        seed=33,
        script=[
            ScriptedExpression(ExpressionLabel.HAPPINESS, 2 * S, 5 * S, 1.0),
            ScriptedExpression(ExpressionLabel.ANGER, 8 * S, 10 * S, 1.0),
        ],
    )
    gen = generate(main, templates)
    result = replay_frames(gen.frames, model, baseline)
    assert len(result.events) == 2, "fixture scenario must yield exactly 2 events"
    write_replay(
        DATA_DIR / "main.agsj",
        SessionMeta("sess-main", "kid-a", 3_000 * S, 30.0),
        gen.frames, result, poses=gen.poses, game=trials("sess-main", 0.5),
    )

    quiet = Scenario(duration_us=5 * S, noise_sigma=0.002, seed=34)
    gen_q = generate(quiet, templates)
    res_q = replay_frames(gen_q.frames, model, baseline)
    write_replay(DATA_DIR / "mid.agsj", SessionMeta("sess-mid", "kid-a", 4_000 * S, 30.0),
                 gen_q.frames, res_q, game=trials("sess-mid", 0.75))
    write_replay(DATA_DIR / "new.agsj", SessionMeta("sess-new", "kid-a", 5_000 * S, 30.0),
                 gen_q.frames, res_q, game=trials("sess-new", 1.0))

    blob = bytearray((DATA_DIR / "main.agsj").read_bytes())
    blob[60] ^= 0xFF
    (DATA_DIR / "corrupt.agsj").write_bytes(bytes(blob))


def record_fixtures():
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    client = TestClient(create_app(DATA_DIR))
    endpoints = {
        "sessions.json": "/api/v1/sessions",
        "timeline_sess-main.json": "/api/v1/sessions/sess-main/timeline",
        "timeline_sess-mid.json": "/api/v1/sessions/sess-mid/timeline",
        "metrics_sess-main.json": "/api/v1/sessions/sess-main/metrics",
        "clip0_sess-main.json": "/api/v1/sessions/sess-main/highlights/0/frames",
        "progress_kid-a.json": "/api/v1/subjects/kid-a/progress",
    }
    for name, url in endpoints.items():
        response = client.get(url)
        response.raise_for_status()
        (FIXTURE_DIR / name).write_bytes(response.content)
        print(f"recorded {name} ({len(response.content)} bytes)")
    error = client.post(
        "/api/v1/sessions/sess-main/annotations",
        json={"author": "x", "timestamp_in_session_us": 10**12, "text": "out of range"},
    )
    assert error.status_code == 400
    (FIXTURE_DIR / "annotation_error.json").write_bytes(error.content)
    print("recorded annotation_error.json")


if __name__ == "__main__":
    build_data_dir()
    record_fixtures()
    print(f"demo data in {DATA_DIR}")
