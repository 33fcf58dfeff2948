"""Operator CLI: one binary, subcommands run | train | eval | serve | synth |
link-demo | metrics.

Machine-readable JSON goes to stdout, human logs to stderr. Exit codes:
0 success, 1 unreadable/empty input, 2 configuration error. Every subcommand
is deterministic given its inputs, config, and seed flags (serve excepted).
"""

from __future__ import annotations

import json
import sys
import threading
from pathlib import Path

import click
import numpy as np

from . import affect, synth
from .config import Config, ConfigError, load_config
from .journal import JournalError, canonical_json, read_session, write_session
from .linkproto import (
    FakeClock,
    LoopbackTransport,
    TcpTransport,
    run_link_session,
    run_scripted_client,
)
from .metrics import MetricsError, session_summary
from .pipeline import RealtimePipeline, replay_frames
from .synth import Scenario, load_templates
from .types import FrameMeta, LandmarkFrame, SessionMeta

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CONFIG = 2


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _emit(doc: dict) -> None:
    sys.stdout.write(canonical_json(doc).decode("utf-8") + "\n")


def _fail(code: int, msg: str):
    _log(f"error: {msg}")
    sys.exit(code)


def _load_config_or_exit(path: str | None) -> Config:
    try:
        return load_config(path)
    except ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))


def _resolve_model(cfg: Config, seed: int | None) -> affect.ClassifierModel:
    if cfg.affect.model_path:
        try:
            return affect.load_model(cfg.affect.model_path)
        except (OSError, json.JSONDecodeError) as exc:
            _fail(EXIT_INPUT, f"cannot read model {cfg.affect.model_path}: {exc}")
        except affect.AffectError as exc:
            _fail(EXIT_INPUT, str(exc))
    hp = cfg.affect.hyperparams
    if seed is not None:
        hp = affect.Hyperparams(hp.learning_rate, hp.l2_lambda, hp.epochs, seed)
    _log("no model configured; training the default synthetic model")
    dataset = synth.make_training_set(50, 0.005, seed=hp.seed)
    return affect.train(dataset, hp)


def _frames_from_journal(path: str) -> tuple[SessionMeta, list[LandmarkFrame], list, list, list]:
    try:
        journal = read_session(path)
    except FileNotFoundError:
        _fail(EXIT_INPUT, f"input journal not found: {path}")
    except JournalError as exc:
        _fail(EXIT_INPUT, f"cannot read journal {path}: {exc}")
    if journal.meta is None:
        _fail(EXIT_INPUT, f"journal {path} has no SessionMeta record")
    landmarks = {f.timestamp_us: f for f in journal.landmark_frames}
    frames: list[LandmarkFrame] = []
    if journal.frame_metas:
        for fm in journal.frame_metas:
            lm = landmarks.get(fm.timestamp_us)
            if fm.face_present and lm is not None:
                frames.append(lm)
            else:
                frames.append(LandmarkFrame(timestamp_us=fm.timestamp_us, face_present=False))
    else:
        frames = journal.landmark_frames
    return journal.meta, frames, journal.poses, journal.speech_spans, journal.game_trials


def _scenario_session(scenario_path: str, seed: int | None):
    try:
        scenario = Scenario.from_json(scenario_path)
    except FileNotFoundError:
        _fail(EXIT_INPUT, f"scenario not found: {scenario_path}")
    except (json.JSONDecodeError, KeyError, synth.SynthError) as exc:
        _fail(EXIT_INPUT, f"bad scenario {scenario_path}: {exc}")
    if seed is not None:
        scenario.seed = seed
    gen = synth.generate(scenario)
    meta = SessionMeta(
        session_id=f"synth-{Path(scenario_path).stem}-{scenario.seed}",
        subject="synthetic",
        started_at_us=0,
        frame_rate_hz=scenario.frame_rate_hz,
    )
    return meta, gen


@click.group()
def main() -> None:
    """Social-cueing pipeline over facial landmark streams."""


@main.command("run")
@click.option("--config", "config_path", type=str, default=None, help="Config file (JSON).")
@click.option("--input", "input_path", type=str, default=None, help="Input session journal (.agsj).")
@click.option("--scenario", "scenario_path", type=str, default=None, help="Synthetic scenario (JSON).")
@click.option("--out", "out_path", type=str, required=True, help="Output journal path.")
@click.option("--seed", type=int, default=None, help="Override scenario/model seed.")
def cmd_run(config_path, input_path, scenario_path, out_path, seed) -> None:
    """Replay landmarks through the full pipeline; write the enriched journal
    and print the session's engagement metrics."""
    cfg = _load_config_or_exit(config_path)
    if (input_path is None) == (scenario_path is None):
        _fail(EXIT_INPUT, "exactly one of --input or --scenario is required")

    poses, speech, trials = [], [], []
    if input_path:
        meta, frames, poses, speech, trials = _frames_from_journal(input_path)
    else:
        meta, gen = _scenario_session(scenario_path, seed)
        frames, poses, speech = gen.frames, gen.poses, gen.speech_spans

    model = _resolve_model(cfg, seed)
    templates = load_templates()
    result = replay_frames(
        frames,
        model,
        templates.neutral_baseline_distances(),
        cfg.events.smoothing,
        cfg.events.segmenter,
        cfg.events.cue_policy,
    )
    frame_metas = [FrameMeta(timestamp_us=f.timestamp_us, face_present=f.face_present) for f in frames]
    write_session(
        out_path,
        meta,
        [
            frame_metas,
            [f for f in frames if f.face_present],
            result.scores,
            result.events,
            result.cues,
            poses,
            speech,
            trials,
        ],
    )
    _log(f"wrote {out_path}: {len(frames)} frames, {len(result.events)} events, {len(result.cues)} cues")
    _emit(session_summary(read_session(out_path)).to_dict())


@main.command("train")
@click.option("--config", "config_path", type=str, default=None)
@click.option("--dataset", "dataset_path", type=str, required=True, help="Labeled dataset (JSON).")
@click.option("--out", "out_path", type=str, required=True, help="Model file to write.")
@click.option("--seed", type=int, default=None)
def cmd_train(config_path, dataset_path, out_path, seed) -> None:
    """Train the expression classifier; print accuracy and confusion matrix."""
    cfg = _load_config_or_exit(config_path)
    dataset = _read_dataset(dataset_path)
    if len(dataset) == 0:
        _fail(EXIT_INPUT, f"dataset {dataset_path} is empty")
    hp = cfg.affect.hyperparams
    if seed is not None:
        hp = affect.Hyperparams(hp.learning_rate, hp.l2_lambda, hp.epochs, seed)
    try:
        model = affect.train(dataset, hp)
    except affect.TrainingDivergedError as exc:
        _fail(EXIT_INPUT, f"training diverged at epoch {exc.epoch}; lower the learning rate")
    affect.save_model(model, out_path)
    report = affect.evaluate(model, dataset)
    _log(f"wrote {out_path}")
    _emit({"final_loss": model.training.final_loss, **report.to_dict()})


@main.command("eval")
@click.option("--dataset", "dataset_path", type=str, required=True)
@click.option("--model", "model_path", type=str, required=True)
def cmd_eval(dataset_path, model_path) -> None:
    """Evaluate a saved model on a labeled dataset."""
    dataset = _read_dataset(dataset_path)
    if len(dataset) == 0:
        _fail(EXIT_INPUT, f"dataset {dataset_path} is empty")
    try:
        model = affect.load_model(model_path)
    except (OSError, json.JSONDecodeError, affect.AffectError) as exc:
        _fail(EXIT_INPUT, f"cannot load model {model_path}: {exc}")
    _emit(affect.evaluate(model, dataset).to_dict())


@main.command("serve")
@click.option("--config", "config_path", type=str, default=None)
@click.option("--data-dir", type=str, default=None, help="Session journal directory.")
@click.option("--bind", type=str, default=None)
@click.option("--port", type=int, default=None)
def cmd_serve(config_path, data_dir, bind, port) -> None:
    """Serve the caregiver review API until interrupted."""
    import uvicorn

    from .service import create_app

    cfg = _load_config_or_exit(config_path)
    directory = Path(data_dir or cfg.storage.data_dir)
    if not directory.is_dir():
        _fail(EXIT_INPUT, f"data directory not found: {directory}")
    app = create_app(directory, highlight_pad_us=cfg.service.highlight_pad_us)
    uvicorn.run(app, host=bind or cfg.service.bind, port=port or cfg.service.port, log_level="warning")


@main.command("synth")
@click.option("--scenario", "scenario_path", type=str, default=None, help="Scenario JSON to render.")
@click.option("--out", "out_path", type=str, required=True)
@click.option("--truth", "truth_path", type=str, default=None, help="Write ground-truth events JSON here.")
@click.option("--dataset", "dataset_mode", is_flag=True, help="Emit a labeled training dataset instead.")
@click.option("--per-class", type=int, default=50, show_default=True)
@click.option("--sigma", type=float, default=0.005, show_default=True)
@click.option("--seed", type=int, default=None, help="Override the scenario seed (dataset default: 0).")
def cmd_synth(scenario_path, out_path, truth_path, dataset_mode, per_class, sigma, seed) -> None:
    """Generate synthetic data: a scenario journal, or a labeled dataset."""
    if dataset_mode == (scenario_path is not None):
        _fail(EXIT_INPUT, "use exactly one of --scenario or --dataset")
    if dataset_mode:
        dataset = synth.make_training_set(per_class, sigma, 0 if seed is None else seed)
        _write_dataset(dataset, out_path)
        _log(f"wrote {out_path}: {len(dataset)} samples")
        _emit({"samples": len(dataset), "per_class": per_class, "sigma": sigma, "seed": 0 if seed is None else seed})
        return
    meta, gen = _scenario_session(scenario_path, seed)
    frame_metas = [FrameMeta(timestamp_us=f.timestamp_us, face_present=f.face_present) for f in gen.frames]
    write_session(
        out_path,
        meta,
        [frame_metas, [f for f in gen.frames if f.face_present], gen.poses, gen.speech_spans],
    )
    truth = [
        {"label": e.label.name.lower(), "start_us": e.start_us, "end_us": e.end_us, "intensity": e.intensity}
        for e in gen.truth
    ]
    if truth_path:
        Path(truth_path).write_text(json.dumps({"events": truth}, indent=1))
    _log(f"wrote {out_path}: {len(gen.frames)} frames")
    _emit({"session_id": meta.session_id, "frames": len(gen.frames), "truth_events": truth})


@main.command("metrics")
@click.option("--input", "input_path", type=str, required=True)
def cmd_metrics(input_path) -> None:
    """Recompute engagement metrics for a session journal."""
    try:
        journal = read_session(input_path)
    except FileNotFoundError:
        _fail(EXIT_INPUT, f"input journal not found: {input_path}")
    except JournalError as exc:
        _fail(EXIT_INPUT, f"cannot read journal {input_path}: {exc}")
    try:
        _emit(session_summary(journal).to_dict())
    except MetricsError as exc:
        _fail(EXIT_INPUT, str(exc))


@main.command("link-demo")
@click.option("--config", "config_path", type=str, default=None)
@click.option("--scenario", "scenario_path", type=str, required=True)
@click.option("--out", "out_path", type=str, required=True, help="Journal produced by the link server.")
@click.option("--seed", type=int, default=None)
@click.option("--drop-after", type=float, default=None, help="Client goes silent after this many stream seconds.")
@click.option("--tcp", is_flag=True, help="Run over a local TCP socket instead of the in-memory loopback.")
def cmd_link_demo(config_path, scenario_path, out_path, seed, drop_after, tcp) -> None:
    """Stream a scenario across the device link into the pipeline; report
    per-frame latency."""
    cfg = _load_config_or_exit(config_path)
    meta, gen = _scenario_session(scenario_path, seed)
    model = _resolve_model(cfg, seed)
    templates = load_templates()
    pipeline = RealtimePipeline(
        model,
        templates.neutral_baseline_distances(),
        cfg.events.smoothing,
        cfg.events.segmenter,
        cfg.events.cue_policy,
    )
    timeout_s = cfg.link.heartbeat_timeout_ms / 1000.0
    beat_s = cfg.link.heartbeat_interval_ms / 1000.0

    if tcp:
        import socket

        server = socket.create_server((cfg.link.host, cfg.link.port))
        results = {}

        def serve_one():
            conn, _addr = server.accept()
            results["result"] = run_link_session(
                TcpTransport(conn), pipeline, out_path, heartbeat_timeout_s=timeout_s
            )

        thread = threading.Thread(target=serve_one, daemon=True)
        thread.start()
        client_sock = socket.create_connection((cfg.link.host, cfg.link.port))
        sent = run_scripted_client(
            TcpTransport(client_sock), meta, gen.frames,
            heartbeat_interval_s=beat_s, drop_after_s=drop_after,
        )
        thread.join()
        server.close()
        result = results["result"]
    else:
        pair = LoopbackTransport(FakeClock())
        sent = run_scripted_client(
            pair.endpoint_a(), meta, gen.frames,
            heartbeat_interval_s=beat_s, drop_after_s=drop_after,
        )
        result = run_link_session(
            pair.endpoint_b(), pipeline, out_path, clock=pair.clock, heartbeat_timeout_s=timeout_s
        )

    journal = result.journal
    _log(f"wrote {out_path}")
    _emit(
        {
            "frames_sent": sent,
            "frames_journaled": len(journal.frame_metas),
            "events": len(journal.events),
            "cues_issued": sum(1 for c in journal.cues if not c.suppressed),
            "cues_suppressed": sum(1 for c in journal.cues if c.suppressed),
            "timed_out": result.timed_out,
            "latency_p95_ms": result.latency_p95_ms(),
        }
    )


# --- dataset file format -------------------------------------------------------

def _write_dataset(dataset: affect.LabeledDataset, path: str) -> None:
    doc = {
        "feature_spec_version": affect.FEATURE_SPEC_VERSION,
        "provenance": dataset.provenance,
        "labels": dataset.labels.tolist(),
        "features": dataset.features.tolist(),
    }
    Path(path).write_text(json.dumps(doc))


def _read_dataset(path: str) -> affect.LabeledDataset:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        _fail(EXIT_INPUT, f"dataset not found: {path}")
    except json.JSONDecodeError as exc:
        _fail(EXIT_INPUT, f"dataset {path} is not valid JSON: {exc}")
    version = doc.get("feature_spec_version")
    if version != affect.FEATURE_SPEC_VERSION:
        _fail(EXIT_INPUT, f"dataset feature spec {version!r} does not match {affect.FEATURE_SPEC_VERSION!r}")
    features = np.array(doc["features"], dtype=np.float64)
    if features.size == 0:
        features = features.reshape(0, affect.FEATURE_LENGTH)
    return affect.LabeledDataset(
        features=features,
        labels=np.array(doc["labels"], dtype=np.int64),
        provenance=doc.get("provenance", ""),
    )


if __name__ == "__main__":
    main()
