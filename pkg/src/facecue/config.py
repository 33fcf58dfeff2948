"""Configuration: one JSON document, strict parsing (unknown keys rejected),
flags > file > defaults. Durations in config are milliseconds; they convert to
microseconds at the section boundaries. config.example.json at the repo root
documents every default.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .affect import Hyperparams
from .events import CuePolicyConfig, SegmenterConfig, SmoothingConfig
from .types import CueChannel, ExpressionLabel, NON_NEUTRAL_LABELS, US_PER_MS


class ConfigError(Exception):
    pass


def _check_keys(section: str, doc: dict, allowed: set[str]) -> None:
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {section}: {sorted(unknown)}")


@dataclass(frozen=True)
class VisionConfig:
    reference_model_path: str | None = None  # None -> packaged model


@dataclass(frozen=True)
class AffectConfig:
    model_path: str | None = None  # None -> train the default synthetic model
    hyperparams: Hyperparams = Hyperparams()


@dataclass(frozen=True)
class EventsConfig:
    smoothing: SmoothingConfig = SmoothingConfig()
    segmenter: SegmenterConfig = SegmenterConfig()
    cue_policy: CuePolicyConfig = CuePolicyConfig()


@dataclass(frozen=True)
class StorageConfig:
    data_dir: str = "./sessions"


@dataclass(frozen=True)
class ServiceConfig:
    bind: str = "127.0.0.1"
    port: int = 8321
    highlight_pad_ms: int = 2000

    @property
    def highlight_pad_us(self) -> int:
        return self.highlight_pad_ms * US_PER_MS


@dataclass(frozen=True)
class LinkConfig:
    host: str = "127.0.0.1"
    port: int = 8432
    heartbeat_interval_ms: int = 1000
    heartbeat_timeout_ms: int = 5000


@dataclass(frozen=True)
class Config:
    vision: VisionConfig = VisionConfig()
    affect: AffectConfig = AffectConfig()
    events: EventsConfig = EventsConfig()
    storage: StorageConfig = StorageConfig()
    service: ServiceConfig = ServiceConfig()
    link: LinkConfig = LinkConfig()


def _parse_events(doc: dict) -> EventsConfig:
    _check_keys("events", doc, {"smoothing", "segmenter", "cue_policy"})
    smoothing = SmoothingConfig()
    if "smoothing" in doc:
        s = doc["smoothing"]
        _check_keys("events.smoothing", s, {"alpha"})
        smoothing = SmoothingConfig(alpha=float(s.get("alpha", smoothing.alpha)))
    segmenter = SegmenterConfig()
    if "segmenter" in doc:
        s = doc["segmenter"]
        _check_keys("events.segmenter", s, {"enter_threshold", "exit_threshold", "min_duration_ms"})
        segmenter = SegmenterConfig(
            enter_threshold=float(s.get("enter_threshold", segmenter.enter_threshold)),
            exit_threshold=float(s.get("exit_threshold", segmenter.exit_threshold)),
            min_duration_us=int(s.get("min_duration_ms", segmenter.min_duration_us // US_PER_MS)) * US_PER_MS,
        )
    policy = CuePolicyConfig()
    if "cue_policy" in doc:
        s = doc["cue_policy"]
        _check_keys(
            "events.cue_policy",
            s,
            {"per_label_cooldown_ms", "global_rate_limit_per_minute", "channel", "enabled_labels"},
        )
        try:
            labels = frozenset(
                ExpressionLabel[name.upper()] for name in s.get("enabled_labels", [l.name for l in NON_NEUTRAL_LABELS])
            )
            channel = CueChannel(s.get("channel", policy.channel.value))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"events.cue_policy: {exc}") from exc
        if ExpressionLabel.NEUTRAL in labels:
            raise ConfigError("events.cue_policy.enabled_labels must not include neutral")
        policy = CuePolicyConfig(
            per_label_cooldown_us=int(s.get("per_label_cooldown_ms", policy.per_label_cooldown_us // US_PER_MS)) * US_PER_MS,
            global_rate_limit_per_minute=int(s.get("global_rate_limit_per_minute", policy.global_rate_limit_per_minute)),
            channel=channel,
            enabled_labels=labels,
        )
    return EventsConfig(smoothing=smoothing, segmenter=segmenter, cue_policy=policy)


def parse_config(doc: dict) -> Config:
    _check_keys("config", doc, {"vision", "affect", "events", "storage", "service", "link"})
    defaults = Config()

    vision = defaults.vision
    if "vision" in doc:
        v = doc["vision"]
        _check_keys("vision", v, {"reference_model_path"})
        vision = VisionConfig(reference_model_path=v.get("reference_model_path"))

    affect = defaults.affect
    if "affect" in doc:
        a = doc["affect"]
        _check_keys("affect", a, {"model_path", "hyperparams"})
        hp = defaults.affect.hyperparams
        if "hyperparams" in a:
            h = a["hyperparams"]
            _check_keys("affect.hyperparams", h, {"learning_rate", "l2_lambda", "epochs", "seed"})
            hp = Hyperparams(
                learning_rate=float(h.get("learning_rate", hp.learning_rate)),
                l2_lambda=float(h.get("l2_lambda", hp.l2_lambda)),
                epochs=int(h.get("epochs", hp.epochs)),
                seed=int(h.get("seed", hp.seed)),
            )
        affect = AffectConfig(model_path=a.get("model_path"), hyperparams=hp)

    events = _parse_events(doc["events"]) if "events" in doc else defaults.events

    storage = defaults.storage
    if "storage" in doc:
        s = doc["storage"]
        _check_keys("storage", s, {"data_dir"})
        storage = StorageConfig(data_dir=s.get("data_dir", storage.data_dir))

    service = defaults.service
    if "service" in doc:
        s = doc["service"]
        _check_keys("service", s, {"bind", "port", "highlight_pad_ms"})
        service = ServiceConfig(
            bind=s.get("bind", service.bind),
            port=int(s.get("port", service.port)),
            highlight_pad_ms=int(s.get("highlight_pad_ms", service.highlight_pad_ms)),
        )

    link = defaults.link
    if "link" in doc:
        s = doc["link"]
        _check_keys("link", s, {"host", "port", "heartbeat_interval_ms", "heartbeat_timeout_ms"})
        link = LinkConfig(
            host=s.get("host", link.host),
            port=int(s.get("port", link.port)),
            heartbeat_interval_ms=int(s.get("heartbeat_interval_ms", link.heartbeat_interval_ms)),
            heartbeat_timeout_ms=int(s.get("heartbeat_timeout_ms", link.heartbeat_timeout_ms)),
        )

    return Config(vision=vision, affect=affect, events=events, storage=storage, service=service, link=link)


def load_config(path: str | Path | None) -> Config:
    """Load a config file (or the defaults when path is None)."""
    if path is None:
        return Config()
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {p} is not valid JSON: {exc}") from exc
    try:
        return parse_config(doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config file {p}: {exc}") from exc
