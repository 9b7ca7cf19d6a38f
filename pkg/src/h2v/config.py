"""Pipeline configuration: one JSON document, strictly validated.

Every field has a documented default; unknown keys anywhere in the
document are rejected. A canonical JSON form provides a stable sha256
hash that output files embed for provenance.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import typing
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .plan import parse_aspect
from .select import DssTrainParams, RankTrainParams
from .shots import SbdParams
from .track import TrackerParams


@dataclass
class SbdConfig:
    """Shot-boundary detection: chi-square distance vs rolling median."""

    bins: int = 16               # histogram bins per channel
    threshold: float = 6.0       # cut when distance > threshold * local level
    floor: float = 0.02          # additive floor on the local level
    min_len: int = 8             # shots shorter than this merge backwards
    median_radius: int = 12      # half-window of the rolling median


@dataclass
class HeadConfig:
    """Scoring-head family and architecture."""

    kind: str = "rankss"                 # rankss | dss | nss
    short_side: int = 128                # resize target for the rank head
    embed_channels: int = 8              # encoder output channels
    mid_channels: int = 8                # bottleneck mid width
    fc_sizes: tuple[int, ...] = (256, 64)    # rank head FC hidden sizes
    hidden: tuple[int, ...] = (32, 32)       # descriptor MLP hidden sizes
    nss_weights: tuple[float, float, float, float] = (0.3, 0.1, 0.3, 0.3)
    raw_concat: bool = False             # weight the raw 6-dim descriptor
    grad_threshold: float = 0.05         # sharpness-map gradient cutoff

    _KINDS = ("rankss", "dss", "nss")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ConfigError(
                f"head.kind must be one of {self._KINDS}, got {self.kind!r}")


@dataclass
class LossConfig:
    """Ranking-loss shape shared by training and evaluation."""

    margin: float = 0.1          # hinge margin between ranked pairs
    w_pt: float = 0.5            # pointwise term weight
    w_pair: float = 1.5          # pairwise term weight after warm-up
    warmup_epochs: int = 30      # epochs trained with the pointwise term only
    mode: str = "hard"           # hard: all rank pairs; soft: top-vs-rest

    def __post_init__(self):
        if self.mode not in ("hard", "soft"):
            raise ConfigError(f"loss.mode must be hard or soft, got {self.mode!r}")


@dataclass
class TrainConfig:
    """Optimization schedule."""

    epochs: int = 50
    base_lr: float = 0.01
    lr_decay: float = 0.1        # multiplier applied every lr_period epochs
    lr_period: int = 10
    momentum: float = 0.9
    batch_size: int = 4          # images per optimizer step
    rois_per_image: int = 20     # candidate pool after jitter augmentation
    jitter: float = 0.1          # position/scale jitter fraction
    min_iou: float = 0.5         # augmented boxes must overlap this much
    violation_samples: int | None = None  # image cap for violation logging


@dataclass
class TrackerConfig:
    """Template-tracking and verification thresholds."""

    tau_conf: float = 0.5        # re-select below this confidence
    lost_conf: float = 0.15      # mark the track lost below this
    coverage_slack: float = 0.05  # tolerated horizontal overflow fraction
    sigma_p: float = 1.0         # process noise (px/frame^2)
    sigma_m: float = 2.0         # measurement noise (px)
    template_alpha: float = 0.1  # template refresh blend factor
    refresh_conf: float = 0.7    # refresh template above this confidence
    search_factor: float = 0.5   # search margin as a template-size fraction


@dataclass
class SmoothingConfig:
    """Center-trajectory smoothing."""

    sigma_p: float = 0.4         # process noise of the constant-velocity model
    sigma_m: float = 3.0         # measurement noise on detected centers


@dataclass
class PlannerConfig:
    """Crop-window planning."""

    max_slew: int = 20           # max window movement (px/frame) inside a shot


@dataclass
class PipelineConfig:
    """Top-level configuration for every CLI command."""

    aspect: str = "9:16"         # target output aspect ratio
    seed: int = 0                # master random seed
    model: str | None = None     # weight-file path for learned heads
    workers: int = 1             # parallel shot workers in convert
    sbd: SbdConfig = field(default_factory=SbdConfig)
    head: HeadConfig = field(default_factory=HeadConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    smoothing: SmoothingConfig = field(default_factory=SmoothingConfig)
    planner: PlannerConfig = field(default_factory=PlannerConfig)

    def __post_init__(self):
        try:
            parse_aspect(self.aspect)
        except Exception as e:
            raise ConfigError(f"aspect: {e}") from e
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    # -- adapters into module parameter types --------------------------------

    def aspect_pair(self) -> tuple[int, int]:
        return parse_aspect(self.aspect)

    def sbd_params(self) -> SbdParams:
        s = self.sbd
        return SbdParams(bins=s.bins, threshold=s.threshold, floor=s.floor,
                         min_len=s.min_len, median_radius=s.median_radius)

    def tracker_params(self) -> TrackerParams:
        t = self.tracker
        return TrackerParams(
            tau_conf=t.tau_conf, lost_conf=t.lost_conf,
            coverage_slack=t.coverage_slack, sigma_p=t.sigma_p,
            sigma_m=t.sigma_m, template_alpha=t.template_alpha,
            refresh_conf=t.refresh_conf, search_factor=t.search_factor)

    def rank_train_params(self) -> RankTrainParams:
        return RankTrainParams(
            epochs=self.train.epochs,
            warmup_epochs=self.loss.warmup_epochs,
            base_lr=self.train.base_lr,
            lr_decay=self.train.lr_decay,
            lr_period=self.train.lr_period,
            momentum=self.train.momentum,
            batch_size=self.train.batch_size,
            rois_per_image=self.train.rois_per_image,
            jitter=self.train.jitter,
            min_iou=self.train.min_iou,
            margin=self.loss.margin,
            w_pt=self.loss.w_pt,
            w_pair=self.loss.w_pair,
            mode=self.loss.mode,
            seed=self.seed,
            short_side=self.head.short_side,
            embed_channels=self.head.embed_channels,
            mid_channels=self.head.mid_channels,
            fc_sizes=tuple(self.head.fc_sizes),
            grad_threshold=self.head.grad_threshold,
            violation_samples=self.train.violation_samples,
        )

    def dss_train_params(self) -> DssTrainParams:
        return DssTrainParams(
            epochs=self.train.epochs,
            base_lr=self.train.base_lr,
            lr_decay=self.train.lr_decay,
            lr_period=self.train.lr_period,
            momentum=self.train.momentum,
            batch_size=self.train.batch_size,
            rois_per_image=self.train.rois_per_image,
            jitter=self.train.jitter,
            min_iou=self.train.min_iou,
            seed=self.seed,
            hidden=tuple(self.head.hidden),
            grad_threshold=self.head.grad_threshold,
        )


# ---------------------------------------------------------------------------
# dict <-> dataclass plumbing

_LEAF_TYPES = (int, float, bool, str, type(None))


def _coerce(value, target, where: str):
    if target is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if target is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if target is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected a boolean, got {value!r}")
        return value
    if target is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    return value


def _optional_inner(tp) -> type:
    """The non-None member of an Optional annotation, str if unresolvable."""
    for arg in typing.get_args(tp):
        if arg is not type(None) and arg in (int, float, bool, str):
            return arg
    return str


def _from_dict(cls, obj: dict, where: str):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object, got {obj!r}")
    hints = typing.get_type_hints(cls)
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(obj) - set(fields))
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    kwargs = {}
    for name, value in obj.items():
        f = fields[name]
        sub = f.default_factory() if f.default_factory is not dataclasses.MISSING else None
        path = f"{where}.{name}" if where else name
        if dataclasses.is_dataclass(sub):
            kwargs[name] = _from_dict(type(sub), value, path)
        elif isinstance(f.default, tuple):
            if not isinstance(value, (list, tuple)):
                raise ConfigError(f"{path}: expected a list")
            kwargs[name] = tuple(value)
        else:
            target = type(f.default) if f.default is not dataclasses.MISSING else None
            if f.default is None:
                inner = _optional_inner(hints.get(name))
                kwargs[name] = None if value is None else _coerce(value, inner, path)
            elif target in (int, float, bool, str):
                kwargs[name] = _coerce(value, target, path)
            else:
                kwargs[name] = value
    return cls(**kwargs)


def config_from_dict(obj: dict) -> PipelineConfig:
    return _from_dict(PipelineConfig, obj, "")


def config_to_dict(cfg) -> dict:
    out = {}
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if dataclasses.is_dataclass(value):
            out[f.name] = config_to_dict(value)
        elif isinstance(value, tuple):
            out[f.name] = list(value)
        else:
            out[f.name] = value
    return out


def load_config(path: str | Path | None) -> PipelineConfig:
    """Config from a JSON file; all defaults when path is None."""
    if path is None:
        return PipelineConfig()
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {p}: {e}") from e
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{p}: invalid JSON: {e}") from e
    if not isinstance(obj, dict):
        raise ConfigError(f"{p}: config must be a JSON object")
    return config_from_dict(obj)


def with_updates(cfg: PipelineConfig, updates: dict) -> PipelineConfig:
    """New config with dotted-path overrides applied (e.g. sbd.threshold)."""
    doc = config_to_dict(cfg)
    for key, value in updates.items():
        parts = key.split(".")
        node = doc
        for part in parts[:-1]:
            if not isinstance(node.get(part), dict):
                raise ConfigError(f"unknown config section {key!r}")
            node = node[part]
        if parts[-1] not in node:
            raise ConfigError(f"unknown config key {key!r}")
        node[parts[-1]] = value
    return config_from_dict(doc)


def parse_override(text: str) -> tuple[str, object]:
    """Parse a KEY=VALUE override; VALUE uses JSON syntax when possible."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} must look like key=value")
    key, _, raw = text.partition("=")
    key = key.strip()
    raw = raw.strip()
    if not key:
        raise ConfigError(f"override {text!r} has an empty key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def canonical_json(cfg: PipelineConfig) -> str:
    return json.dumps(config_to_dict(cfg), sort_keys=True,
                      separators=(",", ":"))


def config_hash(cfg: PipelineConfig) -> str:
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()


def save_config(cfg: PipelineConfig, path: str | Path) -> None:
    with open(path, "w") as f:
        json.dump(config_to_dict(cfg), f, indent=2, sort_keys=True)
        f.write("\n")
