"""Category vocabulary and run configuration.

The default vocabulary is the 19-class Cityscapes label set, which is what
both pseudo-label sources are expressed in.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

CONFIG_ENV_VAR = "THERMCOLOR_CONFIG"

CITYSCAPES_NAMES = (
    "road", "sidewalk", "building", "wall", "fence", "pole", "traffic light",
    "traffic sign", "vegetation", "terrain", "sky", "person", "rider", "car",
    "truck", "bus", "train", "motorcycle", "bicycle",
)

# shorthand used by the confusion schedules
TREE = "vegetation"
POLE = "pole"
SKY = "sky"
PEDESTRIAN = "person"


@dataclass(frozen=True)
class Vocabulary:
    names: tuple[str, ...] = CITYSCAPES_NAMES
    # buildings plus every object category; the rest are background
    fg: tuple[str, ...] = (
        "building", "traffic light", "traffic sign", "person", "rider", "car",
        "truck", "bus", "train", "motorcycle", "bicycle",
    )
    small_sample: tuple[str, ...] = (
        "traffic light", "traffic sign", "person", "truck", "bus", "motorcycle",
    )
    intersect: tuple[str, ...] = ("person", "car", "building")

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate category names")
        if len(self.names) > 255:
            raise ValueError("at most 255 categories (255 is reserved for UNLABELED)")
        for group in (self.fg, self.small_sample, self.intersect):
            unknown = set(group) - set(self.names)
            if unknown:
                raise ValueError(f"unknown categories {sorted(unknown)}")

    @property
    def n_classes(self) -> int:
        return len(self.names)

    def id(self, name: str) -> int:
        return self.names.index(name)

    def ids(self, names) -> tuple[int, ...]:
        return tuple(self.id(n) for n in names)

    @property
    def fg_ids(self) -> frozenset[int]:
        return frozenset(self.ids(self.fg))

    @property
    def bg_ids(self) -> frozenset[int]:
        return frozenset(range(self.n_classes)) - self.fg_ids

    @property
    def small_sample_ids(self) -> tuple[int, ...]:
        return self.ids(self.small_sample)

    @property
    def intersect_ids(self) -> frozenset[int]:
        return frozenset(self.ids(self.intersect))


# (target, confusion set) in application order
SCHEDULE_DC = ((TREE, (SKY,)), (POLE, (SKY,)), (SKY, (TREE, POLE)))
SCHEDULE_NTIR = (
    (SKY, (TREE, POLE)),
    (POLE, (SKY,)),
    (PEDESTRIAN, (TREE,)),
    (TREE, (SKY, PEDESTRIAN)),
)


@dataclass
class MemorySettings:
    capacity_target: int | None = None
    k: int = 5
    seed: int = 0
    min_fill: int | None = None


@dataclass
class MetricSettings:
    thresholds: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    low_ratio: float = 0.4
    match_tol: int = 1


@dataclass
class RunConfig:
    vocab: Vocabulary = field(default_factory=Vocabulary)
    theta_fg: float = 0.95
    theta_bg: float = 0.99
    schedule_dc: tuple = SCHEDULE_DC
    schedule_ntir: tuple = SCHEDULE_NTIR
    weights: dict = field(default_factory=dict)  # overrides for losses.LossWeights
    memory: MemorySettings = field(default_factory=MemorySettings)
    metrics: MetricSettings = field(default_factory=MetricSettings)
    scene: dict = field(default_factory=dict)  # overrides for synth.SceneSpec
    seed: int = 0

    def __post_init__(self):
        overlap = self.vocab.fg_ids & self.vocab.bg_ids
        if overlap:
            raise ValueError(f"foreground and background sets overlap: {sorted(overlap)}")

    def mining_params(self):
        from .distill import MiningParams

        return MiningParams(self.theta_fg, self.theta_bg, self.vocab.fg_ids)

    def schedule(self, domain: str):
        from .distill import ConfusionSchedule

        pairs = self.schedule_dc if domain == "dc" else self.schedule_ntir
        return ConfusionSchedule.from_names(pairs, self.vocab)

    def loss_weights(self):
        from .losses import LossWeights

        return replace(LossWeights(), **self.weights)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["vocab"] = {k: list(v) for k, v in d["vocab"].items()}
        for key in ("schedule_dc", "schedule_ntir"):
            d[key] = [[t, list(z)] for t, z in d[key]]
        d["metrics"]["thresholds"] = list(d["metrics"]["thresholds"])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        kw = dict(d)
        if "vocab" in kw:
            kw["vocab"] = Vocabulary(**{k: tuple(v) for k, v in kw["vocab"].items()})
        for key in ("schedule_dc", "schedule_ntir"):
            if key in kw:
                kw[key] = tuple((t, tuple(z)) for t, z in kw[key])
        if "memory" in kw:
            kw["memory"] = MemorySettings(**kw["memory"])
        if "metrics" in kw:
            m = dict(kw["metrics"])
            if "thresholds" in m:
                m["thresholds"] = tuple(m["thresholds"])
            kw["metrics"] = MetricSettings(**m)
        return cls(**kw)


def load_config(path: str | os.PathLike | None = None) -> RunConfig:
    """Load a JSON config; falls back to ``$THERMCOLOR_CONFIG``, then defaults."""
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
    if not path:
        return RunConfig()
    with open(Path(path)) as fh:
        return RunConfig.from_dict(json.load(fh))
