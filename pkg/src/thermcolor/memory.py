"""Memory unit for NTIR pseudo-labels and memory-guided sample selection."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .arraycore import InvalidInputError
from .imageio import read_mask, write_json, write_mask

INDEX_FILE = "index.json"
TIE_DECIMALS = 12  # similarities equal to this many decimals rank as ties


class MemoryNotReadyError(RuntimeError):
    pass


def distribution_feature(mask, c_ss) -> np.ndarray:
    """Per-category area fractions over the small-sample set, minus their mean."""
    m = np.asarray(mask)
    fr = np.array([(m == c).sum() for c in c_ss], dtype=np.float64) / m.size
    if not len(fr):
        return fr
    return fr - fr.mean()


def cosine_similarity(fa, fb) -> float:
    """Cosine of the angle between two features; 0 if either has zero norm."""
    fa = np.asarray(fa, dtype=np.float64)
    fb = np.asarray(fb, dtype=np.float64)
    if fa.shape != fb.shape:
        raise InvalidInputError(f"length mismatch: {fa.shape} vs {fb.shape}")
    na, nb = np.linalg.norm(fa), np.linalg.norm(fb)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.clip(fa @ fb / (na * nb), -1.0, 1.0))


@dataclass
class MemoryUnit:
    c_ss: tuple[int, ...]
    capacity_target: int
    min_fill: int | None = None
    masks: dict[str, np.ndarray] = field(default_factory=dict)
    features: dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self):
        return len(self.features)

    @property
    def ready(self) -> bool:
        need = self.capacity_target if self.min_fill is None else self.min_fill
        return len(self) >= need

    def store(self, image_id: str, mask) -> None:
        if image_id in self.features:
            warnings.warn(f"overwriting memory entry {image_id!r}", stacklevel=2)
        m = np.asarray(mask)
        self.masks[image_id] = m.copy()
        self.features[image_id] = distribution_feature(m, self.c_ss)

    def similarities(self, fa) -> list[tuple[str, float]]:
        return [(i, cosine_similarity(fa, f)) for i, f in sorted(self.features.items())]

    def topk(self, fa, k: int) -> list[tuple[str, float]]:
        if not self.ready:
            raise MemoryNotReadyError(f"memory holds {len(self)} of {self.capacity_target} entries")
        if not 1 <= k <= len(self):
            raise InvalidInputError(f"k must be in [1, {len(self)}], got {k}")
        # stable sort on the id-sorted list breaks ties by ascending id
        ranked = sorted(self.similarities(fa), key=lambda e: -round(e[1], TIE_DECIMALS))
        return ranked[:k]

    def recall_topk(self, fa, k: int, seed=0) -> str:
        """Draw one of the k most similar entries uniformly at random.

        ``seed`` may be an int or a ``numpy.random.Generator`` (for repeated draws).
        """
        cands = self.topk(fa, k)
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        return cands[int(rng.integers(len(cands)))][0]

    def save(self, directory) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        for i, m in self.masks.items():
            write_mask(d / f"{i}.png", m)
        write_json(d / INDEX_FILE, {
            "c_ss": list(self.c_ss),
            "capacity_target": self.capacity_target,
            "min_fill": self.min_fill,
            "ready": self.ready,
            "features": {i: f.tolist() for i, f in sorted(self.features.items())},
        })

    @classmethod
    def load(cls, directory) -> "MemoryUnit":
        d = Path(directory)
        with open(d / INDEX_FILE) as fh:
            idx = json.load(fh)
        mem = cls(tuple(idx["c_ss"]), idx["capacity_target"], idx.get("min_fill"))
        for i in idx["features"]:
            mem.masks[i] = read_mask(d / f"{i}.png")
            mem.features[i] = distribution_feature(mem.masks[i], mem.c_ss)
        return mem
