"""Deterministic blob-world scenes: paired thermal-like / colour-like images with
ground-truth masks, plus label corruption for testing the denoiser."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .arraycore import UNLABELED
from .config import Vocabulary

# Thermal-like mean intensity and colour-like RGB per category.
DEFAULT_NTIR = {
    "road": 0.35, "sidewalk": 0.42, "building": 0.55, "pole": 0.62,
    "traffic sign": 0.48, "vegetation": 0.25, "sky": 0.08, "person": 0.85,
    "car": 0.70,
}
DEFAULT_DC = {
    "road": (0.30, 0.30, 0.32), "sidewalk": (0.55, 0.52, 0.50),
    "building": (0.60, 0.45, 0.40), "pole": (0.35, 0.35, 0.35),
    "traffic sign": (0.90, 0.80, 0.10), "vegetation": (0.15, 0.45, 0.15),
    "sky": (0.45, 0.65, 0.95), "person": (0.80, 0.60, 0.70),
    "car": (0.70, 0.10, 0.10),
}


class SceneGenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SceneSpec:
    width: int = 64
    height: int = 48
    seed: int = 0
    noise: float = 0.05
    n_trees: tuple[int, int] = (2, 4)
    n_buildings: tuple[int, int] = (1, 2)
    n_poles: tuple[int, int] = (1, 3)
    n_pedestrians: tuple[int, int] = (1, 3)
    n_cars: tuple[int, int] = (0, 2)
    sign_prob: float = 0.5
    ntir: dict = field(default_factory=lambda: dict(DEFAULT_NTIR))
    dc: dict = field(default_factory=lambda: dict(DEFAULT_DC))
    max_retries: int = 50

    def __post_init__(self):
        if self.width < 32 or self.height < 32:
            raise ValueError("scene dims must be >= 32")
        if self.noise < 0:
            raise ValueError("noise must be >= 0")
        for v in self.ntir.values():
            if not 0 <= v <= 1:
                raise ValueError("thermal intensities must lie in [0,1]")
        for rgb in self.dc.values():
            if len(rgb) != 3 or not all(0 <= v <= 1 for v in rgb):
                raise ValueError("colours must be RGB triples in [0,1]")
        if not self.ntir["person"] > self.ntir["road"]:
            raise ValueError("pedestrians must be warmer than the road")


def _ellipse(h, w, cy, cx, ry, rx):
    yy, xx = np.ogrid[:h, :w]
    return ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0


def _rect(h, w, y0, y1, x0, x1):
    m = np.zeros((h, w), dtype=bool)
    m[max(y0, 0):min(y1, h), max(x0, 0):min(x1, w)] = True
    return m


def _layout(spec: SceneSpec, vocab: Vocabulary, rng: np.random.Generator) -> np.ndarray:
    h, w = spec.height, spec.width
    cid = vocab.id
    gt = np.empty((h, w), dtype=np.int64)

    # sky above an irregular horizon, road below, sidewalk strip between
    base = int(h * rng.uniform(0.35, 0.45))
    horizon = base + np.rint(2 * np.sin(np.arange(w) / w * rng.uniform(2, 6) + rng.uniform(0, 6))).astype(int)
    road_top = int(h * rng.uniform(0.62, 0.7))
    rows = np.arange(h)[:, None]
    gt[:] = cid("sidewalk")
    gt[rows < horizon[None, :]] = cid("sky")
    gt[np.broadcast_to(rows >= road_top, (h, w))] = cid("road")

    for _ in range(rng.integers(*spec.n_buildings, endpoint=True)):
        bw = int(rng.integers(w // 8, w // 4))
        x0 = int(rng.integers(0, w - bw))
        y0 = int(rng.integers(h // 6, base))
        gt[_rect(h, w, y0, road_top, x0, x0 + bw)] = cid("building")

    for _ in range(rng.integers(*spec.n_trees, endpoint=True)):
        cy = base + rng.uniform(-h / 8, 0)
        cx = rng.uniform(0, w)
        gt[_ellipse(h, w, cy, cx, rng.uniform(h / 10, h / 5), rng.uniform(w / 12, w / 6))] = cid("vegetation")

    placed = np.zeros((h, w), dtype=bool)

    def place(mask, name):
        if (mask & placed).any():
            return False
        gt[mask] = cid(name)
        placed[mask] |= True
        return True

    for _ in range(rng.integers(*spec.n_poles, endpoint=True)):
        for _attempt in range(20):
            x = int(rng.integers(2, w - 3))
            y0 = int(rng.integers(h // 8, base))
            pole = _rect(h, w, y0, road_top, x, x + 2)
            if place(pole, "pole"):
                if rng.random() < spec.sign_prob:
                    sign = _rect(h, w, y0 - 3, y0 + 1, x - 2, x + 4) & ~pole
                    if not (sign & placed).any():
                        place(sign, "traffic sign")
                break

    def place_many(n, name, make):
        for _ in range(n):
            for _attempt in range(20):
                if place(make(), name):
                    break
            else:
                raise SceneGenerationError(f"could not place {name}")

    def car():
        cw, ch = int(rng.integers(w // 8, w // 5)), int(rng.integers(h // 10, h // 6))
        x0 = int(rng.integers(0, w - cw))
        y0 = int(rng.integers(road_top - ch // 2, h - ch))
        return _rect(h, w, y0, y0 + ch, x0, x0 + cw)

    def pedestrian():
        pw, ph = int(rng.integers(2, 5)), int(rng.integers(h // 6, h // 4))
        x0 = int(rng.integers(0, w - pw))
        y1 = int(rng.integers(road_top, h))
        return _rect(h, w, y1 - ph, y1, x0, x0 + pw)

    place_many(int(rng.integers(*spec.n_cars, endpoint=True)), "car", car)
    place_many(int(rng.integers(*spec.n_pedestrians, endpoint=True)), "person", pedestrian)
    return gt


def _render(gt, spec: SceneSpec, vocab: Vocabulary, rng: np.random.Generator):
    h, w = gt.shape
    ntir = np.zeros((h, w))
    dc = np.zeros((3, h, w))
    for name, level in spec.ntir.items():
        sel = gt == vocab.id(name)
        ntir[sel] = level
        dc[:, sel] = np.asarray(spec.dc[name])[:, None]
    ntir = np.clip(ntir + spec.noise * rng.standard_normal((h, w)), 0, 1)
    dc = np.clip(dc + spec.noise * rng.standard_normal((3, h, w)), 0, 1)

    # pedestrians stay warmer (and brighter) than the average road
    road, ped = gt == vocab.id("road"), gt == vocab.id("person")
    if road.any() and ped.any():
        floor = ntir[road].mean() + 0.05
        ntir[ped] = np.maximum(ntir[ped], floor)
        dc_floor = dc[:, road].mean() + 0.05
        dc[:, ped] = np.maximum(dc[:, ped], dc_floor)
    return ntir, dc


def generate_scene(spec: SceneSpec, vocab: Vocabulary | None = None):
    """Return ``(ntir (H,W), dc (3,H,W), gt (H,W))``; a pure function of ``spec``."""
    vocab = vocab or Vocabulary()
    rng = np.random.default_rng(spec.seed)
    for _ in range(spec.max_retries):
        try:
            gt = _layout(spec, vocab, rng)
        except SceneGenerationError:
            continue
        ntir, dc = _render(gt, spec, vocab, rng)
        return ntir, dc, gt
    raise SceneGenerationError(f"no valid layout after {spec.max_retries} attempts")


def corrupt_labels(gt, swap_pairs, rate: float, seed: int = 0) -> np.ndarray:
    """Relabel ``round(rate * |src|)`` seeded pixels of each ``src`` class as ``dst``.

    Pixel sets are taken from the uncorrupted ``gt``, so pairs do not chain.
    """
    if not 0 <= rate <= 1:
        raise ValueError(f"rate must lie in [0,1], got {rate}")
    g = np.asarray(gt)
    out = g.copy()
    rng = np.random.default_rng(seed)
    for src, dst in swap_pairs:
        idx = np.flatnonzero(g == src)
        n = int(round(rate * idx.size))
        if n:
            pick = rng.choice(idx, size=n, replace=False)
            out.flat[pick] = dst
    return out


def soft_probs(mask, n_classes: int, confidence: float = 0.995) -> np.ndarray:
    """Probability tensor peaked at each pixel's label; UNLABELED pixels are uniform."""
    m = np.asarray(mask)
    rest = (1.0 - confidence) / (n_classes - 1)
    v = np.full((n_classes,) + m.shape, rest)
    labeled = m != UNLABELED
    rows, cols = np.nonzero(labeled)
    v[m[labeled], rows, cols] = confidence
    v[:, ~labeled] = 1.0 / n_classes
    return v
