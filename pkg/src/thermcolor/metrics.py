"""Segmentation (IoU / mIoU) and edge-consistency (Canny, APCE) metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .arraycore import UNLABELED, InvalidInputError, as_gray

CANNY_SIGMA = 1.4
CANNY_RADIUS = 2  # 5x5 kernel
MAG_FLOOR = 1e-8
DEFAULT_THRESHOLDS = tuple(round(0.1 * i, 1) for i in range(1, 10))


class ConfusionMatrix:
    """Rows are ground truth, columns prediction. UNLABELED pixels on either side are skipped."""

    def __init__(self, n_classes: int, counts=None):
        self.n_classes = n_classes
        self.counts = (
            np.zeros((n_classes, n_classes), dtype=np.int64)
            if counts is None else np.asarray(counts, dtype=np.int64).copy()
        )

    @classmethod
    def from_masks(cls, pred, gt, n_classes: int) -> "ConfusionMatrix":
        cm = cls(n_classes)
        cm.update(pred, gt)
        return cm

    def update(self, pred, gt) -> None:
        pred = np.asarray(pred)
        gt = np.asarray(gt)
        if pred.shape != gt.shape:
            raise InvalidInputError(f"shape mismatch: {pred.shape} vs {gt.shape}")
        n = self.n_classes
        ok = (gt != UNLABELED) & (pred != UNLABELED)
        g, p = gt[ok].astype(np.int64), pred[ok].astype(np.int64)
        if g.size and (g.max() >= n or p.max() >= n or min(g.min(), p.min()) < 0):
            raise InvalidInputError("category id outside the confusion matrix")
        self.counts += np.bincount(n * g + p, minlength=n * n).reshape(n, n)

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if other.n_classes != self.n_classes:
            raise InvalidInputError("class counts differ")
        return ConfusionMatrix(self.n_classes, self.counts + other.counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def iou(cm: ConfusionMatrix) -> tuple[np.ndarray, float]:
    """Per-class IoU (NaN where the class is absent from both sides) and mIoU over present classes."""
    c = cm.counts.astype(np.float64)
    tp = np.diag(c)
    union = c.sum(axis=0) + c.sum(axis=1) - tp
    per_class = np.full(cm.n_classes, np.nan)
    present = union > 0
    per_class[present] = tp[present] / union[present]
    miou = float(per_class[present].mean()) if present.any() else float("nan")
    return per_class, miou


def _gaussian_smooth(img: np.ndarray) -> np.ndarray:
    return ndimage.gaussian_filter(img, CANNY_SIGMA, mode="nearest", truncate=CANNY_RADIUS / CANNY_SIGMA)


def gradient_magnitude(img) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    s = _gaussian_smooth(np.asarray(img, dtype=np.float64))
    gy = ndimage.sobel(s, axis=0, mode="nearest")
    gx = ndimage.sobel(s, axis=1, mode="nearest")
    return np.hypot(gx, gy), gx, gy


def _shift(a: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """Value of the neighbour at (y+dy, x+dx); zero outside the image."""
    out = np.zeros_like(a)
    h, w = a.shape
    ys_dst = slice(max(-dy, 0), h - max(dy, 0))
    xs_dst = slice(max(-dx, 0), w - max(dx, 0))
    ys_src = slice(max(dy, 0), h - max(-dy, 0))
    xs_src = slice(max(dx, 0), w - max(-dx, 0))
    out[ys_dst, xs_dst] = a[ys_src, xs_src]
    return out


def non_maximum_suppression(mag, gx, gy) -> np.ndarray:
    """Thin ridges along the quantised gradient direction.

    A pixel must be >= its backward neighbour and > its forward neighbour, so
    flat two-pixel ridges (step edges) keep exactly one pixel.
    """
    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    sector = (((angle + 22.5) // 45.0) % 4).astype(int)
    offsets = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}
    keep = np.zeros(mag.shape, dtype=bool)
    for s, (dy, dx) in offsets.items():
        fwd = _shift(mag, dy, dx)
        bwd = _shift(mag, -dy, -dx)
        keep |= (sector == s) & (mag >= bwd) & (mag > fwd)
    return np.where(keep, mag, 0.0)


def canny(img, low: float, high: float) -> np.ndarray:
    """Canny edges with thresholds relative to the image's peak gradient magnitude.

    Gaussian smoothing (sigma 1.4, 5x5), Sobel gradients, non-maximum
    suppression, then hysteresis with 8-connectivity.
    """
    if not 0 <= low <= high:
        raise InvalidInputError(f"need 0 <= low <= high, got {low}, {high}")
    g = as_gray(img)
    mag, gx, gy = gradient_magnitude(g)
    peak = mag.max()
    if peak < MAG_FLOOR:
        return np.zeros(g.shape, dtype=np.uint8)
    thin = non_maximum_suppression(mag / peak, gx, gy)
    strong = thin >= high
    weak = thin >= low
    weak &= thin > 0
    labels, n = ndimage.label(weak, structure=np.ones((3, 3)))
    if n == 0:
        return np.zeros(g.shape, dtype=np.uint8)
    seeded = np.unique(labels[strong & weak])
    seeded = seeded[seeded > 0]
    return np.isin(labels, seeded).astype(np.uint8)


@dataclass
class ApceReport:
    apce: float
    per_threshold: dict[float, float] = field(default_factory=dict)
    degenerate: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "apce": self.apce,
            "apce_per_threshold": {f"{t:g}": p for t, p in self.per_threshold.items()},
            "degenerate_thresholds": [f"{t:g}" for t in self.degenerate],
        }


def apce_report(input_ntir, translated, thresholds=DEFAULT_THRESHOLDS, match_tol: int = 1,
                low_ratio: float = 0.4) -> ApceReport:
    """Precision of translated-image Canny edges against input edges over a threshold sweep.

    A threshold at which the translation has no edges scores 1 and is listed
    as degenerate.
    """
    thresholds = list(thresholds)
    if not thresholds:
        raise InvalidInputError("empty threshold list")
    src = as_gray(input_ntir)
    dst = as_gray(translated)
    if src.shape != dst.shape:
        raise InvalidInputError(f"shape mismatch: {src.shape} vs {dst.shape}")
    footprint = np.ones((2 * match_tol + 1,) * 2, dtype=bool)
    per, degenerate = {}, []
    for t in thresholds:
        e_src = canny(src, low_ratio * t, t).astype(bool)
        e_dst = canny(dst, low_ratio * t, t).astype(bool)
        n = int(e_dst.sum())
        if n == 0:
            per[t] = 1.0
            degenerate.append(t)
            continue
        near = ndimage.binary_dilation(e_src, structure=footprint) if match_tol > 0 else e_src
        per[t] = float((e_dst & near).sum() / n)
    return ApceReport(float(np.mean(list(per.values()))), per, degenerate)


def apce(input_ntir, translated, thresholds=DEFAULT_THRESHOLDS, match_tol: int = 1,
         low_ratio: float = 0.4) -> float:
    return apce_report(input_ntir, translated, thresholds, match_tol, low_ratio).apce
