"""Pseudo-label inference: DC label fusion, label mining and semantic denoising."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arraycore import UNLABELED, InvalidInputError, as_tensor

SIMPLEX_TOL = 1e-5


@dataclass(frozen=True)
class ConfusionSchedule:
    steps: tuple[tuple[int, tuple[int, ...]], ...]

    def __post_init__(self):
        targets = [t for t, _ in self.steps]
        if len(set(targets)) != len(targets):
            raise ValueError("a target category appears twice in the schedule")
        for t, z in self.steps:
            if not z:
                raise ValueError(f"empty confusion set for category {t}")
            for c in (t, *z):
                if not 0 <= c < UNLABELED:
                    raise ValueError(f"invalid category id {c}")

    @classmethod
    def from_names(cls, pairs, vocab) -> "ConfusionSchedule":
        return cls(tuple((vocab.id(t), vocab.ids(z)) for t, z in pairs))


@dataclass(frozen=True)
class MiningParams:
    theta_fg: float = 0.95
    theta_bg: float = 0.99
    fg_ids: frozenset = frozenset()

    def __post_init__(self):
        if not 0.5 < self.theta_fg <= self.theta_bg < 1:
            raise ValueError("thresholds must satisfy 0.5 < theta_fg <= theta_bg < 1")

    def threshold(self, c: int) -> float:
        return self.theta_fg if c in self.fg_ids else self.theta_bg


def _check_mask(mask, n_classes: int | None = None) -> np.ndarray:
    m = np.asarray(mask)
    if m.ndim != 2:
        raise InvalidInputError(f"label mask must be (H,W), got {m.shape}")
    if n_classes is not None:
        bad = (m != UNLABELED) & ((m < 0) | (m >= n_classes))
        if bad.any():
            raise InvalidInputError(f"unknown category ids {sorted(set(m[bad].tolist()))}")
    return m


def check_simplex(v, name: str = "probabilities") -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 3:
        raise InvalidInputError(f"{name} must be (N_c,H,W), got {v.shape}")
    if np.any(v < -SIMPLEX_TOL) or np.any(v > 1 + SIMPLEX_TOL):
        raise InvalidInputError(f"{name} has entries outside [0,1]")
    if np.any(np.abs(v.sum(axis=0) - 1) > SIMPLEX_TOL):
        raise InvalidInputError(f"{name} columns do not sum to 1")
    return v


def fuse_dc_labels(pred_coco, pred_city, intersect_ids, n_classes: int | None = None) -> np.ndarray:
    """Fuse the two DC segmenters' predictions.

    Intersect-set classes are kept only where both predictors agree; every
    other pixel takes the Cityscapes-trained prediction.
    """
    coco = _check_mask(pred_coco, n_classes)
    city = _check_mask(pred_city, n_classes)
    if coco.shape != city.shape:
        raise InvalidInputError(f"shape mismatch: {coco.shape} vs {city.shape}")
    out = city.astype(np.int64).copy()
    out[np.isin(city, list(intersect_ids)) & (coco != city)] = UNLABELED
    return out


def mine_labels(v_rb, v_fa, params: MiningParams) -> np.ndarray:
    """Keep class c at pixel u only when both probability maps reach eta(c) there."""
    v_rb = check_simplex(v_rb, "v_rb")
    v_fa = check_simplex(v_fa, "v_fa")
    if v_rb.shape != v_fa.shape:
        raise InvalidInputError(f"shape mismatch: {v_rb.shape} vs {v_fa.shape}")
    eta = np.array([params.threshold(c) for c in range(v_rb.shape[0])])[:, None, None]
    passed = (v_rb >= eta) & (v_fa >= eta)
    out = np.full(v_rb.shape[1:], UNLABELED, dtype=np.int64)
    # eta > 0.5 on a simplex: at most one class can pass per pixel
    hit = passed.any(axis=0)
    out[hit] = passed.argmax(axis=0)[hit]
    return out


def _class_mean(feats: np.ndarray, sel: np.ndarray) -> np.ndarray:
    return feats[:, sel].mean(axis=1)


def sdp(mask, image, target: int, confusion) -> np.ndarray:
    """Semantic denoising of one category.

    A ``target`` pixel becomes UNLABELED when its squared distance to the
    target's mean feature is strictly larger than its distance to the mean
    feature of any non-empty confusion category.
    """
    m = _check_mask(mask)
    img = as_tensor(image)
    if img.shape[1:] != m.shape:
        raise InvalidInputError(f"mask {m.shape} and image {img.shape[1:]} differ")
    out = m.copy()
    sel = m == target
    if not sel.any():
        return out
    pix = img[:, sel]  # (C, N)
    d_own = ((pix - _class_mean(img, sel)[:, None]) ** 2).sum(axis=0)
    noisy = np.zeros(pix.shape[1], dtype=bool)
    for z in confusion:
        zsel = m == z
        if z == target or not zsel.any():
            continue
        d_z = ((pix - _class_mean(img, zsel)[:, None]) ** 2).sum(axis=0)
        noisy |= d_own > d_z
    rows, cols = np.nonzero(sel)
    out[rows[noisy], cols[noisy]] = UNLABELED
    return out


def run_schedule(mask, image, schedule: ConfusionSchedule) -> np.ndarray:
    """Apply :func:`sdp` in schedule order; class means are always taken from the current mask."""
    out = _check_mask(mask).copy()
    for target, confusion in schedule.steps:
        out = sdp(out, image, target, confusion)
    return out


def distill_ntir(v_rb, v_fa, ntir, params: MiningParams, schedule: ConfusionSchedule) -> np.ndarray:
    return run_schedule(mine_labels(v_rb, v_fa, params), ntir, schedule)


def distill_dc(pred_coco, pred_city, image, intersect_ids, schedule: ConfusionSchedule,
               n_classes: int | None = None) -> np.ndarray:
    return run_schedule(fuse_dc_labels(pred_coco, pred_city, intersect_ids, n_classes), image, schedule)


def wrong_label_count(mask, gt) -> int:
    m = np.asarray(mask)
    return int(((m != UNLABELED) & (m != np.asarray(gt))).sum())
