"""Dense-array primitives shared by the distillation, loss and metric code.

Conventions used throughout the package:

* an image tensor is a float array of shape ``(C, H, W)`` with values in [0, 1];
* a gray map is a float array of shape ``(H, W)``;
* a label mask is an integer array of shape ``(H, W)`` where ``UNLABELED``
  marks pixels without a category.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

UNLABELED = 255

SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_SIGMA = 1.5
SSIM_WINDOW = 11


class InvalidInputError(ValueError):
    """Raised when an array argument violates an operation's preconditions."""


def as_tensor(x) -> np.ndarray:
    """Promote ``(H, W)`` to ``(1, H, W)`` float64; pass ``(C, H, W)`` through."""
    t = np.asarray(x, dtype=np.float64)
    if t.ndim == 2:
        t = t[None]
    if t.ndim != 3:
        raise InvalidInputError(f"expected (C,H,W) or (H,W) array, got shape {t.shape}")
    if t.size == 0:
        raise InvalidInputError("empty tensor")
    if not np.all(np.isfinite(t)):
        raise InvalidInputError("tensor contains non-finite values")
    return t


def as_gray(x) -> np.ndarray:
    """Reduce an image to a gray map by channel mean.

    Channel-replicated inputs return the shared channel exactly, so identity
    translations reduce without rounding noise.
    """
    t = as_tensor(x)
    if t.shape[0] == 1 or np.all(t == t[:1]):
        return t[0].copy()
    return t.mean(axis=0)


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise InvalidInputError(f"shape mismatch: {a.shape} vs {b.shape}")


def channel_extreme(t, mode: str = "max") -> np.ndarray:
    t = as_tensor(t)
    if mode == "max":
        return t.max(axis=0)
    if mode == "min":
        return t.min(axis=0)
    raise InvalidInputError(f"mode must be 'max' or 'min', got {mode!r}")


def spatial_gradient(img) -> np.ndarray:
    """``|img - avgpool3x3(img)|`` with replicate padding, per channel.

    Accepts a gray map ``(H, W)`` or a stack ``(C, H, W)`` and returns the same shape.
    Computed as the mean of neighbour differences so flat regions are exactly 0.
    """
    a = np.asarray(img, dtype=np.float64)
    if a.ndim not in (2, 3) or a.size == 0:
        raise InvalidInputError(f"expected non-empty (H,W) or (C,H,W), got {a.shape}")
    h, w = a.shape[-2:]
    pad = [(0, 0)] * (a.ndim - 2) + [(1, 1), (1, 1)]
    p = np.pad(a, pad, mode="edge")
    acc = np.zeros_like(a)
    for dy in range(3):
        for dx in range(3):
            acc += p[..., dy:dy + h, dx:dx + w] - a
    return np.abs(acc / 9.0)


def _gaussian_window(a: np.ndarray) -> np.ndarray:
    radius = SSIM_WINDOW // 2
    return ndimage.gaussian_filter(
        a, sigma=(0, SSIM_SIGMA, SSIM_SIGMA), mode="reflect", truncate=radius / SSIM_SIGMA
    )


def ssim_map(a, b, data_range: float = 1.0) -> np.ndarray:
    a = as_tensor(a)
    b = as_tensor(b)
    _check_same_shape(a, b)
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    mu_a = _gaussian_window(a)
    mu_b = _gaussian_window(b)
    # Products are formed symmetrically so ssim(x, x) is exactly 1.
    var_a = _gaussian_window(a * a) - mu_a * mu_a
    var_b = _gaussian_window(b * b) - mu_b * mu_b
    cov = _gaussian_window(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return num / den


def ssim(a, b, data_range: float = 1.0) -> float:
    """Mean SSIM over 11x11 Gaussian windows (sigma 1.5), averaged over channels."""
    return float(ssim_map(a, b, data_range).mean())


def smooth_l1(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_same_shape(a, b)
    d = np.abs(a - b)
    return float(np.where(d < 1.0, 0.5 * d * d, d - 0.5).mean())


def l1(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _check_same_shape(a, b)
    return float(np.abs(a - b).mean())


def _resize_axis(a: np.ndarray, axis: int, out_len: int) -> np.ndarray:
    in_len = a.shape[axis]
    if out_len == in_len:
        return a
    scale = in_len / out_len
    src = (np.arange(out_len) + 0.5) * scale - 0.5
    src = np.clip(src, 0.0, in_len - 1)
    lo = np.floor(src).astype(int)
    hi = np.minimum(lo + 1, in_len - 1)
    w = src - lo
    shape = [1] * a.ndim
    shape[axis] = out_len
    w = w.reshape(shape)
    a_lo = np.take(a, lo, axis=axis)
    a_hi = np.take(a, hi, axis=axis)
    # lerp form keeps constant regions exactly constant
    return a_lo + w * (a_hi - a_lo)


def output_size(length: int, factor: float) -> int:
    return int(round(length * factor))


def resize_bilinear(t, factor: float) -> np.ndarray:
    """Bilinear resize by ``factor`` with half-pixel-center alignment.

    Output dims are ``round(dim * factor)``. Sample positions use the actual
    in/out ratio per axis, so ``factor == 1`` is an exact copy.
    """
    if not factor > 0:
        raise InvalidInputError(f"factor must be > 0, got {factor}")
    a = np.asarray(t, dtype=np.float64)
    if a.ndim not in (2, 3):
        raise InvalidInputError(f"expected (H,W) or (C,H,W), got {a.shape}")
    h, w = a.shape[-2:]
    oh, ow = output_size(h, factor), output_size(w, factor)
    if oh < 1 or ow < 1:
        raise InvalidInputError(f"resize by {factor} gives degenerate size {(oh, ow)}")
    if factor == 1:
        return a.copy()
    out = _resize_axis(a, a.ndim - 2, oh)
    return _resize_axis(out, a.ndim - 1, ow)


def resize_to(t, height: int, width: int) -> np.ndarray:
    a = np.asarray(t, dtype=np.float64)
    out = _resize_axis(a, a.ndim - 2, height)
    return _resize_axis(out, a.ndim - 1, width)


def total_variation(t) -> float:
    """Anisotropic TV: mean |horizontal diff| + mean |vertical diff|."""
    a = np.asarray(t, dtype=np.float64)
    dh = np.abs(np.diff(a, axis=-1))
    dv = np.abs(np.diff(a, axis=-2))
    tv = 0.0
    if dh.size:
        tv += float(dh.mean())
    if dv.size:
        tv += float(dv.mean())
    return tv


def one_hot(mask, n_classes: int) -> np.ndarray:
    """``(n_classes, H, W)`` float one-hot; UNLABELED pixels are all-zero columns."""
    m = np.asarray(mask)
    out = np.zeros((n_classes,) + m.shape, dtype=np.float64)
    for c in range(n_classes):
        out[c][m == c] = 1.0
    return out


def nearest_resize_mask(mask, height: int, width: int) -> np.ndarray:
    m = np.asarray(mask)
    h, w = m.shape
    if (h, w) == (height, width):
        return m.copy()
    rows = np.minimum(((np.arange(height) + 0.5) * h / height).astype(int), h - 1)
    cols = np.minimum(((np.arange(width) + 0.5) * w / width).astype(int), w - 1)
    return m[np.ix_(rows, cols)]
