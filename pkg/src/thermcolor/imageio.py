"""File formats: 8-bit PNG images, PNG label masks, float raws with a JSON header,
and 16-bit PNG probability stacks."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .arraycore import UNLABELED, InvalidInputError

RAW_SUFFIX = ".f32"


def read_image(path) -> np.ndarray:
    """PNG -> ``(C, H, W)`` float64 in [0, 1]; gray files give C=1, colour files C=3."""
    with Image.open(path) as im:
        if im.mode in ("L", "I;16", "I"):
            a = np.asarray(im, dtype=np.float64)
            scale = 255.0 if im.mode == "L" else 65535.0
            return (a / scale)[None]
        a = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    return a.transpose(2, 0, 1)


def to_uint8(t) -> np.ndarray:
    a = np.asarray(t, dtype=np.float64)
    return np.clip(np.rint(a * 255.0), 0, 255).astype(np.uint8)


def write_image(path, t) -> None:
    a = np.asarray(t, dtype=np.float64)
    if a.ndim == 3 and a.shape[0] == 1:
        a = a[0]
    if a.ndim == 2:
        Image.fromarray(to_uint8(a), mode="L").save(path)
    elif a.ndim == 3 and a.shape[0] == 3:
        Image.fromarray(to_uint8(a.transpose(1, 2, 0)), mode="RGB").save(path)
    else:
        raise InvalidInputError(f"cannot write image of shape {a.shape}")


def read_mask(path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode != "L":
            raise InvalidInputError(f"{path}: mask must be single-channel 8-bit, got {im.mode}")
        return np.asarray(im, dtype=np.int64)


def write_mask(path, mask) -> None:
    m = np.asarray(mask)
    if m.ndim != 2:
        raise InvalidInputError(f"mask must be (H,W), got {m.shape}")
    if m.min(initial=0) < 0 or m.max(initial=0) > UNLABELED:
        raise InvalidInputError("mask ids must lie in [0, 255]")
    Image.fromarray(m.astype(np.uint8), mode="L").save(path)


def write_raw(path, a, kind: str = "tensor") -> None:
    """Float32 array of shape (C, H, W) preceded by one JSON header line."""
    a = np.asarray(a, dtype=np.float32)
    if a.ndim == 2:
        a = a[None]
    c, h, w = a.shape
    key = "n_classes" if kind == "prob" else "channels"
    header = {key: c, "h": h, "w": w, "dtype": "float32", "order": "C"}
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(a.astype("<f4").tobytes(order="C"))


def read_raw(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline())
        body = fh.read()
    c = header.get("n_classes", header.get("channels"))
    h, w = header["h"], header["w"]
    if c is None:
        raise InvalidInputError(f"{path}: header lacks n_classes/channels")
    data = np.frombuffer(body, dtype="<f4")
    if data.size != c * h * w:
        raise InvalidInputError(f"{path}: expected {c * h * w} floats, found {data.size}")
    return data.reshape(c, h, w).astype(np.float64)


def write_png_stack(directory, v) -> None:
    """One 16-bit PNG per channel, named c000.png, c001.png, ..."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for c, plane in enumerate(np.asarray(v, dtype=np.float64)):
        q = np.clip(np.rint(plane * 65535.0), 0, 65535).astype(np.uint16)
        Image.fromarray(q).save(d / f"c{c:03d}.png")


def read_png_stack(directory, renormalize: bool = True) -> np.ndarray:
    files = sorted(Path(directory).glob("c*.png"))
    if not files:
        raise InvalidInputError(f"{directory}: no channel PNGs")
    planes = []
    for f in files:
        with Image.open(f) as im:
            planes.append(np.asarray(im, dtype=np.float64) / 65535.0)
    v = np.stack(planes)
    if renormalize:
        s = v.sum(axis=0)
        if np.any(s <= 0):
            raise InvalidInputError(f"{directory}: pixel with zero total probability")
        v = v / s
    return v


def read_prob(path) -> np.ndarray:
    """Probability tensor from either a raw float file or a 16-bit PNG stack directory."""
    p = Path(path)
    if p.is_dir():
        return read_png_stack(p)
    return read_raw(p)


def read_array(path) -> np.ndarray:
    """Image-like ``(C, H, W)`` array from a PNG or, for exact values, a raw float file."""
    if Path(path).suffix == RAW_SUFFIX:
        return read_raw(path)
    return read_image(path)


def find_prob(directory, stem: str) -> Path | None:
    d = Path(directory)
    for cand in (d / f"{stem}{RAW_SUFFIX}", d / stem):
        if cand.exists():
            return cand
    return None


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
