"""Forward values of every translation loss term and the total objective.

All functions take network outputs (images, score maps, probability tensors,
feature maps, masks) as plain arrays and return Python floats.
"""

from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .arraycore import (
    UNLABELED,
    InvalidInputError,
    as_gray,
    as_tensor,
    channel_extreme,
    l1,
    one_hot,
    resize_bilinear,
    smooth_l1,
    spatial_gradient,
    ssim,
    total_variation,
)
from .cluster import kmeans

TERMS = ("adv", "cyc", "tv", "sga", "seg_all", "aca", "cgr", "sr")


@dataclass(frozen=True)
class LossWeights:
    tv: float = 5.0
    sga: float = 0.5
    sl1: float = 10.0
    boundary: float = 0.5
    phi_l: float = 0.9
    phi_g: float = 0.9
    alpha: float = 0.5
    beta: float = 1.5
    n_u: int = 4
    eps: float = 1e-6
    theta_sga: float = 0.5
    cyc_l1: float = 10.0
    cyc_ssim: float = 1.0

    def __post_init__(self):
        for name, v in asdict(self).items():
            if v < 0:
                raise ValueError(f"weight {name} must be >= 0")
        if not 0 < self.alpha < 1 < self.beta:
            raise ValueError("need 0 < alpha < 1 < beta")
        if not (0 < self.phi_l <= 1 and 0 < self.phi_g <= 1):
            raise ValueError("phi_l and phi_g must lie in (0, 1]")
        if self.n_u < 1:
            raise ValueError("n_u must be >= 1")


class Phase(str, enum.Enum):
    LEARN_SA = "learn_SA"
    LEARN_SB = "learn_SB"
    CONSTRAIN = "constrain"

    @property
    def weights(self) -> tuple[int, int, int, int]:
        """Binary (ra, fb, rb, fa) switches of the segmentation branches."""
        return {
            Phase.LEARN_SA: (1, 0, 0, 0),
            Phase.LEARN_SB: (0, 1, 0, 0),
            Phase.CONSTRAIN: (0, 0, 1, 1),
        }[self]


@dataclass
class LossReport:
    adv: float
    cyc: float
    tv: float
    sga: float
    seg_all: float
    aca: float
    cgr: float
    sr: float
    total: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _bool_mask(mask, shape) -> np.ndarray:
    m = np.asarray(mask)
    if m.shape != shape:
        raise InvalidInputError(f"mask shape {m.shape} does not match {shape}")
    return m.astype(bool)


# -- generator regularisers ------------------------------------------------------

def monochrome_reg(fake_ntir) -> float:
    t = as_tensor(fake_ntir)
    return float((channel_extreme(t, "max") - channel_extreme(t, "min")).max())


def temperature_reg(fake_ntir, road_mask, ped_mask, eps: float = 1e-6) -> float:
    """Hinge on pedestrians being colder (at their minimum) than the road mean."""
    g = as_gray(fake_ntir)
    road = _bool_mask(road_mask, g.shape)
    ped = _bool_mask(ped_mask, g.shape)
    if not road.any() or not ped.any():
        return 0.0
    mean_road = g[road].mean()
    min_ped = g[ped].min()
    return float(max((mean_road - min_ped) / (mean_road + eps), 0.0))


def sga_edge_term(source, translated, theta: float = 0.5, eps: float = 1e-6) -> float:
    """Gradient-alignment hinge on the source's edge pixels.

    Edges are pixels whose source gradient exceeds the mean gradient. At each
    edge pixel the translated gradient, normalised by its maximum, is divided
    by the same normalised quantity of the source; ratios below ``theta`` are
    penalised.
    """
    g_s = spatial_gradient(as_gray(source))
    g_t = spatial_gradient(as_gray(translated))
    if g_s.shape != g_t.shape:
        raise InvalidInputError(f"shape mismatch: {g_s.shape} vs {g_t.shape}")
    edges = g_s > g_s.mean()
    if not edges.any():
        return 0.0
    rel_t = g_t[edges] / (g_t.max() + eps)
    rel_s = g_s[edges] / (g_s.max() + eps)
    ratio = rel_t / rel_s
    return float(np.maximum(theta - ratio, 0.0).mean())


def sga_loss(source, translated, road_mask, ped_mask, theta: float = 0.5, eps: float = 1e-6) -> float:
    return (
        sga_edge_term(source, translated, theta, eps)
        + monochrome_reg(translated)
        + temperature_reg(translated, road_mask, ped_mask, eps)
    )


# -- segmentation ---------------------------------------------------------------

def class_weights_from_label(label, n_classes: int, c: float = 1.02) -> np.ndarray:
    """Inverse-log frequency weights ``1 / ln(c + freq)`` over labeled pixels."""
    m = np.asarray(label)
    valid = m[m != UNLABELED]
    freq = np.bincount(valid.ravel(), minlength=n_classes)[:n_classes] / max(valid.size, 1)
    return 1.0 / np.log(c + freq)


def boundary_loss(prob, label) -> float:
    """Mean |grad(prob) - grad(one_hot(label))| over labeled pixels, all channels."""
    p = np.asarray(prob, dtype=np.float64)
    m = np.asarray(label)
    valid = m != UNLABELED
    if not valid.any():
        return 0.0
    diff = np.abs(spatial_gradient(p) - spatial_gradient(one_hot(m, p.shape[0])))
    return float(diff[:, valid].mean())


def seg_loss(prob, label, class_weights=None, boundary_weight: float = 0.0) -> float:
    """Weighted pixel cross-entropy over labeled pixels plus optional boundary term."""
    p = np.asarray(prob, dtype=np.float64)
    m = np.asarray(label)
    if p.ndim != 3 or p.shape[1:] != m.shape:
        raise InvalidInputError(f"prob {p.shape} and label {m.shape} are inconsistent")
    n_classes = p.shape[0]
    valid = m != UNLABELED
    if not valid.any():
        warnings.warn("label has no labeled pixels; segmentation loss is 0", stacklevel=2)
        return 0.0
    if np.any(m[valid] >= n_classes) or np.any(m[valid] < 0):
        raise InvalidInputError("label ids exceed the probability tensor's classes")
    w = np.ones(n_classes) if class_weights is None else np.asarray(class_weights, dtype=np.float64)
    ys = m[valid]
    rows, cols = np.nonzero(valid)
    p_true = p[ys, rows, cols]
    wy = w[ys]
    ce = float((wy * -np.log(np.maximum(p_true, 1e-12))).sum() / wy.sum())
    if boundary_weight:
        ce += boundary_weight * boundary_loss(p, m)
    return ce


def seg_loss_total(l_ra: float, l_fb: float, l_rb: float, l_fa: float, phase: Phase | str) -> float:
    w_ra, w_fb, w_rb, w_fa = Phase(phase).weights
    return w_ra * l_ra + w_fb * l_fb + w_rb * l_rb + w_fa * l_fa


# -- adaptive collaborative attention ------------------------------------------

def _extract_columns(features: np.ndarray, sel: np.ndarray) -> np.ndarray:
    """Masked feature columns ``(C, N)``, keeping only columns with non-zero abs sum."""
    cols = features[:, sel]
    return cols[:, np.abs(cols).sum(axis=0) != 0]


def _unit_rows(a: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(a, axis=1, keepdims=True)
    return np.divide(a, n, out=np.zeros_like(a), where=n > 0)


def response_stats(centroids: np.ndarray, cols: np.ndarray) -> tuple[float, float]:
    """Cosine response map of centroids vs feature columns reduced to (mu, tau).

    mu: mean over locations of the best-matching centroid response.
    tau: mean over centroids of their best response over locations.
    """
    y = _unit_rows(centroids) @ _unit_rows(cols.T).T  # (N_u, N)
    return float(y.max(axis=0).mean()), float(y.max(axis=1).mean())


def aca_category_loss(f_ra, f_fa, sel_a, sel_b, w: LossWeights, seed: int = 0) -> float | None:
    real = _extract_columns(f_ra, sel_a)
    fake = _extract_columns(f_fa, sel_b)
    if real.shape[1] < w.n_u or fake.shape[1] == 0:
        return None
    u = kmeans(real.T, w.n_u, seed=seed).centroids
    mu_ra, tau_ra = response_stats(u, real)
    mu_fa, tau_fa = response_stats(u, fake)
    return max(w.phi_l * mu_ra - mu_fa, 0.0) + max(w.phi_g * tau_ra - tau_fa, 0.0)


def aca_loss(f_ra, f_fa, m_a, m_b, c_ss, w: LossWeights = LossWeights(), seed: int = 0) -> float:
    """Mean per-category ACA loss over small-sample categories present in both masks."""
    f_ra = as_tensor(f_ra)
    f_fa = as_tensor(f_fa)
    if f_ra.shape[0] != f_fa.shape[0]:
        raise InvalidInputError("feature maps must share the channel count")
    m_a = np.asarray(m_a)
    m_b = np.asarray(m_b)
    if m_a.shape != f_ra.shape[1:] or m_b.shape != f_fa.shape[1:]:
        raise InvalidInputError("masks must be at feature resolution")
    per_cat = []
    for c in c_ss:
        l = aca_category_loss(f_ra, f_fa, m_a == c, m_b == c, w, seed)
        if l is not None:
            per_cat.append(l)
    return float(np.mean(per_cat)) if per_cat else 0.0


# -- conditional gradient repair -------------------------------------------------

def cgr_from_gradients(gm_rb, gm_fa, bg_mask) -> float:
    gm_rb = np.asarray(gm_rb, dtype=np.float64)
    gm_fa = np.asarray(gm_fa, dtype=np.float64)
    bg = _bool_mask(bg_mask, gm_rb.shape)
    if gm_fa.shape != gm_rb.shape:
        raise InvalidInputError(f"shape mismatch: {gm_rb.shape} vs {gm_fa.shape}")
    if not bg.any():
        return 0.0
    rho = gm_rb[bg].mean()
    high = bg & (gm_rb > rho)
    den = gm_rb[high].sum()
    if den <= 0:
        return 0.0
    num = np.maximum(gm_rb[high] - gm_fa[high], 0.0).sum()
    return float(num / den)


def cgr_loss(ntir, fake_dc, bg_mask) -> float:
    """Relative gradient deficit of the translation at strong background edges of the input."""
    return cgr_from_gradients(spatial_gradient(as_gray(ntir)), spatial_gradient(as_gray(fake_dc)), bg_mask)


# -- scale robustness ------------------------------------------------------------

def _sl1_ssim(a, b, w: LossWeights) -> float:
    a = as_tensor(a)
    b = as_tensor(b)
    if a.shape != b.shape:
        raise InvalidInputError(f"shape mismatch after resizing: {a.shape} vs {b.shape}")
    return w.sl1 * smooth_l1(a, b) + (1.0 - ssim(a, b))


def sr_loss(o, o_small, o_large, w: LossWeights = LossWeights(), psi: float = 0.0) -> float:
    """Scale-robustness loss for one domain; ``psi`` picks the down- or up-scaled branch."""
    if not 0.0 <= psi <= 1.0:
        raise InvalidInputError(f"psi must lie in [0, 1], got {psi}")
    if psi < 0.5:
        return _sl1_ssim(o_small, resize_bilinear(o, w.alpha), w)
    return _sl1_ssim(resize_bilinear(o_large, 1.0 / w.beta), o, w)


def draw_psi(seed: int, epoch: int = 0) -> float:
    """Per-epoch scale-branch variable, shared by both domains."""
    return float(np.random.default_rng([seed, epoch]).random())


# -- baseline terms --------------------------------------------------------------

def cycle_loss(x, x_rec, w: LossWeights = LossWeights()) -> float:
    return w.cyc_l1 * l1(x, x_rec) + w.cyc_ssim * (1.0 - ssim(x, x_rec))


def tv_loss(t) -> float:
    return total_variation(t)


def rls_adversarial(d_real, d_fake, side: str = "discriminator") -> float:
    """Relativistic-average least-squares GAN loss."""
    r = np.asarray(d_real, dtype=np.float64)
    f = np.asarray(d_fake, dtype=np.float64)
    if not (np.all(np.isfinite(r)) and np.all(np.isfinite(f))):
        raise InvalidInputError("discriminator scores must be finite")
    if side == "discriminator":
        a, b = r, f
    elif side == "generator":
        a, b = f, r
    else:
        raise InvalidInputError(f"side must be 'discriminator' or 'generator', got {side!r}")
    return float(0.5 * (((a - b.mean() - 1) ** 2).mean() + ((b - a.mean() + 1) ** 2).mean()))


# -- objective -------------------------------------------------------------------

def total_loss(terms: dict, w: LossWeights = LossWeights()) -> LossReport:
    missing = [t for t in TERMS if t not in terms]
    if missing:
        raise KeyError(f"missing loss terms: {missing}")
    vals = {t: float(terms[t]) for t in TERMS}
    total = (
        vals["adv"] + vals["cyc"] + w.tv * vals["tv"] + w.sga * vals["sga"]
        + vals["seg_all"] + vals["aca"] + vals["cgr"] + vals["sr"]
    )
    if not math.isfinite(total):
        raise InvalidInputError("non-finite total loss")
    return LossReport(**vals, total=total)
