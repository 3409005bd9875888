"""Shared synthetic fixtures for the denoising and CLI tests."""

from thermcolor.config import RunConfig
from thermcolor.synth import SceneSpec, corrupt_labels, generate_scene, soft_probs

CFG = RunConfig()
V = CFG.vocab
SWAPS = [(V.id("sky"), V.id("vegetation")), (V.id("vegetation"), V.id("person"))]
NOISE = 0.05
RATE = 0.2


def corrupted_case(seed):
    """(ntir, gt, v_rb, v_fa) for one scene with 20% sky->tree, tree->pedestrian corruption."""
    ntir, _, gt = generate_scene(SceneSpec(seed=seed, noise=NOISE), V)
    noisy = corrupt_labels(gt, SWAPS, RATE, seed=seed)
    v_rb = soft_probs(noisy, V.n_classes, 0.995)
    v_fa = soft_probs(noisy, V.n_classes, 0.999)
    return ntir, gt, v_rb, v_fa
