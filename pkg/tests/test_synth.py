import numpy as np
import pytest

from thermcolor.arraycore import UNLABELED
from thermcolor.config import Vocabulary
from thermcolor.distill import run_schedule
from thermcolor.config import RunConfig
from thermcolor.losses import temperature_reg
from thermcolor.synth import SceneSpec, corrupt_labels, generate_scene, soft_probs

V = Vocabulary()
SKY, TREE = V.id("sky"), V.id("vegetation")


def test_deterministic():
    a = generate_scene(SceneSpec(seed=11))
    b = generate_scene(SceneSpec(seed=11))
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


def test_different_seeds_differ():
    assert not np.array_equal(generate_scene(SceneSpec(seed=1))[2], generate_scene(SceneSpec(seed=2))[2])


@pytest.mark.parametrize("seed", range(20))
def test_thermal_prior_and_partition(seed):
    ntir, dc, gt = generate_scene(SceneSpec(seed=seed))
    assert ntir.shape == gt.shape and dc.shape == (3,) + gt.shape
    assert not np.any(gt == UNLABELED)
    assert 0 <= ntir.min() and ntir.max() <= 1
    road, ped = gt == V.id("road"), gt == V.id("person")
    assert ped.any()
    assert ntir[ped].min() > ntir[road].mean()
    assert temperature_reg(ntir, road, ped) == 0.0


def test_noise_free_scene_is_piecewise_constant():
    ntir, _, gt = generate_scene(SceneSpec(seed=5, noise=0.0))
    for c in np.unique(gt):
        assert np.ptp(ntir[gt == c]) == 0.0
    cfg = RunConfig()
    np.testing.assert_array_equal(run_schedule(gt, ntir, cfg.schedule("ntir")), gt)


def test_spec_validation():
    with pytest.raises(ValueError):
        SceneSpec(width=16)
    with pytest.raises(ValueError):
        SceneSpec(ntir={**SceneSpec().ntir, "person": 0.1})


class TestCorrupt:
    def gt(self):
        return generate_scene(SceneSpec(seed=0))[2]

    def test_rate_zero(self):
        gt = self.gt()
        np.testing.assert_array_equal(corrupt_labels(gt, [(SKY, TREE)], 0.0), gt)

    def test_rate_one(self):
        assert not np.any(corrupt_labels(self.gt(), [(SKY, TREE)], 1.0) == SKY)

    def test_exact_count(self):
        gt = self.gt()
        out = corrupt_labels(gt, [(SKY, TREE)], 0.2, seed=4)
        flipped = (gt == SKY) & (out == TREE)
        assert flipped.sum() == round(0.2 * (gt == SKY).sum())
        assert np.array_equal(out[~flipped], gt[~flipped])

    def test_pairs_do_not_chain(self):
        gt = self.gt()
        out = corrupt_labels(gt, [(SKY, TREE), (TREE, V.id("person"))], 1.0)
        assert np.all(out[gt == SKY] == TREE)

    def test_bad_rate(self):
        with pytest.raises(ValueError):
            corrupt_labels(self.gt(), [], 1.5)


def test_soft_probs_simplex():
    m = np.array([[0, 1], [UNLABELED, 2]])
    v = soft_probs(m, 3, 0.99)
    np.testing.assert_allclose(v.sum(axis=0), 1.0)
    assert v[1, 0, 1] == 0.99
    np.testing.assert_allclose(v[:, 1, 0], 1 / 3)
