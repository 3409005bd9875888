import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermcolor.arraycore import UNLABELED
from thermcolor.metrics import ConfusionMatrix, apce, apce_report, canny, iou


def half_overlap():
    pred = np.array([[1, 1, 0, 0]])
    gt = np.array([[0, 1, 1, 0]])
    return pred, gt


class TestIoU:
    def test_perfect(self):
        gt = np.random.default_rng(0).integers(0, 4, size=(6, 6))
        per, miou = iou(ConfusionMatrix.from_masks(gt, gt, 4))
        assert miou == 1.0
        assert np.all(per[~np.isnan(per)] == 1.0)

    def test_half_overlap(self):
        pred, gt = half_overlap()
        per, _ = iou(ConfusionMatrix.from_masks(pred, gt, 2))
        assert per[1] == pytest.approx(1 / 3)

    def test_absent_class_excluded(self):
        gt = np.array([[0, 1]])
        per, miou = iou(ConfusionMatrix.from_masks(gt, gt, 3))
        assert np.isnan(per[2]) and miou == 1.0

    def test_unlabeled_skipped(self):
        gt = np.array([[0, UNLABELED, 1]])
        pred = np.array([[0, 1, 1]])
        cm = ConfusionMatrix.from_masks(pred, gt, 2)
        assert cm.total == 2

    @settings(max_examples=50)
    @given(st.integers(0, 2**32 - 1))
    def test_permutation_consistent(self, seed):
        rng = np.random.default_rng(seed)
        pred, gt = rng.integers(0, 4, size=(2, 6, 6))
        perm = rng.permutation(4)
        per, _ = iou(ConfusionMatrix.from_masks(pred, gt, 4))
        per_p, _ = iou(ConfusionMatrix.from_masks(perm[pred], perm[gt], 4))
        np.testing.assert_array_equal(per_p[perm], per)

    @settings(max_examples=50)
    @given(st.integers(0, 2**32 - 1))
    def test_batch_merge(self, seed):
        rng = np.random.default_rng(seed)
        pred, gt = rng.integers(0, 5, size=(2, 8, 9))
        cut = int(rng.integers(0, 9))
        a = ConfusionMatrix.from_masks(pred[:cut], gt[:cut], 5)
        b = ConfusionMatrix.from_masks(pred[cut:], gt[cut:], 5)
        whole = ConfusionMatrix.from_masks(pred, gt, 5)
        np.testing.assert_array_equal((a + b).counts, whole.counts)


def vertical_step(h=20, w=20, col=10):
    img = np.zeros((h, w))
    img[:, col:] = 1.0
    return img


class TestCanny:
    def test_constant_empty(self):
        assert canny(np.full((16, 16), 0.4), 0.1, 0.3).sum() == 0

    def test_vertical_step_single_line(self):
        edges = canny(vertical_step(), 0.2, 0.5)
        interior = edges[3:-3]
        cols = np.nonzero(interior.any(axis=0))[0]
        assert len(cols) == 1 and cols[0] in (9, 10)
        assert interior[:, cols[0]].all()

    @settings(max_examples=30)
    @given(st.integers(0, 2**32 - 1), st.floats(0.1, 0.5), st.floats(0.0, 0.4))
    def test_threshold_monotone(self, seed, high, extra):
        img = np.random.default_rng(seed).random((16, 16))
        low = 0.4 * high
        loose = canny(img, low, high)
        strict = canny(img, low, high + extra)
        assert np.all(loose >= strict)

    def test_bad_thresholds(self):
        with pytest.raises(ValueError):
            canny(np.zeros((4, 4)), 0.5, 0.2)


class TestAPCE:
    def scene(self):
        img = np.zeros((24, 24))
        img[4:20, 6:18] = 0.8
        img[10:14, 2:22] = 0.3
        return img

    def test_identity(self):
        img = self.scene()
        assert apce(img, np.repeat(img[None], 3, axis=0)) == 1.0

    def test_constant_translation_degenerate(self):
        rep = apce_report(self.scene(), np.full((3, 24, 24), 0.5))
        assert rep.apce == 1.0
        assert len(rep.degenerate) == 9

    def test_disjoint_edges(self):
        src = vertical_step(24, 24, 4)
        dst = vertical_step(24, 24, 19)
        assert apce(src, dst) == 0.0

    def test_per_threshold_report(self):
        rep = apce_report(self.scene(), self.scene(), thresholds=[0.2, 0.6])
        assert set(rep.per_threshold) == {0.2, 0.6}
        assert rep.to_dict()["apce"] == 1.0

    def test_empty_thresholds(self):
        with pytest.raises(ValueError):
            apce(self.scene(), self.scene(), thresholds=[])

    @settings(max_examples=20)
    @given(st.integers(0, 2**32 - 1), st.sampled_from([0.125, 0.25, -0.0625]))
    def test_constant_shift_invariance(self, seed, c):
        rng = np.random.default_rng(seed)
        src = np.round(rng.random((20, 20)) * 16) / 64 + 0.25
        dst = np.round(rng.random((20, 20)) * 16) / 64 + 0.25
        assert apce(src + c, dst + c) == pytest.approx(apce(src, dst), abs=1e-12)
