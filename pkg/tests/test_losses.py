import math

import numpy as np
import pytest

from fepe.errors import DomainError, InputError
from fepe.losses import LossOutput, LossWeights, bce_ohem, dice_loss, ratio_loss, total_loss


def fd_gradient(fn, pred, idx, h=1e-4):
    hi = pred.copy()
    hi.ravel()[idx] += h
    lo = pred.copy()
    lo.ravel()[idx] -= h
    return (fn(hi).value - fn(lo).value) / (2 * h)


class TestBceOhem:
    def test_perfect_prediction(self):
        gt = np.zeros((8, 8))
        gt[:2] = 1
        out = bce_ohem(gt.copy(), gt)
        assert out.value <= 2e-6

    def test_neg_selection_count(self):
        gt = np.zeros((101,))
        gt[0] = 1
        pred = np.linspace(0.01, 0.99, 101)
        out = bce_ohem(pred, gt)
        assert (out.gradient != 0).sum() == 4  # 1 positive + 3 mined negatives

    def test_selects_hardest_negatives(self):
        gt = np.zeros((10,))
        gt[0] = 1
        pred = np.array([0.9, 0.1, 0.2, 0.95, 0.8, 0.7, 0.05, 0.1, 0.1, 0.1])
        out = bce_ohem(pred, gt)
        chosen = np.nonzero(out.gradient)[0].tolist()
        assert chosen == [0, 3, 4, 5]  # positive + three largest-loss negatives

    def test_tie_break_row_major(self):
        gt = np.zeros((8,))
        gt[0] = 1
        pred = np.full(8, 0.4)
        out = bce_ohem(pred, gt)
        assert np.nonzero(out.gradient)[0].tolist() == [0, 1, 2, 3]

    def test_uniform_half_gives_ln2(self):
        gt = (np.arange(64).reshape(8, 8) % 3 == 0).astype(float)
        out = bce_ohem(np.full((8, 8), 0.5), gt)
        assert np.isclose(out.value, math.log(2))

    def test_no_positives_fallback_mean_over_valid(self):
        gt = np.zeros((6, 6))
        pred = np.full((6, 6), 0.2)
        valid = np.zeros((6, 6), bool)
        valid[:3] = True
        out = bce_ohem(pred, gt, valid)
        assert np.isclose(out.value, -math.log(0.8))
        assert (out.gradient[~valid] == 0).all()
        assert (out.gradient[valid] != 0).all()

    def test_gradient_zero_off_supervised(self):
        gt = np.zeros((20,))
        gt[3] = 1
        pred = np.linspace(0.05, 0.95, 20)
        out = bce_ohem(pred, gt)
        assert (out.gradient != 0).sum() == 4

    def test_ignore_mask_respected(self):
        gt = np.ones((4, 4))
        valid = np.ones((4, 4), bool)
        valid[0] = False
        out = bce_ohem(np.full((4, 4), 0.7), gt, valid)
        assert (out.gradient[0] == 0).all()

    def test_shape_mismatch(self):
        with pytest.raises(InputError):
            bce_ohem(np.zeros((2, 2)), np.zeros((3, 3)))

    def test_determinism(self):
        rng = np.random.default_rng(0)
        pred = rng.random((16, 16))
        gt = (rng.random((16, 16)) < 0.2).astype(float)
        a = bce_ohem(pred, gt)
        b = bce_ohem(pred.copy(), gt.copy())
        assert a.value == b.value
        assert np.array_equal(a.gradient, b.gradient)

    def test_gradient_matches_fd_dense_positives(self, rng):
        # dense positives keep every negative selected, so the loss is smooth
        for _ in range(10):
            gt = (rng.random((8, 8)) < 0.6).astype(float)
            if (gt == 0).sum() > 3 * (gt == 1).sum() or gt.sum() == 0:
                continue
            pred = rng.uniform(0.1, 0.9, (8, 8))
            fn = lambda p: bce_ohem(p, gt)
            idx = int(rng.integers(64))
            analytic = fn(pred).gradient.ravel()[idx]
            assert np.isclose(analytic, fd_gradient(fn, pred, idx), rtol=1e-5, atol=1e-9)


class TestDice:
    def test_perfect_overlap(self):
        gt = np.zeros((20, 20))
        gt[:5] = 1  # 100 positives
        out = dice_loss(gt.copy(), gt)
        assert out.value == pytest.approx(1 - 200 / (200 + 1e-6))
        assert out.value < 1e-8

    def test_no_overlap(self):
        gt = np.zeros((10, 10))
        gt[:5] = 1
        out = dice_loss(np.zeros((10, 10)), gt)
        assert out.value == 1.0

    def test_empty_empty_is_one(self):
        assert dice_loss(np.zeros((4, 4)), np.zeros((4, 4))).value == 1.0

    def test_range(self, rng):
        for _ in range(20):
            pred = rng.random((12, 12))
            gt = (rng.random((12, 12)) < 0.4).astype(float)
            assert 0.0 <= dice_loss(pred, gt).value <= 1.0
            assert bce_ohem(pred, gt).value >= 0.0
            assert ratio_loss(pred, gt, gt > 0).value >= 0.0

    def test_gradient_matches_spec_formula(self, rng):
        pred = rng.uniform(0.1, 0.9, (8, 8))
        gt = (rng.random((8, 8)) < 0.5).astype(float)
        out = dice_loss(pred, gt)
        inter = float((gt * pred).sum())
        denom = float(gt.sum() + pred.sum() + 1e-6)
        want = -(2 * gt * denom - 2 * inter) / denom**2
        assert np.allclose(out.gradient, want)

    def test_gradient_matches_fd(self, rng):
        for _ in range(10):
            pred = rng.uniform(0.1, 0.9, (8, 8))
            gt = (rng.random((8, 8)) < 0.4).astype(float)
            fn = lambda p: dice_loss(p, gt)
            idx = int(rng.integers(64))
            analytic = fn(pred).gradient.ravel()[idx]
            assert np.isclose(analytic, fd_gradient(fn, pred, idx), rtol=1e-5, atol=1e-10)

    def test_gradient_zero_on_ignored(self, rng):
        pred = rng.uniform(0.1, 0.9, (8, 8))
        gt = (rng.random((8, 8)) < 0.4).astype(float)
        valid = np.ones((8, 8), bool)
        valid[2:4] = False
        out = dice_loss(pred, gt, valid)
        assert (out.gradient[~valid] == 0).all()


class TestRatio:
    def test_equal_inputs_zero(self, rng):
        x = rng.uniform(0.5, 10, (6, 6))
        assert ratio_loss(x, x.copy()).value == 0.0

    def test_e_ratio_is_one(self):
        y = np.array([[3.0]])
        assert ratio_loss(math.e * y, y).value == pytest.approx(1.0, abs=1e-12)

    def test_two_vs_one_ln2(self):
        x, y = np.array([[2.0]]), np.array([[1.0]])
        assert ratio_loss(x, y).value == pytest.approx(math.log(2), abs=1e-9)
        assert ratio_loss(y, x).value == ratio_loss(x, y).value

    def test_symmetry_exact(self, rng):
        x = rng.uniform(0, 20, (10, 10))
        y = rng.uniform(0, 20, (10, 10))
        mask = rng.random((10, 10)) < 0.7
        assert ratio_loss(x, y, mask).value == ratio_loss(y, x, mask).value

    def test_scale_invariance(self, rng):
        x = rng.uniform(0.01, 5, (10, 10))
        y = rng.uniform(0.01, 5, (10, 10))
        base = ratio_loss(x, y).value
        scaled = ratio_loss(3.7 * x, 3.7 * y).value
        assert abs(base - scaled) < 1e-4

    def test_empty_mask_zero(self):
        out = ratio_loss(np.ones((4, 4)), np.ones((4, 4)), np.zeros((4, 4), bool))
        assert out.value == 0.0
        assert (out.gradient == 0).all()

    def test_negative_prediction_rejected(self):
        with pytest.raises(DomainError):
            ratio_loss(np.array([[-0.1]]), np.array([[1.0]]))

    def test_nonnegative_and_zero_iff_equal(self, rng):
        x = rng.uniform(0.5, 5, (8, 8))
        y = x.copy()
        y[0, 0] = x[0, 0] * 2
        assert ratio_loss(x, y).value > 0

    def test_gradient_matches_fd(self, rng):
        for _ in range(10):
            x = rng.uniform(0.2, 4.0, (8, 8))
            y = rng.uniform(0.2, 4.0, (8, 8))
            if np.any(np.abs(np.log(x) - np.log(y)) < 0.01):
                continue
            fn = lambda p: ratio_loss(p, y)
            idx = int(rng.integers(64))
            analytic = fn(x).gradient.ravel()[idx]
            assert np.isclose(analytic, fd_gradient(fn, x, idx), rtol=1e-5, atol=1e-10)

    def test_four_channel_input(self, rng):
        x = rng.uniform(0.1, 9, (6, 6, 4))
        y = rng.uniform(0.1, 9, (6, 6, 4))
        out = ratio_loss(x, y, y > 0)
        assert out.gradient.shape == x.shape
        assert out.value > 0


class TestTotal:
    def test_weighted_sum(self):
        total, terms = total_loss(0.1, 0.2, 0.3, 0.4, LossWeights(6, 3, 1, 0.5))
        assert total == pytest.approx(1.7, abs=1e-12)
        assert terms["kernel"] == pytest.approx(0.6)
        assert terms["scale"] == pytest.approx(0.2)

    def test_zero(self):
        total, _ = total_loss(0.0, 0.0, 0.0, 0.0)
        assert total == 0.0

    def test_single_term(self):
        total, _ = total_loss(1.0, 0.0, 0.0, 0.0)
        assert total == 6.0

    def test_accepts_loss_outputs(self):
        lo = LossOutput(0.5, np.zeros((2, 2)))
        total, _ = total_loss(lo, lo, lo, lo)
        assert total == pytest.approx(0.5 * (6 + 3 + 1 + 0.5))

    def test_non_finite_rejected(self):
        with pytest.raises(DomainError):
            total_loss(float("nan"), 0, 0, 0)

    def test_negative_weight_rejected(self):
        with pytest.raises(DomainError):
            LossWeights(kernel=-1)
