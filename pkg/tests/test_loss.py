"""Loss semantics: hand values, loop reference, mask respect, scale separation."""

import numpy as np
import pytest

from wavemim.errors import ConfigError, DegenerateLossError, DimensionError
from wavemim.loss import LossReport, make_report, masked_distance, total_loss
from wavemim.masking import PatchMask, ScaleMask, gen_block_mask, rescale_mask


def _scale_mask(flags):
    flags = np.asarray(flags, dtype=bool)
    pm = PatchMask(grid=flags.shape[0], ratio=0.5, block=1, seed=0, flags=flags)
    return ScaleMask(side=flags.shape[0], flags=flags, source=pm, rule="identity")


class TestMaskedDistance:
    def test_equal_on_masked_is_zero(self):
        rng = np.random.default_rng(0)
        target = rng.normal(size=(3, 4, 4))
        flags = rng.uniform(size=(4, 4)) < 0.5
        flags[0, 0] = True
        pred = target.copy()
        pred[:, ~flags] += 99.0  # arbitrary at visible cells
        mean, count = masked_distance(pred, target, _scale_mask(flags))
        assert mean == 0.0
        assert count == int(flags.sum())

    def test_single_cell_hand_values(self):
        sm = _scale_mask([[True]])
        pred = np.array([[[3.0]]])
        target = np.array([[[1.0]]])
        assert masked_distance(pred, target, sm, "l2") == (4.0, 1)
        assert masked_distance(pred, target, sm, "l1") == (2.0, 1)

    def test_matches_loop_reference(self):
        rng = np.random.default_rng(1)
        for case in range(20):
            pm = gen_block_mask(8, 0.6, 2, case)
            sm = rescale_mask(pm, 8)
            pred = rng.normal(size=(3, 8, 8))
            target = rng.normal(size=(3, 8, 8))
            for metric in ("l1", "l2"):
                mean, count = masked_distance(pred, target, sm, metric)
                acc, n = 0.0, 0
                for ch in range(3):
                    for i in range(8):
                        for j in range(8):
                            if sm.flags[i, j]:
                                d = pred[ch, i, j] - target[ch, i, j]
                                acc += abs(d) if metric == "l1" else d * d
                                n += 1
                assert count * 3 == n
                assert abs(mean - acc / n) < 1e-12

    def test_zero_masked_cells_rejected(self):
        sm = _scale_mask(np.zeros((2, 2), dtype=bool))
        with pytest.raises(DegenerateLossError):
            masked_distance(np.zeros((1, 2, 2)), np.zeros((1, 2, 2)), sm)

    def test_shape_mismatch_rejected(self):
        sm = _scale_mask([[True, False], [False, False]])
        with pytest.raises(DimensionError):
            masked_distance(np.zeros((1, 2, 2)), np.zeros((1, 2, 3)), sm)
        with pytest.raises(DimensionError):
            masked_distance(np.zeros((1, 4, 4)), np.zeros((1, 4, 4)), sm)

    def test_unknown_metric_rejected(self):
        sm = _scale_mask([[True]])
        with pytest.raises(ConfigError):
            masked_distance(np.ones((1, 1, 1)), np.ones((1, 1, 1)), sm, "linf")

    def test_nonnegative(self):
        rng = np.random.default_rng(2)
        sm = _scale_mask(rng.uniform(size=(4, 4)) < 0.7)
        for metric in ("l1", "l2"):
            mean, _ = masked_distance(
                rng.normal(size=(2, 4, 4)), rng.normal(size=(2, 4, 4)), sm, metric
            )
            assert mean >= 0.0


class TestTotal:
    def test_reference_weights(self):
        per_level = [(1.0, 10)] * 4
        assert total_loss(per_level, [0.8, 0.9, 1.1, 1.2]) == pytest.approx(4.0)

    def test_uniform_weights(self):
        per_level = [(0.5, 1), (0.25, 2), (2.0, 3), (1.0, 4)]
        assert total_loss(per_level, [1, 1, 1, 1]) == pytest.approx(3.75)

    def test_single_level(self):
        assert total_loss([(0.37, 5)], [1.0]) == 0.37

    def test_zero_weights(self):
        assert total_loss([(5.0, 1), (7.0, 2)], [0.0, 0.0]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            total_loss([(1.0, 1)], [1.0, 2.0])


class TestReport:
    def test_total_recomputable(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            means = rng.uniform(0, 3, size=4)
            weights = rng.uniform(0.1, 2, size=4)
            report = make_report(
                [(m, 7) for m in means], list(weights)
            )
            assert abs(report.total - report.recomputed_total()) <= 1e-12 * abs(report.total)

    def test_respect_the_mask_bit_identical(self):
        rng = np.random.default_rng(4)
        for case in range(100):
            pm = gen_block_mask(8, 0.75, 2, case)
            sm = rescale_mask(pm, 8)
            pred = rng.normal(size=(3, 8, 8))
            target = rng.normal(size=(3, 8, 8))
            metric = "l2" if case % 2 else "l1"
            before = make_report([masked_distance(pred, target, sm, metric)], [1.3])
            noisy = pred.copy()
            noisy[:, ~sm.flags] = rng.normal(size=(3, int((~sm.flags).sum()))) * 100.0
            after = make_report([masked_distance(noisy, target, sm, metric)], [1.3])
            assert before == after  # dataclass equality = bitwise float equality

    def test_scale_separation(self):
        rng = np.random.default_rng(5)
        pm = gen_block_mask(8, 0.5, 2, 11)
        sm = rescale_mask(pm, 8)
        preds = [rng.normal(size=(3, 8, 8)) for _ in range(3)]
        targets = [rng.normal(size=(3, 8, 8)) for _ in range(3)]
        weights = [0.8, 1.0, 1.2]
        base = [masked_distance(p, t, sm) for p, t in zip(preds, targets)]
        report = make_report(base, weights)
        # perturb level 1 only
        preds[1] = preds[1] + 0.1
        new = [masked_distance(p, t, sm) for p, t in zip(preds, targets)]
        new_report = make_report(new, weights)
        assert new_report.level_means[0] == report.level_means[0]
        assert new_report.level_means[2] == report.level_means[2]
        delta = new_report.level_means[1] - report.level_means[1]
        assert abs(
            (new_report.total - report.total) - weights[1] * delta
        ) < 1e-12

    def test_frozen(self):
        report = LossReport((1.0,), (1,), (1.0,), 1.0)
        with pytest.raises(AttributeError):
            report.total = 2.0
