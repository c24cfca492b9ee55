"""Target assembly: level ordering, channel law, normalization statistics."""

import numpy as np
import pytest

from wavemim.dwt import dwt2_multi
from wavemim.errors import ConfigError
from wavemim.targets import (
    LevelSelection,
    build_targets,
    layer_for_level,
    normalize_targets,
)

PAPER_SEL = LevelSelection(
    levels=(2, 3, 4, 5), tap_layers=(3, 6, 9, 12), weights=(0.8, 0.9, 1.1, 1.2)
)


def _image(shape, seed):
    return np.random.default_rng(seed).uniform(0.0, 1.0, size=shape)


class TestSelection:
    def test_length_mismatch(self):
        with pytest.raises(ConfigError):
            LevelSelection(levels=(1, 2), tap_layers=(1,), weights=(1.0, 1.0))

    def test_non_ascending_levels(self):
        with pytest.raises(ConfigError):
            LevelSelection(levels=(2, 2), tap_layers=(1, 2), weights=(1.0, 1.0))

    def test_non_increasing_taps(self):
        with pytest.raises(ConfigError):
            LevelSelection(levels=(1, 2), tap_layers=(4, 4), weights=(1.0, 1.0))

    def test_nonpositive_weight(self):
        with pytest.raises(ConfigError):
            LevelSelection(levels=(1,), tap_layers=(1,), weights=(0.0,))

    def test_layer_for_level(self):
        assert layer_for_level(PAPER_SEL, 1) == 3
        assert layer_for_level(PAPER_SEL, 4) == 12
        swin = LevelSelection(
            levels=(2, 3, 4, 5), tap_layers=(2, 4, 22, 24), weights=(1, 1, 1, 1)
        )
        assert layer_for_level(swin, 4) == 24
        single = LevelSelection(levels=(1,), tap_layers=(5,), weights=(1.0,))
        assert layer_for_level(single, 1) == 5
        with pytest.raises(IndexError):
            layer_for_level(PAPER_SEL, 0)
        with pytest.raises(IndexError):
            layer_for_level(PAPER_SEL, 5)


class TestBuild:
    def test_reference_structure_224(self):
        pyr = dwt2_multi(_image((3, 224, 224), 0), 5)
        ts = build_targets(pyr, PAPER_SEL)
        assert [e.values.shape for e in ts.entries] == [
            (9, 56, 56),
            (9, 28, 28),
            (9, 14, 14),
            (12, 7, 7),
        ]
        assert ts.sides() == (56, 28, 14, 7)
        assert ts.weights() == (0.8, 0.9, 1.1, 1.2)

    def test_ordering_and_channel_law(self):
        pyr = dwt2_multi(_image((2, 64, 64), 1), 4)
        sel = LevelSelection(levels=(1, 3, 4), tap_layers=(2, 5, 7), weights=(1, 1, 1))
        ts = build_targets(pyr, sel)
        sides = ts.sides()
        assert all(a > b for a, b in zip(sides, sides[1:]))
        layers = [e.layer for e in ts.entries]
        assert all(a < b for a, b in zip(layers, layers[1:]))
        assert [e.channels for e in ts.entries] == [6, 6, 8]  # 3C, 3C, 4C

    def test_values_come_from_pyramid(self):
        pyr = dwt2_multi(_image((1, 16, 16), 2), 2)
        sel = LevelSelection(levels=(1, 2), tap_layers=(1, 2), weights=(1, 1))
        ts = build_targets(pyr, sel)
        h, v, d = pyr.details[0]
        np.testing.assert_array_equal(ts.entries[0].values, np.concatenate([h, v, d]))
        h2, v2, d2 = pyr.details[1]
        np.testing.assert_array_equal(
            ts.entries[1].values, np.concatenate([h2, v2, d2, pyr.approx])
        )

    def test_single_level_degenerate(self):
        pyr = dwt2_multi(_image((3, 8, 8), 3), 1)
        sel = LevelSelection(levels=(1,), tap_layers=(4,), weights=(1.0,))
        ts = build_targets(pyr, sel)
        assert ts.count == 1
        assert ts.entries[0].values.shape == (12, 4, 4)

    def test_constant_image_details_zero(self):
        pyr = dwt2_multi(np.full((3, 32, 32), 0.5), 3)
        sel = LevelSelection(levels=(1, 2, 3), tap_layers=(1, 2, 3), weights=(1, 1, 1))
        ts = build_targets(pyr, sel)
        for entry in ts.entries[:-1]:
            assert np.all(entry.values == 0.0)
        last = ts.entries[-1].values
        assert np.all(last[:9] == 0.0)  # details
        assert np.all(last[9:] == last[9, 0, 0])  # constant approximation

    def test_deepest_level_must_match_depth(self):
        pyr = dwt2_multi(_image((1, 32, 32), 4), 4)
        sel = LevelSelection(levels=(1, 2, 3), tap_layers=(1, 2, 3), weights=(1, 1, 1))
        with pytest.raises(ConfigError):
            build_targets(pyr, sel)

    def test_level_beyond_depth(self):
        pyr = dwt2_multi(_image((1, 32, 32), 5), 2)
        sel = LevelSelection(levels=(1, 3), tap_layers=(1, 2), weights=(1, 1))
        with pytest.raises(ConfigError):
            build_targets(pyr, sel)


class TestNormalize:
    def test_two_value_channel(self):
        # {1, 3}: mean 2, var 1 -> +/- 1/sqrt(1 + 1e-6)
        ll = dwt2_multi(_image((1, 4, 4), 6), 1)
        sel = LevelSelection(levels=(1,), tap_layers=(1,), weights=(1.0,))
        ts = build_targets(ll, sel)
        ts.entries[0].values = np.array([[[1.0, 3.0]]])  # 1 channel, 1x2 grid
        normed = normalize_targets(ts, epsilon=1e-6)
        np.testing.assert_allclose(
            normed.entries[0].values, [[[-0.9999995, 0.9999995]]], atol=1e-9
        )
        assert normed.entries[0].mean[0] == 2.0
        assert normed.entries[0].var[0] == 1.0

    def test_zero_channel_maps_to_zero(self):
        pyr = dwt2_multi(np.full((3, 16, 16), 0.25), 2)
        sel = LevelSelection(levels=(1, 2), tap_layers=(1, 2), weights=(1, 1))
        normed = normalize_targets(build_targets(pyr, sel))
        for entry in normed.entries:
            assert np.all(np.isfinite(entry.values))
        assert np.all(normed.entries[0].values == 0.0)

    def test_statistics_after_normalization(self):
        pyr = dwt2_multi(_image((3, 224, 224), 7), 2)
        sel = LevelSelection(levels=(1, 2), tap_layers=(1, 2), weights=(1, 1))
        normed = normalize_targets(build_targets(pyr, sel))
        entry = normed.entries[0]  # 112x112 planes
        mean = entry.values.mean(axis=(1, 2))
        var = entry.values.var(axis=(1, 2))
        assert np.max(np.abs(mean)) < 1e-7
        assert np.max(np.abs(var - 1.0)) < 1e-3

    def test_near_idempotent(self):
        pyr = dwt2_multi(_image((3, 64, 64), 8), 3)
        sel = LevelSelection(levels=(1, 2, 3), tap_layers=(1, 2, 3), weights=(1, 1, 1))
        once = normalize_targets(build_targets(pyr, sel))
        twice = normalize_targets(once)
        for a, b in zip(once.entries, twice.entries):
            denom = np.maximum(np.abs(a.values), 1e-12)
            assert np.max(np.abs(a.values - b.values) / denom) < 1e-3

    def test_bad_epsilon(self):
        pyr = dwt2_multi(_image((1, 8, 8), 9), 1)
        sel = LevelSelection(levels=(1,), tap_layers=(1,), weights=(1.0,))
        ts = build_targets(pyr, sel)
        with pytest.raises(ConfigError):
            normalize_targets(ts, epsilon=0.0)
