"""Netpbm codec: round-trips, header handling, rejection of unsupported files."""

import numpy as np
import pytest

from wavemim.errors import FormatError
from wavemim.pipeline.netpbm import quantize, read_image, write_image, write_u8


class TestRoundTrip:
    def test_ppm_u8_exact(self, tmp_path):
        arr = np.random.default_rng(0).integers(0, 256, size=(3, 5, 7), dtype=np.uint8)
        path = tmp_path / "x.ppm"
        write_u8(path, arr)
        back = read_image(path)
        np.testing.assert_array_equal(quantize(back), arr)

    def test_pgm_u8_exact(self, tmp_path):
        arr = np.random.default_rng(1).integers(0, 256, size=(1, 4, 6), dtype=np.uint8)
        path = tmp_path / "x.pgm"
        write_u8(path, arr)
        back = read_image(path)
        assert back.shape == (1, 4, 6)
        np.testing.assert_array_equal(quantize(back), arr)

    def test_float_round_trip_within_one_level(self, tmp_path):
        img = np.random.default_rng(2).uniform(0.0, 1.0, size=(3, 8, 8))
        path = tmp_path / "x.ppm"
        write_image(path, img)
        back = read_image(path)
        assert np.max(np.abs(back - img)) <= 0.5 / 255.0 + 1e-12

    def test_values_mapped_to_unit_interval(self, tmp_path):
        arr = np.zeros((3, 2, 2), dtype=np.uint8)
        arr[0, 0, 0] = 255
        path = tmp_path / "x.ppm"
        write_u8(path, arr)
        back = read_image(path)
        assert back[0, 0, 0] == 1.0
        assert back[1, 0, 0] == 0.0


class TestHeaders:
    def test_comments_and_whitespace(self, tmp_path):
        raster = bytes(range(12))
        data = b"P6\n# a comment\n 2 # inline\n2\n255\n" + raster
        path = tmp_path / "c.ppm"
        path.write_bytes(data)
        img = read_image(path)
        assert img.shape == (3, 2, 2)
        np.testing.assert_array_equal(
            quantize(img).transpose(1, 2, 0).ravel(), np.frombuffer(raster, np.uint8)
        )

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "b.pbm"
        path.write_bytes(b"P4\n2 2\n\x00")
        with pytest.raises(FormatError):
            read_image(path)

    def test_wrong_maxval(self, tmp_path):
        path = tmp_path / "m.pgm"
        path.write_bytes(b"P5\n2 2\n65535\n" + bytes(8))
        with pytest.raises(FormatError):
            read_image(path)

    def test_truncated_raster(self, tmp_path):
        path = tmp_path / "t.ppm"
        path.write_bytes(b"P6\n2 2\n255\n" + bytes(5))
        with pytest.raises(FormatError):
            read_image(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "h.ppm"
        path.write_bytes(b"P6\n2")
        with pytest.raises(FormatError):
            read_image(path)

    def test_write_rejects_bad_channels(self, tmp_path):
        with pytest.raises(FormatError):
            write_image(tmp_path / "x.ppm", np.zeros((2, 4, 4)))
