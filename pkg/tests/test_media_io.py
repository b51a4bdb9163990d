import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from dynacompose import media_io
from dynacompose.errors import FileMissing, IoFailure, MalformedHeader, UnsupportedMaxVal
from dynacompose.frame_model import Frame, Mask


def write_raw(path, header: bytes, payload: bytes):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(header + payload)


class TestNetpbm:
    def test_p6_reads_as_rgb_frame(self, tmp_path, rng):
        data = rng.integers(0, 256, (240, 420, 3), dtype=np.uint8)
        frames = [Frame(data, 0)]
        src = media_io.write_sequence(tmp_path, frames, [Mask.empty(240, 420, 0)])
        f = media_io.read_frame(media_io.open_sequence(tmp_path), 0)
        assert (f.width, f.height, f.channels) == (420, 240, 3)
        assert np.array_equal(f.data, data)
        assert src.indices == range(0, 1)

    def test_header_comments(self, tmp_path):
        p = tmp_path / "a.pgm"
        write_raw(p, b"P5\n# comment\n8 8\n# another\n255\n", bytes(range(64)))
        assert media_io.read_netpbm(p)[7, 7] == 63

    def test_maxval_65535(self, tmp_path):
        p = tmp_path / "a.pgm"
        write_raw(p, b"P5\n8 8\n65535\n", bytes(128))
        with pytest.raises(UnsupportedMaxVal):
            media_io.read_netpbm(p)

    def test_bad_magic_and_truncation(self, tmp_path):
        p = tmp_path / "a.pgm"
        write_raw(p, b"P2\n8 8\n255\n", bytes(64))
        with pytest.raises(MalformedHeader):
            media_io.read_netpbm(p)
        write_raw(p, b"P5\n8 8\n255\n", bytes(10))
        with pytest.raises(MalformedHeader):
            media_io.read_netpbm(p)

    @settings(max_examples=25, deadline=None)
    @given(hnp.arrays(np.uint8, st.tuples(st.integers(8, 20), st.integers(8, 20), st.sampled_from([1, 3]))))
    def test_round_trip(self, tmp_path_factory, data):
        data = data[..., 0] if data.shape[2] == 1 else data
        p = tmp_path_factory.mktemp("rt") / "f.pnm"
        media_io.write_frame(Frame(data), p)
        assert np.array_equal(media_io.read_netpbm(p), data)

    def test_unwritable_path(self, tmp_path):
        with pytest.raises(IoFailure):
            media_io.write_frame(Frame(np.zeros((8, 8), np.uint8)), tmp_path / "no" / "such" / "f.pgm")


class TestMasks:
    def _source(self, tmp_path, gray):
        write_raw(tmp_path / "frames" / "00000.ppm", b"P6\n10 10\n255\n", bytes(300))
        write_raw(tmp_path / "masks" / "00000.pgm", b"P5\n10 10\n255\n", gray.tobytes())
        return media_io.open_sequence(tmp_path)

    def test_all_zero(self, tmp_path):
        src = self._source(tmp_path, np.zeros((10, 10), np.uint8))
        assert media_io.read_mask(src, 0).mask_size == 0

    def test_all_255(self, tmp_path):
        src = self._source(tmp_path, np.full((10, 10), 255, np.uint8))
        assert media_io.read_mask(src, 0).mask_size == 100

    def test_threshold(self, tmp_path):
        g = np.zeros((10, 10), np.uint8)
        g[0, 0], g[0, 1] = 127, 128
        m = media_io.read_mask(self._source(tmp_path, g), 0)
        assert (m.data[0, 0], m.data[0, 1]) == (False, True)


class TestSequence:
    def test_index_past_end(self, tmp_path, static_sequence):
        frames, masks = static_sequence
        media_io.write_sequence(tmp_path, frames[:3], masks[:3])
        src = media_io.open_sequence(tmp_path)
        with pytest.raises(FileMissing):
            media_io.read_frame(src, 3)

    def test_missing_masks_dir(self, tmp_path, static_sequence):
        frames, _ = static_sequence
        media_io.write_sequence(tmp_path, frames[:3])
        with pytest.raises(FileMissing):
            media_io.open_sequence(tmp_path)

    def test_gap(self, tmp_path, static_sequence):
        frames, masks = static_sequence
        media_io.write_sequence(tmp_path, frames[:4], masks[:4])
        os.remove(tmp_path / "frames" / "00002.ppm")
        os.remove(tmp_path / "masks" / "00002.pgm")
        with pytest.raises(FileMissing):
            media_io.open_sequence(tmp_path)

    def test_load_round_trip(self, tmp_path, static_sequence):
        frames, masks = static_sequence
        media_io.write_sequence(tmp_path, frames[:5], masks[:5])
        f2, m2 = media_io.load_sequence(media_io.open_sequence(tmp_path))
        assert f2 == frames[:5] and m2 == masks[:5]


class TestResize:
    def test_identity(self, rng):
        f = Frame(rng.integers(0, 256, (16, 24, 3), dtype=np.uint8))
        assert media_io.resize_bilinear(f, 24, 16) == f

    @given(st.integers(0, 255), st.integers(8, 40), st.integers(8, 40))
    def test_constant_stays_constant(self, value, w, h):
        f = Frame(np.full((12, 10), value, np.uint8))
        assert np.all(media_io.resize_bilinear(f, w, h).data == value)

    def test_checkerboard_center(self):
        # the 3x3 center samples the 2x2 source midpoint: mean of {0,255,255,0} = 127.5, rounded half up
        board = np.array([[0, 255], [255, 0]], np.uint8)
        out = media_io.resize_array(board, 3, 3)
        assert out[1, 1] == 128
        assert out[0, 0] == 0 and out[2, 2] == 0

    def test_nearest_mask_stays_binary(self, box_mask):
        m = media_io.resize_nearest(box_mask(16, 16, 4, 12, 4, 12), 32, 32)
        assert m.mask_size == 256
