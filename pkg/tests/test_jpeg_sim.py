import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jpegid.errors import OutOfRange, UnsupportedFormat, UpscaleUnsupported
from jpegid.jpeg_parse import parse_jpeg
from jpegid.jpeg_sim import PixelImage, decode, encode, resize_area, scale_tables
from jpegid.tables import BASE_CHROMA, BASE_LUMA

from conftest import noise_image, smooth_image


class TestScaleTables:
    def test_qf50_is_base(self):
        t = scale_tables(50)
        assert np.array_equal(t.luma, BASE_LUMA)
        assert np.array_equal(t.chroma, BASE_CHROMA)

    def test_qf100_all_ones(self):
        t = scale_tables(100)
        assert (t.luma == 1).all() and (t.chroma == 1).all()

    def test_qf95_luma_dc(self):
        # scale = 200 - 190 = 10; floor((16*10 + 50) / 100) = 2
        assert scale_tables(95).luma[0, 0] == 2

    @pytest.mark.parametrize("qf, q_dc", [(71, 9), (75, 8), (80, 6), (85, 5), (70, 10), (90, 3)])
    def test_dc_quantizers_used_by_the_experiments(self, qf, q_dc):
        scale = 5000 // qf if qf < 50 else 200 - 2 * qf
        assert (16 * scale + 50) // 100 == q_dc
        assert scale_tables(qf).luma[0, 0] == q_dc

    def test_low_quality_clamps_to_255(self):
        assert scale_tables(1).luma.max() == 255

    @pytest.mark.parametrize("qf", [0, 101, -5, 50.5])
    def test_out_of_range(self, qf):
        with pytest.raises(OutOfRange):
            scale_tables(qf)


class TestEncode:
    def test_constant_mid_gray_has_zero_dc(self):
        img = PixelImage(np.full((24, 40, 3), 128, np.uint8))
        _, plane = encode(img, 75)
        assert (plane.dc == 0).all()

    def test_constant_white_dc_at_qf50(self):
        # S(0,0) = 64 * 127 / 8 = 1016; round(1016 / 16) = round(63.5) = 64
        img = PixelImage(np.full((16, 16), 255, np.uint8))
        _, plane = encode(img, 50)
        assert plane.q_dc == 16
        assert (plane.dc == 64).all()

    def test_constant_black_dc_is_range_minimum(self):
        img = PixelImage(np.zeros((8, 8), np.uint8))
        _, plane = encode(img, 100)
        assert plane.dc.tolist() == [-1024]

    @pytest.mark.parametrize("qf", [50, 75, 95, 100])
    def test_unquantized_dc_range(self, qf):
        # |q_dc*dc| can exceed the raw range by at most q_dc/2 through rounding
        img = noise_image(33, 17, seed=qf)
        _, plane = encode(img, qf, "444")
        dq = plane.dc.astype(int) * plane.q_dc
        assert dq.min() >= -1024 - plane.q_dc / 2 and dq.max() <= 1016 + plane.q_dc / 2

    def test_logged_plane_matches_parser(self):
        data, logged = encode(smooth_image(50, 30), 80, "420")
        assert parse_jpeg(data) == logged

    def test_bad_sampling(self):
        with pytest.raises(ValueError):
            encode(smooth_image(8, 8), 75, "411")


class TestDecode:
    def test_mid_gray_round_trip_exact(self):
        img = PixelImage(np.full((20, 36, 3), 128, np.uint8))
        assert decode(encode(img, 75)[0]) == img

    @pytest.mark.parametrize("sampling", ["444", "420"])
    def test_qf95_error_small_on_smooth_images(self, sampling):
        img = smooth_image(96, 64, seed=3)
        out = decode(encode(img, 95, sampling)[0])
        err = np.abs(out.samples.astype(int) - img.samples.astype(int))
        # Regression baseline measured on this pattern: MAE 0.8 (444), 1.3 (420).
        assert err.mean() < 3
        assert err.max() <= 40

    def test_gray_decode(self):
        img = smooth_image(30, 22, channels=1)
        out = decode(encode(img, 90)[0])
        assert out.channels == 1
        assert np.abs(out.samples.astype(int) - img.samples).mean() < 2

    def test_rejects_progressive(self):
        pil = pytest.importorskip("PIL.Image")
        buf = io.BytesIO()
        pil.fromarray(smooth_image(32, 32).samples).save(buf, "JPEG", progressive=True)
        with pytest.raises(UnsupportedFormat):
            decode(buf.getvalue())


class TestResizeArea:
    def test_two_by_two_mean_rounds_away(self):
        img = PixelImage(np.array([[0, 0], [255, 255]], np.uint8))
        assert resize_area(img, 1, 1).samples.tolist() == [[128]]

    def test_identity(self):
        img = noise_image(13, 9, channels=3)
        assert resize_area(img, 13, 9) == img

    def test_constant(self):
        img = PixelImage(np.full((16, 16), 77, np.uint8))
        out = resize_area(img, 8, 8)
        assert out.samples.shape == (8, 8) and (out.samples == 77).all()

    def test_upscale_rejected(self):
        with pytest.raises(UpscaleUnsupported):
            resize_area(noise_image(8, 8), 9, 8)

    def test_fractional_ratio_against_brute_force(self):
        # Oracle: supersample every pixel by the output size, then box-average.
        img = noise_image(12, 9, seed=7, channels=1)
        out_w, out_h = 9, 6
        src = img.samples.astype(float)
        fine = np.repeat(np.repeat(src, out_h, axis=0), out_w, axis=1)
        sy, sx = img.height_px, img.width_px
        expected = fine.reshape(out_h, sy, out_w, sx).mean(axis=(1, 3))
        expected = np.sign(expected) * np.floor(np.abs(expected) + 0.5)
        assert np.array_equal(resize_area(img, out_w, out_h).samples, expected)

    @given(
        st.integers(1, 24), st.integers(1, 24), st.integers(0, 200), st.data()
    )
    def test_constant_invariance_and_shift(self, w, h, level, data):
        out_w = data.draw(st.integers(1, w))
        out_h = data.draw(st.integers(1, h))
        const = PixelImage(np.full((h, w), level, np.uint8))
        assert (resize_area(const, out_w, out_h).samples == level).all()
        g = np.random.default_rng(w * 31 + h)
        base = g.integers(0, 56, (h, w)).astype(np.uint8)
        a = resize_area(PixelImage(base), out_w, out_h).samples.astype(int)
        b = resize_area(PixelImage(base + 200), out_w, out_h).samples.astype(int)
        # Shifting by an integer shifts exactly, up to ties of the rounding.
        assert np.abs(b - a - 200).max() <= 1


def test_pillow_reads_our_files():
    pil = pytest.importorskip("PIL.Image")
    img = smooth_image(45, 35, seed=2)
    for sampling in ("444", "422", "420"):
        data, _ = encode(img, 85, sampling, restart_interval=2)
        theirs = np.asarray(pil.open(io.BytesIO(data)).convert("RGB")).astype(int)
        ours = decode(data).samples.astype(int)
        # libjpeg's smooth chroma upsampling differs from replication.
        assert np.abs(theirs - ours).mean() < 2
