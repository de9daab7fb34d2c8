import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jpegid.dc_feature import FeatureParams, FeatureVector, extract
from jpegid.errors import ShapeMismatch, UpscaleUnsupported
from jpegid.jpeg_parse import parse_jpeg
from jpegid.jpeg_sim import PixelImage, encode, resize_area
from jpegid.matcher import match
from jpegid.resize_map import axis_counts, axis_weights, block_weights, estimate


def brute_counts(src, dst, q):
    """Pixel enumeration with rational window edges: x <= x_I < x + dx."""
    dx = Fraction(8 * src, dst)
    lo, hi = q * dx, (q + 1) * dx
    counts = {}
    for xi in range(src):
        if lo <= xi < hi:
            counts[xi // 8] = counts.get(xi // 8, 0) + 1
    return counts


def feature(w, h, values):
    return FeatureVector(FeatureParams(), w, h, np.asarray(values))


sizes = st.integers(1, 120)


class TestReferenceWeights:
    def test_half_size_quarter_weights(self):
        w = block_weights(32, 32, 16, 16, 0, 0)
        assert w == {(0, 0): Fraction(1, 4), (1, 0): Fraction(1, 4),
                     (0, 1): Fraction(1, 4), (1, 1): Fraction(1, 4)}

    def test_five_quarters_weights(self):
        w = block_weights(20, 20, 16, 16, 0, 0)
        assert w == {(0, 0): Fraction(64, 100), (1, 0): Fraction(16, 100),
                     (0, 1): Fraction(16, 100), (1, 1): Fraction(4, 100)}

    def test_five_quarters_second_block(self):
        # window [10, 20): 6 pixels of block 1, 4 of block 2
        assert axis_counts(20, 16)[1].tolist() == [0, 6, 4]


class TestCounts:
    @given(sizes, st.data())
    def test_against_enumeration(self, src, data):
        dst = data.draw(st.integers(1, src))
        counts = axis_counts(src, dst)
        assert counts.shape == (math.ceil(dst / 8), math.ceil(src / 8))
        for q in range(counts.shape[0]):
            expected = brute_counts(src, dst, q)
            got = {o: int(c) for o, c in enumerate(counts[q]) if c}
            assert got == expected

    @given(sizes, st.data())
    def test_full_windows_cover_dx_pixels(self, src, data):
        dst = data.draw(st.integers(1, src))
        counts = axis_counts(src, dst)
        for q in range(counts.shape[0]):
            if 8 * (q + 1) <= dst:
                # integer points in [q*dx, (q+1)*dx)
                lo, hi = -((-q * 8 * src) // dst), -((-(q + 1) * 8 * src) // dst)
                assert counts[q].sum() == hi - lo

    def test_upscale_rejected(self):
        with pytest.raises(UpscaleUnsupported):
            axis_counts(16, 17)


class TestEstimate:
    def test_identity(self):
        f = feature(24, 16, [3, -1, 0, 7, 2, -5])
        d = estimate(f, 24, 16).d
        assert d.dtype == np.float64
        assert np.array_equal(d, f.v)

    def test_half_size_average(self):
        f = feature(16, 16, [4, 0, -2, 2])
        assert estimate(f, 8, 8).d.tolist() == [1.0]

    def test_raster_layout(self):
        # 32x16 -> 16x8: each output block is the mean of a 2x2 source group
        f = feature(32, 16, [1, 2, 3, 4, 5, 6, 7, 8])
        assert estimate(f, 16, 8).d.tolist() == [3.5, 5.5]

    def test_errors(self):
        f = feature(16, 16, [0, 0, 0, 0])
        with pytest.raises(UpscaleUnsupported):
            estimate(f, 17, 16)
        f.v = np.zeros(3, np.int32)
        with pytest.raises(ShapeMismatch):
            estimate(f, 8, 8)

    @given(sizes, sizes, st.integers(-30, 30), st.data())
    def test_constant_invariance(self, w, h, c, data):
        qw, qh = data.draw(st.integers(1, w)), data.draw(st.integers(1, h))
        n = math.ceil(w / 8) * math.ceil(h / 8)
        d = estimate(feature(w, h, np.full(n, c)), qw, qh).d
        assert np.allclose(d, c, rtol=0, atol=1e-9)

    @given(sizes, sizes, st.data())
    def test_weight_normalization(self, w, h, data):
        qw, qh = data.draw(st.integers(1, w)), data.draw(st.integers(1, h))
        qx = data.draw(st.integers(0, math.ceil(qw / 8) - 1))
        qy = data.draw(st.integers(0, math.ceil(qh / 8) - 1))
        weights = block_weights(w, h, qw, qh, qx, qy)
        assert sum(weights.values()) == 1
        assert all(v > 0 for v in weights.values())
        assert np.allclose(axis_weights(w, qw).sum(axis=1), 1.0)

    @given(sizes, sizes, st.integers(-5, 5), st.integers(-5, 5), st.data())
    def test_linearity(self, w, h, a, b, data):
        qw, qh = data.draw(st.integers(1, w)), data.draw(st.integers(1, h))
        n = math.ceil(w / 8) * math.ceil(h / 8)
        g = np.random.default_rng(w * 1000 + h)
        v1, v2 = g.integers(-20, 21, n), g.integers(-20, 21, n)
        d1 = estimate(feature(w, h, v1), qw, qh).d
        d2 = estimate(feature(w, h, v2), qw, qh).d
        d12 = estimate(feature(w, h, a * v1 + b * v2), qw, qh).d
        assert np.allclose(d12, a * d1 + b * d2, rtol=0, atol=1e-9)

    @given(sizes, sizes, st.data())
    def test_bounds(self, w, h, data):
        qw, qh = data.draw(st.integers(1, w)), data.draw(st.integers(1, h))
        n = math.ceil(w / 8) * math.ceil(h / 8)
        v = np.random.default_rng(n + qw).integers(-50, 51, n)
        d = estimate(feature(w, h, v), qw, qh).d
        assert (d >= v.min() - 1e-9).all() and (d <= v.max() + 1e-9).all()


@pytest.mark.parametrize("src, dst", [((64, 48), (32, 24)), ((96, 64), (72, 48)), ((80, 80), (64, 64))])
def test_agrees_with_pixel_domain_resize(src, dst):
    # Constant-per-block image: enrolled feature vs. feature of the resized, re-encoded copy.
    bx, by = src[0] // 8, src[1] // 8
    levels = np.random.default_rng(sum(src)).integers(40, 216, (by, bx))
    gray = np.kron(levels, np.ones((8, 8), int)).astype(np.uint8)
    img = PixelImage(np.repeat(gray[..., None], 3, axis=2))
    enrolled = extract(parse_jpeg(encode(img, 95)[0]))
    query_img = resize_area(img, *dst)
    query = extract(parse_jpeg(encode(query_img, 80)[0]))
    est = estimate(enrolled, *dst)
    assert match(est, query).same
    close = (np.abs(est.d) <= 4) & (np.abs(query.v) <= 4) & (est.d != 0) & (query.v != 0)
    assert np.array_equal(np.sign(est.d[close]), np.sign(query.v[close]))
