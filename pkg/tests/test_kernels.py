"""Kernel correctness against independent oracles.

The NCC oracle is a literal double loop over the definition; the SSIM
oracle is scikit-image's implementation with matching parameters.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from skimage.metrics import structural_similarity as sk_ssim

from astra import kernels
from astra.kernels import numpy_backend

BACKENDS = [numpy_backend]
try:
    from astra.kernels import _native

    BACKENDS.append(_native)
except ImportError:
    _native = None


def ncc_oracle(image, template, x, y):
    """Brute-force zero-mean NCC at one offset (pure-Python lists)."""
    th, tw = len(template), len(template[0])
    region = [[image[y + j][x + i] for i in range(tw)] for j in range(th)]
    flat_r = [v for row in region for v in row]
    flat_t = [template[j][i] for j in range(th) for i in range(tw)]
    n = len(flat_r)
    mr = sum(flat_r) / n
    mt = sum(flat_t) / n
    num = sum((r - mr) * (t - mt) for r, t in zip(flat_r, flat_t))
    dr = sum((r - mr) ** 2 for r in flat_r)
    dt = sum((t - mt) ** 2 for t in flat_t)
    if dr <= 1e-6 * n or dt <= 1e-6 * n:
        return 0.0
    return num / math.sqrt(dr * dt)


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.__name__.split(".")[-1])
class TestNcc:
    def test_self_match_is_one(self, backend, rng):
        img = rng.uniform(0, 255, (32, 32))
        tpl = img[4:20, 6:22].copy()
        assert backend.ncc_at(img, tpl, 6, 4) == pytest.approx(1.0, abs=1e-9)

    def test_negative_is_minus_one(self, backend, rng):
        img = rng.uniform(0, 255, (24, 24))
        tpl = 255.0 - img[2:18, 3:19]
        assert backend.ncc_at(img, tpl, 3, 2) == pytest.approx(-1.0, abs=1e-9)

    def test_constant_region_scores_zero(self, backend, rng):
        img = np.full((20, 20), 128.0)
        tpl = rng.uniform(0, 255, (8, 8))
        assert backend.ncc_at(img, tpl, 0, 0) == 0.0
        assert backend.ncc_at(rng.uniform(0, 255, (20, 20)), np.full((8, 8), 7.0),
                              0, 0) == 0.0

    def test_matches_bruteforce_oracle(self, backend, rng):
        for _ in range(20):
            img = rng.uniform(0, 255, (32, 32))
            tpl = rng.uniform(0, 255, (8, 8))
            x, y = int(rng.integers(0, 25)), int(rng.integers(0, 25))
            got = backend.ncc_at(img, tpl, x, y)
            want = ncc_oracle(img.tolist(), tpl.tolist(), x, y)
            assert got == pytest.approx(want, abs=1e-9)

    def test_map_matches_oracle_everywhere(self, backend, rng):
        img = rng.uniform(0, 255, (16, 18))
        tpl = rng.uniform(0, 255, (5, 6))
        scores = np.asarray(backend.ncc_map(img, tpl))
        assert scores.shape == (12, 13)
        for y in range(scores.shape[0]):
            for x in range(scores.shape[1]):
                want = ncc_oracle(img.tolist(), tpl.tolist(), x, y)
                assert scores[y, x] == pytest.approx(want, abs=1e-7)

    def test_map_many_matches_map(self, backend, rng):
        img = rng.uniform(0, 255, (40, 50))
        tpls = [rng.uniform(0, 255, (8, 10)) for _ in range(3)]
        many = backend.ncc_map_many(img, tpls)
        for tpl, got in zip(tpls, many):
            np.testing.assert_allclose(np.asarray(got),
                                       np.asarray(backend.ncc_map(img, tpl)),
                                       atol=1e-7)

    def test_template_too_large(self, backend):
        with pytest.raises(ValueError):
            backend.ncc_map(np.zeros((5, 5)), np.zeros((6, 6)))


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.__name__.split(".")[-1])
class TestSsim:
    def sk(self, a, b):
        return sk_ssim(a, b, win_size=11, gaussian_weights=True, sigma=1.5,
                       use_sample_covariance=False, data_range=255)

    def test_identical_is_one(self, backend, rng):
        a = rng.uniform(0, 255, (32, 32))
        assert backend.ssim_mean(a, a) == pytest.approx(1.0, abs=1e-9)

    def test_random_pair_matches_reference(self, backend, rng):
        for _ in range(5):
            a = rng.integers(0, 256, (64, 64)).astype(np.float64)
            b = rng.integers(0, 256, (64, 64)).astype(np.float64)
            assert backend.ssim_mean(a, b) == pytest.approx(self.sk(a, b), abs=1e-6)

    def test_negative_pair_matches_reference(self, backend, rng):
        a = rng.integers(0, 256, (48, 48)).astype(np.float64)
        b = 255.0 - a
        assert backend.ssim_mean(a, b) == pytest.approx(self.sk(a, b), abs=1e-6)

    def test_symmetry(self, backend, rng):
        a = rng.uniform(0, 255, (32, 40))
        b = rng.uniform(0, 255, (32, 40))
        assert backend.ssim_mean(a, b) == pytest.approx(backend.ssim_mean(b, a),
                                                        abs=1e-9)

    def test_too_small_rejected(self, backend):
        with pytest.raises(ValueError):
            backend.ssim_mean(np.zeros((8, 8)), np.zeros((8, 8)))

    def test_shape_mismatch_rejected(self, backend):
        with pytest.raises(ValueError):
            backend.ssim_mean(np.zeros((16, 16)), np.zeros((16, 18)))


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.__name__.split(".")[-1])
class TestFnv:
    # Canonical FNV-1a 64-bit vectors
    @pytest.mark.parametrize("data,expected", [
        (b"", 0xCBF29CE484222325),
        (b"a", 0xAF63DC4C8601EC8C),
        (b"foobar", 0x85944171F73967E8),
    ])
    def test_known_vectors(self, backend, data, expected):
        assert backend.fnv1a64(data) == expected

    def test_sensitivity(self, backend):
        assert backend.fnv1a64(b"abc") != backend.fnv1a64(b"abd")


@pytest.mark.skipif(_native is None, reason="native kernel not built")
class TestBackendAgreement:
    def test_ncc_map(self, rng):
        img = rng.uniform(0, 255, (60, 70))
        tpl = rng.uniform(0, 255, (12, 14))
        np.testing.assert_allclose(np.asarray(_native.ncc_map(img, tpl)),
                                   np.asarray(numpy_backend.ncc_map(img, tpl)),
                                   atol=1e-6)

    def test_ssim(self, rng):
        a = rng.uniform(0, 255, (48, 64))
        b = np.clip(a + rng.normal(0, 20, a.shape), 0, 255)
        assert _native.ssim_mean(a, b) == pytest.approx(numpy_backend.ssim_mean(a, b),
                                                        abs=1e-9)

    def test_fnv(self, rng):
        data = rng.integers(0, 256, 4096).astype(np.uint8).tobytes()
        assert _native.fnv1a64(data) == numpy_backend.fnv1a64(data)

    def test_large_search_delegation_consistent(self, rng):
        # Above the loop-work limit the native path delegates to FFT.
        img = rng.uniform(0, 255, (300, 400))
        tpl = rng.uniform(0, 255, (40, 50))
        np.testing.assert_allclose(np.asarray(_native.ncc_map(img, tpl)),
                                   np.asarray(numpy_backend.ncc_map(img, tpl)),
                                   atol=1e-9)


class TestGray:
    def test_luma_weights(self):
        pixel = np.array([[[100, 200, 50]]], dtype=np.uint8)
        want = 0.299 * 100 + 0.587 * 200 + 0.114 * 50
        assert kernels.gray(pixel)[0, 0] == pytest.approx(want)

    @given(arrays(np.uint8, (4, 5, 3)))
    @settings(max_examples=50, deadline=None)
    def test_range(self, pixels):
        g = kernels.gray(pixels)
        assert g.shape == (4, 5)
        assert (g >= 0).all() and (g <= 255).all()
