"""Vectorized (NumPy/SciPy) implementations of the hot kernels.

Kernels operate on 2D float64 grayscale arrays in pixel scale [0, 255].
The compiled backend in ``_native.pyx`` mirrors these contracts exactly;
`astra.kernels` picks one at import time.
"""

from __future__ import annotations

import numpy as np
from numpy.fft import irfft2, rfft2
from scipy.fft import next_fast_len
from scipy.ndimage import correlate1d
from scipy.signal import fftconvolve

# Mean-squared-deviation below this counts as a flat (zero-variance) window.
VAR_EPS = 1e-6

SSIM_WIN = 11
SSIM_SIGMA = 1.5
SSIM_C1 = (0.01 * 255.0) ** 2
SSIM_C2 = (0.03 * 255.0) ** 2

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def gray(pixels: np.ndarray) -> np.ndarray:
    """Luma grayscale (0.299 R + 0.587 G + 0.114 B) as float64."""
    if pixels.ndim == 2:
        return pixels.astype(np.float64)
    return (
        0.299 * pixels[..., 0].astype(np.float64)
        + 0.587 * pixels[..., 1].astype(np.float64)
        + 0.114 * pixels[..., 2].astype(np.float64)
    )


def ncc_at(image: np.ndarray, template: np.ndarray, x: int, y: int) -> float:
    """Zero-mean NCC of ``template`` against ``image`` at offset (x, y)."""
    th, tw = template.shape
    region = image[y : y + th, x : x + tw]
    if region.shape != template.shape:
        raise ValueError("template does not fit inside image at offset")
    r0 = region - region.mean()
    t0 = template - template.mean()
    rssd = float((r0 * r0).sum())
    tssd = float((t0 * t0).sum())
    n = template.size
    if rssd <= VAR_EPS * n or tssd <= VAR_EPS * n:
        return 0.0
    score = float((r0 * t0).sum()) / np.sqrt(rssd * tssd)
    return float(min(1.0, max(-1.0, score)))


def ncc_map(image: np.ndarray, template: np.ndarray) -> np.ndarray:
    """Zero-mean NCC at every valid offset (FFT-based sliding window).

    Returns an array of shape (H-th+1, W-tw+1); flat windows score 0.
    """
    ih, iw = image.shape
    th, tw = template.shape
    if th > ih or tw > iw:
        raise ValueError("template larger than image")
    n = template.size
    t0 = template - template.mean()
    tssd = float((t0 * t0).sum())
    out_shape = (ih - th + 1, iw - tw + 1)
    if tssd <= VAR_EPS * n:
        return np.zeros(out_shape)
    # Centering the image keeps the box-sum magnitudes small, which keeps
    # the S2 - S1^2/n cancellation benign.
    i0 = image - image.mean()
    num = fftconvolve(i0, t0[::-1, ::-1], mode="valid")
    ones = np.ones_like(t0)
    s1 = fftconvolve(i0, ones, mode="valid")
    s2 = fftconvolve(i0 * i0, ones, mode="valid")
    ssd = np.maximum(s2 - s1 * s1 / n, 0.0)
    den = np.sqrt(ssd * tssd)
    out = np.where(ssd > VAR_EPS * n, num / np.maximum(den, 1e-30), 0.0)
    return np.clip(out, -1.0, 1.0)


def ncc_map_many(image: np.ndarray, templates: list[np.ndarray]) -> list[np.ndarray]:
    """NCC maps for several templates over one image.

    The image-side FFTs and box sums are shared across templates of the
    same shape, which is where a multi-template sweep spends its time.
    """
    i0 = image - image.mean()
    ih, iw = image.shape
    shape_cache: dict[tuple[int, int], tuple] = {}
    results = []
    for template in templates:
        th, tw = template.shape
        if th > ih or tw > iw:
            raise ValueError("template larger than image")
        n = th * tw
        t0 = template - template.mean()
        tssd = float((t0 * t0).sum())
        out_shape = (ih - th + 1, iw - tw + 1)
        if tssd <= VAR_EPS * n:
            results.append(np.zeros(out_shape))
            continue
        key = (th, tw)
        if key not in shape_cache:
            fshape = (next_fast_len(ih + th - 1), next_fast_len(iw + tw - 1))
            fi = rfft2(i0, fshape)
            fones = rfft2(np.ones((th, tw)), fshape)
            valid = (slice(th - 1, ih), slice(tw - 1, iw))
            s1 = irfft2(fi * fones, fshape)[valid]
            s2 = irfft2(rfft2(i0 * i0, fshape) * fones, fshape)[valid]
            ssd = np.maximum(s2 - s1 * s1 / n, 0.0)
            shape_cache[key] = (fshape, fi, valid, ssd)
        fshape, fi, valid, ssd = shape_cache[key]
        num = irfft2(fi * rfft2(t0[::-1, ::-1], fshape), fshape)[valid]
        den = np.sqrt(ssd * tssd)
        out = np.where(ssd > VAR_EPS * n, num / np.maximum(den, 1e-30), 0.0)
        results.append(np.clip(out, -1.0, 1.0))
    return results


def gaussian_window(size: int = SSIM_WIN, sigma: float = SSIM_SIGMA) -> np.ndarray:
    radius = size // 2
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    w = np.exp(-0.5 * (x / sigma) ** 2)
    return w / w.sum()


def _gfilter(a: np.ndarray, w: np.ndarray) -> np.ndarray:
    return correlate1d(correlate1d(a, w, axis=0, mode="nearest"), w, axis=1, mode="nearest")


def ssim_mean(a: np.ndarray, b: np.ndarray) -> float:
    """Mean local SSIM over an 11x11 Gaussian window (sigma 1.5, pixel scale).

    Border pixels whose window leaves the frame are excluded from the mean.
    """
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    if min(a.shape) < SSIM_WIN:
        raise ValueError(f"frames smaller than the {SSIM_WIN}x{SSIM_WIN} window")
    w = gaussian_window()
    ux = _gfilter(a, w)
    uy = _gfilter(b, w)
    uxx = _gfilter(a * a, w)
    uyy = _gfilter(b * b, w)
    uxy = _gfilter(a * b, w)
    vx = uxx - ux * ux
    vy = uyy - uy * uy
    vxy = uxy - ux * uy
    s = ((2 * ux * uy + SSIM_C1) * (2 * vxy + SSIM_C2)) / (
        (ux * ux + uy * uy + SSIM_C1) * (vx + vy + SSIM_C2)
    )
    pad = SSIM_WIN // 2
    return float(s[pad:-pad, pad:-pad].mean())


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a over raw bytes."""
    h = FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h
