"""Pixel-level primitives: decode, luma, Laplacian variance, crop, resize.

Images are numpy arrays, row-major ``(height, width)`` for grayscale or
``(height, width, 3)`` for RGB, float64 on the 8-bit 0..255 scale.
Quantization to uint8 happens only at file I/O, so metric values do not
depend on intermediate round-trips.
"""

from __future__ import annotations

import os
from functools import lru_cache

import numpy as np
from PIL import Image
from scipy import ndimage

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])  # BT.601

LAPLACIAN_KERNEL = np.array(
    [[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]]
)


def load_image(path: str | os.PathLike) -> np.ndarray:
    """Decode a JPEG/PNG file to a float64 array (gray or RGB)."""
    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB" if im.mode in ("P", "RGBA", "CMYK", "YCbCr") else "L")
        arr = np.asarray(im, dtype=np.float64)
    return arr


def save_image(img: np.ndarray, path: str | os.PathLike, jpeg_quality: int = 95) -> None:
    """Quantize to uint8 and write PNG or JPEG depending on the suffix.

    PNG uses a fixed moderate compression level: throughput matters more
    than a few percent of size, and a pinned level keeps output bytes
    reproducible.
    """
    arr = np.clip(np.round(img), 0, 255).astype(np.uint8)
    pil = Image.fromarray(arr)
    if str(path).lower().endswith((".jpg", ".jpeg")):
        pil.save(path, quality=jpeg_quality)
    else:
        pil.save(path, compress_level=3)


def image_size(path: str | os.PathLike) -> tuple[int, int]:
    """Read (width, height) from the file header without decoding pixels."""
    with Image.open(path) as im:
        return im.size


def to_luma(img: np.ndarray) -> np.ndarray:
    """BT.601 luma; grayscale input passes through unchanged."""
    if img.ndim == 2:
        return img
    if img.ndim == 3 and img.shape[2] == 3:
        return img @ LUMA_WEIGHTS
    raise ValueError(f"expected 1 or 3 channels, got shape {img.shape}")


def laplacian_variance(gray: np.ndarray) -> float:
    """Population variance of the 4-neighbor Laplacian response.

    Borders are handled by edge replication.  The conventional blur gate
    compares this value against a threshold (default 100 on the 8-bit
    scale); lower means blurrier.
    """
    if gray.ndim != 2:
        raise ValueError("laplacian_variance expects a single-channel image")
    if min(gray.shape) < 3:
        raise ValueError("image too small")
    resp = ndimage.convolve(gray.astype(np.float64), LAPLACIAN_KERNEL, mode="nearest")
    return float(np.var(resp))


def crop(img: np.ndarray, rect) -> np.ndarray:
    """Copy the square region of ``rect`` (a SquareCrop or (x, y, side)).

    The rect must already lie inside the image; squarify guarantees that
    for pipeline callers.
    """
    if hasattr(rect, "side"):
        x, y, side = rect.x, rect.y, rect.side
    else:
        x, y, side = rect
    xi, yi, si = int(round(x)), int(round(y)), int(round(side))
    h, w = img.shape[:2]
    if xi < 0 or yi < 0 or si <= 0 or xi + si > w or yi + si > h:
        raise ValueError(f"crop rect ({xi},{yi},{si}) outside {w}x{h} image")
    return img[yi : yi + si, xi : xi + si].copy()


# ---------------------------------------------------------------------------
# Separable resampling.  One weight-matrix core serves the output resize
# (lanczos3 / bicubic) and the half-scale downsample used by the NSS
# metrics.  Boundary handling is symmetric (mirror including the edge
# sample) and kernels are renormalized per output pixel, so a constant
# image is preserved to float64 precision.
# ---------------------------------------------------------------------------


def _kernel_cubic(x: np.ndarray) -> np.ndarray:
    # Keys cubic with a = -0.5 (the common bicubic convention).
    ax = np.abs(x)
    ax2, ax3 = ax * ax, ax * ax * ax
    return np.where(
        ax <= 1,
        1.5 * ax3 - 2.5 * ax2 + 1.0,
        np.where(ax < 2, -0.5 * ax3 + 2.5 * ax2 - 4.0 * ax + 2.0, 0.0),
    )


def _kernel_lanczos3(x: np.ndarray) -> np.ndarray:
    out = np.sinc(x) * np.sinc(x / 3.0)
    return np.where(np.abs(x) < 3.0, out, 0.0)


_KERNELS = {"bicubic": (_kernel_cubic, 2.0), "lanczos3": (_kernel_lanczos3, 3.0)}


def _mirror_index(idx: np.ndarray, n: int) -> np.ndarray:
    period = 2 * n
    idx = np.mod(idx, period)
    return np.where(idx >= n, period - 1 - idx, idx)


@lru_cache(maxsize=64)
def resample_matrix(in_len: int, out_len: int, kernel: str, antialias: bool = True) -> np.ndarray:
    """Dense (out_len, in_len) weight matrix for one separable axis.

    Cached: the pipeline resizes thousands of crops through a handful of
    geometries.  Callers must not mutate the returned array.
    """
    func, support = _KERNELS[kernel]
    scale = out_len / in_len
    kscale = scale if (antialias and scale < 1.0) else 1.0
    sup = support / kscale
    x = (np.arange(out_len) + 0.5) / scale - 0.5
    left = np.floor(x - sup).astype(np.int64) + 1
    ntaps = int(np.ceil(2 * sup)) + 2
    idx = left[:, None] + np.arange(ntaps)[None, :]
    w = func((x[:, None] - idx) * kscale) * kscale
    w /= w.sum(axis=1, keepdims=True)
    idx = _mirror_index(idx, in_len)
    mat = np.zeros((out_len, in_len))
    np.add.at(mat, (np.repeat(np.arange(out_len), ntaps), idx.ravel()), w.ravel())
    return mat


def _resample2d(img: np.ndarray, out_h: int, out_w: int, kernel: str, antialias: bool) -> np.ndarray:
    wh = resample_matrix(img.shape[0], out_h, kernel, antialias)
    ww = resample_matrix(img.shape[1], out_w, kernel, antialias)
    if img.ndim == 2:
        return wh @ np.ascontiguousarray(img) @ ww.T
    # channel slices must be made contiguous or BLAS falls off its fast path
    chans = [wh @ np.ascontiguousarray(img[:, :, c]) @ ww.T for c in range(img.shape[2])]
    return np.stack(chans, axis=2)


def resize(img: np.ndarray, side: int = 512, filt: str | None = None) -> np.ndarray:
    """Resize a square image to side x side.

    ``filt`` is ``"bicubic"`` or ``"lanczos3"``; by default lanczos3 is
    used when downscaling and bicubic when upscaling.  Downscaling always
    applies antialiasing.
    """
    h, w = img.shape[:2]
    if h != w:
        raise ValueError(f"resize expects a square input, got {w}x{h}")
    if filt is None:
        filt = "lanczos3" if side < h else "bicubic"
    if filt not in _KERNELS:
        raise ValueError(f"unknown resize filter {filt!r}")
    if side == h:
        return img.copy()
    return _resample2d(img, side, side, filt, antialias=True)


def downsample_half(gray: np.ndarray) -> np.ndarray:
    """Antialiased bicubic 0.5x downsample (used by the two-scale NSS features)."""
    out_h = max(1, int(np.ceil(gray.shape[0] / 2)))
    out_w = max(1, int(np.ceil(gray.shape[1] / 2)))
    return _resample2d(gray, out_h, out_w, "bicubic", antialias=True)
