"""NIQE: distance between an image's NSS statistics and a pristine model.

The model is a multivariate Gaussian (mean vector and covariance) over
36-dimensional patch features: 18 NSS features at full scale concatenated
with 18 at a 0.5x antialiased downsample.  Fitting keeps only the
sharpest patches of a pristine corpus; scoring uses every patch of the
test image.  Lower scores are better.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from ..imaging import downsample_half, to_luma
from .nss import mscn_with_sigma, niqe_patch_features_or_nan

MODEL_FORMAT = "nss-mvg-model"
MODEL_VERSION = 1

DEFAULT_PATCH_SIZE = 96
DEFAULT_SHARPNESS_FRACTION = 0.75

_COV_SYMMETRY_TOL = 1e-9
_PINV_RCOND = 1e-10


@dataclass(frozen=True)
class NiqeModel:
    """Pristine-corpus feature statistics: mean vector plus covariance."""

    mean: np.ndarray
    covariance: np.ndarray
    patch_size: int = DEFAULT_PATCH_SIZE
    sharpness_fraction: float = DEFAULT_SHARPNESS_FRACTION

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def validate(self) -> None:
        if self.mean.shape != (36,) or self.covariance.shape != (36, 36):
            raise ValueError("model must have a 36-vector mean and 36x36 covariance")
        if not np.all(np.isfinite(self.mean)) or not np.all(np.isfinite(self.covariance)):
            raise ValueError("model contains non-finite entries")
        asym = np.max(np.abs(self.covariance - self.covariance.T))
        if asym > _COV_SYMMETRY_TOL:
            raise ValueError(f"covariance asymmetric by {asym:g}")
        eigvals = np.linalg.eigvalsh((self.covariance + self.covariance.T) / 2.0)
        if eigvals.min() < -_COV_SYMMETRY_TOL:
            raise ValueError(f"covariance has negative eigenvalue {eigvals.min():g}")


def save_model(model: NiqeModel, path: str | os.PathLike) -> None:
    """Write the model as a versioned JSON container (lossless floats)."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "dim": model.dim,
        "patch_size": model.patch_size,
        "sharpness_fraction": model.sharpness_fraction,
        "mean": model.mean.tolist(),
        "covariance": model.covariance.tolist(),
    }
    with open(path, "w") as f:
        json.dump(doc, f)


def load_model(path: str | os.PathLike) -> NiqeModel:
    with open(path) as f:
        doc = json.load(f)
    if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model container in {path}")
    model = NiqeModel(
        mean=np.array(doc["mean"], dtype=np.float64),
        covariance=np.array(doc["covariance"], dtype=np.float64),
        patch_size=int(doc["patch_size"]),
        sharpness_fraction=float(doc["sharpness_fraction"]),
    )
    model.validate()
    return model


def default_model_path() -> str:
    return os.path.join(os.path.dirname(__file__), "..", "data", "niqe_model.json")


_default_model_cache: dict[str, NiqeModel] = {}


def default_model() -> NiqeModel:
    path = os.path.abspath(default_model_path())
    if path not in _default_model_cache:
        _default_model_cache[path] = load_model(path)
    return _default_model_cache[path]


def _two_scale_patch_features(
    gray: np.ndarray, patch_size: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per-patch 36-vectors plus per-patch mean local deviation.

    The image is cropped to the patch grid; features are computed on the
    full-image MSCN field at scale 1 and on the field of the half-scale
    image, tile-aligned.  Returns (features[n, 36], sharpness[n]).
    """
    gray = np.asarray(gray, dtype=np.float64)
    nh, nw = gray.shape[0] // patch_size, gray.shape[1] // patch_size
    if nh < 1 or nw < 1:
        raise ValueError("image too small for one patch")
    gray = gray[: nh * patch_size, : nw * patch_size]
    field1, sigma1 = mscn_with_sigma(gray)
    field2, _ = mscn_with_sigma(downsample_half(gray))
    half = patch_size // 2

    feats = np.empty((nh * nw, 36))
    sharp = np.empty(nh * nw)
    k = 0
    for i in range(nh):
        for j in range(nw):
            t1 = field1[i * patch_size : (i + 1) * patch_size, j * patch_size : (j + 1) * patch_size]
            t2 = field2[i * half : (i + 1) * half, j * half : (j + 1) * half]
            feats[k, :18] = niqe_patch_features_or_nan(t1)
            feats[k, 18:] = niqe_patch_features_or_nan(t2)
            sharp[k] = sigma1[
                i * patch_size : (i + 1) * patch_size, j * patch_size : (j + 1) * patch_size
            ].mean()
            k += 1
    return feats, sharp


def fit(
    pristine: list[np.ndarray],
    patch_size: int = DEFAULT_PATCH_SIZE,
    sharpness_fraction: float = DEFAULT_SHARPNESS_FRACTION,
) -> NiqeModel:
    """Fit the pristine multivariate Gaussian over sharp patches.

    Each image must be at least 2 x patch_size per side.  Per image, the
    ``sharpness_fraction`` of tiles with the highest mean local deviation
    are kept (at least one); the model is the sample mean and sample
    covariance over all kept tiles with finite features.
    """
    if not pristine:
        raise ValueError("insufficient pristine data")
    if not 0.0 < sharpness_fraction <= 1.0:
        raise ValueError("sharpness_fraction must be in (0, 1]")
    rows = []
    for img in pristine:
        gray = to_luma(np.asarray(img, dtype=np.float64))
        if gray.shape[0] < 2 * patch_size or gray.shape[1] < 2 * patch_size:
            raise ValueError(
                f"pristine image {gray.shape[1]}x{gray.shape[0]} smaller than 2x patch size"
            )
        feats, sharp = _two_scale_patch_features(gray, patch_size)
        keep = max(1, int(np.ceil(sharpness_fraction * feats.shape[0])))
        order = np.lexsort((np.arange(sharp.size), -sharp))
        rows.append(feats[np.sort(order[:keep])])
    allrows = np.concatenate(rows, axis=0)
    allrows = allrows[~np.isnan(allrows).any(axis=1)]
    if allrows.shape[0] < 36:
        raise ValueError("insufficient pristine data")
    mean = allrows.mean(axis=0)
    cov = np.cov(allrows, rowvar=False)
    cov = (cov + cov.T) / 2.0
    model = NiqeModel(
        mean=mean,
        covariance=cov,
        patch_size=patch_size,
        sharpness_fraction=sharpness_fraction,
    )
    model.validate()
    return model


def score(img: np.ndarray, model: NiqeModel | None = None) -> float:
    """NIQE score of an image (lower is better, always >= 0).

    RGB inputs are converted to luma.  All patches contribute (no
    sharpness filter at test time); the score is the Mahalanobis-style
    distance sqrt(d^T pinv((S1+S2)/2) d) between the model statistics and
    the test image's patch-feature mean/covariance.
    """
    if model is None:
        model = default_model()
    gray = to_luma(np.asarray(img, dtype=np.float64))
    feats, _ = _two_scale_patch_features(gray, model.patch_size)
    feats = feats[~np.isnan(feats).any(axis=1)]
    if feats.shape[0] == 0:
        raise ValueError("no usable patches in test image")
    nu2 = feats.mean(axis=0)
    if feats.shape[0] > 1:
        sigma2 = np.cov(feats, rowvar=False)
        sigma2 = (sigma2 + sigma2.T) / 2.0
    else:
        sigma2 = np.zeros((model.dim, model.dim))
    d = model.mean - nu2
    pooled = (model.covariance + sigma2) / 2.0
    inv = np.linalg.pinv(pooled, rcond=_PINV_RCOND)
    q = float(d @ inv @ d)
    return float(np.sqrt(max(q, 0.0)))
