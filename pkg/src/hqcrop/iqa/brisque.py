"""BRISQUE features and the optional SVR scorer.

Features are the two-scale NSS vector (18 at full scale, 18 at 0.5x).
Scoring needs a trained support-vector regressor distributed as a libsvm
text model plus a per-feature scaling-range sidecar; without a model the
module runs in feature-only mode.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from ..common import WarningSink
from ..imaging import downsample_half
from .nss import mscn, nss_features_18


def features(gray: np.ndarray) -> np.ndarray:
    """36-vector: NSS features of the image and of its 0.5x downsample."""
    gray = np.asarray(gray, dtype=np.float64)
    full = nss_features_18(mscn(gray))
    half = nss_features_18(mscn(downsample_half(gray)))
    return np.concatenate([full, half])


@dataclass(frozen=True)
class SvrModel:
    """RBF-kernel epsilon-SVR in libsvm convention (bias = -rho)."""

    support_vectors: np.ndarray  # (n, dim)
    dual_coefs: np.ndarray  # (n,)
    gamma: float
    bias: float
    feature_min: np.ndarray  # (dim,)
    feature_max: np.ndarray  # (dim,)

    def __post_init__(self):
        if self.support_vectors.shape[0] != self.dual_coefs.shape[0]:
            raise ValueError("support vector / coefficient count mismatch")
        if np.any(self.feature_min >= self.feature_max):
            raise ValueError("scaling ranges must have min < max per feature")


def load_svr_model(model_path: str | os.PathLike, range_path: str | os.PathLike) -> SvrModel:
    """Load a libsvm text model plus its svm-scale range sidecar."""
    gamma = None
    rho = None
    dim = 0
    sv_rows: list[dict[int, float]] = []
    coefs: list[float] = []
    with open(model_path) as f:
        in_sv = False
        for line in f:
            line = line.strip()
            if not line:
                continue
            if not in_sv:
                if line == "SV":
                    in_sv = True
                elif line.startswith("gamma "):
                    gamma = float(line.split()[1])
                elif line.startswith("rho "):
                    rho = float(line.split()[1])
                continue
            parts = line.split()
            coefs.append(float(parts[0]))
            row = {}
            for tok in parts[1:]:
                idx, val = tok.split(":")
                row[int(idx)] = float(val)
                dim = max(dim, int(idx))
            sv_rows.append(row)
    if gamma is None or rho is None or not sv_rows:
        raise ValueError(f"not a usable libsvm RBF model: {model_path}")

    fmin_map: dict[int, float] = {}
    fmax_map: dict[int, float] = {}
    with open(range_path) as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    # svm-scale format: "x", then "lower upper", then "index min max" rows.
    for ln in lines:
        parts = ln.split()
        if len(parts) == 3:
            idx = int(parts[0])
            fmin_map[idx] = float(parts[1])
            fmax_map[idx] = float(parts[2])
            dim = max(dim, idx)
    if not fmin_map:
        raise ValueError(f"no scaling ranges found in {range_path}")

    sv = np.zeros((len(sv_rows), dim))
    for i, row in enumerate(sv_rows):
        for idx, val in row.items():
            sv[i, idx - 1] = val
    fmin = np.array([fmin_map.get(i + 1, 0.0) for i in range(dim)])
    fmax = np.array([fmax_map.get(i + 1, 1.0) for i in range(dim)])
    return SvrModel(
        support_vectors=sv,
        dual_coefs=np.array(coefs),
        gamma=gamma,
        bias=-rho,
        feature_min=fmin,
        feature_max=fmax,
    )


def score(feats: np.ndarray, model: SvrModel, sink: WarningSink | None = None) -> float:
    """Evaluate the SVR on min-max scaled features (lower is better).

    Features are scaled to [-1, 1] with the model's ranges; values outside
    a range are clamped with a warning.
    """
    x = np.asarray(feats, dtype=np.float64)
    if x.shape != (model.support_vectors.shape[1],):
        raise ValueError(
            f"expected {model.support_vectors.shape[1]} features, got {x.shape}"
        )
    if not np.all(np.isfinite(x)):
        raise ValueError("features must be finite")
    span = model.feature_max - model.feature_min
    scaled = -1.0 + 2.0 * (x - model.feature_min) / span
    outside = (scaled < -1.0) | (scaled > 1.0)
    if np.any(outside):
        if sink is not None:
            sink.warn(
                "feature_out_of_range",
                f"{int(outside.sum())} feature(s) outside scaling range, clamped",
            )
        scaled = np.clip(scaled, -1.0, 1.0)
    diffs = model.support_vectors - scaled[None, :]
    kernels = np.exp(-model.gamma * np.sum(diffs * diffs, axis=1))
    return float(model.dual_coefs @ kernels + model.bias)
