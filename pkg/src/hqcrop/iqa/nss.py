"""Natural-scene-statistics primitives: MSCN field and GGD/AGGD fitting.

The MSCN (mean-subtracted contrast-normalized) field is the locally
normalized luminance that underlies the no-reference quality metrics.
Parameter estimation uses the standard moment-matching approach: the
empirical moment ratio is inverted against a precomputed ratio curve over
a dense shape-parameter grid.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy import ndimage
from scipy.special import gamma as _gamma

MSCN_WINDOW_SIZE = 7
MSCN_WINDOW_SIGMA = 7.0 / 6.0
MSCN_STABILIZER = 1.0

ALPHA_GRID = np.arange(0.05, 10.0 + 1e-9, 0.001)
# r(alpha) = Gamma(1/a) Gamma(3/a) / Gamma(2/a)^2, the GGD moment ratio;
# strictly decreasing on the grid, so nearest-point lookup can binary-search
# instead of scanning (the estimators run thousands of times per image).
_R_GGD = _gamma(1.0 / ALPHA_GRID) * _gamma(3.0 / ALPHA_GRID) / _gamma(2.0 / ALPHA_GRID) ** 2
# AGGD matching uses the reciprocal form (strictly increasing).
_R_AGGD = 1.0 / _R_GGD

_R_GGD_ASC = np.ascontiguousarray(_R_GGD[::-1])
_ALPHA_GGD_ASC = np.ascontiguousarray(ALPHA_GRID[::-1])


def _nearest_alpha(curve_asc: np.ndarray, alphas: np.ndarray, x: float, tie_hi: bool) -> float:
    """Grid alpha whose curve value is nearest to x (== argmin((curve-x)^2)).

    ``tie_hi`` picks the higher index on exact ties, matching the
    first-minimum behavior of argmin over the original alpha ordering.
    """
    i = int(np.searchsorted(curve_asc, x))
    lo = max(i - 1, 0)
    hi = min(i, len(curve_asc) - 1)
    d_lo = abs(curve_asc[lo] - x)
    d_hi = abs(curve_asc[hi] - x)
    if d_hi < d_lo or (d_hi == d_lo and tie_hi):
        return float(alphas[hi])
    return float(alphas[lo])


class GgdParams(NamedTuple):
    alpha: float
    sigma_sq: float


class AggdParams(NamedTuple):
    alpha: float
    beta_left: float
    beta_right: float
    mean_offset: float


def gaussian_window(size: int = MSCN_WINDOW_SIZE, sigma: float = MSCN_WINDOW_SIGMA) -> np.ndarray:
    half = (size - 1) // 2
    coords = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(coords[:, None] ** 2 + coords[None, :] ** 2) / (2.0 * sigma**2))
    return g / g.sum()


def _window_1d(size: int = MSCN_WINDOW_SIZE, sigma: float = MSCN_WINDOW_SIGMA) -> np.ndarray:
    half = (size - 1) // 2
    coords = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    return g / g.sum()


_WIN_1D = _window_1d()


def _window_filter(img: np.ndarray) -> np.ndarray:
    # The Gaussian factorizes, so two 1-D passes equal the 7x7 window
    # exactly (replicate padding is separable too).
    tmp = ndimage.correlate1d(img, _WIN_1D, axis=0, mode="nearest")
    return ndimage.correlate1d(tmp, _WIN_1D, axis=1, mode="nearest")


def _local_stats(gray: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mu = _window_filter(gray)
    second = _window_filter(gray * gray)
    sigma = np.sqrt(np.abs(second - mu * mu))
    return mu, sigma


def mscn(gray: np.ndarray) -> np.ndarray:
    """Mean-subtracted contrast-normalized coefficients of a gray image."""
    field, _ = mscn_with_sigma(gray)
    return field


def mscn_with_sigma(gray: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """MSCN field plus the local deviation field (used for sharpness)."""
    gray = np.asarray(gray, dtype=np.float64)
    if gray.ndim != 2:
        raise ValueError("mscn expects a single-channel image")
    if min(gray.shape) < MSCN_WINDOW_SIZE:
        raise ValueError("image too small for the 7x7 normalization window")
    mu, sigma = _local_stats(gray)
    return (gray - mu) / (sigma + MSCN_STABILIZER), sigma


def estimate_ggd(samples: np.ndarray) -> GgdParams:
    """Fit a zero-mean generalized Gaussian by moment matching.

    ``sigma_sq`` is the sample second moment; ``alpha`` is looked up on the
    grid by inverting r(alpha) against m2 / E[|x|]^2.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < 2 or float(x.min()) == float(x.max()):
        raise ValueError("zero variance")
    n = x.size
    neg_clip = np.minimum(x, 0.0)
    pos_clip = np.maximum(x, 0.0)
    m2 = (float(np.dot(neg_clip, neg_clip)) + float(np.dot(pos_clip, pos_clip))) / n
    e_abs = (float(pos_clip.sum()) - float(neg_clip.sum())) / n
    rho = m2 / (e_abs * e_abs)
    alpha = _nearest_alpha(_R_GGD_ASC, _ALPHA_GGD_ASC, rho, tie_hi=True)
    return GgdParams(alpha=alpha, sigma_sq=m2)


def estimate_aggd(samples: np.ndarray) -> AggdParams:
    """Fit an asymmetric generalized Gaussian by moment matching.

    Requires samples on both sides of zero; negating the input swaps the
    two scale parameters exactly and negates the mean offset.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    n_neg = int(np.count_nonzero(x < 0))
    n_pos = int(np.count_nonzero(x > 0))
    if n_neg == 0 or n_pos == 0:
        raise ValueError("one-sided support")
    neg_clip = np.minimum(x, 0.0)
    pos_clip = np.maximum(x, 0.0)
    sum_sq_neg = float(np.dot(neg_clip, neg_clip))
    sum_sq_pos = float(np.dot(pos_clip, pos_clip))
    left_std = np.sqrt(sum_sq_neg / n_neg)
    right_std = np.sqrt(sum_sq_pos / n_pos)
    gammahat = left_std / right_std
    mean_abs = (float(pos_clip.sum()) - float(neg_clip.sum())) / x.size
    m2 = (sum_sq_neg + sum_sq_pos) / x.size
    rhat = mean_abs * mean_abs / m2
    rhatnorm = rhat * (gammahat**3 + 1.0) * (gammahat + 1.0) / (gammahat**2 + 1.0) ** 2
    alpha = _nearest_alpha(_R_AGGD, ALPHA_GRID, rhatnorm, tie_hi=False)
    conv = np.sqrt(_gamma(1.0 / alpha) / _gamma(3.0 / alpha))
    beta_left = left_std * conv
    beta_right = right_std * conv
    mean_offset = (beta_right - beta_left) * _gamma(2.0 / alpha) / _gamma(1.0 / alpha)
    return AggdParams(alpha, float(beta_left), float(beta_right), float(mean_offset))


def pairwise_products(field: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Neighboring-coefficient products in H, V, D1, D2 orientations."""
    h = field[:, :-1] * field[:, 1:]
    v = field[:-1, :] * field[1:, :]
    d1 = field[:-1, :-1] * field[1:, 1:]
    d2 = field[:-1, 1:] * field[1:, :-1]
    return h, v, d1, d2


def nss_features_18(field: np.ndarray) -> np.ndarray:
    """18 NSS features of one MSCN field.

    Ordering: [ggd.alpha, ggd.sigma_sq] followed by (alpha, mean_offset,
    beta_left, beta_right) for each of the H, V, D1, D2 product
    orientations.  Estimator errors propagate.
    """
    g = estimate_ggd(field)
    feats = [g.alpha, g.sigma_sq]
    for prod in pairwise_products(field):
        a = estimate_aggd(prod)
        feats.extend([a.alpha, a.mean_offset, a.beta_left, a.beta_right])
    return np.array(feats)


def nss_features_or_nan(field: np.ndarray) -> np.ndarray:
    """Same as nss_features_18 but degenerate fields yield an all-NaN row.

    Patch-based scoring drops NaN rows instead of failing on flat patches.
    """
    try:
        return nss_features_18(field)
    except ValueError:
        return np.full(18, np.nan)


def niqe_patch_features(field: np.ndarray) -> np.ndarray:
    """18 NSS features in the pristine-model convention.

    Differs from nss_features_18 in the first pair only: the MSCN field
    itself is summarized by an AGGD fit as [alpha, (beta_left +
    beta_right) / 2], matching the convention of the reference
    implementations that published pristine models follow.
    """
    a = estimate_aggd(field)
    feats = [a.alpha, (a.beta_left + a.beta_right) / 2.0]
    for prod in pairwise_products(field):
        p = estimate_aggd(prod)
        feats.extend([p.alpha, p.mean_offset, p.beta_left, p.beta_right])
    return np.array(feats)


def niqe_patch_features_or_nan(field: np.ndarray) -> np.ndarray:
    try:
        return niqe_patch_features(field)
    except ValueError:
        return np.full(18, np.nan)
