"""No-reference image quality assessment built on natural scene statistics."""

from . import brisque, niqe
from .nss import (
    AggdParams,
    GgdParams,
    estimate_aggd,
    estimate_ggd,
    mscn,
    nss_features_18,
    pairwise_products,
)
from .niqe import NiqeModel

__all__ = [
    "AggdParams",
    "GgdParams",
    "NiqeModel",
    "brisque",
    "estimate_aggd",
    "estimate_ggd",
    "mscn",
    "niqe",
    "nss_features_18",
    "pairwise_products",
]
