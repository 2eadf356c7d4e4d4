"""Sidecar that batch-scores curated crops with neural IQA metrics."""

from .backends import ClassicalProxyBackend, PyiqaBackend, make_backend
from .scorer import CSV_HEADER, CropRef, ScorerError, read_crop_list, run, score_crops

__version__ = "0.1.0"

__all__ = [
    "CSV_HEADER",
    "ClassicalProxyBackend",
    "CropRef",
    "PyiqaBackend",
    "ScorerError",
    "make_backend",
    "read_crop_list",
    "run",
    "score_crops",
]
