"""Metric backends: pretrained neural models or a classical proxy.

The neural backend wraps the pretrained CLIPIQA, MANIQA (pipal variant)
and MUSIQ models and needs their weights to be downloadable.  The proxy
backend maps a simple sharpness statistic into each metric's documented
range; it keeps the batch/CSV machinery exercisable on machines without
model access and is clearly labeled as a proxy, not a reimplementation.
"""

from __future__ import annotations

from typing import Protocol

import numpy as np

SCORE_RANGES = {"clipiqa": (0.0, 1.0), "maniqa": (0.0, 1.0), "musiq": (0.0, 100.0)}
METRIC_ORDER = ("clipiqa", "maniqa", "musiq")


class MetricBackend(Protocol):
    name: str

    def score_batch(self, images: list[np.ndarray]) -> list[dict[str, float]]:
        """One dict per image with clipiqa/maniqa/musiq keys."""
        ...


def _luma(img: np.ndarray) -> np.ndarray:
    if img.ndim == 2:
        return img
    return img @ np.array([0.299, 0.587, 0.114])


def _sharpness(img: np.ndarray) -> float:
    gray = _luma(img.astype(np.float64))
    lap = (
        -4.0 * gray[1:-1, 1:-1]
        + gray[:-2, 1:-1]
        + gray[2:, 1:-1]
        + gray[1:-1, :-2]
        + gray[1:-1, 2:]
    )
    return float(np.var(lap))


class ClassicalProxyBackend:
    """Deterministic sharpness-based stand-in scores within metric ranges."""

    name = "proxy"

    def score_batch(self, images: list[np.ndarray]) -> list[dict[str, float]]:
        rows = []
        for img in images:
            s = _sharpness(img)
            rows.append(
                {
                    "clipiqa": s / (s + 500.0),
                    "maniqa": s / (s + 1000.0),
                    "musiq": 100.0 * s / (s + 300.0),
                }
            )
        return rows


class PyiqaBackend:
    """Pretrained CLIPIQA / MANIQA(pipal) / MUSIQ via the pyiqa toolkit."""

    name = "pyiqa"

    def __init__(self, device: str = "cpu"):
        import pyiqa
        import torch

        self._torch = torch
        self._device = device
        self._metrics = {
            "clipiqa": pyiqa.create_metric("clipiqa", device=device),
            "maniqa": pyiqa.create_metric("maniqa-pipal", device=device),
            "musiq": pyiqa.create_metric("musiq", device=device),
        }
        for m in self._metrics.values():
            if hasattr(m, "eval"):
                m.eval()

    @staticmethod
    def available() -> bool:
        try:
            import pyiqa  # noqa: F401
            import torch  # noqa: F401
        except ImportError:
            return False
        return True

    def score_batch(self, images: list[np.ndarray]) -> list[dict[str, float]]:
        torch = self._torch
        batch = torch.stack(
            [
                torch.from_numpy(np.ascontiguousarray(img.transpose(2, 0, 1))).float() / 255.0
                for img in images
            ]
        ).to(self._device)
        rows: list[dict[str, float]] = [dict() for _ in images]
        with torch.no_grad():
            for name, metric in self._metrics.items():
                values = metric(batch)
                values = values.reshape(-1).detach().cpu().tolist()
                for row, v in zip(rows, values):
                    row[name] = float(v)
        return rows


def make_backend(kind: str, device: str = "cpu") -> MetricBackend:
    if kind == "proxy":
        return ClassicalProxyBackend()
    if kind == "pyiqa":
        if not PyiqaBackend.available():
            raise RuntimeError(
                "pyiqa backend requested but pyiqa/torch are not importable; "
                "install with the [models] extra or use --backend proxy"
            )
        return PyiqaBackend(device=device)
    raise ValueError(f"unknown backend {kind!r}")
