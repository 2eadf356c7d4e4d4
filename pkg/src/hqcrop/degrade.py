"""Seedable synthetic degradation for building LQ/HQ validation pairs.

The chain is blur -> resize -> noise -> JPEG, a second milder round of
the same, an optional sinc (ringing) filter, and a resize back to the
output size.  Every random draw comes from a counter-based generator
keyed by (seed, crop_id, stage), so results are bit-identical across
runs, processing order, and worker counts.  Parameter drawing is
separated from application: ``draw_params`` consumes randomness,
``apply_params`` is pure, and the drawn values are logged per pair so a
replay run can reproduce each LQ exactly.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np
from scipy.special import j1

from .common import ConfigError, WarningSink
from .imaging import load_image, save_image, to_luma
from .selection import SelectionManifest

HQ_SIZE = 512

_CV2_FILTERS = {
    "bicubic": cv2.INTER_CUBIC,
    "bilinear": cv2.INTER_LINEAR,
    "area": cv2.INTER_AREA,
}


@dataclass(frozen=True)
class Range:
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ConfigError(f"empty range [{self.lo}, {self.hi}]")

    def draw(self, rng: np.random.Generator) -> float:
        if self.lo == self.hi:
            return self.lo
        return float(rng.uniform(self.lo, self.hi))


@dataclass(frozen=True)
class BlurStage:
    kernel_size: tuple[int, int] = (7, 21)  # odd bounds, inclusive
    sigma: Range = Range(0.2, 3.0)
    anisotropic_prob: float = 0.5
    rotation: Range = Range(0.0, float(np.pi))

    def __post_init__(self):
        lo, hi = self.kernel_size
        if lo % 2 == 0 or hi % 2 == 0 or lo > hi:
            raise ConfigError("blur kernel bounds must be odd and ordered")


@dataclass(frozen=True)
class ResizeStage:
    scale: Range = Range(0.15, 1.5)
    filters: tuple[str, ...] = ("bicubic", "bilinear", "area")

    def __post_init__(self):
        for f in self.filters:
            if f not in _CV2_FILTERS:
                raise ConfigError(f"unknown resize filter {f!r}")


@dataclass(frozen=True)
class NoiseStage:
    gaussian_sigma: Range = Range(1.0, 30.0)  # 8-bit units
    poisson_scale: Range = Range(0.05, 3.0)
    gray_prob: float = 0.4
    gaussian_prob: float = 0.5  # otherwise poisson


@dataclass(frozen=True)
class JpegStage:
    quality: tuple[int, int] = (30, 95)  # quality 100 bypasses the codec

    def __post_init__(self):
        lo, hi = self.quality
        if lo > hi:
            raise ConfigError("empty jpeg quality range")


@dataclass(frozen=True)
class StageSet:
    blur: BlurStage = BlurStage()
    resize: ResizeStage = ResizeStage()
    noise: NoiseStage = NoiseStage()
    jpeg: JpegStage = JpegStage()


def _milder_second() -> StageSet:
    return StageSet(
        blur=BlurStage(sigma=Range(0.2, 1.5), anisotropic_prob=0.25),
        resize=ResizeStage(scale=Range(0.3, 1.2)),
        noise=NoiseStage(gaussian_sigma=Range(1.0, 25.0), poisson_scale=Range(0.05, 2.5)),
        jpeg=JpegStage(quality=(30, 95)),
    )


@dataclass(frozen=True)
class FinalStage:
    sinc_prob: float = 0.8
    sinc_kernel_size: int = 21
    sinc_cutoff: Range = Range(float(np.pi / 3), float(np.pi))
    output_size: int = HQ_SIZE  # set to HQ_SIZE // 4 for x4-style pairs


@dataclass(frozen=True)
class DegradationConfig:
    seed: int = 0
    first: StageSet = StageSet()
    second: StageSet = field(default_factory=_milder_second)
    final: FinalStage = FinalStage()

    @classmethod
    def identity(cls, seed: int = 0) -> "DegradationConfig":
        """Ranges collapsed so every stage becomes a no-op."""
        flat = StageSet(
            blur=BlurStage(sigma=Range(0.0, 0.0)),
            resize=ResizeStage(scale=Range(1.0, 1.0)),
            noise=NoiseStage(gaussian_sigma=Range(0.0, 0.0), poisson_scale=Range(0.0, 0.0), gaussian_prob=1.0),
            jpeg=JpegStage(quality=(100, 100)),
        )
        return cls(seed=seed, first=flat, second=flat, final=FinalStage(sinc_prob=0.0))


def _keyed_rng(seed: int, crop_id: str, stage: str) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}:{crop_id}:{stage}".encode()).digest()
    key = np.frombuffer(digest[:16], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _field_key(seed: int, crop_id: str, stage: str) -> list[int]:
    digest = hashlib.sha256(f"{seed}:{crop_id}:{stage}:field".encode()).digest()
    return [int(v) for v in np.frombuffer(digest[:16], dtype=np.uint64)]


def _rng_from_key(key: list[int]) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array(key, dtype=np.uint64)))


def _draw_blur(stage: BlurStage, rng: np.random.Generator) -> dict | None:
    sigma = stage.sigma.draw(rng)
    if sigma <= 0.0:
        return None
    lo, hi = stage.kernel_size
    ksize = int(rng.integers(0, (hi - lo) // 2 + 1)) * 2 + lo
    aniso = bool(rng.random() < stage.anisotropic_prob)
    if aniso:
        sigma_y = stage.sigma.draw(rng)
        rot = stage.rotation.draw(rng)
    else:
        sigma_y = sigma
        rot = 0.0
    return {"kernel_size": ksize, "sigma_x": sigma, "sigma_y": max(sigma_y, 1e-3), "rotation": rot}


def _draw_resize(stage: ResizeStage, rng: np.random.Generator) -> dict | None:
    scale = stage.scale.draw(rng)
    filt = stage.filters[int(rng.integers(0, len(stage.filters)))]
    if scale == 1.0:
        return None
    return {"scale": scale, "filter": filt}


def _draw_noise(stage: NoiseStage, rng: np.random.Generator, key: list[int]) -> dict | None:
    gaussian = bool(rng.random() < stage.gaussian_prob)
    gray = bool(rng.random() < stage.gray_prob)
    if gaussian:
        sigma = stage.gaussian_sigma.draw(rng)
        if sigma <= 0.0:
            return None
        return {"kind": "gaussian", "sigma": sigma, "gray": gray, "field_key": key}
    scale = stage.poisson_scale.draw(rng)
    if scale <= 0.0:
        return None
    return {"kind": "poisson", "scale": scale, "gray": gray, "field_key": key}


def _draw_jpeg(stage: JpegStage, rng: np.random.Generator) -> dict | None:
    lo, hi = stage.quality
    q = int(rng.integers(lo, hi + 1))
    if q >= 100:
        return None
    return {"quality": q}


def draw_params(cfg: DegradationConfig, crop_id: str) -> dict:
    """Draw the full parameter record for one crop (the audit log entry)."""
    params: dict = {"crop_id": crop_id, "output_size": cfg.final.output_size}
    for idx, (label, stages) in enumerate((("1", cfg.first), ("2", cfg.second))):
        base = idx * 4
        params[f"blur{label}"] = _draw_blur(stages.blur, _keyed_rng(cfg.seed, crop_id, f"stage{base}"))
        params[f"resize{label}"] = _draw_resize(stages.resize, _keyed_rng(cfg.seed, crop_id, f"stage{base + 1}"))
        params[f"noise{label}"] = _draw_noise(
            stages.noise,
            _keyed_rng(cfg.seed, crop_id, f"stage{base + 2}"),
            _field_key(cfg.seed, crop_id, f"stage{base + 2}"),
        )
        params[f"jpeg{label}"] = _draw_jpeg(stages.jpeg, _keyed_rng(cfg.seed, crop_id, f"stage{base + 3}"))
    rng = _keyed_rng(cfg.seed, crop_id, "stage8")
    if rng.random() < cfg.final.sinc_prob:
        params["sinc"] = {
            "kernel_size": cfg.final.sinc_kernel_size,
            "cutoff": cfg.final.sinc_cutoff.draw(rng),
        }
    else:
        params["sinc"] = None
    return params


def _gaussian_kernel(ksize: int, sigma_x: float, sigma_y: float, rot: float) -> np.ndarray:
    half = (ksize - 1) / 2.0
    ys, xs = np.mgrid[-half : half + 1, -half : half + 1]
    c, s = np.cos(rot), np.sin(rot)
    xr = c * xs + s * ys
    yr = -s * xs + c * ys
    k = np.exp(-0.5 * ((xr / sigma_x) ** 2 + (yr / sigma_y) ** 2))
    return k / k.sum()


def _sinc_kernel(ksize: int, cutoff: float) -> np.ndarray:
    # Circular lowpass (jinc) kernel as used for ringing artifacts.
    half = (ksize - 1) / 2.0
    ys, xs = np.mgrid[-half : half + 1, -half : half + 1]
    r = np.hypot(xs, ys)
    with np.errstate(divide="ignore", invalid="ignore"):
        k = cutoff * j1(cutoff * r) / (2.0 * np.pi * r)
    k[int(half), int(half)] = cutoff**2 / (4.0 * np.pi)
    return k / k.sum()


def _apply_filter(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    return cv2.filter2D(img, -1, kernel, borderType=cv2.BORDER_REPLICATE)


def _apply_noise(img: np.ndarray, p: dict) -> np.ndarray:
    rng = _rng_from_key(p["field_key"])
    if p["kind"] == "gaussian":
        shape = img.shape[:2] if p["gray"] else img.shape
        noise = rng.standard_normal(shape) * p["sigma"]
        if p["gray"] and img.ndim == 3:
            noise = noise[:, :, None]
        return np.clip(img + noise, 0.0, 255.0)
    base01 = (to_luma(img) if p["gray"] and img.ndim == 3 else img) / 255.0
    levels = len(np.unique(np.round(np.clip(base01, 0, 1) * 255.0)))
    vals = 2.0 ** np.ceil(np.log2(max(levels, 2)))
    sampled = rng.poisson(np.clip(base01, 0, 1) * vals) / vals
    noise = (sampled - base01) * 255.0 * p["scale"]
    if p["gray"] and img.ndim == 3:
        noise = noise[:, :, None]
    return np.clip(img + noise, 0.0, 255.0)


def _apply_jpeg(img: np.ndarray, quality: int) -> np.ndarray:
    arr = np.clip(np.round(img), 0, 255).astype(np.uint8)
    if arr.ndim == 3:
        ok, enc = cv2.imencode(".jpg", arr[:, :, ::-1], [cv2.IMWRITE_JPEG_QUALITY, quality])
        if not ok:
            raise RuntimeError("JPEG encode failed")
        dec = cv2.imdecode(enc, cv2.IMREAD_COLOR)[:, :, ::-1]
    else:
        ok, enc = cv2.imencode(".jpg", arr, [cv2.IMWRITE_JPEG_QUALITY, quality])
        if not ok:
            raise RuntimeError("JPEG encode failed")
        dec = cv2.imdecode(enc, cv2.IMREAD_GRAYSCALE)
    return dec.astype(np.float64)


def _apply_resize(img: np.ndarray, scale: float, filt: str) -> np.ndarray:
    target = max(1, int(round(HQ_SIZE * scale)))
    return cv2.resize(img, (target, target), interpolation=_CV2_FILTERS[filt]).astype(np.float64)


def apply_params(img: np.ndarray, params: dict) -> np.ndarray:
    """Apply a drawn parameter record; pure, no randomness beyond the log."""
    out = np.asarray(img, dtype=np.float64)
    for label in ("1", "2"):
        if params.get(f"blur{label}"):
            p = params[f"blur{label}"]
            out = _apply_filter(out, _gaussian_kernel(p["kernel_size"], p["sigma_x"], p["sigma_y"], p["rotation"]))
        if params.get(f"resize{label}"):
            p = params[f"resize{label}"]
            out = _apply_resize(out, p["scale"], p["filter"])
        if params.get(f"noise{label}"):
            out = _apply_noise(out, params[f"noise{label}"])
        if params.get(f"jpeg{label}"):
            out = _apply_jpeg(out, params[f"jpeg{label}"]["quality"])
    if params.get("sinc"):
        p = params["sinc"]
        out = _apply_filter(out, _sinc_kernel(p["kernel_size"], p["cutoff"]))
    size = params["output_size"]
    if out.shape[0] != size or out.shape[1] != size:
        out = cv2.resize(out, (size, size), interpolation=cv2.INTER_CUBIC).astype(np.float64)
    return np.clip(out, 0.0, 255.0)


def degrade(img: np.ndarray, cfg: DegradationConfig, crop_id: str) -> np.ndarray:
    """Degrade one HQ 512x512 image; deterministic in (cfg.seed, crop_id)."""
    if img.shape[0] != HQ_SIZE or img.shape[1] != HQ_SIZE:
        raise ValueError(f"degrade expects {HQ_SIZE}x{HQ_SIZE} input, got {img.shape[1]}x{img.shape[0]}")
    return apply_params(img, draw_params(cfg, crop_id))


def build_pairs(
    manifest: SelectionManifest,
    cfg: DegradationConfig,
    out_dir: str | os.PathLike,
    sink: WarningSink | None = None,
) -> list[dict]:
    """Write LQ counterparts plus a JSON-lines pair manifest.

    Entries must carry a resolvable crop_path; unreadable files are
    skipped, logged, and counted.  Returns the pair records (also written
    to ``pairs.jsonl``), each embedding the drawn parameters for audit.
    """
    sink = sink if sink is not None else WarningSink()
    out_dir = Path(out_dir)
    lq_dir = out_dir / "lq"
    lq_dir.mkdir(parents=True, exist_ok=True)
    records: list[dict] = []
    for entry in manifest.entries:
        if not entry.crop_path:
            continue
        try:
            hq = load_image(entry.crop_path)
        except (OSError, ValueError) as e:
            sink.warn("unreadable_hq", f"{entry.crop_path}: {e}")
            continue
        params = draw_params(cfg, entry.crop_id)
        lq = apply_params(hq, params)
        lq_path = lq_dir / (Path(entry.crop_path).stem + ".png")
        save_image(lq, lq_path)
        records.append(
            {
                "crop_id": entry.crop_id,
                "hq_path": str(entry.crop_path),
                "lq_path": str(lq_path),
                "params": params,
                "codec": {"jpeg": "opencv", "version": cv2.__version__},
            }
        )
    with open(out_dir / "pairs.jsonl", "w") as f:
        for rec in records:
            f.write(json.dumps(rec, sort_keys=True) + "\n")
    return records
