"""PSNR, SSIM and summary statistics for recovered images."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DimensionMismatch, EmptyInput, TooSmall
from .image_io import GrayImage

__all__ = [
    "psnr",
    "ssim",
    "mae",
    "shift_compensated_psnr",
    "QualityScore",
    "MetricSummary",
    "score",
    "aggregate",
]

PEAK = 255.0


def _pair(a, b):
    a = a.pixels if isinstance(a, GrayImage) else a
    b = b.pixels if isinstance(b, GrayImage) else b
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def _psnr_from_mse(mse: float) -> float:
    return math.inf if mse == 0 else 10.0 * math.log10(PEAK * PEAK / mse)


def psnr(a, b) -> float:
    """``10 log10(255^2 / MSE)`` in dB; ``inf`` for identical inputs."""
    a, b = _pair(a, b)
    return _psnr_from_mse(float(np.mean((a - b) ** 2)))


def mae(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.mean(np.abs(a - b)))


def _gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    r = np.arange(size) - (size - 1) / 2
    g = np.exp(-(r**2) / (2 * sigma**2))
    return g / g.sum()


def ssim(a, b, window: int = 11, sigma: float = 1.5, k1: float = 0.01, k2: float = 0.03) -> float:
    """Mean SSIM over all fully contained Gaussian windows."""
    a, b = _pair(a, b)
    if min(a.shape) < window:
        raise TooSmall(f"SSIM needs both dimensions >= {window}, got {a.shape}")
    g = _gaussian_window(window, sigma)
    pad = (window - 1) // 2
    inner = (slice(pad, a.shape[0] - pad), slice(pad, a.shape[1] - pad))

    def blur(img):
        out = ndimage.correlate1d(img, g, axis=0, mode="reflect")
        return ndimage.correlate1d(out, g, axis=1, mode="reflect")[inner]

    c1 = (k1 * PEAK) ** 2
    c2 = (k2 * PEAK) ** 2
    mu_a, mu_b = blur(a), blur(b)
    var_a = blur(a * a) - mu_a**2
    var_b = blur(b * b) - mu_b**2
    cov = blur(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def shift_compensated_psnr(reference, candidate, max_shift: int = 255):
    """Best PSNR over integer shifts ``s`` of ``candidate`` (clamped to
    ``[0, 255]``).  Returns ``(psnr, s)``; ties go to the smallest ``|s|``."""
    a, b = _pair(reference, candidate)
    ai = np.clip(np.rint(a), 0, 255).astype(np.intp)
    bi = np.clip(np.rint(b), 0, 255).astype(np.intp)
    if not (np.array_equal(ai, a) and np.array_equal(bi, b)):
        raise ValueError("shift compensation needs integer images in [0, 255]")
    joint = np.zeros((256, 256))
    np.add.at(joint, (ai.ravel(), bi.ravel()), 1.0)
    levels = np.arange(256, dtype=np.float64)
    shifts = np.arange(-max_shift, max_shift + 1)
    order = np.argsort(np.abs(shifts), kind="stable")
    best_mse, best_s = math.inf, 0
    for s in shifts[order]:
        moved = np.clip(levels + s, 0, 255)
        err = (levels[:, None] - moved[None, :]) ** 2
        mse = float((joint * err).sum()) / a.size
        if mse < best_mse:
            best_mse, best_s = mse, int(s)
    return _psnr_from_mse(best_mse), best_s


@dataclass(frozen=True)
class QualityScore:
    psnr: float
    ssim: float
    mae: float
    shift_psnr: float = math.nan


def score(reference, candidate, compensate: bool = True) -> QualityScore:
    sp = shift_compensated_psnr(reference, candidate)[0] if compensate else math.nan
    return QualityScore(psnr(reference, candidate), ssim(reference, candidate),
                        mae(reference, candidate), sp)


@dataclass(frozen=True)
class MetricSummary:
    mean: float
    median: float
    min: float
    max: float
    infinity_count: int
    count: int


def _summarize(values) -> MetricSummary:
    v = np.asarray(values, dtype=np.float64)
    finite = v[np.isfinite(v)]
    inf_count = int(np.count_nonzero(np.isinf(v)))
    mean = float(finite.mean()) if finite.size else (math.inf if inf_count else math.nan)
    return MetricSummary(mean, float(np.median(v)), float(v.min()), float(v.max()), inf_count, v.size)


def aggregate(scores) -> dict[str, MetricSummary]:
    """Per-metric statistics; infinities are counted and left out of means."""
    scores = list(scores)
    if not scores:
        raise EmptyInput("no scores to aggregate")
    out = {}
    for name in ("psnr", "ssim", "mae", "shift_psnr"):
        vals = [getattr(s, name) for s in scores]
        if all(math.isnan(x) for x in vals):
            continue
        out[name] = _summarize(vals)
    return out
