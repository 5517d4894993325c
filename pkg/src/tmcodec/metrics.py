"""Distortion measurement: MSE/PSNR per plane and aggregated over scenes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .color import SPACE_RGB
from .sceneio import SceneStack

__all__ = ["mse", "psnr", "scene_psnr", "ScenePSNR", "RDPoint"]


def mse(ref: np.ndarray, test: np.ndarray) -> float:
    """Mean squared sample difference (callers pass 8-bit-unit samples)."""
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise ValueError(f"shape mismatch: {ref.shape} vs {test.shape}")
    d = ref - test
    return float(np.mean(d * d))


def psnr(ref: np.ndarray, test: np.ndarray, peak: float = 255.0) -> float:
    """10*log10(peak^2 / mse); +inf for identical inputs."""
    m = mse(ref, test)
    if m == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / m)


@dataclass
class ScenePSNR:
    left: float
    right: float
    per_exposure: list[tuple[float, float]]  # (left, right) per exposure


def scene_psnr(ref: SceneStack, test: SceneStack, domain: str = "rgb") -> ScenePSNR:
    """Per-view PSNR in 8-bit units: MSE averaged over exposures and channels,
    one PSNR per view, plus the per-exposure breakdown."""
    if (ref.views, ref.exposures, ref.height, ref.width) != (
        test.views,
        test.exposures,
        test.height,
        test.width,
    ):
        raise ValueError("scene shapes do not match")
    if ref.space != test.space:
        raise ValueError(f"scene spaces differ: {ref.space} vs {test.space}")
    if domain == "rgb":
        if ref.space != SPACE_RGB:
            raise ValueError("rgb-domain PSNR needs RGB scenes; decode first")
    elif domain != "coded":
        raise ValueError(f"unknown psnr domain {domain!r}")

    def view_mses(v: int) -> list[float]:
        return [
            mse(ref.image(v, e).pixels * 255.0, test.image(v, e).pixels * 255.0)
            for e in range(ref.exposures)
        ]

    def to_db(m: float) -> float:
        return math.inf if m == 0.0 else 10.0 * math.log10(255.0 * 255.0 / m)

    per_view = []
    per_exposure: list[list[float]] = []
    for v in range(ref.views):
        mses = view_mses(v)
        per_view.append(to_db(float(np.mean(mses))))
        per_exposure.append([to_db(m) for m in mses])
    pairs = list(zip(per_exposure[0], per_exposure[1] if ref.views > 1 else per_exposure[0]))
    right = per_view[1] if ref.views > 1 else per_view[0]
    return ScenePSNR(left=per_view[0], right=right, per_exposure=pairs)


@dataclass
class RDPoint:
    """One sweep cell: configuration, bit counts, and per-view quality."""

    scene: str
    space: str
    preset: int | None
    qp: int
    path: str
    bits_latent: int
    bits_backend: int
    bits_total: int
    psnr_left: float
    psnr_right: float
    per_exposure: list[tuple[float, float]] = field(default_factory=list)
    error: str = ""

    @property
    def bits_overhead(self) -> int:
        return self.bits_total - self.bits_latent - self.bits_backend
