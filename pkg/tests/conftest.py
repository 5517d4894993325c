"""Shared fixtures: synthetic multi-exposure stereo scenes."""

from __future__ import annotations

import numpy as np
import pytest

from tmcodec.color import SPACE_RGB, ColorImage
from tmcodec.sceneio import SceneStack, quantize_8bit, write_scene


def synth_stack(
    height: int = 36,
    width: int = 64,
    exposures: int = 5,
    views: int = 2,
    seed: int = 0,
    name: str = "synthetic",
    texture: float = 0.0,
) -> SceneStack:
    """Smooth exposure-bracketed stereo scene, snapped to 8-bit sample values.

    ``texture`` adds deterministic mid/high-frequency detail so the scene's
    spectrum has a realistic tail (rank truncation then dominates the
    distortion budget across every preset).
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width]
    yy = yy / max(height - 1, 1)
    xx = xx / max(width - 1, 1)
    base = 0.35 + 0.4 * xx + 0.15 * yy
    for _ in range(4):
        cy, cx = rng.uniform(0.1, 0.9, 2)
        sy, sx = rng.uniform(0.08, 0.35, 2)
        amp = rng.uniform(-0.4, 0.8)
        base = base + amp * np.exp(-(((yy - cy) / sy) ** 2 + ((xx - cx) / sx) ** 2))
    if texture > 0.0:
        for fy, fx in [(3, 7), (11, 5), (6, 17), (23, 13)]:
            phase = rng.uniform(0, 2 * np.pi)
            base = base + (texture / 2) * np.sin(2 * np.pi * (fy * yy + fx * xx) + phase)
        base = base + texture * rng.standard_normal((height, width))
    base = np.clip(base, 0.02, 2.5)
    chan_gain = np.array([1.0, 0.85, 0.7])

    images = {}
    for v in range(views):
        shifted = np.roll(base, shift=-3 * v, axis=1)  # horizontal disparity
        for e in range(exposures):
            gain = 0.6 * 2.0 ** (e - exposures // 2)
            lin = np.clip(shifted[:, :, None] * gain * chan_gain[None, None, :], 0.0, 1.0)
            px = lin ** (1.0 / 2.2)
            px8 = quantize_8bit(px).astype(np.float64) / 255.0
            images[(v, e)] = ColorImage(px8, SPACE_RGB)
    stack = SceneStack(name, views, exposures, width, height, SPACE_RGB, images)
    stack.validate()
    return stack


@pytest.fixture
def small_scene() -> SceneStack:
    return synth_stack(height=24, width=32, exposures=3, views=2, seed=7, name="small")


@pytest.fixture(scope="session")
def scene_dir(tmp_path_factory):
    """A 64x36, 5-exposure stereo scene written as PNGs."""
    root = tmp_path_factory.mktemp("scenes") / "garden64"
    stack = synth_stack(height=36, width=64, exposures=5, views=2, seed=3, name="garden64")
    write_scene(stack, root, fmt="png")
    return root
