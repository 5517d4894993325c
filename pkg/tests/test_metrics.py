"""MSE/PSNR contracts and scene-level aggregation."""

import math

import numpy as np
import pytest

from tmcodec.color import SPACE_RGB, ColorImage
from tmcodec.metrics import mse, psnr, scene_psnr
from tmcodec.sceneio import SceneStack

from conftest import synth_stack


class TestMse:
    def test_identical(self):
        a = np.arange(12.0).reshape(3, 4)
        assert mse(a, a) == 0.0

    def test_full_swing(self):
        a = np.zeros((4, 4))
        b = np.full((4, 4), 255.0)
        assert mse(a, b) == 65025.0

    def test_constant_offset(self):
        a = np.zeros((5, 5))
        b = np.full((5, 5), 16.0)
        assert mse(a, b) == 256.0

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            mse(np.zeros((2, 2)), np.zeros((3, 2)))


class TestPsnr:
    def test_identical_infinite(self):
        a = np.ones((2, 2))
        assert math.isinf(psnr(a, a))

    def test_zero_db(self):
        a = np.zeros((4, 4))
        b = np.full((4, 4), 255.0)
        assert psnr(a, b) == pytest.approx(0.0)

    def test_offset_16(self):
        a = np.zeros((4, 4))
        b = np.full((4, 4), 16.0)
        assert psnr(a, b) == pytest.approx(10.0 * math.log10(65025.0 / 256.0), abs=1e-9)
        assert psnr(a, b) == pytest.approx(24.0478, abs=1e-3)


def noisy_copy(stack: SceneStack, sigma: float, rng) -> SceneStack:
    return stack.map_images(
        lambda img: ColorImage(img.pixels + rng.normal(0, sigma, img.pixels.shape), SPACE_RGB)
    )


class TestScenePsnr:
    def test_identical_scene_infinite(self):
        stack = synth_stack(height=6, width=6, exposures=2)
        out = scene_psnr(stack, stack)
        assert math.isinf(out.left) and math.isinf(out.right)
        assert all(math.isinf(l) and math.isinf(r) for l, r in out.per_exposure)

    def test_single_exposure_reduces_to_plain_psnr(self):
        rng = np.random.default_rng(0)
        stack = synth_stack(height=8, width=8, exposures=1)
        test = noisy_copy(stack, 0.01, rng)
        out = scene_psnr(stack, test)
        expect = psnr(stack.image(0, 0).pixels * 255.0, test.image(0, 0).pixels * 255.0)
        assert out.left == pytest.approx(expect, abs=1e-12)

    def test_two_exposure_single_pixel_hand_case(self):
        def one_pixel(vals):
            images = {
                (v, e): ColorImage(np.full((1, 1, 3), vals[(v, e)]), SPACE_RGB)
                for v in range(2)
                for e in range(2)
            }
            return SceneStack("px", 2, 2, 1, 1, SPACE_RGB, images)

        ref = one_pixel({(0, 0): 0.0, (0, 1): 0.0, (1, 0): 0.0, (1, 1): 0.0})
        # left exposures differ by 16 and 32 sample units; right is exact
        test = one_pixel({(0, 0): 16 / 255, (0, 1): 32 / 255, (1, 0): 0.0, (1, 1): 0.0})
        out = scene_psnr(ref, test)
        expect_mse = (16.0**2 + 32.0**2) / 2.0
        assert out.left == pytest.approx(10 * math.log10(65025.0 / expect_mse), abs=1e-9)
        assert math.isinf(out.right)
        assert out.per_exposure[0][0] == pytest.approx(10 * math.log10(65025.0 / 256.0), abs=1e-9)

    def test_permutation_invariant_over_exposures(self):
        rng = np.random.default_rng(1)
        stack = synth_stack(height=6, width=8, exposures=4)
        test = noisy_copy(stack, 0.02, rng)
        out = scene_psnr(stack, test)

        def permute(s):
            perm = [2, 0, 3, 1]
            images = {(v, e): s.image(v, perm[e]) for v in range(2) for e in range(4)}
            return SceneStack(s.name, 2, 4, s.width, s.height, s.space, images)

        out_p = scene_psnr(permute(stack), permute(test))
        assert out_p.left == pytest.approx(out.left, abs=1e-12)
        assert out_p.right == pytest.approx(out.right, abs=1e-12)

    def test_noise_monotone(self):
        rng = np.random.default_rng(2)
        stack = synth_stack(height=10, width=10, exposures=2)
        values = [
            scene_psnr(stack, noisy_copy(stack, sigma, rng)).left
            for sigma in (0.005, 0.02, 0.08)
        ]
        assert values[0] > values[1] > values[2]

    def test_shape_mismatch(self):
        a = synth_stack(height=6, width=6, exposures=2)
        b = synth_stack(height=6, width=8, exposures=2)
        with pytest.raises(ValueError):
            scene_psnr(a, b)

    def test_rgb_domain_requires_rgb(self):
        stack = synth_stack(height=4, width=4, exposures=2)
        coded = stack.map_images(lambda im: ColorImage(im.pixels, "ycbcr"))
        with pytest.raises(ValueError):
            scene_psnr(coded, coded, domain="rgb")
        out = scene_psnr(coded, coded, domain="coded")
        assert math.isinf(out.left)
