"""Color transforms between gamma-encoded sRGB and the two coding spaces.

Y'CbCr follows ITU-R BT.601 luma weights in full range. IPT follows Ebner &
Fairchild (1998): sRGB EOTF to linear light, sRGB/D65 primaries to XYZ, the
Hunt-Pointer-Estevez matrix to LMS, a signed 0.43-power nonlinearity, then
the fixed opponent matrix. All transforms are pixelwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ColorImage",
    "SPACE_RGB",
    "SPACE_YCBCR",
    "SPACE_IPT",
    "rgb_to_ycbcr",
    "ycbcr_to_rgb",
    "rgb_to_ipt",
    "ipt_to_rgb",
    "to_coding_space",
    "to_rgb",
]

SPACE_RGB = "rgb"
SPACE_YCBCR = "ycbcr"
SPACE_IPT = "ipt"

# camera transfer function of the RGB input; v1 supports sRGB only
RGB_ENCODINGS = ("srgb",)


def _check_encoding(encoding: str) -> None:
    if encoding not in RGB_ENCODINGS:
        raise ValueError(f"unsupported RGB encoding {encoding!r}; supported: {RGB_ENCODINGS}")

# BT.601 luma weights (full-range encoding).
_KR, _KG, _KB = 0.299, 0.587, 0.114

# sRGB (IEC 61966-2-1) linear RGB -> CIE XYZ, D65 white.
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)

# Hunt-Pointer-Estevez XYZ -> LMS as printed in Ebner & Fairchild (1998),
# rows renormalized to this file's exact D65 white so neutral axis maps to
# exactly equal LMS (the 4-decimal print leaves ~1.6e-5 residual chroma).
_HPE_RAW = np.array(
    [
        [0.4002, 0.7075, -0.0807],
        [-0.2280, 1.1500, 0.0612],
        [0.0000, 0.0000, 0.9184],
    ]
)
_D65_WHITE = _RGB_TO_XYZ @ np.ones(3)
_XYZ_TO_LMS = _HPE_RAW / (_HPE_RAW @ _D65_WHITE)[:, None]

# LMS' -> IPT opponent matrix, Ebner & Fairchild (1998). Chroma rows sum to
# zero, so equal LMS gives exactly P = T = 0.
_LMS_TO_IPT = np.array(
    [
        [0.4000, 0.4000, 0.2000],
        [4.4550, -4.8510, 0.3960],
        [0.8056, 0.3572, -1.1628],
    ]
)

_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)
_LMS_TO_XYZ = np.linalg.inv(_XYZ_TO_LMS)
_IPT_TO_LMS = np.linalg.inv(_LMS_TO_IPT)

_IPT_GAMMA = 0.43


@dataclass
class ColorImage:
    """H x W x 3 float64 pixels with a space tag the transforms enforce."""

    pixels: np.ndarray
    space: str = SPACE_RGB

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueError(f"expected HxWx3 pixels, got shape {self.pixels.shape}")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def plane(self, c: int) -> np.ndarray:
        return self.pixels[:, :, c]


def _require_space(img: ColorImage, space: str, op: str) -> None:
    if img.space != space:
        raise ValueError(f"{op} expects a {space} image, got {img.space}")


def rgb_to_ycbcr(img: ColorImage) -> ColorImage:
    """Full-range BT.601: luma plus offset blue/red difference chroma."""
    _require_space(img, SPACE_RGB, "rgb_to_ycbcr")
    r, g, b = img.pixels[:, :, 0], img.pixels[:, :, 1], img.pixels[:, :, 2]
    y = _KR * r + _KG * g + _KB * b
    cb = 0.5 * (b - y) / (1.0 - _KB) + 0.5
    cr = 0.5 * (r - y) / (1.0 - _KR) + 0.5
    out = np.clip(np.stack([y, cb, cr], axis=2), 0.0, 1.0)
    return ColorImage(out, SPACE_YCBCR)


def ycbcr_to_rgb(img: ColorImage) -> ColorImage:
    _require_space(img, SPACE_YCBCR, "ycbcr_to_rgb")
    y, cb, cr = img.pixels[:, :, 0], img.pixels[:, :, 1], img.pixels[:, :, 2]
    r = y + 2.0 * (1.0 - _KR) * (cr - 0.5)
    b = y + 2.0 * (1.0 - _KB) * (cb - 0.5)
    g = (y - _KR * r - _KB * b) / _KG
    return ColorImage(np.stack([r, g, b], axis=2), SPACE_RGB)


def _srgb_eotf(v: np.ndarray) -> np.ndarray:
    """Gamma-encoded sRGB to linear light."""
    return np.where(v > 0.04045, ((v + 0.055) / 1.055) ** 2.4, v / 12.92)


def _srgb_oetf(v: np.ndarray) -> np.ndarray:
    """Linear light to gamma-encoded sRGB."""
    return np.where(v > 0.0031308, 1.055 * np.maximum(v, 0.0) ** (1.0 / 2.4) - 0.055, 12.92 * v)


def _signed_pow(v: np.ndarray, p: float) -> np.ndarray:
    return np.sign(v) * np.abs(v) ** p


def rgb_to_ipt(img: ColorImage, encoding: str = "srgb") -> ColorImage:
    """IPT with I in [0,1] and chroma encoded as 0.5*P + 0.5, 0.5*T + 0.5."""
    _require_space(img, SPACE_RGB, "rgb_to_ipt")
    _check_encoding(encoding)
    lin = _srgb_eotf(img.pixels)
    xyz = lin @ _RGB_TO_XYZ.T
    lms = xyz @ _XYZ_TO_LMS.T
    lmsp = _signed_pow(lms, _IPT_GAMMA)
    ipt = lmsp @ _LMS_TO_IPT.T
    out = np.empty_like(ipt)
    out[:, :, 0] = ipt[:, :, 0]
    out[:, :, 1] = 0.5 * ipt[:, :, 1] + 0.5
    out[:, :, 2] = 0.5 * ipt[:, :, 2] + 0.5
    return ColorImage(out, SPACE_IPT)


def ipt_to_rgb(img: ColorImage, count_clamped: bool = False, encoding: str = "srgb"):
    """Algebraic inverse of :func:`rgb_to_ipt`.

    Out-of-gamut pixels are clamped to [0,1] in linear RGB; pass
    ``count_clamped=True`` to also get the number of clamped pixels.
    """
    _require_space(img, SPACE_IPT, "ipt_to_rgb")
    _check_encoding(encoding)
    ipt = np.empty_like(img.pixels)
    ipt[:, :, 0] = img.pixels[:, :, 0]
    ipt[:, :, 1] = 2.0 * (img.pixels[:, :, 1] - 0.5)
    ipt[:, :, 2] = 2.0 * (img.pixels[:, :, 2] - 0.5)
    lmsp = ipt @ _IPT_TO_LMS.T
    lms = _signed_pow(lmsp, 1.0 / _IPT_GAMMA)
    xyz = lms @ _LMS_TO_XYZ.T
    lin = xyz @ _XYZ_TO_RGB.T
    clamped = np.clip(lin, 0.0, 1.0)
    n_clamped = int(np.count_nonzero(np.any(clamped != lin, axis=2)))
    out = ColorImage(_srgb_oetf(clamped), SPACE_RGB)
    if count_clamped:
        return out, n_clamped
    return out


def to_coding_space(img: ColorImage, space: str) -> ColorImage:
    """RGB image to the requested coding space (identity for rgb)."""
    if space == SPACE_RGB:
        _require_space(img, SPACE_RGB, "to_coding_space")
        return img
    if space == SPACE_YCBCR:
        return rgb_to_ycbcr(img)
    if space == SPACE_IPT:
        return rgb_to_ipt(img)
    raise ValueError(f"unknown color space {space!r}")


def to_rgb(img: ColorImage) -> ColorImage:
    """Inverse of :func:`to_coding_space`."""
    if img.space == SPACE_RGB:
        return img
    if img.space == SPACE_YCBCR:
        return ycbcr_to_rgb(img)
    if img.space == SPACE_IPT:
        return ipt_to_rgb(img)
    raise ValueError(f"unknown color space {img.space!r}")
