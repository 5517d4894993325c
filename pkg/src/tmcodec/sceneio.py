"""Multi-exposure stereo scene ingestion and image file handling.

A scene directory holds files named ``{view}_{exposure}.png`` (or ``.ppm``)
with view in {left, right} and exposure 0..E-1; E is inferred. Per-channel
tensors use the fixed (height, width, exposure, view) mode order recorded in
every bitstream header.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .color import SPACE_RGB, ColorImage
from .tensor import DenseTensor

__all__ = [
    "SceneStack",
    "VIEW_NAMES",
    "load_scene",
    "stack_to_tensor",
    "tensor_to_stack",
    "read_image",
    "write_image",
    "write_scene",
]

VIEW_NAMES = ("left", "right")
DEFAULT_PATTERN = "{view}_{exposure}"
_EXTENSIONS = (".png", ".ppm")

# fixed v1 mode order of the per-channel scene tensors; the container header
# records it as layout id 1
TENSOR_LAYOUT = ("height", "width", "exposure", "view")


@dataclass
class SceneStack:
    """Loaded multi-exposure stereo scene: views x exposures color images."""

    name: str
    views: int
    exposures: int
    width: int
    height: int
    space: str
    images: dict[tuple[int, int], ColorImage] = field(default_factory=dict)

    def image(self, view: int, exposure: int) -> ColorImage:
        return self.images[(view, exposure)]

    def validate(self) -> None:
        if len(self.images) != self.views * self.exposures:
            raise ValueError(
                f"scene table incomplete: {len(self.images)} of {self.views * self.exposures}"
            )
        for (v, e), img in self.images.items():
            if img.space != self.space:
                raise ValueError(f"image ({v},{e}) space {img.space} != scene space {self.space}")
            if (img.height, img.width) != (self.height, self.width):
                raise ValueError(
                    f"image ({v},{e}) is {img.width}x{img.height}, "
                    f"scene is {self.width}x{self.height}"
                )

    def map_images(self, fn) -> "SceneStack":
        """New stack with fn applied to every image (space tag from result)."""
        images = {k: fn(img) for k, img in self.images.items()}
        space = next(iter(images.values())).space
        return SceneStack(
            self.name, self.views, self.exposures, self.width, self.height, space, images
        )


def read_image(path: str | Path) -> ColorImage:
    """8-bit RGB PNG or binary PPM to a [0,1] RGB ColorImage."""
    path = Path(path)
    if path.suffix.lower() == ".ppm":
        samples = _read_ppm(path)
    else:
        with Image.open(path) as im:
            samples = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return ColorImage(samples.astype(np.float64) / 255.0, SPACE_RGB)


def write_image(img: ColorImage, path: str | Path, fmt: str | None = None) -> None:
    """Write as 8-bit PNG or binary PPM; samples round half away from zero."""
    path = Path(path)
    if fmt is None:
        fmt = "ppm" if path.suffix.lower() == ".ppm" else "png"
    samples = quantize_8bit(img.pixels)
    if fmt == "ppm":
        _write_ppm(path, samples)
    elif fmt == "png":
        Image.fromarray(samples, mode="RGB").save(path, format="PNG")
    else:
        raise ValueError(f"unsupported image format {fmt!r}")


def quantize_8bit(values: np.ndarray) -> np.ndarray:
    """[0,1] floats to uint8: clamp, x255, round half away from zero."""
    v = np.clip(values, 0.0, 1.0) * 255.0
    return np.floor(v + 0.5).astype(np.uint8)


def _read_ppm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    # header: P6, whitespace/comment separated width height maxval, single ws, raster
    tokens = []
    pos = 0
    while len(tokens) < 4:
        m = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)").match(data, pos)
        if not m:
            raise ValueError(f"{path}: truncated PPM header")
        tokens.append(m.group(1))
        pos = m.end()
    if tokens[0] != b"P6":
        raise ValueError(f"{path}: not a binary PPM (P6) file")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 255:
        raise ValueError(f"{path}: only maxval 255 supported, got {maxval}")
    pos += 1  # single whitespace byte before raster
    raster = data[pos : pos + width * height * 3]
    if len(raster) != width * height * 3:
        raise ValueError(f"{path}: truncated PPM raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3)


def _write_ppm(path: Path, samples: np.ndarray) -> None:
    h, w = samples.shape[:2]
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(np.ascontiguousarray(samples, dtype=np.uint8).tobytes())


def _find_file(root: Path, pattern: str, view: str, exposure: int) -> Path | None:
    stem = pattern.format(view=view, exposure=exposure)
    if "." in Path(stem).name:
        p = root / stem
        return p if p.exists() else None
    for ext in _EXTENSIONS:
        p = root / (stem + ext)
        if p.exists():
            return p
    return None


def load_scene(path: str | Path, pattern: str = DEFAULT_PATTERN) -> SceneStack:
    """Load a scene directory; E is inferred from consecutive left exposures."""
    root = Path(path)
    if not root.is_dir():
        raise FileNotFoundError(f"scene directory not found: {root}")
    exposures = 0
    while _find_file(root, pattern, "left", exposures) is not None:
        exposures += 1
    if exposures == 0:
        raise FileNotFoundError(f"no images matching {pattern!r} for view 'left' in {root}")

    images: dict[tuple[int, int], ColorImage] = {}
    for v, view in enumerate(VIEW_NAMES):
        for e in range(exposures):
            p = _find_file(root, pattern, view, e)
            if p is None:
                raise FileNotFoundError(f"missing scene file for (view={view}, exposure={e})")
            images[(v, e)] = read_image(p)

    first = images[(0, 0)]
    for (v, e), img in images.items():
        if (img.height, img.width) != (first.height, first.width):
            raise ValueError(
                f"mixed resolutions: ({VIEW_NAMES[v]},{e}) is {img.width}x{img.height}, "
                f"expected {first.width}x{first.height}"
            )
    stack = SceneStack(
        name=root.name,
        views=len(VIEW_NAMES),
        exposures=exposures,
        width=first.width,
        height=first.height,
        space=SPACE_RGB,
        images=images,
    )
    stack.validate()
    return stack


def stack_to_tensor(stack: SceneStack, channel: int) -> DenseTensor:
    """One channel of the scene as an order-4 (H, W, E, V) tensor."""
    if not 0 <= channel <= 2:
        raise ValueError(f"channel {channel} out of range [0, 2]")
    arr = np.empty((stack.height, stack.width, stack.exposures, stack.views), dtype=np.float64)
    for v in range(stack.views):
        for e in range(stack.exposures):
            arr[:, :, e, v] = stack.image(v, e).plane(channel)
    return DenseTensor(arr, check_finite=True)


def tensor_to_stack(
    channels: list[DenseTensor], space: str, name: str = "scene"
) -> SceneStack:
    """Inverse of stack_to_tensor over the three channel tensors.

    Values are kept as-is (clamping happens on image write-out only); NaN or
    Inf entries are rejected.
    """
    if len(channels) != 3:
        raise ValueError(f"expected 3 channel tensors, got {len(channels)}")
    dims = channels[0].dims
    if len(dims) != 4:
        raise ValueError(f"expected order-4 tensors, got dims {dims}")
    for c, t in enumerate(channels):
        if t.dims != dims:
            raise ValueError(f"channel {c} dims {t.dims} != channel 0 dims {dims}")
        if not np.isfinite(t.array).all():
            raise ValueError(f"channel {c} contains non-finite entries")
    h, w, exposures, views = dims
    images: dict[tuple[int, int], ColorImage] = {}
    for v in range(views):
        for e in range(exposures):
            px = np.stack([channels[c].array[:, :, e, v] for c in range(3)], axis=2)
            images[(v, e)] = ColorImage(px, space)
    return SceneStack(name, views, exposures, w, h, space, images)


def write_scene(stack: SceneStack, outdir: str | Path, fmt: str = "png") -> list[Path]:
    """Write every image per the scene naming convention; returns the paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    for v in range(stack.views):
        for e in range(stack.exposures):
            p = outdir / f"{VIEW_NAMES[v]}_{e}.{fmt}"
            write_image(stack.image(v, e), p, fmt=fmt)
            paths.append(p)
    return paths
