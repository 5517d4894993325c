"""Lossy coding of Tucker latents and low-rank frames, plus the container format.

Container layout (little-endian): magic ``TMC1``, version u8=1, path tag u8
(0 latent, 1 frames), space tag u8 (0 rgb, 1 ycbcr, 2 ipt), V u8, E u8,
H u16, W u16, N u8=4, ranks u16 x 4, qp u8, entropy tag u8, layout id u8=1,
reserved 6 bytes (byte 0 = backend kind for the frames path). Then, for
external streams only, one u32-length-prefixed command-line block; then three
u32-length-prefixed per-channel payload blocks.

Latent channel blocks hold: the factor matrices as float32 column-major,
zigzag-varint core levels (mode-0-fastest order), then the f64 quantizer
step. The qp-independent factor bytes lead so that, under the adaptive
entropy stage, streams differing only in QP share a byte-identical
compressed prefix and their sizes differ only by the core payload.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .color import SPACE_IPT, SPACE_RGB, SPACE_YCBCR, to_coding_space, to_rgb
from .entropy import TAG_RANGE, TAG_STORED, decode_ints, encode_ints, entropy_stage
from .frames import (
    BackendConfig,
    decode_frames_channel,
    encode_frames_channel,
    external_decode,
    external_encode,
)
from .sceneio import SceneStack, quantize_8bit, stack_to_tensor, tensor_to_stack
from .tucker import SolveConfig, TuckerModel, reconstruct, tucker_als
from .tensor import DenseTensor

__all__ = [
    "CodecError",
    "BackendConfigRequired",
    "PATH_LATENT",
    "PATH_FRAMES",
    "QuantizedModel",
    "quantize_core",
    "dequantize",
    "StreamHeader",
    "CompressedStream",
    "serialize_stream",
    "parse_stream",
    "EncodeConfig",
    "preset_ranks",
    "encode_stream",
    "decode_stream",
    "stream_bits",
    "BackendConfig",
]

PATH_LATENT = "latent"
PATH_FRAMES = "frames"

MAGIC = b"TMC1"
VERSION = 1
LAYOUT_HWEV = 1

_HEADER_FMT = "<4sBBBBBHHB4HBBB6s"
_HEADER_SIZE = struct.calcsize(_HEADER_FMT)

_PATH_TAGS = {PATH_LATENT: 0, PATH_FRAMES: 1}
_SPACE_TAGS = {SPACE_RGB: 0, SPACE_YCBCR: 1, SPACE_IPT: 2}
_BACKEND_TAGS = {"builtin": 0, "external": 1}
_PATH_NAMES = {v: k for k, v in _PATH_TAGS.items()}
_SPACE_NAMES = {v: k for k, v in _SPACE_TAGS.items()}
_BACKEND_NAMES = {v: k for k, v in _BACKEND_TAGS.items()}

# Preset -> multilinear ranks. RANK k grows the spatial ranks linearly (at
# spatial density RHO) and unlocks one more exposure/view component per step;
# edit here to try an alternate interpretation.
PRESET_RHO = 0.25
PRESETS = (1, 2, 3, 4, 5)


class CodecError(ValueError):
    """Malformed stream or invalid codec configuration."""


def preset_ranks(preset: int, dims: tuple[int, int, int, int]) -> tuple[int, int, int, int]:
    """Multilinear ranks for rank preset 1..5 on an (H, W, E, V) tensor."""
    if preset not in PRESETS:
        raise ValueError(f"rank preset {preset} not in {PRESETS}")
    h, w, exposures, views = dims

    def spatial(s: int) -> int:
        return min(s, max(1, math.ceil(math.ceil(preset * s / 5) * PRESET_RHO)))

    return (spatial(h), spatial(w), min(preset, exposures), min(preset, views))


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


@dataclass
class QuantizedModel:
    """Tucker model with a uniformly quantized core and float32 factors."""

    source_dims: tuple[int, ...]
    ranks: tuple[int, ...]
    step: float
    qp: int
    levels: np.ndarray  # int64, shape == ranks
    factors: list[np.ndarray]  # float32, factors[n] is source_dims[n] x ranks[n]


def quantize_core(model: TuckerModel, qp: int) -> QuantizedModel:
    """Uniform scalar quantization of the core; step doubles every 6 QP.

    step = max|core| * 2**((qp-51)/6) * 2**-8 (1.0 for an all-zero core), so
    QP 51 spends ~8 bits on the largest coefficient and each -6 QP halves the
    step exactly.
    """
    if not 0 <= qp <= 51:
        raise ValueError(f"qp {qp} out of range [0, 51]")
    core = model.core.array
    amax = float(np.max(np.abs(core))) if core.size else 0.0
    step = amax * 2.0 ** ((qp - 51) / 6.0) * 2.0 ** -8 if amax > 0.0 else 1.0
    levels = _round_half_away(core / step).astype(np.int64)
    return QuantizedModel(
        source_dims=tuple(model.source_dims),
        ranks=tuple(model.ranks),
        step=step,
        qp=qp,
        levels=levels,
        factors=[np.asarray(f, dtype=np.float32) for f in model.factors],
    )


def dequantize(q: QuantizedModel) -> TuckerModel:
    """Rebuild a TuckerModel; factor orthonormality is re-validated at the
    tolerance float32 storage allows."""
    if q.levels.shape != tuple(q.ranks):
        raise CodecError(f"core payload shape {q.levels.shape} != ranks {q.ranks}")
    for n, f in enumerate(q.factors):
        if f.shape != (q.source_dims[n], q.ranks[n]):
            raise CodecError(f"mode {n}: factor payload shape {f.shape} is corrupt")
    core = DenseTensor(q.levels.astype(np.float64) * q.step)
    model = TuckerModel(core, [f.astype(np.float64) for f in q.factors], tuple(q.source_dims))
    model.validate(ortho_tol=1e-3)
    return model


# ---------------------------------------------------------------------------
# container
# ---------------------------------------------------------------------------


@dataclass
class StreamHeader:
    path: str
    space: str
    views: int
    exposures: int
    height: int
    width: int
    ranks: tuple[int, int, int, int]
    qp: int
    entropy_tag: int
    layout: int = LAYOUT_HWEV
    backend_kind: str = "builtin"

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return (self.height, self.width, self.exposures, self.views)


@dataclass
class CompressedStream:
    header: StreamHeader
    blocks: list[bytes]
    command: str | None = None


def serialize_stream(stream: CompressedStream) -> bytes:
    h = stream.header
    reserved = bytes([_BACKEND_TAGS[h.backend_kind]]) + b"\x00" * 5
    out = bytearray(
        struct.pack(
            _HEADER_FMT,
            MAGIC,
            VERSION,
            _PATH_TAGS[h.path],
            _SPACE_TAGS[h.space],
            h.views,
            h.exposures,
            h.height,
            h.width,
            len(h.ranks),
            *h.ranks,
            h.qp,
            h.entropy_tag,
            h.layout,
            reserved,
        )
    )
    if h.backend_kind == "external":
        cmd = (stream.command or "").encode("utf-8")
        out += struct.pack("<I", len(cmd)) + cmd
    if len(stream.blocks) != 3:
        raise CodecError(f"expected 3 channel blocks, got {len(stream.blocks)}")
    for block in stream.blocks:
        out += struct.pack("<I", len(block)) + block
    return bytes(out)


def parse_stream(data: bytes) -> CompressedStream:
    if len(data) < _HEADER_SIZE:
        raise CodecError("truncated stream: header incomplete")
    fields = struct.unpack_from(_HEADER_FMT, data, 0)
    (magic, version, path_tag, space_tag, views, exposures, height, width, order) = fields[:9]
    ranks = fields[9:13]
    qp, entropy_tag, layout, reserved = fields[13:]
    if magic != MAGIC:
        raise CodecError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise CodecError(f"unsupported stream version {version}")
    if path_tag not in _PATH_NAMES:
        raise CodecError(f"unknown path tag {path_tag}")
    if space_tag not in _SPACE_NAMES:
        raise CodecError(f"unknown space tag {space_tag}")
    if order != 4 or layout != LAYOUT_HWEV:
        raise CodecError(f"unsupported tensor layout (order={order}, layout={layout})")
    if entropy_tag not in (TAG_STORED, TAG_RANGE):
        raise CodecError(f"unknown entropy stage tag {entropy_tag}")
    backend_kind = _BACKEND_NAMES.get(reserved[0])
    if backend_kind is None:
        raise CodecError(f"unknown backend kind {reserved[0]}")

    pos = _HEADER_SIZE

    def take_block() -> bytes:
        nonlocal pos
        if pos + 4 > len(data):
            raise CodecError("truncated stream: missing block length")
        (length,) = struct.unpack_from("<I", data, pos)
        pos += 4
        if pos + length > len(data):
            raise CodecError("truncated stream: block payload incomplete")
        block = data[pos : pos + length]
        pos += length
        return block

    command = None
    if backend_kind == "external":
        command = take_block().decode("utf-8")
    blocks = [take_block() for _ in range(3)]
    if pos != len(data):
        raise CodecError(f"{len(data) - pos} trailing bytes after final block")
    header = StreamHeader(
        path=_PATH_NAMES[path_tag],
        space=_SPACE_NAMES[space_tag],
        views=views,
        exposures=exposures,
        height=height,
        width=width,
        ranks=tuple(int(r) for r in ranks),
        qp=qp,
        entropy_tag=entropy_tag,
        layout=layout,
        backend_kind=backend_kind,
    )
    return CompressedStream(header, blocks, command)


def stream_bits(stream: CompressedStream) -> tuple[int, int, int]:
    """(bits_total, bits_payload, bits_overhead) for the serialized stream."""
    total = len(serialize_stream(stream)) * 8
    payload = sum(len(b) for b in stream.blocks) * 8
    return total, payload, total - payload


# ---------------------------------------------------------------------------
# latent block serialization
# ---------------------------------------------------------------------------


def _serialize_latent_channel(q: QuantizedModel) -> bytes:
    out = bytearray()
    for f in q.factors:
        out += np.asarray(f, dtype="<f4").tobytes(order="F")
    out += encode_ints(q.levels.ravel(order="F"))
    out += struct.pack("<d", q.step)
    return bytes(out)


def _deserialize_latent_channel(
    data: bytes, dims: tuple[int, ...], ranks: tuple[int, ...], qp: int
) -> QuantizedModel:
    factor_bytes = sum(s * r * 4 for s, r in zip(dims, ranks))
    if len(data) < factor_bytes + 8:
        raise CodecError("latent block truncated")
    factors = []
    pos = 0
    for s, r in zip(dims, ranks):
        f = np.frombuffer(data, dtype="<f4", count=s * r, offset=pos)
        factors.append(np.reshape(f, (s, r), order="F"))
        pos += s * r * 4
    (step,) = struct.unpack_from("<d", data, len(data) - 8)
    count = int(np.prod(ranks))
    try:
        flat, used = decode_ints(data[pos : len(data) - 8], count)
    except ValueError as exc:
        raise CodecError(f"latent block corrupt: {exc}") from exc
    if pos + used != len(data) - 8:
        raise CodecError(f"latent block has {len(data) - 8 - pos - used} trailing bytes")
    levels = np.reshape(flat, ranks, order="F")
    return QuantizedModel(tuple(dims), tuple(ranks), step, qp, levels, factors)


# ---------------------------------------------------------------------------
# stream encode / decode
# ---------------------------------------------------------------------------


@dataclass
class EncodeConfig:
    """Everything `encode_stream` needs besides the scene itself."""

    space: str = SPACE_YCBCR
    path: str = PATH_LATENT
    qp: int = 10
    preset: int | None = None
    ranks: tuple[int, int, int, int] | None = None
    entropy_tag: int = TAG_RANGE
    backend: BackendConfig = field(default_factory=BackendConfig)
    max_sweeps: int = 50
    fit_tol: float = 1e-5
    pp_enter_tol: float = 0.1
    pp_exit_tol: float = 0.3
    sequential_reduction: bool = True
    seed: int = 0

    def resolve_ranks(self, dims: tuple[int, int, int, int]) -> tuple[int, int, int, int]:
        if self.ranks is not None:
            ranks = tuple(int(r) for r in self.ranks)
            if len(ranks) != 4:
                raise ValueError(f"need 4 ranks, got {ranks}")
            for n, (r, s) in enumerate(zip(ranks, dims)):
                if not 1 <= r <= s:
                    raise ValueError(f"mode {n}: rank {r} not in [1, {s}]")
            return ranks
        if self.preset is not None:
            return preset_ranks(self.preset, dims)
        return dims  # full rank

    def solve_config(self, ranks: tuple[int, ...]) -> SolveConfig:
        return SolveConfig(
            ranks=ranks,
            max_sweeps=self.max_sweeps,
            fit_tol=self.fit_tol,
            pp_enter_tol=self.pp_enter_tol,
            pp_exit_tol=self.pp_exit_tol,
            sequential_reduction=self.sequential_reduction,
            seed=self.seed,
        )


def _solve_channels(
    coded: SceneStack, cfg: EncodeConfig, ranks: tuple[int, int, int, int]
) -> list[TuckerModel]:
    models = []
    for c in range(3):
        t = stack_to_tensor(coded, c)
        model, _ = tucker_als(t, cfg.solve_config(ranks))
        models.append(model)
    return models


def encode_stream(scene: SceneStack, cfg: EncodeConfig) -> CompressedStream:
    """Compress a scene along the latent or frames path."""
    if cfg.path not in _PATH_TAGS:
        raise ValueError(f"unknown path {cfg.path!r}")
    if cfg.space not in _SPACE_TAGS:
        raise ValueError(f"unknown color space {cfg.space!r}")
    if not 0 <= cfg.qp <= 51:
        raise ValueError(f"qp {cfg.qp} out of range [0, 51]")
    cfg.backend.validate()
    if scene.space != SPACE_RGB:
        raise ValueError("encode_stream expects an RGB scene")

    coded = scene.map_images(lambda img: to_coding_space(img, cfg.space))
    dims = (scene.height, scene.width, scene.exposures, scene.views)
    ranks = cfg.resolve_ranks(dims)
    models = _solve_channels(coded, cfg, ranks)

    backend_kind = "builtin"
    command = None
    if cfg.path == PATH_LATENT:
        entropy_tag = cfg.entropy_tag
        blocks = [
            entropy_stage(_serialize_latent_channel(quantize_core(m, cfg.qp)), entropy_tag, "encode")
            for m in models
        ]
    else:
        recon = [reconstruct(m) for m in models]
        frames8 = np.stack([quantize_8bit(r.array) for r in recon], axis=4)
        if cfg.backend.kind == "external":
            backend_kind = "external"
            entropy_tag = TAG_STORED
            backend = replace(cfg.backend, qp=cfg.qp)
            payload, command = external_encode(frames8, backend)
            blocks = [payload, b"", b""]
        else:
            entropy_tag = cfg.entropy_tag
            blocks = [
                entropy_stage(encode_frames_channel(frames8[:, :, :, :, c], cfg.qp), entropy_tag, "encode")
                for c in range(3)
            ]

    header = StreamHeader(
        path=cfg.path,
        space=cfg.space,
        views=scene.views,
        exposures=scene.exposures,
        height=scene.height,
        width=scene.width,
        ranks=ranks,
        qp=cfg.qp,
        entropy_tag=entropy_tag,
        backend_kind=backend_kind,
    )
    return CompressedStream(header, blocks, command)


def decode_stream(
    stream: CompressedStream, backend: BackendConfig | None = None, name: str = "scene"
) -> SceneStack:
    """Reconstruct the RGB scene a stream encodes.

    External frames streams need a BackendConfig with a decode_template.
    """
    h = stream.header
    dims = h.dims
    if h.path == PATH_LATENT:
        tensors = []
        for block in stream.blocks:
            raw = entropy_stage(block, h.entropy_tag, "decode")
            q = _deserialize_latent_channel(raw, dims, h.ranks, h.qp)
            tensors.append(reconstruct(dequantize(q)))
        coded = tensor_to_stack(tensors, h.space, name)
    else:
        if h.backend_kind == "external":
            if backend is None:
                raise BackendConfigRequired(
                    "stream was coded by an external backend; pass a BackendConfig "
                    "with decode_template to decode it"
                )
            backend = replace(backend, qp=h.qp)
            frames8 = external_decode(stream.blocks[0], backend, dims)
        else:
            planes = [
                decode_frames_channel(entropy_stage(b, h.entropy_tag, "decode"), dims, h.qp)
                for b in stream.blocks
            ]
            frames8 = np.stack(planes, axis=4)
        tensors = [
            DenseTensor(frames8[:, :, :, :, c].astype(np.float64) / 255.0) for c in range(3)
        ]
        coded = tensor_to_stack(tensors, h.space, name)
    return coded.map_images(to_rgb)


class BackendConfigRequired(CodecError):
    """Raised when decoding an external stream without a decode template."""
