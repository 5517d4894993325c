"""Frame-domain coding: builtin predictive codec and the external-encoder adapter.

The builtin codec is the self-contained stand-in for a 3D video backend. It
quantizes 8-bit planes with a step that doubles every 6 QP, exploits the
three redundancy axes of the stereo multi-exposure stack - spatial (MED
prediction), cross-exposure (delta against the previous exposure of the same
view), cross-view (delta against the same exposure of the left view) - and
serializes residuals as zigzag varints. Everything is integer arithmetic, so
the decoder reconstructs the encoder's output bit-exactly; QP 0 is lossless.

The external adapter shells out to a user-supplied command template over a
raw I420 multi-view sequence (frame order: exposure-major, view-minor; 4:2:0
chroma by 2x2 mean, replicated back up on decode).
"""

from __future__ import annotations

import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .entropy import decode_ints, encode_ints

__all__ = [
    "BackendConfig",
    "BackendError",
    "quant_step",
    "med_predict",
    "encode_frames_channel",
    "decode_frames_channel",
    "pack_i420",
    "unpack_i420",
    "external_encode",
    "external_decode",
]


class BackendError(RuntimeError):
    """Backend frame coding failed (bad config, spawn failure, bad exit)."""


@dataclass
class BackendConfig:
    """Frame-coding backend selection.

    ``kind`` is "builtin" or "external". External backends give a command
    template with {in}, {out} and {qp} placeholders; decoding an external
    stream additionally needs ``decode_template``.
    """

    kind: str = "builtin"
    qp: int = 0
    template: str | None = None
    decode_template: str | None = None
    timeout: float = 600.0
    scratch: str | None = None

    def validate(self) -> None:
        if self.kind not in ("builtin", "external"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if not 0 <= self.qp <= 51:
            raise ValueError(f"qp {self.qp} out of range [0, 51]")
        if (self.template is not None) != (self.kind == "external"):
            raise ValueError("command template must be given exactly for external backends")


def quant_step(qp: int) -> int:
    """Integer sample quantization step: 2**(qp/6) rounded to nearest, >= 1."""
    if not 0 <= qp <= 51:
        raise ValueError(f"qp {qp} out of range [0, 51]")
    return max(1, int(np.floor(2.0 ** (qp / 6.0) + 0.5)))


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def med_predict(levels: np.ndarray) -> np.ndarray:
    """Forward MED prediction residuals (vectorized; inverse is in kernels).

    Predictor is the median of (left, above, left+above-aboveleft), missing
    neighbors taken as 0, which degenerates to plain left/above prediction on
    the first row/column.
    """
    lv = np.asarray(levels, dtype=np.int64)
    a = np.zeros_like(lv)
    a[:, 1:] = lv[:, :-1]
    b = np.zeros_like(lv)
    b[1:, :] = lv[:-1, :]
    c = np.zeros_like(lv)
    c[1:, 1:] = lv[:-1, :-1]
    g = a + b - c
    pred = np.minimum(np.maximum(g, np.minimum(a, b)), np.maximum(a, b))
    return lv - pred


def _plane_order(exposures: int, views: int):
    # left view first so its planes are decoded before anything references them
    for v in range(views):
        for e in range(exposures):
            yield v, e


def _reference(levels: dict[tuple[int, int], np.ndarray], v: int, e: int) -> np.ndarray | None:
    if v > 0:
        return levels[(0, e)]
    if e > 0:
        return levels[(0, e - 1)]
    return None


def encode_frames_channel(frames: np.ndarray, qp: int) -> bytes:
    """Code one channel's (H, W, E, V) uint8 stack; pair with decode_frames_channel."""
    if frames.ndim != 4:
        raise ValueError(f"expected (H, W, E, V) frames, got shape {frames.shape}")
    step = quant_step(qp)
    h, w, exposures, views = frames.shape
    levels: dict[tuple[int, int], np.ndarray] = {}
    out = bytearray()
    for v, e in _plane_order(exposures, views):
        lv = _round_half_away(frames[:, :, e, v].astype(np.float64) / step).astype(np.int64)
        levels[(v, e)] = lv
        ref = _reference(levels, v, e)
        coded = lv if ref is None else lv - ref
        residuals = med_predict(coded)
        out += encode_ints(residuals.ravel())
    return bytes(out)


def decode_frames_channel(data: bytes, dims: tuple[int, int, int, int], qp: int) -> np.ndarray:
    """Inverse of encode_frames_channel; returns the uint8 reconstruction."""
    h, w, exposures, views = dims
    step = quant_step(qp)
    levels: dict[tuple[int, int], np.ndarray] = {}
    frames = np.empty((h, w, exposures, views), dtype=np.uint8)
    offset = 0
    view = memoryview(data)
    for v, e in _plane_order(exposures, views):
        residuals, used = decode_ints(view[offset:], h * w)
        offset += used
        coded = kernels.med_unpredict(residuals.reshape(h, w))
        ref = _reference(levels, v, e)
        lv = coded if ref is None else coded + ref
        levels[(v, e)] = lv
        frames[:, :, e, v] = np.clip(lv * step, 0, 255).astype(np.uint8)
    return frames


# ---------------------------------------------------------------------------
# external backend
# ---------------------------------------------------------------------------


def _down2(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    pe = np.pad(plane.astype(np.float64), ((0, h % 2), (0, w % 2)), mode="edge")
    m = (pe[0::2, 0::2] + pe[0::2, 1::2] + pe[1::2, 0::2] + pe[1::2, 1::2]) / 4.0
    return np.floor(m + 0.5).astype(np.uint8)


def _up2(plane: np.ndarray, h: int, w: int) -> np.ndarray:
    return np.repeat(np.repeat(plane, 2, axis=0), 2, axis=1)[:h, :w]


def pack_i420(frames: np.ndarray) -> bytes:
    """(H, W, E, V, 3) uint8 stack to a raw I420 multi-view sequence."""
    if frames.ndim != 5 or frames.shape[4] != 3:
        raise ValueError(f"expected (H, W, E, V, 3) frames, got shape {frames.shape}")
    h, w, exposures, views, _ = frames.shape
    out = bytearray()
    for e in range(exposures):
        for v in range(views):
            out += np.ascontiguousarray(frames[:, :, e, v, 0]).tobytes()
            out += _down2(frames[:, :, e, v, 1]).tobytes()
            out += _down2(frames[:, :, e, v, 2]).tobytes()
    return bytes(out)


def unpack_i420(data: bytes, dims: tuple[int, int, int, int]) -> np.ndarray:
    """Inverse layout of pack_i420 (chroma replicated back to full size)."""
    h, w, exposures, views = dims
    ch, cw = (h + 1) // 2, (w + 1) // 2
    frame_bytes = h * w + 2 * ch * cw
    need = frame_bytes * exposures * views
    if len(data) != need:
        raise ValueError(f"I420 payload is {len(data)} bytes, expected {need}")
    frames = np.empty((h, w, exposures, views, 3), dtype=np.uint8)
    pos = 0
    buf = np.frombuffer(data, dtype=np.uint8)
    for e in range(exposures):
        for v in range(views):
            frames[:, :, e, v, 0] = buf[pos : pos + h * w].reshape(h, w)
            pos += h * w
            frames[:, :, e, v, 1] = _up2(buf[pos : pos + ch * cw].reshape(ch, cw), h, w)
            pos += ch * cw
            frames[:, :, e, v, 2] = _up2(buf[pos : pos + ch * cw].reshape(ch, cw), h, w)
            pos += ch * cw
    return frames


def _run_backend(template: str, in_path: Path, out_path: Path, qp: int, timeout: float) -> str:
    tokens = [
        tok.replace("{in}", str(in_path)).replace("{out}", str(out_path)).replace("{qp}", str(qp))
        for tok in shlex.split(template)
    ]
    command = shlex.join(tokens)
    try:
        proc = subprocess.run(
            tokens, capture_output=True, timeout=timeout, check=False
        )
    except FileNotFoundError as exc:
        raise BackendError(f"backend spawn failed ({exc}): {command}") from exc
    except subprocess.TimeoutExpired as exc:
        raise BackendError(f"backend timed out after {timeout}s: {command}") from exc
    if proc.returncode != 0:
        tail = proc.stderr.decode(errors="replace")[-500:]
        raise BackendError(f"backend exited {proc.returncode}: {command}\n{tail}")
    if not out_path.exists():
        raise BackendError(f"backend produced no output file: {command}")
    return command


def external_encode(frames: np.ndarray, cfg: BackendConfig) -> tuple[bytes, str]:
    """Run the external encode template over the packed frames.

    Returns (payload bytes, exact command line) so the command can be
    recorded in the stream for reproducibility.
    """
    cfg.validate()
    if cfg.kind != "external":
        raise ValueError("external_encode requires an external backend config")
    raw = pack_i420(frames)
    with tempfile.TemporaryDirectory(dir=cfg.scratch) as tmp:
        in_path = Path(tmp) / "in.yuv"
        out_path = Path(tmp) / "out.bin"
        in_path.write_bytes(raw)
        command = _run_backend(cfg.template, in_path, out_path, cfg.qp, cfg.timeout)
        return out_path.read_bytes(), command


def external_decode(
    payload: bytes, cfg: BackendConfig, dims: tuple[int, int, int, int]
) -> np.ndarray:
    """Run the external decode template and unpack the resulting I420 frames."""
    cfg.validate()
    if cfg.decode_template is None:
        raise BackendError("decoding an external stream requires decode_template")
    with tempfile.TemporaryDirectory(dir=cfg.scratch) as tmp:
        in_path = Path(tmp) / "in.bin"
        out_path = Path(tmp) / "out.yuv"
        in_path.write_bytes(payload)
        _run_backend(cfg.decode_template, in_path, out_path, cfg.qp, cfg.timeout)
        return unpack_i420(out_path.read_bytes(), dims)
