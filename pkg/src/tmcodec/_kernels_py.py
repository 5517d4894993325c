"""Pure-Python kernels: adaptive byte range coder and MED inverse prediction.

Reference implementation of the hot loops; `tmcodec._kernels` is the compiled
twin and must produce bit-identical output. The coder is a carryless 32-bit
range coder (Subbotin style) driven by an order-0 adaptive model: 256 counts
initialized to 1, symbol increment 32, every count halved rounding up (never
below 1) when the total reaches 2**16.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

_TOP = 1 << 24
_BOT = 1 << 16
_MASK = 0xFFFFFFFF
_NSYM = 256
_INC = 32
_MAX_TOTAL = 1 << 16


def rc_encode(data: bytes) -> bytes:
    """Range-code a byte string; decode with rc_decode(out, len(data))."""
    counts = [1] * _NSYM
    total = _NSYM
    low = 0
    rng = _MASK
    out = bytearray()

    for sym in data:
        cum = sum(counts[:sym])
        rng //= total
        low += cum * rng
        rng *= counts[sym]
        while True:
            if (low ^ (low + rng)) < _TOP:
                pass
            elif rng < _BOT:
                rng = (-low) & (_BOT - 1)
            else:
                break
            out.append((low >> 24) & 0xFF)
            rng = (rng << 8) & _MASK
            low = (low << 8) & _MASK
        counts[sym] += _INC
        total += _INC
        if total >= _MAX_TOTAL:
            total = 0
            for i in range(_NSYM):
                counts[i] = (counts[i] + 1) >> 1
                total += counts[i]

    for _ in range(4):
        out.append((low >> 24) & 0xFF)
        low = (low << 8) & _MASK
    return bytes(out)


def rc_decode(data: bytes, n: int) -> bytes:
    """Decode n symbols produced by rc_encode."""
    counts = [1] * _NSYM
    total = _NSYM
    low = 0
    rng = _MASK
    code = 0
    pos = 0
    size = len(data)

    for _ in range(4):
        code = ((code << 8) | (data[pos] if pos < size else 0)) & _MASK
        pos += 1

    out = bytearray(n)
    for k in range(n):
        r = rng // total
        v = (code - low) // r
        if v >= total:
            v = total - 1
        cum = 0
        sym = 0
        c = counts[0]
        while cum + c <= v:
            cum += c
            sym += 1
            c = counts[sym]
        low += cum * r
        rng = r * c
        while True:
            if (low ^ (low + rng)) < _TOP:
                pass
            elif rng < _BOT:
                rng = (-low) & (_BOT - 1)
            else:
                break
            code = ((code << 8) | (data[pos] if pos < size else 0)) & _MASK
            pos += 1
            rng = (rng << 8) & _MASK
            low = (low << 8) & _MASK
        out[k] = sym
        counts[sym] += _INC
        total += _INC
        if total >= _MAX_TOTAL:
            total = 0
            for i in range(_NSYM):
                counts[i] = (counts[i] + 1) >> 1
                total += counts[i]
    return bytes(out)


def med_unpredict(residuals: np.ndarray) -> np.ndarray:
    """Invert MED prediction: levels from residuals, row-major scan order.

    The predictor is the median of (left, above, left+above-aboveleft) with
    missing neighbors taken as 0, matching the vectorized forward pass.
    """
    res = np.ascontiguousarray(residuals, dtype=np.int64)
    h, w = res.shape
    lv = np.empty((h, w), dtype=np.int64)
    lv[0, :] = np.cumsum(res[0, :])
    for i in range(1, h):
        above_row = lv[i - 1]
        row = res[i]
        out_row = lv[i]
        left = above_row[0] + row[0]  # pred at col 0 is the sample above
        out_row[0] = left
        for j in range(1, w):
            a = left
            b = above_row[j]
            g = a + b - above_row[j - 1]
            if a > b:
                a, b = b, a
            # median of (a, b, g) with a <= b
            pred = a if g < a else (b if g > b else g)
            left = row[j] + pred
            out_row[j] = left
    return lv
