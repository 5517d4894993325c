# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: adaptive byte range coder and MED inverse prediction.

Bit-identical twin of tmcodec._kernels_py; see that module for the format
description.
"""

import numpy as np

cimport numpy as cnp
from libc.stdint cimport int64_t, uint8_t, uint32_t, uint64_t

cnp.import_array()

BACKEND = "c"

cdef enum:
    NSYM = 256
    INC = 32

cdef uint64_t TOP = 1 << 24
cdef uint64_t BOT = 1 << 16
cdef uint64_t MASK = 0xFFFFFFFF
cdef uint64_t MAX_TOTAL = 1 << 16


def rc_encode(data: bytes) -> bytes:
    """Range-code a byte string; decode with rc_decode(out, len(data))."""
    cdef const uint8_t[::1] src = data
    cdef Py_ssize_t n = src.shape[0]
    # worst case is ~1 byte out per byte in plus flush; 4n is far beyond it
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] outbuf = np.empty(4 * n + 16, dtype=np.uint8)
    cdef uint8_t[::1] out = outbuf
    cdef Py_ssize_t pos = 0

    cdef uint32_t counts[NSYM]
    cdef uint64_t total = NSYM
    cdef int i
    for i in range(NSYM):
        counts[i] = 1

    cdef uint64_t low = 0
    cdef uint64_t rng = MASK
    cdef uint64_t cum
    cdef int sym
    cdef Py_ssize_t k

    for k in range(n):
        sym = src[k]
        cum = 0
        for i in range(sym):
            cum += counts[i]
        rng //= total
        low += cum * rng
        rng *= counts[sym]
        while True:
            if (low ^ (low + rng)) < TOP:
                pass
            elif rng < BOT:
                rng = (0 - low) & (BOT - 1)
            else:
                break
            out[pos] = <uint8_t> ((low >> 24) & 0xFF)
            pos += 1
            rng = (rng << 8) & MASK
            low = (low << 8) & MASK
        counts[sym] += INC
        total += INC
        if total >= MAX_TOTAL:
            total = 0
            for i in range(NSYM):
                counts[i] = (counts[i] + 1) >> 1
                total += counts[i]

    for i in range(4):
        out[pos] = <uint8_t> ((low >> 24) & 0xFF)
        pos += 1
        low = (low << 8) & MASK
    return bytes(outbuf[:pos].tobytes())


def rc_decode(data: bytes, n: int) -> bytes:
    """Decode n symbols produced by rc_encode."""
    cdef const uint8_t[::1] src = data
    cdef Py_ssize_t size = src.shape[0]
    cdef Py_ssize_t count = n
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] outbuf = np.empty(max(count, 1), dtype=np.uint8)
    cdef uint8_t[::1] out = outbuf

    cdef uint32_t counts[NSYM]
    cdef uint64_t total = NSYM
    cdef int i
    for i in range(NSYM):
        counts[i] = 1

    cdef uint64_t low = 0
    cdef uint64_t rng = MASK
    cdef uint64_t code = 0
    cdef Py_ssize_t pos = 0
    cdef uint64_t r, v, cum, c
    cdef int sym
    cdef Py_ssize_t k

    for i in range(4):
        code = ((code << 8) | (src[pos] if pos < size else 0)) & MASK
        pos += 1

    for k in range(count):
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
            if (low ^ (low + rng)) < TOP:
                pass
            elif rng < BOT:
                rng = (0 - low) & (BOT - 1)
            else:
                break
            code = ((code << 8) | (src[pos] if pos < size else 0)) & MASK
            pos += 1
            rng = (rng << 8) & MASK
            low = (low << 8) & MASK
        out[k] = <uint8_t> sym
        counts[sym] += INC
        total += INC
        if total >= MAX_TOTAL:
            total = 0
            for i in range(NSYM):
                counts[i] = (counts[i] + 1) >> 1
                total += counts[i]
    return bytes(outbuf[:count].tobytes())


def med_unpredict(residuals) -> np.ndarray:
    """Invert MED prediction: levels from residuals, row-major scan order."""
    cdef cnp.ndarray[cnp.int64_t, ndim=2] res = np.ascontiguousarray(residuals, dtype=np.int64)
    cdef Py_ssize_t h = res.shape[0]
    cdef Py_ssize_t w = res.shape[1]
    cdef cnp.ndarray[cnp.int64_t, ndim=2] lv = np.empty((h, w), dtype=np.int64)
    cdef Py_ssize_t i, j
    cdef int64_t left, a, b, g, pred, tmp

    left = 0
    for j in range(w):
        left += res[0, j]
        lv[0, j] = left
    for i in range(1, h):
        left = lv[i - 1, 0] + res[i, 0]
        lv[i, 0] = left
        for j in range(1, w):
            a = left
            b = lv[i - 1, j]
            g = a + b - lv[i - 1, j - 1]
            if a > b:
                tmp = a
                a = b
                b = tmp
            if g < a:
                pred = a
            elif g > b:
                pred = b
            else:
                pred = g
            left = res[i, j] + pred
            lv[i, j] = left
    return lv
