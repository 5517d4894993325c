"""Kernel backend selection: compiled extension if built, pure Python otherwise.

Both backends implement the same integer algorithms and produce bit-identical
bytes. `active_backend()` reports which one is in use; `set_backend()` forces
one (used by the parity tests and the benchmark), and setting
``TMCODEC_KERNELS=python`` in the environment skips the compiled twin at
import time.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _kernels_py

_kernels = None
if os.environ.get("TMCODEC_KERNELS", "") != "python":
    try:  # compiled twin is optional
        from . import _kernels  # type: ignore[attr-defined,no-redef]
    except ImportError:  # pragma: no cover - depends on build environment
        _kernels = None

_impl: ModuleType = _kernels if _kernels is not None else _kernels_py


def available_backends() -> list[str]:
    out = ["python"]
    if _kernels is not None:
        out.insert(0, "c")
    return out


def active_backend() -> str:
    return _impl.BACKEND


def set_backend(name: str) -> None:
    """Force "c" or "python"; raises if the compiled twin is unavailable."""
    global _impl
    if name == "python":
        _impl = _kernels_py
    elif name == "c":
        if _kernels is None:
            raise RuntimeError("compiled kernels are not available")
        _impl = _kernels
    else:
        raise ValueError(f"unknown backend {name!r}")


def get_module(name: str) -> ModuleType:
    if name == "python":
        return _kernels_py
    if name == "c" and _kernels is not None:
        return _kernels
    raise ValueError(f"backend {name!r} not available")


def rc_encode(data: bytes) -> bytes:
    return _impl.rc_encode(data)


def rc_decode(data: bytes, n: int) -> bytes:
    return _impl.rc_decode(data, n)


def med_unpredict(residuals):
    return _impl.med_unpredict(residuals)
