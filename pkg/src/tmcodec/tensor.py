"""Dense order-N tensors and the contraction kernels the Tucker solver is built on.

Conventions fixed here and relied on everywhere else:

* linearization is mode-0-fastest (Fortran order): ``data[i0 + s0*i1 + s0*s1*i2 + ...]``;
* the mode-n unfolding is ``s_n x prod(other dims)`` with the lowest remaining
  mode varying fastest along columns;
* matrices are plain 2-D float64 ndarrays (column-major layout is applied only
  when matrices are serialized).

All operations are pure functions; arrays are treated as immutable after
construction and are safe to share across threads.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

__all__ = [
    "DenseTensor",
    "unfold",
    "fold",
    "ttm",
    "ttmc",
    "gram",
    "leading_eigvecs",
    "fro_norm",
]


class DenseTensor:
    """Order-N real tensor with an explicit dimension list.

    Wraps a float64 ndarray; ``data`` exposes the flat mode-0-fastest
    linearization used by the container format.
    """

    __slots__ = ("array",)

    def __init__(self, array: np.ndarray, check_finite: bool = False):
        arr = np.asarray(array, dtype=np.float64)
        if arr.ndim < 1:
            arr = arr.reshape(1)
        if any(d < 1 for d in arr.shape):
            raise ValueError(f"all dimensions must be >= 1, got {arr.shape}")
        if check_finite and not np.isfinite(arr).all():
            raise ValueError("tensor entries must be finite")
        self.array = arr

    @classmethod
    def from_flat(cls, data: np.ndarray, dims: Sequence[int]) -> "DenseTensor":
        """Build from a flat mode-0-fastest array of length prod(dims)."""
        dims = tuple(int(d) for d in dims)
        flat = np.asarray(data, dtype=np.float64).ravel()
        if flat.size != int(np.prod(dims)):
            raise ValueError(
                f"flat data has {flat.size} entries, dims {dims} need {int(np.prod(dims))}"
            )
        return cls(np.reshape(flat, dims, order="F"))

    @property
    def dims(self) -> tuple[int, ...]:
        return self.array.shape

    @property
    def ndim(self) -> int:
        return self.array.ndim

    @property
    def size(self) -> int:
        return self.array.size

    @property
    def data(self) -> np.ndarray:
        """Flat view in linearization order (mode 0 fastest)."""
        return self.array.ravel(order="F")

    def __repr__(self) -> str:  # pragma: no cover
        return f"DenseTensor(dims={self.dims})"


def _check_mode(t: DenseTensor, mode: int) -> None:
    if not 0 <= mode < t.ndim:
        raise ValueError(f"mode {mode} out of range for order-{t.ndim} tensor")


def unfold(t: DenseTensor, mode: int) -> np.ndarray:
    """Mode-n unfolding: s_n x prod(other dims), lowest remaining mode fastest."""
    _check_mode(t, mode)
    return np.reshape(
        np.moveaxis(t.array, mode, 0), (t.dims[mode], -1), order="F"
    )


def fold(m: np.ndarray, mode: int, dims: Sequence[int]) -> DenseTensor:
    """Inverse of :func:`unfold`; bit-exact round trip."""
    dims = tuple(int(d) for d in dims)
    m = np.asarray(m, dtype=np.float64)
    if not 0 <= mode < len(dims):
        raise ValueError(f"mode {mode} out of range for dims {dims}")
    rest = tuple(d for i, d in enumerate(dims) if i != mode)
    expect = (dims[mode], int(np.prod(rest)) if rest else 1)
    if m.ndim != 2 or m.shape != expect:
        raise ValueError(f"matrix shape {m.shape} inconsistent with dims {dims} at mode {mode}")
    arr = np.moveaxis(np.reshape(m, (dims[mode],) + rest, order="F"), 0, mode)
    return DenseTensor(arr)


def ttm(t: DenseTensor, m: np.ndarray, mode: int) -> DenseTensor:
    """Mode-n tensor-times-matrix product: replaces dims[mode] by m rows."""
    _check_mode(t, mode)
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("ttm factor must be a matrix")
    if m.shape[1] != t.dims[mode]:
        raise ValueError(
            f"mode {mode}: factor has {m.shape[1]} columns, tensor dim is {t.dims[mode]}"
        )
    new_dims = list(t.dims)
    new_dims[mode] = m.shape[0]
    return fold(m @ unfold(t, mode), mode, new_dims)


def _greedy_order(
    t: DenseTensor, factors: Sequence[np.ndarray], modes: list[int], transpose: bool
) -> list[int]:
    # Largest size reduction first shrinks intermediates fastest.
    def ratio(n: int) -> float:
        f = np.asarray(factors[n])
        out_rows = f.shape[1] if transpose else f.shape[0]
        return out_rows / t.dims[n]

    return sorted(modes, key=ratio)


def ttmc(
    t: DenseTensor,
    factors: Sequence[np.ndarray],
    skip: int | None = None,
    transpose: bool = True,
    order: str = "ascending",
) -> DenseTensor:
    """Multi-mode product of ``t`` with every factor except ``skip``.

    With ``transpose=True`` (the solver's case) factor n is applied as
    ``factors[n].T`` along mode n, so factors must have ``t.dims[n]`` rows.
    ``order`` selects the contraction schedule: "ascending" is the canonical
    deterministic order, "greedy" contracts the most size-reducing mode first;
    results agree to floating-point reduction differences (~1e-12 relative).
    """
    if len(factors) != t.ndim:
        raise ValueError(f"expected {t.ndim} factors, got {len(factors)}")
    if skip is not None:
        _check_mode(t, skip)
    modes = [n for n in range(t.ndim) if n != skip]
    for n in modes:
        f = np.asarray(factors[n])
        rows = f.shape[0] if transpose else f.shape[1]
        if f.ndim != 2 or rows != t.dims[n]:
            raise ValueError(
                f"mode {n}: factor shape {f.shape} does not match tensor dim {t.dims[n]}"
            )
    if order == "greedy":
        modes = _greedy_order(t, factors, modes, transpose)
    elif order != "ascending":
        raise ValueError(f"unknown contraction order {order!r}")
    out = t
    for n in modes:
        f = np.asarray(factors[n], dtype=np.float64)
        out = ttm(out, f.T if transpose else f, n)
    return out


def gram(m: np.ndarray) -> np.ndarray:
    """m @ m.T, symmetrized exactly (upper triangle computed, then mirrored)."""
    m = np.asarray(m, dtype=np.float64)
    g = m @ m.T
    return np.triu(g) + np.triu(g, 1).T


def leading_eigvecs(g: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Dominant-k orthonormal eigenvectors of a symmetric matrix.

    Returns ``(vectors, eigenvalues)`` with eigenvalues in nonincreasing
    order. Each column is sign-fixed so its largest-magnitude entry is
    positive, which makes factor updates deterministic across sweeps.
    """
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {g.shape}")
    if not 1 <= k <= g.shape[0]:
        raise ValueError(f"k={k} out of range for {g.shape[0]}x{g.shape[0]} matrix")
    w, v = np.linalg.eigh(g)
    idx = np.arange(g.shape[0] - 1, g.shape[0] - 1 - k, -1)
    vals = w[idx]
    vecs = v[:, idx].copy()
    sign_fix_columns(vecs)
    return vecs, vals


def sign_fix_columns(m: np.ndarray) -> np.ndarray:
    """In place: flip each column whose largest-|entry| element is negative."""
    for j in range(m.shape[1]):
        i = int(np.argmax(np.abs(m[:, j])))
        if m[i, j] < 0:
            m[:, j] = -m[:, j]
    return m


def fro_norm(t: DenseTensor) -> float:
    """Frobenius norm sqrt(sum of squared entries)."""
    return float(np.linalg.norm(t.array.ravel()))
