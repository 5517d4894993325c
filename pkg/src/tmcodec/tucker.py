"""Tucker decomposition solvers.

Implements the full chain used by the codec: HOSVD, truncated-HOSVD
initialization, HOOI/ALS sweeps with Gram-matrix factor updates, and
pairwise-perturbation-accelerated sweeps whose operators are computed once
per anchor set through a binary dimension tree with memoized partial
contractions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .tensor import (
    DenseTensor,
    fro_norm,
    gram,
    leading_eigvecs,
    ttm,
    ttmc,
    unfold,
)

__all__ = [
    "TuckerModel",
    "SolveConfig",
    "SweepRecord",
    "SolveTrace",
    "PPState",
    "hosvd",
    "t_hosvd",
    "hooi_sweep",
    "reconstruct",
    "fit",
    "pp_operators",
    "pp_sweep",
    "tucker_als",
]

ORTHO_TOL = 1e-8
PP_DIP_TOL = 1e-6  # largest fit regression a pp sweep may introduce


@dataclass
class TuckerModel:
    """Core tensor plus per-mode orthonormal factor matrices."""

    core: DenseTensor
    factors: list[np.ndarray]
    source_dims: tuple[int, ...]

    @property
    def ranks(self) -> tuple[int, ...]:
        return self.core.dims

    def validate(self, ortho_tol: float = ORTHO_TOL) -> None:
        if len(self.factors) != self.core.ndim or len(self.factors) != len(self.source_dims):
            raise ValueError("factor count does not match tensor order")
        for n, f in enumerate(self.factors):
            s, r = self.source_dims[n], self.core.dims[n]
            if f.shape != (s, r):
                raise ValueError(f"mode {n}: factor shape {f.shape}, expected {(s, r)}")
            if r > s:
                raise ValueError(f"mode {n}: rank {r} exceeds dimension {s}")
            err = np.max(np.abs(f.T @ f - np.eye(r)))
            if err >= ortho_tol:
                raise ValueError(f"mode {n}: factor columns not orthonormal (err={err:.2e})")


@dataclass
class SolveConfig:
    """Solver knobs; defaults follow the regime where pp stays first-order accurate."""

    ranks: tuple[int, ...]
    max_sweeps: int = 50
    fit_tol: float = 1e-5
    pp_enter_tol: float = 0.1  # enter pp when factor change drops below; 0 disables pp
    pp_exit_tol: float = 0.3   # rebuild anchors when relative delta norm exceeds
    sequential_reduction: bool = True  # True = canonical ascending contraction schedule
    seed: int = 0

    def validate(self, dims: Sequence[int]) -> None:
        if len(self.ranks) != len(dims):
            raise ValueError(f"{len(self.ranks)} ranks for an order-{len(dims)} tensor")
        for n, (r, s) in enumerate(zip(self.ranks, dims)):
            if not 1 <= r <= s:
                raise ValueError(f"mode {n}: rank {r} not in [1, {s}]")
        if self.fit_tol <= 0 or self.pp_exit_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_sweeps < 0:
            raise ValueError("max_sweeps must be >= 0")


@dataclass
class SweepRecord:
    index: int
    kind: str  # "init" | "standard" | "pp"
    fit: float
    max_change: float


@dataclass
class SolveTrace:
    records: list[SweepRecord] = field(default_factory=list)
    converged: bool = False

    def rows(self) -> list[tuple]:
        """(index, kind, fit, max_change) tuples, CSV-friendly."""
        return [(r.index, r.kind, r.fit, r.max_change) for r in self.records]


def _contraction_order(cfg_sequential: bool) -> str:
    return "ascending" if cfg_sequential else "greedy"


def hosvd(t: DenseTensor) -> TuckerModel:
    """Full higher-order SVD: per-mode Gram eigenvectors, core by projection."""
    factors = []
    for n in range(t.ndim):
        vecs, _ = leading_eigvecs(gram(unfold(t, n)), t.dims[n])
        factors.append(vecs)
    core = ttmc(t, factors)
    return TuckerModel(core, factors, t.dims)


def t_hosvd(t: DenseTensor, ranks: Sequence[int], order: str = "ascending") -> TuckerModel:
    """Truncated HOSVD at the given multilinear ranks.

    Factors are the leading-k eigenvectors of each mode's Gram matrix; the
    squared reconstruction error is bounded by the sum of discarded
    eigenvalues.
    """
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != t.ndim:
        raise ValueError(f"{len(ranks)} ranks for an order-{t.ndim} tensor")
    for n, (r, s) in enumerate(zip(ranks, t.dims)):
        if not 1 <= r <= s:
            raise ValueError(f"mode {n}: rank {r} not in [1, {s}]")
    factors = []
    for n in range(t.ndim):
        vecs, _ = leading_eigvecs(gram(unfold(t, n)), ranks[n])
        factors.append(vecs)
    core = ttmc(t, factors, order=order)
    return TuckerModel(core, factors, t.dims)


def hooi_sweep(t: DenseTensor, model: TuckerModel, order: str = "ascending") -> TuckerModel:
    """One Gauss-Seidel HOOI sweep: update each factor from the dominant
    eigenspace of its skip-mode contraction's Gram matrix, then the core."""
    if model.source_dims != t.dims:
        raise ValueError(f"model dims {model.source_dims} do not match tensor dims {t.dims}")
    factors = [f for f in model.factors]
    ranks = model.ranks
    for n in range(t.ndim):
        y = ttmc(t, factors, skip=n, order=order)
        vecs, _ = leading_eigvecs(gram(unfold(y, n)), ranks[n])
        factors[n] = vecs
    core = ttmc(t, factors, order=order)
    return TuckerModel(core, factors, t.dims)


def reconstruct(model: TuckerModel) -> DenseTensor:
    """Core multiplied by each factor along its mode."""
    out = model.core
    for n, f in enumerate(model.factors):
        out = ttm(out, f, n)
    return out


def fit(t: DenseTensor, model: TuckerModel, method: str = "core") -> float:
    """1 - ||t - reconstruct(model)||_F / ||t||_F.

    ``method="core"`` uses the identity ||t - t_hat||^2 = ||t||^2 - ||core||^2,
    valid when the factors are orthonormal and the core is the projection of
    ``t``; ``method="residual"`` evaluates the definition directly.
    """
    tn = fro_norm(t)
    if tn == 0.0:
        raise ValueError("fit is undefined for the zero tensor")
    if method == "core":
        cn = fro_norm(model.core)
        resid = math.sqrt(max(tn * tn - cn * cn, 0.0))
    elif method == "residual":
        resid = float(np.linalg.norm(t.array - reconstruct(model).array))
    else:
        raise ValueError(f"unknown fit method {method!r}")
    return 1.0 - resid / tn


# ---------------------------------------------------------------------------
# pairwise perturbation
# ---------------------------------------------------------------------------


@dataclass
class PPState:
    """Anchor factors, their drift, and the precomputed skip-one/skip-two operators."""

    anchors: list[np.ndarray]
    deltas: list[np.ndarray]
    op_single: list[DenseTensor]
    op_pair: dict[tuple[int, int], DenseTensor]
    contraction_count: int

    def pair(self, i: int, n: int) -> DenseTensor:
        return self.op_pair[(i, n) if i < n else (n, i)]

    def set_current(self, factors: Sequence[np.ndarray]) -> None:
        self.deltas = [f - a for f, a in zip(factors, self.anchors)]

    def max_rel_delta(self) -> float:
        out = 0.0
        for d, a in zip(self.deltas, self.anchors):
            out = max(out, float(np.linalg.norm(d)) / float(np.linalg.norm(a)))
        return out


def pp_operators(t: DenseTensor, anchors: Sequence[np.ndarray]) -> PPState:
    """Build every skip-one and skip-two contraction of ``t`` with the anchors.

    A binary dimension tree keyed by the set of still-free modes memoizes
    partial contractions so each is evaluated exactly once. The parent of a
    node re-adds the largest contracted mode, which makes every node's
    contraction sequence the canonical ascending order: tree results are
    bit-identical to a sequential skip-mode TTMc.
    """
    n_modes = t.ndim
    if len(anchors) != n_modes:
        raise ValueError(f"expected {n_modes} anchors, got {len(anchors)}")
    for n, a in enumerate(anchors):
        if a.ndim != 2 or a.shape[0] != t.dims[n]:
            raise ValueError(f"mode {n}: anchor shape {a.shape} does not match dim {t.dims[n]}")

    cache: dict[frozenset, DenseTensor] = {frozenset(range(n_modes)): t}
    count = 0

    def node(free: frozenset) -> DenseTensor:
        nonlocal count
        got = cache.get(free)
        if got is not None:
            return got
        m = max(i for i in range(n_modes) if i not in free)
        parent = node(free | {m})
        out = ttm(parent, np.asarray(anchors[m], dtype=np.float64).T, m)
        count += 1
        cache[free] = out
        return out

    op_single = [node(frozenset((n,))) for n in range(n_modes)]
    op_pair: dict[tuple[int, int], DenseTensor] = {}
    for i in range(n_modes):
        for n in range(i + 1, n_modes):
            op_pair[(i, n)] = node(frozenset((i, n)))
    zeros = [np.zeros_like(np.asarray(a, dtype=np.float64)) for a in anchors]
    return PPState(
        anchors=[np.asarray(a, dtype=np.float64) for a in anchors],
        deltas=zeros,
        op_single=op_single,
        op_pair=op_pair,
        contraction_count=count,
    )


def _pp_operand(state: PPState, n: int) -> DenseTensor:
    """First-order estimate of the skip-n contraction at the current factors."""
    y = state.op_single[n]
    acc = None
    for i in range(len(state.anchors)):
        if i == n:
            continue
        d = state.deltas[i]
        if not np.any(d):
            continue
        corr = ttm(state.pair(i, n), d.T, i)
        acc = corr.array if acc is None else acc + corr.array
    if acc is None:
        return y
    return DenseTensor(y.array + acc)


def pp_sweep(
    state: PPState, model: TuckerModel, return_operands: bool = False
) -> TuckerModel | tuple[TuckerModel, list[DenseTensor]]:
    """One accelerated sweep from the precomputed operators.

    The entry deltas are used for every mode (no mid-sweep refresh), so a
    zero-delta sweep reproduces a sweep frozen at the anchors exactly. The
    returned core is the pp estimate; callers needing the exact core project
    the source tensor onto the new factors.
    """
    ranks = model.ranks
    factors = list(model.factors)
    operands: list[DenseTensor] = []
    last_y: DenseTensor | None = None
    for n in range(len(factors)):
        y = _pp_operand(state, n)
        if return_operands:
            operands.append(y)
        vecs, _ = leading_eigvecs(gram(unfold(y, n)), ranks[n])
        factors[n] = vecs
        last_y = y
    n_last = len(factors) - 1
    core = ttm(last_y, factors[n_last].T, n_last)
    out = TuckerModel(core, factors, model.source_dims)
    if return_operands:
        return out, operands
    return out


# ---------------------------------------------------------------------------
# full solve
# ---------------------------------------------------------------------------


def _max_factor_change(new: Sequence[np.ndarray], old: Sequence[np.ndarray]) -> float:
    out = 0.0
    for f_new, f_old in zip(new, old):
        out = max(out, float(np.linalg.norm(f_new - f_old)) / float(np.linalg.norm(f_old)))
    return out


def _exact_core(t: DenseTensor, model: TuckerModel, order: str) -> TuckerModel:
    core = ttmc(t, model.factors, order=order)
    return TuckerModel(core, model.factors, t.dims)


def tucker_als(t: DenseTensor, cfg: SolveConfig) -> tuple[TuckerModel, SolveTrace]:
    """Tucker-ALS with truncated-HOSVD init and pairwise-perturbation acceleration.

    Standard HOOI sweeps run until the factors settle (max relative change
    below ``pp_enter_tol``), then sweeps switch to the precomputed pp
    operators; anchors are rebuilt with a standard sweep whenever the factor
    drift exceeds ``pp_exit_tol``. Stops on ``|fit_k - fit_{k-1}| < fit_tol``
    or at ``max_sweeps``.
    """
    cfg.validate(t.dims)
    if fro_norm(t) == 0.0:
        raise ValueError("cannot decompose the zero tensor")
    order = _contraction_order(cfg.sequential_reduction)

    trace = SolveTrace()
    model = t_hosvd(t, cfg.ranks, order=order)
    cur_fit = fit(t, model)
    trace.records.append(SweepRecord(0, "init", cur_fit, math.nan))
    best = (cur_fit, model)

    if cur_fit >= 1.0 - cfg.fit_tol:
        trace.converged = True
        return model, trace

    phase_pp = False
    pp_state: PPState | None = None

    for sweep in range(1, cfg.max_sweeps + 1):
        if phase_pp:
            assert pp_state is not None
            pp_state.set_current(model.factors)
            candidate = None
            if pp_state.max_rel_delta() <= cfg.pp_exit_tol:
                candidate = _exact_core(t, pp_sweep(pp_state, model), order)
                if fit(t, candidate) < cur_fit - PP_DIP_TOL:
                    candidate = None  # first-order estimate too coarse
            if candidate is None:
                # drifted too far (or pp regressed): refresh with a standard sweep
                new_model = hooi_sweep(t, model, order=order)
                kind = "standard"
                pp_state = pp_operators(t, new_model.factors)
            else:
                new_model = candidate
                kind = "pp"
        else:
            new_model = hooi_sweep(t, model, order=order)
            kind = "standard"

        change = _max_factor_change(new_model.factors, model.factors)
        new_fit = fit(t, new_model)
        trace.records.append(SweepRecord(sweep, kind, new_fit, change))
        if new_fit > best[0]:
            best = (new_fit, new_model)

        if kind == "standard" and not phase_pp and cfg.pp_enter_tol > 0 and change < cfg.pp_enter_tol:
            phase_pp = True
            pp_state = pp_operators(t, new_model.factors)

        done = abs(new_fit - cur_fit) < cfg.fit_tol
        model, cur_fit = new_model, new_fit
        if done:
            trace.converged = True
            break

    if not trace.converged:
        model = best[1]
    return model, trace
