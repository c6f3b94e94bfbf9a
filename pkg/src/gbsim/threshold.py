"""Exact threshold-detector click probabilities for Gaussian states.

The probability of a click pattern with clicked set S and silent set S-bar
is the inclusion-exclusion sum

    P = sum over Z subset of S of (-1)^|Z| * P_vac(Z union S-bar)

where P_vac(A) = 1/sqrt(det(Sigma_Q[A])) is the vacuum probability of mode
subset A. Marginals use the same sum with a different fixed set, so one
kernel serves all three public operations. The sum has 2^n terms for n
clicks; a guard limit refuses patterns that would exceed the configured
budget.

Performance notes, since this kernel is the package hot spot:

- Subsets are enumerated in binary counter order and processed in fixed
  chunks; determinants are evaluated in stacks grouped by subset size so
  the LAPACK gufunc loop does the work instead of Python.
- A Hermitian Cholesky fast path is used when the full Husimi covariance
  passes a positive definite check; otherwise (or on a stacked Cholesky
  failure) determinants fall back to LU, with the imaginary residue of
  each determinant checked against tolerance.
- Terms are accumulated with compensated (Kahan-Babuska) summation in
  counter order. Parallel runs split the counter range into a fixed
  partition that depends only on the click count, and partial sums are
  reduced in range order, so results are bit-identical for any thread
  count. An optional exact accumulator (math.fsum per range) sits behind
  the `exact_sum` flag.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    CapacityError,
    NumericalInstabilityError,
    PhysicalityError,
)
from .gaussian import DET_IMAG_TOL, GaussianState

__all__ = [
    "ClickPattern",
    "KernelStats",
    "pattern_probability",
    "marginal_click_probability",
    "marginal_pattern_probability",
    "enumerate_pattern_probabilities",
    "as_pattern",
    "clicked_modes",
    "pattern_index",
    "index_pattern",
    "GUARD_LIMIT",
]

logger = logging.getLogger(__name__)

ClickPattern = tuple[int, ...]

GUARD_LIMIT = 26          # default max clicks: 2^26 subset sums
ENUM_GUARD = 20           # max M for full 2^M enumeration
NEG_TOL = 1e-9            # tolerated numerical undershoot below zero
_CHUNK = 2048             # terms per processing chunk (fixed: determinism)
_RANGE_BITS = 6           # 2^6 = 64 fixed ranges for parallel runs
_SMALL_N = 12             # single range below this click count


@dataclass(frozen=True)
class KernelStats:
    """Work counters for one inclusion-exclusion evaluation."""

    subset_terms: int
    determinant_dim: int


def as_pattern(bits, mode_count: int | None = None) -> ClickPattern:
    """Validate and normalize a bit sequence into a click pattern tuple."""
    pat = tuple(int(b) for b in bits)
    if any(b not in (0, 1) for b in pat):
        raise ValueError(f"pattern entries must be 0 or 1, got {bits}")
    if mode_count is not None and len(pat) != mode_count:
        raise ValueError(f"pattern length {len(pat)} does not match mode count {mode_count}")
    return pat


def clicked_modes(pattern) -> tuple[int, ...]:
    return tuple(i for i, b in enumerate(pattern) if b)


def pattern_index(pattern) -> int:
    """Pack a pattern into an integer; bit i set means mode i clicked."""
    ix = 0
    for i, b in enumerate(pattern):
        if b:
            ix |= 1 << i
    return ix


def index_pattern(index: int, mode_count: int) -> ClickPattern:
    return tuple((index >> i) & 1 for i in range(mode_count))


def _neumaier_sum(values: list[float]) -> float:
    total = 0.0
    comp = 0.0
    for v in values:
        t = total + v
        if abs(total) >= abs(v):
            comp += (total - t) + v
        else:
            comp += (v - t) + total
        total = t
    return total + comp


def _try_cholesky(sigma: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(sigma)
        return True
    except np.linalg.LinAlgError:
        return False


def _batch_vacuum(sigma: np.ndarray, mode_count: int, modes: np.ndarray, chol_ok: bool) -> np.ndarray:
    """Vacuum probabilities for a stack of equal-size mode subsets.

    modes has shape (count, a); the result only depends on each row, never
    on how rows are batched together, which keeps chunked and parallel
    evaluations bit-identical.
    """
    count, a = modes.shape
    if a == 0:
        return np.ones(count)
    rows = np.concatenate([modes, modes + mode_count], axis=1)
    sub = sigma[rows[:, :, None], rows[:, None, :]]
    if chol_ok:
        try:
            chol = np.linalg.cholesky(sub)
            diag = np.diagonal(chol, axis1=-2, axis2=-1).real
            return 1.0 / np.prod(diag, axis=-1)
        except np.linalg.LinAlgError:
            pass
    det = np.linalg.det(sub)
    bad = np.abs(det.imag) > DET_IMAG_TOL * np.maximum(np.abs(det), 1e-300)
    if np.any(bad):
        worst = np.argmax(np.abs(det.imag))
        raise NumericalInstabilityError(
            f"determinant imaginary residue {det.imag[worst]:.3e} exceeds tolerance"
        )
    if np.any(det.real <= 0.0):
        raise PhysicalityError("Husimi submatrix is not positive definite")
    return 1.0 / np.sqrt(det.real)


def _range_sum(
    sigma: np.ndarray,
    mode_count: int,
    var: np.ndarray,
    fixed: np.ndarray,
    lo: int,
    hi: int,
    chol_ok: bool,
    exact_sum: bool,
) -> float:
    """Signed inclusion-exclusion partial sum over counters [lo, hi)."""
    n = var.size
    f = fixed.size
    partials: list[float] = []
    for start in range(lo, hi, _CHUNK):
        stop = min(start + _CHUNK, hi)
        counters = np.arange(start, stop, dtype=np.uint64)
        if n:
            bits = ((counters[:, None] >> np.arange(n, dtype=np.uint64)) & 1).astype(bool)
            sizes = bits.sum(axis=1)
        else:
            bits = np.zeros((counters.size, 0), dtype=bool)
            sizes = np.zeros(counters.size, dtype=np.int64)
        terms = np.empty(counters.size)
        for k in np.unique(sizes):
            sel = np.where(sizes == k)[0]
            if k:
                zmodes = var[np.nonzero(bits[sel])[1]].reshape(sel.size, int(k))
            else:
                zmodes = np.empty((sel.size, 0), dtype=np.int64)
            if f:
                subset = np.hstack([np.broadcast_to(fixed, (sel.size, f)), zmodes])
            else:
                subset = zmodes
            terms[sel] = _batch_vacuum(sigma, mode_count, subset, chol_ok)
        terms[(sizes & 1).astype(bool)] *= -1.0
        partials.append(math.fsum(terms.tolist()) if exact_sum else _neumaier_sum(terms.tolist()))
    if exact_sum:
        return math.fsum(partials)
    return _neumaier_sum(partials)


class _KernelContext:
    """Cached per-state data for repeated kernel calls (used heavily by the
    chain-rule sampler). Public operations build one per call."""

    __slots__ = ("mode_count", "sigma", "chol_ok")

    def __init__(self, state: GaussianState):
        self.mode_count = state.mode_count
        self.sigma = state.husimi_covariance()
        self.chol_ok = _try_cholesky(self.sigma)

    def inclusion_exclusion(
        self,
        var_modes,
        fixed_modes,
        threads: int = 1,
        exact_sum: bool = False,
        guard_limit: int = GUARD_LIMIT,
    ) -> float:
        var = np.asarray(sorted(var_modes), dtype=np.int64)
        fixed = np.asarray(sorted(fixed_modes), dtype=np.int64)
        n = var.size
        if n > guard_limit:
            raise CapacityError(
                f"click count {n} exceeds the guard limit {guard_limit} (2^{n} subset sums)"
            )
        if var.size and fixed.size and np.intersect1d(var, fixed).size:
            raise ValueError("clicked and fixed mode sets overlap")
        total_terms = 1 << n
        if n <= _SMALL_N:
            ranges = [(0, total_terms)]
        else:
            n_ranges = 1 << _RANGE_BITS
            step = total_terms // n_ranges
            ranges = [(i * step, (i + 1) * step) for i in range(n_ranges)]
            ranges[-1] = (ranges[-1][0], total_terms)
        if threads > 1 and len(ranges) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                partials = list(
                    pool.map(
                        lambda rg: _range_sum(
                            self.sigma, self.mode_count, var, fixed, rg[0], rg[1],
                            self.chol_ok, exact_sum,
                        ),
                        ranges,
                    )
                )
        else:
            partials = [
                _range_sum(self.sigma, self.mode_count, var, fixed, lo, hi, self.chol_ok, exact_sum)
                for lo, hi in ranges
            ]
        if exact_sum:
            return math.fsum(partials)
        return _neumaier_sum(partials)


def _inclusion_exclusion(
    state: GaussianState,
    var_modes,
    fixed_modes,
    threads: int,
    exact_sum: bool,
    guard_limit: int,
) -> float:
    ctx = _KernelContext(state)
    return ctx.inclusion_exclusion(var_modes, fixed_modes, threads, exact_sum, guard_limit)


def _clamp_probability(p: float, context: str) -> float:
    if p < 0.0:
        if p < -NEG_TOL:
            raise NumericalInstabilityError(f"{context}: result {p:.3e} below zero beyond tolerance")
        logger.warning("%s: clamping %.3e to 0", context, p)
        return 0.0
    if p > 1.0:
        if p > 1.0 + NEG_TOL:
            raise NumericalInstabilityError(f"{context}: result {p} above one beyond tolerance")
        return 1.0
    return p


def pattern_probability(
    state: GaussianState,
    pattern,
    *,
    threads: int = 1,
    exact_sum: bool = False,
    guard_limit: int = GUARD_LIMIT,
    return_stats: bool = False,
):
    """Probability of an exact click pattern over all modes.

    Cost is 2^n determinant evaluations for n clicks, independent of the
    total mode count only through the determinant dimension.
    """
    pat = as_pattern(pattern, state.mode_count)
    clicked = [i for i, b in enumerate(pat) if b]
    silent = [i for i, b in enumerate(pat) if not b]
    p = _inclusion_exclusion(state, clicked, silent, threads, exact_sum, guard_limit)
    p = _clamp_probability(p, "pattern_probability")
    if return_stats:
        stats = KernelStats(
            subset_terms=1 << len(clicked),
            determinant_dim=2 * state.mode_count,
        )
        return p, stats
    return p


def marginal_click_probability(
    state: GaussianState,
    clicked,
    *,
    threads: int = 1,
    exact_sum: bool = False,
    guard_limit: int = GUARD_LIMIT,
    return_stats: bool = False,
):
    """P(every mode in `clicked` clicks), other modes unconstrained."""
    modes = sorted({int(i) for i in clicked})
    for i in modes:
        if not 0 <= i < state.mode_count:
            raise ValueError(f"mode index {i} out of range")
    p = _inclusion_exclusion(state, modes, [], threads, exact_sum, guard_limit)
    p = _clamp_probability(p, "marginal_click_probability")
    if return_stats:
        return p, KernelStats(1 << len(modes), 2 * len(modes))
    return p


def marginal_pattern_probability(
    state: GaussianState,
    subsystem,
    sub_pattern,
    *,
    threads: int = 1,
    exact_sum: bool = False,
    guard_limit: int = GUARD_LIMIT,
    return_stats: bool = False,
):
    """Probability of a click pattern on a subsystem, tracing out the rest."""
    modes = [int(i) for i in subsystem]
    if len(set(modes)) != len(modes):
        raise ValueError("subsystem modes must be distinct")
    for i in modes:
        if not 0 <= i < state.mode_count:
            raise ValueError(f"mode index {i} out of range")
    pat = as_pattern(sub_pattern, len(modes))
    clicked = [m for m, b in zip(modes, pat) if b]
    silent = [m for m, b in zip(modes, pat) if not b]
    p = _inclusion_exclusion(state, clicked, silent, threads, exact_sum, guard_limit)
    p = _clamp_probability(p, "marginal_pattern_probability")
    if return_stats:
        return p, KernelStats(1 << len(clicked), 2 * (len(modes)))
    return p


def enumerate_pattern_probabilities(
    state: GaussianState,
    *,
    guard_limit: int = ENUM_GUARD,
) -> np.ndarray:
    """All 2^M pattern probabilities in one pass.

    Computes the vacuum probability of every mode subset (2^M determinants)
    and applies a superset Moebius transform, which is algebraically the
    same inclusion-exclusion sum as pattern_probability evaluated for every
    pattern at once in M * 2^M additions. Entry s corresponds to the
    pattern whose bit i (bit value (s >> i) & 1) marks a click in mode i.
    """
    m = state.mode_count
    if m > guard_limit:
        raise CapacityError(f"full enumeration needs 2^{m} determinants, guard is M <= {guard_limit}")
    size = 1 << m
    sigma = state.husimi_covariance()
    chol_ok = _try_cholesky(sigma)
    vac = np.empty(size)
    popcnt = np.zeros(size, dtype=np.int64)
    for start in range(0, size, _CHUNK):
        stop = min(start + _CHUNK, size)
        counters = np.arange(start, stop, dtype=np.uint64)
        bits = ((counters[:, None] >> np.arange(m, dtype=np.uint64)) & 1).astype(bool)
        sizes = bits.sum(axis=1)
        popcnt[start:stop] = sizes
        vals = np.empty(counters.size)
        for k in np.unique(sizes):
            sel = np.where(sizes == k)[0]
            if k:
                zmodes = np.nonzero(bits[sel])[1].reshape(sel.size, int(k)).astype(np.int64)
            else:
                zmodes = np.empty((sel.size, 0), dtype=np.int64)
            vals[sel] = _batch_vacuum(sigma, m, zmodes, chol_ok)
        vac[start:stop] = vals
    sign = 1.0 - 2.0 * (popcnt & 1)
    acc = vac * sign
    for t in range(m):
        unset = ((np.arange(size) >> t) & 1) == 0
        acc[unset] += acc[~unset]
    comp = np.arange(size) ^ (size - 1)
    probs = sign[comp] * acc[comp]
    low = probs.min()
    if low < -NEG_TOL:
        raise NumericalInstabilityError(f"enumerated probability {low:.3e} below zero beyond tolerance")
    if low < 0.0:
        logger.warning("enumerate_pattern_probabilities: clamping %.3e to 0", low)
        np.clip(probs, 0.0, None, out=probs)
    return probs
