"""Truncated Fock-space simulator used as an independent correctness oracle.

Everything here recomputes click statistics from first principles (state
vectors and density operators in the photon-number basis) so that the
Gaussian-moment engine can be checked against it at tiny scale.  Nothing in
this module shares code with the covariance-based path.

Representation.  States live in the basis of occupation vectors with total
photon number at most ``cutoff``.  A photon-number-preserving interferometer
maps this space onto itself exactly, and photon loss only moves weight
downward, so once the input is truncated no further truncation error is ever
introduced: the recorded norm deficit of the input is an exact one-sided
bound on any pattern-probability discrepancy.  A per-mode cutoff would not
have this property (an interferometer scatters amplitude past per-mode caps).

The interferometer acts sector by sector.  With H = logm(U) the second
quantisation of U is expm(sum_ij H_ij a_i^dag a_j), whose n-photon blocks are
exactly the permanent-based transition amplitudes
``<m|U|n> = Per(U_{m,n}) / sqrt(prod m_i! prod n_j!)``.  The matrix
exponential route is used for speed; ``transition_amplitude`` implements the
permanent formula directly (Ryser) so the two can be cross-checked.

Loss is the per-mode generalized-amplitude-damping channel with binomial
Kraus weights, applied to a materialized density operator.  Click
probabilities are diagonal in the occupation basis (a click is 1 - |0><0|
per mode), so the distribution is a scatter of the state's diagonal.

This is a brute-force reference path, never a performance path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import logm
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import expm_multiply

from .errors import CapacityError, ConfigurationError, NumericalInstabilityError, PhysicalityError
from .gaussian import UNITARITY_TOL, SqueezerSpec, _check_bank

DEFAULT_CUTOFF = 8
TRACE_TOL = 1e-10
# density operators are materialized dense; this caps them at ~650 MB
RHO_DIM_LIMIT = 6500
PURE_DIM_LIMIT = 200_000
CLICK_MODE_LIMIT = 6
PERMANENT_PHOTON_LIMIT = 12


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


class _Basis:
    """Occupation basis for mode_count modes with total photons <= cutoff.

    States are ordered by total photon number, then lexicographically, so
    each sector occupies a contiguous index range.
    """

    def __init__(self, mode_count, cutoff):
        occ = []
        for s in range(cutoff + 1):
            occ.extend(_compositions(s, mode_count))
        self.mode_count = mode_count
        self.cutoff = cutoff
        self.occupations = np.array(occ, dtype=np.int32).reshape(len(occ), mode_count)
        self.dim = len(occ)
        self.index = {t: i for i, t in enumerate(occ)}
        totals = self.occupations.sum(axis=1)
        self.sector_bounds = np.searchsorted(totals, np.arange(cutoff + 2))
        self._lower = None
        self._raise = None

    def ladder_maps(self):
        # lower[m][k] = index of occ_k - e_m (or -1), raise_[m] its inverse
        if self._lower is None:
            d, m_count = self.dim, self.mode_count
            lower = np.full((m_count, d), -1, dtype=np.int64)
            raise_ = np.full((m_count, d), -1, dtype=np.int64)
            occ = self.occupations
            for m in range(m_count):
                for k in range(d):
                    if occ[k, m] >= 1:
                        t = tuple(occ[k])
                        lower[m, k] = self.index[t[:m] + (t[m] - 1,) + t[m + 1 :]]
                valid = np.nonzero(lower[m] >= 0)[0]
                raise_[m, lower[m, valid]] = valid
            self._lower = lower
            self._raise = raise_
        return self._lower, self._raise

    def generator(self, h_mat):
        """Sparse matrix of sum_ij h_ij a_i^dag a_j on this basis."""
        lower, raise_ = self.ladder_maps()
        occ = self.occupations
        rows, cols, data = [], [], []
        for j in range(self.mode_count):
            src = np.nonzero(occ[:, j] >= 1)[0]
            if src.size == 0:
                continue
            n_j = occ[src, j].astype(np.float64)
            low = lower[j, src]
            for i in range(self.mode_count):
                if h_mat[i, j] == 0:
                    continue
                if i == j:
                    rows.append(src)
                    cols.append(src)
                    data.append(h_mat[j, j] * n_j)
                else:
                    dst = raise_[i, low]
                    coeff = np.sqrt(n_j * (occ[src, i] + 1.0))
                    rows.append(dst)
                    cols.append(src)
                    data.append(h_mat[i, j] * coeff)
        if not rows:
            return coo_matrix((self.dim, self.dim), dtype=np.complex128).tocsr()
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        data = np.concatenate(data).astype(np.complex128)
        return coo_matrix((data, (rows, cols)), shape=(self.dim, self.dim)).tocsr()


_BASIS_CACHE: dict[tuple[int, int], _Basis] = {}


def _get_basis(mode_count, cutoff):
    key = (mode_count, cutoff)
    if key not in _BASIS_CACHE:
        _BASIS_CACHE[key] = _Basis(mode_count, cutoff)
    return _BASIS_CACHE[key]


def fock_basis(mode_count, cutoff):
    """Occupation vectors of the truncated basis, shape (dim, mode_count).

    Row order matches the amplitude/density-operator indexing of FockState.
    """
    occ = _get_basis(mode_count, cutoff).occupations.copy()
    occ.setflags(write=False)
    return occ


@dataclass(frozen=True, eq=False)
class FockState:
    """State in the truncated Fock basis, pure or mixed.

    Exactly one of ``amplitudes`` (state vector) or ``rho`` (density
    operator) is set.  ``norm_deficit`` records the weight of the exact
    state that fell outside the truncated basis; it is invariant under
    the operations in this module, and trace + norm_deficit stays within
    numerical tolerance of 1.
    """

    mode_count: int
    cutoff: int
    amplitudes: np.ndarray | None = None
    rho: np.ndarray | None = None
    norm_deficit: float = 0.0

    def __post_init__(self):
        if (self.amplitudes is None) == (self.rho is None):
            raise ConfigurationError("exactly one of amplitudes and rho must be given")
        d = _get_basis(self.mode_count, self.cutoff).dim
        arr = self.amplitudes if self.amplitudes is not None else self.rho
        want = (d,) if self.amplitudes is not None else (d, d)
        if arr.shape != want:
            raise ConfigurationError(
                f"state array has shape {arr.shape}, basis needs {want}"
            )

    @property
    def is_pure(self):
        return self.amplitudes is not None

    @property
    def dim(self):
        return _get_basis(self.mode_count, self.cutoff).dim

    def occupations(self):
        return fock_basis(self.mode_count, self.cutoff)

    def diagonal(self):
        if self.is_pure:
            return np.abs(self.amplitudes) ** 2
        return np.real(np.diagonal(self.rho)).copy()

    def trace(self):
        return float(self.diagonal().sum())

    def density_matrix(self):
        if self.is_pure:
            if self.dim > RHO_DIM_LIMIT:
                raise CapacityError(
                    f"dimension {self.dim} exceeds density-operator limit {RHO_DIM_LIMIT}"
                )
            return np.outer(self.amplitudes, np.conj(self.amplitudes))
        return self.rho.copy()

    def validate(self, psd_check=False):
        tr = self.trace()
        if abs(tr + self.norm_deficit - 1.0) > 1e-8:
            raise PhysicalityError(
                f"trace {tr} inconsistent with recorded norm deficit {self.norm_deficit}"
            )
        if not self.is_pure:
            herm = np.max(np.abs(self.rho - self.rho.conj().T))
            if herm > TRACE_TOL:
                raise PhysicalityError(f"density operator hermiticity defect {herm:.3e}")
            if np.min(np.real(np.diagonal(self.rho))) < -TRACE_TOL:
                raise PhysicalityError("negative population on the diagonal")
            if psd_check:
                if self.dim > 2000:
                    raise CapacityError("eigenvalue check too large, reduce the cutoff")
                w = np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T))
                if w.min() < -TRACE_TOL:
                    raise PhysicalityError(f"density operator has eigenvalue {w.min():.3e}")
        return self


def schmidt_input_state(squeezers, mode_count, cutoff=DEFAULT_CUTOFF, tail_tol=None):
    """Truncated two-mode-squeezed input, |TMSS> = sech r * sum tanh^n r e^{i n phi} |n,n>.

    ``cutoff`` is the per-squeezer Schmidt depth; the basis keeps total
    photon number up to 2*K*cutoff so every retained combination of Schmidt
    terms is represented exactly.  Terms are kept whenever the squeezers'
    Schmidt indices sum to at most K*cutoff, which retains at least as much
    weight as capping each squeezer at ``cutoff`` and keeps the basis closed
    under the rest of the pipeline.  The discarded weight is recorded as
    ``norm_deficit``; for a single squeezer it equals tanh^{2(cutoff+1)} r.
    """
    squeezers = tuple(squeezers)
    if cutoff < 1:
        raise ConfigurationError("cutoff must be at least 1")
    _check_bank(squeezers, mode_count)
    k = len(squeezers)
    total_cutoff = 2 * cutoff * max(1, k)
    basis = _get_basis(mode_count, total_cutoff)
    if basis.dim > PURE_DIM_LIMIT:
        raise CapacityError(
            f"truncated basis has dimension {basis.dim}, limit {PURE_DIM_LIMIT}"
        )
    amps = np.zeros(basis.dim, dtype=np.complex128)
    if k == 0:
        amps[0] = 1.0
    else:
        lam = np.array([np.tanh(sq.r) for sq in squeezers])
        pref = np.prod([1.0 / np.cosh(sq.r) for sq in squeezers])
        phases = np.array([sq.phase for sq in squeezers])
        for ns in _compositions_upto(k * cutoff, k):
            amp = pref
            occ = [0] * mode_count
            for sq, n, l, ph in zip(squeezers, ns, lam, phases):
                amp = amp * (l ** n) * np.exp(1j * n * ph)
                a, b = sq.mode_pair
                occ[a] = occ[b] = n
            amps[basis.index[tuple(occ)]] = amp
    deficit = max(0.0, 1.0 - float(np.sum(np.abs(amps) ** 2)))
    if tail_tol is not None and deficit > tail_tol:
        raise CapacityError(
            f"truncation tail {deficit:.3e} exceeds requested tolerance {tail_tol:.3e};"
            " increase the cutoff"
        )
    return FockState(mode_count, total_cutoff, amplitudes=amps, norm_deficit=deficit)


def _compositions_upto(total, parts):
    for s in range(total + 1):
        yield from _compositions(s, parts)


def _check_unitary(u, mode_count):
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (mode_count, mode_count):
        raise ConfigurationError(f"unitary shape {u.shape} does not match {mode_count} modes")
    defect = np.max(np.abs(u @ u.conj().T - np.eye(mode_count)))
    if defect > UNITARITY_TOL:
        raise ConfigurationError(f"matrix is not unitary, defect {defect:.3e}")
    return u


def fock_apply_unitary(state, u):
    """Apply an interferometer, sector by sector, exactly on the basis.

    Pure states go through a sparse matrix exponential of the number-
    conserving generator; mixed states are conjugated with dense per-sector
    unitaries built by eigendecomposition.  Total photon number is conserved
    so no amplitude ever leaves the truncated basis.
    """
    u = _check_unitary(u, state.mode_count)
    h_mat = logm(u)
    h_mat = 0.5 * (h_mat - h_mat.conj().T)
    basis = _get_basis(state.mode_count, state.cutoff)
    if np.max(np.abs(h_mat)) == 0.0:
        return state
    if state.is_pure:
        gen = basis.generator(h_mat)
        out = expm_multiply(gen, state.amplitudes)
        drift = abs(np.linalg.norm(out) - np.linalg.norm(state.amplitudes))
        if drift > 1e-8:
            raise NumericalInstabilityError(f"norm drift {drift:.3e} in unitary application")
        return FockState(state.mode_count, state.cutoff, amplitudes=out,
                         norm_deficit=state.norm_deficit)
    if state.dim > RHO_DIM_LIMIT:
        raise CapacityError(
            f"dimension {state.dim} exceeds density-operator limit {RHO_DIM_LIMIT}"
        )
    gen = basis.generator(h_mat).tocsc()
    rho = state.rho.copy()
    for s in range(state.cutoff + 1):
        lo, hi = basis.sector_bounds[s], basis.sector_bounds[s + 1]
        if hi - lo == 1:
            continue
        block = gen[lo:hi, lo:hi].toarray()
        # block = i * (hermitian), exponentiate through eigh
        w, v = np.linalg.eigh(-1j * block)
        u_s = (v * np.exp(1j * w)) @ v.conj().T
        rho[lo:hi, :] = u_s @ rho[lo:hi, :]
        rho[:, lo:hi] = rho[:, lo:hi] @ u_s.conj().T
    return FockState(state.mode_count, state.cutoff, rho=rho,
                     norm_deficit=state.norm_deficit)


def fock_apply_loss(state, etas):
    """Per-mode photon loss as a generalized-amplitude-damping Kraus map.

    With transmission eta the Kraus operator for losing l photons takes
    |n> to sqrt(C(n,l) eta^{n-l} (1-eta)^l) |n-l>.  The channel only moves
    photons downward, so the truncated basis is closed and the trace is
    preserved exactly (checked to 1e-8, asserted in tests to 1e-10).
    """
    etas = np.broadcast_to(np.asarray(etas, dtype=np.float64), (state.mode_count,))
    if np.any(etas < 0) or np.any(etas > 1) or not np.all(np.isfinite(etas)):
        raise ConfigurationError("transmissions must lie in [0, 1]")
    if np.all(etas == 1.0):
        return state
    if state.dim > RHO_DIM_LIMIT:
        raise CapacityError(
            f"dimension {state.dim} exceeds density-operator limit {RHO_DIM_LIMIT}"
        )
    basis = _get_basis(state.mode_count, state.cutoff)
    lower, _ = basis.ladder_maps()
    occ = basis.occupations
    rho = state.density_matrix()
    trace_in = float(np.real(np.trace(rho)))
    for m in range(state.mode_count):
        eta = etas[m]
        if eta == 1.0:
            continue
        n_m = occ[:, m]
        out = np.zeros_like(rho)
        src = np.arange(basis.dim)
        dst = src
        for l in range(int(n_m.max()) + 1):
            if l > 0:
                # dst tracks src lowered l times in mode m
                keep = lower[m, dst] >= 0
                src = src[keep]
                dst = lower[m, dst[keep]]
                if src.size == 0:
                    break
            n_here = n_m[src]
            coeff = np.sqrt(
                _binom(n_here, l) * eta ** (n_here - l) * (1.0 - eta) ** l
            )
            out[np.ix_(dst, dst)] += np.outer(coeff, coeff) * rho[np.ix_(src, src)]
        rho = out
    trace_out = float(np.real(np.trace(rho)))
    if abs(trace_out - trace_in) > 1e-8:
        raise NumericalInstabilityError(
            f"trace drift {trace_out - trace_in:.3e} in loss channel"
        )
    return FockState(state.mode_count, state.cutoff, rho=rho,
                     norm_deficit=state.norm_deficit)


def _binom(n, k):
    return np.array([math.comb(int(v), k) for v in np.asarray(n).ravel()], dtype=np.float64)


def fock_click_distribution(state):
    """Probabilities of all 2^M click patterns, indexed with bit i = mode i.

    The pattern POVM is a tensor of |0><0| (no click) and 1 - |0><0|
    (click) per mode, diagonal in the occupation basis, so each basis state
    contributes its population to exactly one pattern.  The result sums to
    the state's trace, i.e. to 1 minus the recorded norm deficit.
    """
    if state.mode_count > CLICK_MODE_LIMIT:
        raise CapacityError(
            f"click distribution limited to {CLICK_MODE_LIMIT} modes, got {state.mode_count}"
        )
    weights = state.diagonal()
    low = weights.min()
    if low < -1e-9:
        raise NumericalInstabilityError(f"population {low:.3e} below tolerance")
    weights = np.clip(weights, 0.0, None)
    occ = _get_basis(state.mode_count, state.cutoff).occupations
    ids = (occ > 0) @ (1 << np.arange(state.mode_count))
    return np.bincount(ids, weights=weights, minlength=2 ** state.mode_count)


def fock_mean_photon_number(state):
    occ = _get_basis(state.mode_count, state.cutoff).occupations
    return float(state.diagonal() @ occ.sum(axis=1))


def _permanent(a):
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    masks = (np.arange(1, 2 ** n)[:, None] >> np.arange(n)) & 1
    sums = masks @ a.T  # row i: sum over chosen columns of a
    prods = np.prod(sums, axis=1)
    signs = np.where((n - masks.sum(axis=1)) % 2, -1.0, 1.0)
    return np.sum(signs * prods)


def transition_amplitude(u, occ_in, occ_out):
    """<occ_out| U |occ_in> via the permanent formula (Ryser), for cross-checks.

    Returns Per(U_{m,n}) / sqrt(prod m_i! prod n_j!) where U_{m,n} repeats
    row i of u occ_out[i] times and column j occ_in[j] times.  Zero whenever
    the photon totals differ.
    """
    occ_in = tuple(int(n) for n in occ_in)
    occ_out = tuple(int(n) for n in occ_out)
    u = _check_unitary(u, len(occ_in))
    if len(occ_out) != len(occ_in):
        raise ConfigurationError("occupation lengths differ")
    total = sum(occ_in)
    if total != sum(occ_out):
        return 0.0 + 0.0j
    if total > PERMANENT_PHOTON_LIMIT:
        raise CapacityError(f"permanent limited to {PERMANENT_PHOTON_LIMIT} photons")
    rows = [i for i, n in enumerate(occ_out) for _ in range(n)]
    cols = [j for j, n in enumerate(occ_in) for _ in range(n)]
    sub = u[np.ix_(rows, cols)]
    norm = math.prod(math.factorial(n) for n in occ_in) * math.prod(
        math.factorial(n) for n in occ_out
    )
    return _permanent(sub) / math.sqrt(norm)
