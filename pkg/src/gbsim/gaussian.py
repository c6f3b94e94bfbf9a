"""Zero-mean Gaussian states of M optical modes and their evolution.

A state is stored as the pair of complex moment blocks

    N_ij = <a_j^dag a_i>    (Hermitian; mean photon numbers on the diagonal)
    B_ij = <a_i a_j>        (symmetric; pairwise squeezing correlations)

with all first moments zero. The Husimi covariance

    Sigma_Q = [[I + N, B], [conj(B), I + conj(N)]]

is Hermitian positive definite for every physical state and reduces to the
identity for vacuum. The probability that a subset A of modes contains no
photons is 1/sqrt(det(Sigma_Q[A])) where Sigma_Q[A] keeps the rows and
columns of A in both blocks; this determinant identity is the primitive
every click probability in the package is built from.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigurationError,
    NumericalInstabilityError,
    PhysicalityError,
)

__all__ = [
    "SqueezerSpec",
    "CircuitSpec",
    "GaussianState",
    "vacuum_state",
    "build_input_state",
    "apply_unitary",
    "apply_loss",
    "reduce_modes",
    "vacuum_probability",
    "haar_random_unitary",
    "mean_photon_number",
    "build_circuit_state",
    "default_squeezer_bank",
]

# Tolerances chosen for double precision with M <= 32 desk circuits.
UNITARITY_TOL = 1e-8
PHYSICALITY_TOL = 1e-9
DET_IMAG_TOL = 1e-9

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class SqueezerSpec:
    """One two-mode squeezer: strength r, pump phase, target mode pair."""

    r: float
    phase: float
    mode_pair: tuple[int, int]

    def __post_init__(self):
        r = float(self.r)
        if not np.isfinite(r) or r < 0.0:
            raise ConfigurationError(f"squeezing parameter must be finite and >= 0, got {self.r}")
        phase = float(self.phase) % _TWO_PI
        pair = (int(self.mode_pair[0]), int(self.mode_pair[1]))
        if len(self.mode_pair) != 2 or pair[0] == pair[1]:
            raise ConfigurationError(f"mode pair must hold two distinct indices, got {self.mode_pair}")
        if pair[0] < 0 or pair[1] < 0:
            raise ConfigurationError(f"mode indices must be non-negative, got {self.mode_pair}")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "phase", phase)
        object.__setattr__(self, "mode_pair", pair)


def _frozen_array(a, dtype) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def _check_bank(squeezers, mode_count: int) -> tuple[SqueezerSpec, ...]:
    bank = tuple(squeezers)
    used: set[int] = set()
    for sq in bank:
        i, j = sq.mode_pair
        if i >= mode_count or j >= mode_count:
            raise ConfigurationError(
                f"squeezer pair {sq.mode_pair} out of range for {mode_count} modes"
            )
        if i in used or j in used:
            raise ConfigurationError(f"squeezer mode pairs overlap at {sq.mode_pair}")
        used.update((i, j))
    return bank


@dataclass(frozen=True, eq=False)
class CircuitSpec:
    """Full experiment circuit: squeezer bank, interferometer, losses,
    detector parameters.

    transmission is the per-mode path transmission; detector_efficiency is
    folded into it by build_circuit_state (one effective loss after the
    unitary). dark_count_prob only enters the nonclassicality inequality,
    never the sampling pipeline.
    """

    mode_count: int
    unitary: np.ndarray
    transmission: np.ndarray
    detector_efficiency: float = 1.0
    dark_count_prob: float = 0.0
    squeezers: tuple[SqueezerSpec, ...] = ()

    def __post_init__(self):
        m = int(self.mode_count)
        if m < 1:
            raise ConfigurationError(f"mode count must be >= 1, got {self.mode_count}")
        u = _frozen_array(self.unitary, np.complex128)
        if u.shape != (m, m):
            raise ConfigurationError(f"unitary shape {u.shape} does not match mode count {m}")
        defect = np.max(np.abs(u @ u.conj().T - np.eye(m)))
        if defect > UNITARITY_TOL:
            raise ConfigurationError(
                f"matrix is not unitary: max |UU^dag - I| = {defect:.3e} > {UNITARITY_TOL}"
            )
        eta = np.atleast_1d(np.array(self.transmission, dtype=np.float64))
        if eta.size == 1:
            eta = np.full(m, float(eta[0]))
        if eta.shape != (m,):
            raise ConfigurationError(f"transmission vector has shape {eta.shape}, expected ({m},)")
        if np.any(eta < 0.0) or np.any(eta > 1.0):
            raise ConfigurationError("transmission entries must lie in [0, 1]")
        eta.setflags(write=False)
        eta_d = float(self.detector_efficiency)
        if not 0.0 < eta_d <= 1.0:
            raise ConfigurationError(f"detector efficiency must lie in (0, 1], got {eta_d}")
        p_d = float(self.dark_count_prob)
        if not 0.0 <= p_d < 1.0:
            raise ConfigurationError(f"dark count probability must lie in [0, 1), got {p_d}")
        if p_d / eta_d >= 0.5:
            raise ConfigurationError(
                f"dark_count_prob/detector_efficiency = {p_d / eta_d:.4g} must stay below 1/2"
            )
        bank = _check_bank(self.squeezers, m)
        object.__setattr__(self, "mode_count", m)
        object.__setattr__(self, "unitary", u)
        object.__setattr__(self, "transmission", eta)
        object.__setattr__(self, "detector_efficiency", eta_d)
        object.__setattr__(self, "dark_count_prob", p_d)
        object.__setattr__(self, "squeezers", bank)

    @property
    def effective_transmission(self) -> np.ndarray:
        """Per-mode transmission with detector efficiency folded in."""
        return self.transmission * self.detector_efficiency


@dataclass(frozen=True, eq=False)
class GaussianState:
    """Zero-mean Gaussian state as the (N, B) moment blocks."""

    mode_count: int
    n_mat: np.ndarray
    b_mat: np.ndarray

    def __post_init__(self):
        m = int(self.mode_count)
        n = _frozen_array(self.n_mat, np.complex128)
        b = _frozen_array(self.b_mat, np.complex128)
        if n.shape != (m, m) or b.shape != (m, m):
            raise ConfigurationError(
                f"moment blocks must be {m}x{m}, got {n.shape} and {b.shape}"
            )
        object.__setattr__(self, "mode_count", m)
        object.__setattr__(self, "n_mat", n)
        object.__setattr__(self, "b_mat", b)

    def husimi_covariance(self) -> np.ndarray:
        """Assemble the 2M x 2M Husimi covariance Sigma_Q."""
        m = self.mode_count
        sigma = np.empty((2 * m, 2 * m), dtype=np.complex128)
        eye = np.eye(m)
        sigma[:m, :m] = eye + self.n_mat
        sigma[:m, m:] = self.b_mat
        sigma[m:, :m] = self.b_mat.conj()
        sigma[m:, m:] = eye + self.n_mat.conj()
        return sigma

    def validate(self, atol: float = 1e-8) -> None:
        """Raise if the moment blocks violate hermiticity, symmetry, or
        positive definiteness of Sigma_Q."""
        if np.max(np.abs(self.n_mat - self.n_mat.conj().T)) > atol:
            raise PhysicalityError("N block is not Hermitian")
        if np.max(np.abs(self.b_mat - self.b_mat.T)) > atol:
            raise PhysicalityError("B block is not symmetric")
        sigma = self.husimi_covariance()
        eigs = np.linalg.eigvalsh(sigma)
        if eigs[0] <= 0.0:
            raise PhysicalityError(f"Husimi covariance not positive definite (min eig {eigs[0]:.3e})")
        logdet = float(np.sum(np.log(eigs)))
        if logdet < np.log1p(-PHYSICALITY_TOL):
            raise PhysicalityError(f"det(Sigma_Q) = exp({logdet:.3e}) below 1")


def vacuum_state(mode_count: int) -> GaussianState:
    m = int(mode_count)
    if m < 1:
        raise ConfigurationError(f"mode count must be >= 1, got {mode_count}")
    zero = np.zeros((m, m), dtype=np.complex128)
    return GaussianState(m, zero, zero)


def build_input_state(squeezers, mode_count: int) -> GaussianState:
    """Two-mode-squeezed input state of a squeezer bank.

    Each squeezer (r, phi, (i, j)) contributes N_ii = N_jj = sinh^2 r and
    B_ij = B_ji = exp(i phi) sinh r cosh r; everything else stays vacuum.
    """
    m = int(mode_count)
    if m < 1:
        raise ConfigurationError(f"mode count must be >= 1, got {mode_count}")
    bank = _check_bank(squeezers, m)
    n = np.zeros((m, m), dtype=np.complex128)
    b = np.zeros((m, m), dtype=np.complex128)
    for sq in bank:
        i, j = sq.mode_pair
        sh, ch = np.sinh(sq.r), np.cosh(sq.r)
        n[i, i] = n[j, j] = sh * sh
        b[i, j] = b[j, i] = np.exp(1j * sq.phase) * sh * ch
    return GaussianState(m, n, b)


def apply_unitary(state: GaussianState, unitary) -> GaussianState:
    """Pass the state through an interferometer: N -> U N U^dag, B -> U B U^T."""
    m = state.mode_count
    u = np.asarray(unitary, dtype=np.complex128)
    if u.shape != (m, m):
        raise ConfigurationError(f"unitary shape {u.shape} does not match {m} modes")
    defect = np.max(np.abs(u @ u.conj().T - np.eye(m)))
    if defect > UNITARITY_TOL:
        raise ConfigurationError(
            f"matrix is not unitary: max |UU^dag - I| = {defect:.3e} > {UNITARITY_TOL}"
        )
    n = u @ state.n_mat @ u.conj().T
    b = u @ state.b_mat @ u.T
    # products drift off the exact symmetry class at machine precision
    n = 0.5 * (n + n.conj().T)
    b = 0.5 * (b + b.T)
    return GaussianState(m, n, b)


def apply_loss(state: GaussianState, eta) -> GaussianState:
    """Apply per-mode pure loss: with D = diag(sqrt(eta)), N -> DND, B -> DBD."""
    m = state.mode_count
    eta_vec = np.atleast_1d(np.asarray(eta, dtype=np.float64))
    if eta_vec.size == 1:
        eta_vec = np.full(m, float(eta_vec[0]))
    if eta_vec.shape != (m,):
        raise ConfigurationError(f"loss vector has shape {eta_vec.shape}, expected ({m},)")
    if np.any(eta_vec < 0.0) or np.any(eta_vec > 1.0):
        raise ConfigurationError("loss entries must lie in [0, 1]")
    d = np.sqrt(eta_vec)
    scale = np.outer(d, d)
    return GaussianState(m, state.n_mat * scale, state.b_mat * scale)


def reduce_modes(state: GaussianState, keep) -> GaussianState:
    """Restrict the state to a subset of modes (partial trace over the rest)."""
    keep_idx = [int(k) for k in keep]
    if not keep_idx:
        raise ValueError("mode subset must be nonempty")
    if len(set(keep_idx)) != len(keep_idx):
        raise ValueError(f"duplicate mode indices in {keep_idx}")
    for k in keep_idx:
        if not 0 <= k < state.mode_count:
            raise ValueError(f"mode index {k} out of range for {state.mode_count} modes")
    idx = np.asarray(keep_idx)
    grid = np.ix_(idx, idx)
    return GaussianState(len(keep_idx), state.n_mat[grid], state.b_mat[grid])


def _submatrix_rows(subset: np.ndarray, mode_count: int) -> np.ndarray:
    return np.concatenate([subset, subset + mode_count])


def vacuum_probability(state: GaussianState, subset) -> float:
    """Probability that no photon is detected in any mode of `subset`.

    Equals 1/sqrt(det(Sigma_Q[A])). The determinant is evaluated by a
    Hermitian Cholesky factorization when Sigma_Q[A] passes the positive
    definite check, otherwise by LU with a check that the imaginary residue
    of the determinant stays below 1e-9 relative.
    """
    idx = sorted({int(k) for k in subset})
    if not idx:
        return 1.0
    for k in idx:
        if not 0 <= k < state.mode_count:
            raise ValueError(f"mode index {k} out of range for {state.mode_count} modes")
    sigma = state.husimi_covariance()
    rows = _submatrix_rows(np.asarray(idx), state.mode_count)
    sub = sigma[np.ix_(rows, rows)]
    try:
        chol = np.linalg.cholesky(sub)
        prob = float(1.0 / np.prod(np.diagonal(chol).real))
    except np.linalg.LinAlgError:
        det = complex(np.linalg.det(sub))
        if abs(det.imag) > DET_IMAG_TOL * max(abs(det), 1e-300):
            raise NumericalInstabilityError(
                f"determinant imaginary residue {det.imag:.3e} exceeds tolerance"
            )
        if det.real <= 0.0:
            raise PhysicalityError(
                f"Husimi submatrix for modes {idx} is not positive definite (det {det.real:.3e})"
            )
        prob = float(1.0 / np.sqrt(det.real))
    if prob > 1.0:
        if prob > 1.0 + PHYSICALITY_TOL:
            raise NumericalInstabilityError(f"vacuum probability {prob} exceeds 1")
        prob = 1.0
    return prob


def haar_random_unitary(mode_count: int, seed) -> np.ndarray:
    """Haar-distributed random unitary, deterministic for a given seed.

    QR factorization of a complex standard-normal matrix, with the phases of
    the R diagonal absorbed into Q so the factorization is canonical.
    """
    m = int(mode_count)
    if m < 1:
        raise ConfigurationError(f"mode count must be >= 1, got {mode_count}")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    phases = np.where(np.abs(diag) > 0.0, diag / np.abs(diag), 1.0)
    return q * phases


def mean_photon_number(state: GaussianState) -> float:
    return float(np.trace(state.n_mat).real)


def default_squeezer_bank(rs, phases=None) -> tuple[SqueezerSpec, ...]:
    """Build a bank with squeezer k on modes (2k, 2k+1), the fixed
    convention used by the CLI where no explicit pairing is configured."""
    rs = list(rs)
    if phases is None:
        phases = [0.0] * len(rs)
    phases = list(phases)
    if len(phases) != len(rs):
        raise ConfigurationError(
            f"{len(rs)} squeezing values but {len(phases)} phases"
        )
    return tuple(
        SqueezerSpec(r=r, phase=p, mode_pair=(2 * k, 2 * k + 1))
        for k, (r, p) in enumerate(zip(rs, phases))
    )


def build_circuit_state(circuit: CircuitSpec) -> GaussianState:
    """Canonical pipeline: squeezed input, interferometer, then one effective
    loss combining path transmission and detector efficiency."""
    state = build_input_state(circuit.squeezers, circuit.mode_count)
    state = apply_unitary(state, circuit.unitary)
    return apply_loss(state, circuit.effective_transmission)


def circuit_fingerprint(circuit: CircuitSpec) -> str:
    """sha256 over the circuit's defining bytes, for sample provenance.

    Identical circuits hash identically across runs and platforms with the
    same float layout; any change to the unitary, transmissions, detector
    parameters, or squeezer bank changes the digest.
    """
    h = hashlib.sha256()
    h.update(f"modes={circuit.mode_count}".encode())
    h.update(np.ascontiguousarray(circuit.unitary).tobytes())
    h.update(np.ascontiguousarray(circuit.transmission).tobytes())
    h.update(np.float64(circuit.detector_efficiency).tobytes())
    h.update(np.float64(circuit.dark_count_prob).tobytes())
    for sq in circuit.squeezers:
        h.update(np.float64(sq.r).tobytes())
        h.update(np.float64(sq.phase).tobytes())
        h.update(f"{sq.mode_pair}".encode())
    return h.hexdigest()


def state_fingerprint(state: GaussianState) -> str:
    """sha256 over a state's moment blocks, used when no circuit is known."""
    h = hashlib.sha256()
    h.update(f"modes={state.mode_count}".encode())
    h.update(np.ascontiguousarray(state.n_mat).tobytes())
    h.update(np.ascontiguousarray(state.b_mat).tobytes())
    return h.hexdigest()
