"""Shared builders for randomized test circuits."""

import itertools

import numpy as np

from gbsim import gaussian as g


def random_circuit(
    seed,
    mode_count=8,
    n_squeezers=None,
    r_max=0.8,
    eta_range=(0.5, 1.0),
    detector_efficiency=1.0,
    phases=True,
):
    """Seeded random circuit: Haar unitary, random squeezer bank on the
    default (2k, 2k+1) pairing, uniform random per-mode transmission."""
    rng = np.random.default_rng(seed)
    if n_squeezers is None:
        n_squeezers = mode_count // 2
    rs = rng.uniform(0.2, r_max, n_squeezers)
    phis = rng.uniform(0.0, 2 * np.pi, n_squeezers) if phases else np.zeros(n_squeezers)
    eta = rng.uniform(*eta_range, mode_count)
    return g.CircuitSpec(
        mode_count=mode_count,
        unitary=g.haar_random_unitary(mode_count, rng.integers(1 << 31)),
        transmission=eta,
        detector_efficiency=detector_efficiency,
        squeezers=g.default_squeezer_bank(rs, phis),
    )


def brute_pattern_probability(state, pattern):
    """Direct inclusion-exclusion over vacuum probabilities, one subset at a
    time through the public scalar API. Reference path for the kernel."""
    clicked = [i for i, b in enumerate(pattern) if b]
    silent = [i for i, b in enumerate(pattern) if not b]
    total = 0.0
    for size in range(len(clicked) + 1):
        for z in itertools.combinations(clicked, size):
            total += (-1.0) ** size * g.vacuum_probability(state, list(z) + silent)
    return total
