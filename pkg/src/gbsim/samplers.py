"""Samplers for the exact click distribution and the four mockup models.

The exact sampler resolves modes in ascending order by the chain rule: at
mode m it computes the marginal probability of the prefix extended with
no-click, and takes the click branch with the complementary weight.  Prefix
marginals are memoized across samples, so the cost is governed by the number
of distinct prefixes visited, not the sample count.

Mockups implement the alternative hypotheses the validation battery tests
against:

* thermal     - same mode occupations as the squeezed input, no pair
                coherence (B = 0), then the standard pipeline
* coherent    - brightness-matched laser input; output clicks are
                independent per-mode coins
* distinguishable - each squeezer propagates alone and the per-source click
                patterns combine by OR
* uniform     - every bit pattern equally likely

Every sampler derives one RNG stream per sample from (seed, sample index)
with a counter-based Philox generator, so results are byte-identical for a
given seed regardless of generation order, and two seeds never share a
stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gaussian as g
from . import threshold as t
from .errors import CapacityError, ConfigurationError
from .gaussian import CircuitSpec, GaussianState, SqueezerSpec
from .threshold import GUARD_LIMIT

MODEL_TAGS = ("gbs", "thermal", "coherent", "distinguishable", "uniform")


def _stream(seed, index):
    if not 0 <= seed < 2 ** 63:
        raise ConfigurationError("seed must be a non-negative 63-bit integer")
    key = np.array([seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _child_seed(seed, index):
    # stable 63-bit sub-seed for nested samplers (per source, per setting)
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0])


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Click patterns drawn from one model on one circuit.

    ``patterns`` is a (count, mode_count) uint8 array, one row per sample,
    column i holding the click bit of mode i.  ``phase_index`` is the
    position in a phase sweep, or -1 when the samples are not part of one.
    """

    fingerprint: str
    model: str
    seed: int
    patterns: np.ndarray
    phase_index: int = -1

    def __post_init__(self):
        if self.model not in MODEL_TAGS:
            raise ConfigurationError(f"unknown model tag {self.model!r}")
        arr = np.ascontiguousarray(self.patterns, dtype=np.uint8)
        if arr.ndim != 2:
            raise ConfigurationError("patterns must be a 2-d array")
        if arr.size and arr.max() > 1:
            raise ConfigurationError("patterns must be 0/1 valued")
        arr.setflags(write=False)
        object.__setattr__(self, "patterns", arr)

    @property
    def mode_count(self):
        return self.patterns.shape[1]

    @property
    def count(self):
        return self.patterns.shape[0]

    def click_counts(self):
        return self.patterns.sum(axis=1)

    def pattern_indices(self):
        """Integer index of each sample, bit i = mode i (mode_count <= 20)."""
        if self.mode_count > 20:
            raise ConfigurationError("pattern indices limited to 20 modes")
        weights = (1 << np.arange(self.mode_count)).astype(np.int64)
        return self.patterns.astype(np.int64) @ weights

    def as_tuples(self):
        return [tuple(int(b) for b in row) for row in self.patterns]


def _prefix_probability(state, prefix, memo, threads, guard_limit):
    if prefix in memo:
        return memo[prefix]
    m = len(prefix)
    sub = g.reduce_modes(state, list(range(m)))
    p = t.pattern_probability(sub, prefix, threads=threads, guard_limit=guard_limit)
    memo[prefix] = p
    return p


def exact_sample(state, count, seed, *, fingerprint=None, phase_index=-1,
                 threads=1, guard_limit=GUARD_LIMIT, memo=None):
    """Draw ``count`` exact samples from the threshold click distribution.

    The chain rule resolves modes in ascending order: the no-click
    extension of the current prefix costs one kernel call (its click count
    equals the prefix's), and the click branch is the difference of the two
    marginals.  ``memo`` may be passed in to share prefix marginals across
    calls, but only between calls on the identical state.
    """
    if count < 0:
        raise ConfigurationError("sample count must be non-negative")
    mode_count = state.mode_count
    if fingerprint is None:
        fingerprint = g.state_fingerprint(state)
    if memo is None:
        memo = {}
    memo[()] = 1.0
    out = np.zeros((count, mode_count), dtype=np.uint8)
    for i in range(count):
        rng = _stream(seed, i)
        coins = rng.random(mode_count)
        prefix = ()
        p_here = 1.0
        for m in range(mode_count):
            p_dark = _prefix_probability(state, prefix + (0,), memo, threads, guard_limit)
            p_click = max(p_here - p_dark, 0.0)
            ratio = p_click / p_here if p_here > 0 else 0.0
            if coins[m] < ratio:
                out[i, m] = 1
                prefix = prefix + (1,)
                p_here = p_click
                memo.setdefault(prefix, p_click)
            else:
                prefix = prefix + (0,)
                p_here = p_dark
    return SampleSet(fingerprint, "gbs", seed, out, phase_index=phase_index)


def mockup_thermal_state(squeezers, mode_count):
    """Input state with the squeezed modes' occupations but no pair coherence.

    Same diagonal N as build_input_state, so the mean photon number matches
    the squeezed input exactly; B = 0 removes the two-mode correlations.
    The result feeds the standard unitary/loss/sampling pipeline.
    """
    ref = g.build_input_state(squeezers, mode_count)
    return GaussianState(mode_count, ref.n_mat.copy(), np.zeros_like(ref.b_mat))


def _thermal_output_state(circuit):
    st = mockup_thermal_state(circuit.squeezers, circuit.mode_count)
    st = g.apply_unitary(st, circuit.unitary)
    return g.apply_loss(st, circuit.effective_transmission)


def mockup_coherent_clickprobs(circuit):
    """Per-mode click probabilities for the brightness-matched coherent model.

    Input amplitude on each mode of squeezer k has |alpha|^2 = sinh^2 r_k
    and phase phi_k / 2 (so the pair phase sum matches the squeezed B
    block).  The output field is beta = D_sqrt(eta) U alpha and mode i
    clicks independently with probability 1 - exp(-|beta_i|^2).
    """
    alpha = np.zeros(circuit.mode_count, dtype=np.complex128)
    for sq in circuit.squeezers:
        a, b = sq.mode_pair
        amp = np.sinh(sq.r) * np.exp(0.5j * sq.phase)
        alpha[a] = amp
        alpha[b] = amp
    beta = np.sqrt(circuit.effective_transmission) * (circuit.unitary @ alpha)
    return 1.0 - np.exp(-np.abs(beta) ** 2)


def mockup_coherent_sample(circuit, count, seed):
    if count < 0:
        raise ConfigurationError("sample count must be non-negative")
    probs = mockup_coherent_clickprobs(circuit)
    out = np.zeros((count, circuit.mode_count), dtype=np.uint8)
    for i in range(count):
        rng = _stream(seed, i)
        out[i] = rng.random(circuit.mode_count) < probs
    return SampleSet(g.circuit_fingerprint(circuit), "coherent", seed, out)


def distinguishable_source_states(circuit):
    """Output state of each squeezer propagating alone through the circuit."""
    states = []
    for sq in circuit.squeezers:
        st = g.build_input_state([sq], circuit.mode_count)
        st = g.apply_unitary(st, circuit.unitary)
        states.append(g.apply_loss(st, circuit.effective_transmission))
    return tuple(states)


def _or_model_prob(sources, pattern, exact_sum, guard_limit):
    """Pattern probability of independent sources whose clicks combine by OR.

    The probability of silence on a mode set is the product of per-source
    vacuum probabilities, so the pattern probability follows by the same
    inclusion-exclusion as the indistinguishable kernel with the product
    replacing the single determinant term.
    """
    mode_count = sources[0].mode_count
    pattern = t.as_pattern(pattern, mode_count)
    clicked = np.array(t.clicked_modes(pattern), dtype=np.intp)
    silent = np.array([m for m in range(mode_count) if not pattern[m]], dtype=np.intp)
    if clicked.size > guard_limit:
        raise CapacityError(
            f"pattern has {clicked.size} clicks, guard limit {guard_limit}"
        )
    n = clicked.size
    counters = np.arange(2 ** n, dtype=np.int64)
    bits = (counters[:, None] >> np.arange(n)) & 1
    sizes = bits.sum(axis=1)
    prods = np.ones(2 ** n)
    for st in sources:
        sigma = st.husimi_covariance()
        chol_ok = t._try_cholesky(sigma)
        vacs = np.empty(2 ** n)
        for k in range(n + 1):
            sel = np.nonzero(sizes == k)[0]
            if sel.size == 0:
                continue
            if k == 0:
                zmodes = np.empty((sel.size, 0), dtype=np.intp)
            else:
                zmodes = clicked[np.nonzero(bits[sel])[1]].reshape(sel.size, k)
            modes = np.hstack([zmodes, np.broadcast_to(silent, (sel.size, silent.size))])
            vacs[sel] = t._batch_vacuum(sigma, st.mode_count, np.sort(modes, axis=1), chol_ok)
        prods *= vacs
    signed = np.where(sizes % 2 == 1, -prods, prods)
    if exact_sum:
        total = math.fsum(signed.tolist())
    else:
        total = t._neumaier_sum(signed)
    return t._clamp_probability(total, f"distinguishable pattern {pattern}")


def mockup_distinguishable_prob(circuit, pattern, *, sources=None,
                                exact_sum=False, guard_limit=GUARD_LIMIT):
    """Click-pattern probability when squeezers are mutually distinguishable.

    Each squeezer propagates alone, sources are statistically independent,
    and their click patterns combine by OR.
    """
    pattern = t.as_pattern(pattern, circuit.mode_count)
    if sources is None:
        sources = distinguishable_source_states(circuit)
    if not sources:
        return 1.0 if sum(pattern) == 0 else 0.0
    return _or_model_prob(sources, pattern, exact_sum, guard_limit)


def mockup_distinguishable_sample(circuit, count, seed, *, threads=1):
    """Sample the distinguishable model: each source alone, patterns OR-ed."""
    if count < 0:
        raise ConfigurationError("sample count must be non-negative")
    out = np.zeros((count, circuit.mode_count), dtype=np.uint8)
    for k, st in enumerate(distinguishable_source_states(circuit)):
        part = exact_sample(st, count, _child_seed(seed, k), threads=threads)
        out = np.maximum(out, part.patterns)
    return SampleSet(g.circuit_fingerprint(circuit), "distinguishable", seed, out)


def uniform_prob(mode_count):
    return 2.0 ** (-mode_count)


def mockup_uniform(mode_count, count, seed):
    """Uniform samples over all 2^M bit patterns (unconditioned click number)."""
    if count < 0:
        raise ConfigurationError("sample count must be non-negative")
    out = np.zeros((count, mode_count), dtype=np.uint8)
    for i in range(count):
        rng = _stream(seed, i)
        out[i] = rng.random(mode_count) < 0.5
    return SampleSet("", "uniform", seed, out)


def phase_sweep(circuit, phase_settings, count, seed, *, threads=1):
    """Resample the circuit once per squeezer-phase setting.

    Each setting is a vector with one phase per squeezer; the input state is
    rebuilt with those phases and sampled with a per-setting sub-seed.  All
    returned SampleSets carry the base circuit's fingerprint and their
    setting's index.
    """
    settings = [np.asarray(p, dtype=np.float64) for p in phase_settings]
    for p in settings:
        if p.shape != (len(circuit.squeezers),):
            raise ConfigurationError(
                f"phase setting needs {len(circuit.squeezers)} entries, got shape {p.shape}"
            )
    base_fp = g.circuit_fingerprint(circuit)
    out = []
    for idx, phis in enumerate(settings):
        sqs = tuple(
            SqueezerSpec(sq.r, float(phi), sq.mode_pair)
            for sq, phi in zip(circuit.squeezers, phis)
        )
        varied = CircuitSpec(
            mode_count=circuit.mode_count,
            unitary=circuit.unitary,
            transmission=circuit.transmission,
            detector_efficiency=circuit.detector_efficiency,
            dark_count_prob=circuit.dark_count_prob,
            squeezers=sqs,
        )
        state = g.build_circuit_state(varied)
        out.append(
            exact_sample(
                state, count, _child_seed(seed, idx),
                fingerprint=base_fp, phase_index=idx, threads=threads,
            )
        )
    return out


def model_log_prob_fn(model, circuit, *, threads=1, guard_limit=GUARD_LIMIT):
    """Natural-log pattern probability under one of the five models.

    Returns a callable pattern -> float, caching by pattern; impossible
    patterns give -inf.  Used by the likelihood-ratio and goodness-of-fit
    machinery in the validation battery.
    """
    if model not in MODEL_TAGS:
        raise ConfigurationError(f"unknown model tag {model!r}")
    cache = {}

    if model == "uniform":
        log_u = -circuit.mode_count * math.log(2.0)

        def fn(pattern):
            return log_u

        return fn

    if model == "coherent":
        probs = mockup_coherent_clickprobs(circuit)

        def fn(pattern):
            pattern = t.as_pattern(pattern, circuit.mode_count)
            if pattern in cache:
                return cache[pattern]
            acc = 0.0
            for p, bit in zip(probs, pattern):
                term = p if bit else 1.0 - p
                acc = acc + math.log(term) if term > 0 else -math.inf
                if acc == -math.inf:
                    break
            cache[pattern] = acc
            return acc

        return fn

    if model == "distinguishable":
        sources = distinguishable_source_states(circuit)

        def fn(pattern):
            pattern = t.as_pattern(pattern, circuit.mode_count)
            if pattern not in cache:
                p = mockup_distinguishable_prob(
                    circuit, pattern, sources=sources, guard_limit=guard_limit
                )
                cache[pattern] = math.log(p) if p > 0 else -math.inf
            return cache[pattern]

        return fn

    if model == "gbs":
        state = g.build_circuit_state(circuit)
    else:
        state = _thermal_output_state(circuit)

    def fn(pattern):
        pattern = t.as_pattern(pattern, circuit.mode_count)
        if pattern not in cache:
            p = t.pattern_probability(state, pattern, threads=threads,
                                      guard_limit=guard_limit)
            cache[pattern] = math.log(p) if p > 0 else -math.inf
        return cache[pattern]

    return fn


def marginal_log_prob_fn(model, circuit, *, threads=1, guard_limit=GUARD_LIMIT):
    """Natural-log marginal click probability on a mode subset.

    Returns a callable fn(modes, sub_pattern) -> float where modes is a
    tuple of mode indices and sub_pattern the clicks on those modes in the
    same order.  With modes covering the whole circuit this agrees with
    model_log_prob_fn.  Restriction is exact for every model: Gaussian
    marginals come from mode reduction, the coherent and uniform models
    factor per mode, and the OR combination of independent sources
    restricts to the OR of the reduced sources.
    """
    if model not in MODEL_TAGS:
        raise ConfigurationError(f"unknown model tag {model!r}")
    cache = {}

    if model == "uniform":

        def fn(modes, sub_pattern):
            return -len(tuple(modes)) * math.log(2.0)

        return fn

    if model == "coherent":
        probs = mockup_coherent_clickprobs(circuit)

        def fn(modes, sub_pattern):
            key = (tuple(modes), tuple(sub_pattern))
            if key in cache:
                return cache[key]
            acc = 0.0
            for m, bit in zip(*key):
                term = probs[m] if bit else 1.0 - probs[m]
                acc = acc + math.log(term) if term > 0 else -math.inf
                if acc == -math.inf:
                    break
            cache[key] = acc
            return acc

        return fn

    if model == "distinguishable":
        sources = distinguishable_source_states(circuit)
        reduced = {}

        def fn(modes, sub_pattern):
            key = (tuple(modes), tuple(sub_pattern))
            if key in cache:
                return cache[key]
            modes_t = key[0]
            if modes_t not in reduced:
                reduced[modes_t] = [g.reduce_modes(s, modes_t) for s in sources]
            subs = reduced[modes_t]
            if not subs:
                p = 1.0 if sum(key[1]) == 0 else 0.0
            else:
                p = _or_model_prob(subs, key[1], False, guard_limit)
            cache[key] = math.log(p) if p > 0 else -math.inf
            return cache[key]

        return fn

    if model == "gbs":
        state = g.build_circuit_state(circuit)
    else:
        state = _thermal_output_state(circuit)

    def fn(modes, sub_pattern):
        key = (tuple(modes), tuple(sub_pattern))
        if key not in cache:
            p = t.marginal_pattern_probability(state, key[0], key[1],
                                               threads=threads,
                                               guard_limit=guard_limit)
            cache[key] = math.log(p) if p > 0 else -math.inf
        return cache[key]

    return fn


def sample_model(model, circuit, count, seed, *, threads=1):
    """Dispatch sampling for any of the five model tags."""
    if model == "gbs":
        state = g.build_circuit_state(circuit)
        return exact_sample(state, count, seed,
                            fingerprint=g.circuit_fingerprint(circuit), threads=threads)
    if model == "thermal":
        ss = exact_sample(_thermal_output_state(circuit), count, seed,
                          fingerprint=g.circuit_fingerprint(circuit), threads=threads)
        return SampleSet(ss.fingerprint, "thermal", seed, ss.patterns)
    if model == "coherent":
        return mockup_coherent_sample(circuit, count, seed)
    if model == "distinguishable":
        return mockup_distinguishable_sample(circuit, count, seed, threads=threads)
    if model == "uniform":
        return mockup_uniform(circuit.mode_count, count, seed)
    raise ConfigurationError(f"unknown model tag {model!r}")
