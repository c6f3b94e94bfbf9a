import numpy as np
import pytest

from gbsim import fock as f
from gbsim import gaussian as g
from gbsim import threshold as t
from gbsim.errors import CapacityError, ConfigurationError, PhysicalityError

from helpers import random_circuit


def basis_index(mode_count, cutoff, occ):
    occs = f.fock_basis(mode_count, cutoff)
    hits = np.nonzero((occs == occ).all(axis=1))[0]
    assert hits.size == 1
    return int(hits[0])


def number_state(mode_count, cutoff, occ):
    amps = np.zeros(len(f.fock_basis(mode_count, cutoff)), dtype=complex)
    amps[basis_index(mode_count, cutoff, occ)] = 1.0
    return f.FockState(mode_count, cutoff, amplitudes=amps)


class TestSchmidtInput:
    def test_no_squeezers_is_vacuum(self):
        st = f.schmidt_input_state([], 3)
        assert st.diagonal()[0] == pytest.approx(1.0, abs=0)
        assert st.norm_deficit == 0.0

    def test_zero_r_is_vacuum(self):
        st = f.schmidt_input_state([g.SqueezerSpec(0.0, 0.0, (0, 1))], 2)
        assert st.diagonal()[0] == pytest.approx(1.0, abs=1e-15)

    def test_tail_frozen_value(self):
        st = f.schmidt_input_state([g.SqueezerSpec(0.5, 0.0, (0, 1))], 2, cutoff=8)
        # geometric tail: deficit equals tanh^{2(cutoff+1)} r for one squeezer
        assert st.norm_deficit == pytest.approx(np.tanh(0.5) ** 18, rel=1e-9)
        assert st.norm_deficit <= 9.3e-7

    def test_mean_photons_within_series_tail(self):
        sq = g.SqueezerSpec(0.5, 0.0, (0, 1))
        st = f.schmidt_input_state([sq], 2, cutoff=8)
        exact = g.mean_photon_number(g.build_input_state([sq], 2))
        lam = np.tanh(0.5) ** 2
        bound = 2 * lam ** 9 * (9 + lam / (1 - lam))
        diff = exact - f.fock_mean_photon_number(st)
        assert 0 <= diff <= bound * (1 + 1e-9)

    def test_pump_phase_enters_amplitudes(self):
        st = f.schmidt_input_state([g.SqueezerSpec(0.5, 1.3, (0, 1))], 2, cutoff=4)
        amp = st.amplitudes[basis_index(2, 8, (1, 1))]
        want = np.tanh(0.5) / np.cosh(0.5) * np.exp(1j * 1.3)
        assert amp == pytest.approx(want, abs=1e-12)

    def test_tail_tolerance_guard(self):
        with pytest.raises(CapacityError):
            f.schmidt_input_state([g.SqueezerSpec(1.2, 0.0, (0, 1))], 2, cutoff=2, tail_tol=1e-6)

    def test_cutoff_validation(self):
        with pytest.raises(ConfigurationError):
            f.schmidt_input_state([g.SqueezerSpec(0.5, 0.0, (0, 1))], 2, cutoff=0)

    def test_two_squeezers_product_weight(self):
        sqs = [g.SqueezerSpec(0.4, 0.0, (0, 1)), g.SqueezerSpec(0.3, 0.0, (2, 3))]
        st = f.schmidt_input_state(sqs, 4, cutoff=6)
        amp = st.amplitudes[basis_index(4, 24, (1, 1, 2, 2))]
        want = (np.tanh(0.4) / np.cosh(0.4)) * (np.tanh(0.3) ** 2 / np.cosh(0.3))
        assert amp == pytest.approx(want, abs=1e-12)


class TestApplyUnitary:
    def test_identity_unchanged(self):
        st = f.schmidt_input_state([g.SqueezerSpec(0.5, 0.7, (0, 1))], 2, cutoff=4)
        out = f.fock_apply_unitary(st, np.eye(2))
        np.testing.assert_allclose(out.amplitudes, st.amplitudes, atol=1e-12)

    def test_single_photon_gives_unitary_column(self):
        u = g.haar_random_unitary(3, 7)
        out = f.fock_apply_unitary(number_state(3, 2, (0, 1, 0)), u)
        for i in range(3):
            e = [0, 0, 0]
            e[i] = 1
            got = out.amplitudes[basis_index(3, 2, e)]
            assert got == pytest.approx(u[i, 1], abs=1e-12)

    def test_hong_ou_mandel(self):
        bs = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        out = f.fock_apply_unitary(number_state(2, 2, (1, 1)), bs)
        coincidence = out.amplitudes[basis_index(2, 2, (1, 1))]
        assert abs(coincidence) < 1e-12
        bunched = abs(out.amplitudes[basis_index(2, 2, (2, 0))]) ** 2
        assert bunched == pytest.approx(0.5, abs=1e-12)

    def test_norm_preserved(self):
        st = f.schmidt_input_state(
            [g.SqueezerSpec(0.6, 0.2, (0, 1)), g.SqueezerSpec(0.4, 1.0, (2, 3))], 4, cutoff=5
        )
        out = f.fock_apply_unitary(st, g.haar_random_unitary(4, 3))
        assert abs(np.linalg.norm(out.amplitudes) - np.linalg.norm(st.amplitudes)) < 1e-10
        assert out.norm_deficit == st.norm_deficit

    @pytest.mark.parametrize("seed", range(4))
    def test_matches_permanent_formula(self, seed):
        u = g.haar_random_unitary(3, seed + 40)
        rng = np.random.default_rng(seed)
        occs = f.fock_basis(3, 4)
        n_in = tuple(int(x) for x in occs[rng.integers(1, len(occs))])
        out = f.fock_apply_unitary(number_state(3, 4, n_in), u)
        for k in range(len(occs)):
            n_out = tuple(int(x) for x in occs[k])
            want = f.transition_amplitude(u, n_in, n_out)
            assert out.amplitudes[k] == pytest.approx(want, abs=1e-12)

    def test_composition(self):
        st = f.schmidt_input_state([g.SqueezerSpec(0.5, 0.4, (0, 1))], 3, cutoff=4)
        u = g.haar_random_unitary(3, 21)
        v = g.haar_random_unitary(3, 22)
        a = f.fock_apply_unitary(f.fock_apply_unitary(st, u), v)
        b = f.fock_apply_unitary(st, v @ u)
        np.testing.assert_allclose(a.amplitudes, b.amplitudes, atol=1e-10)

    def test_mixed_path_matches_pure_path(self):
        st = f.schmidt_input_state([g.SqueezerSpec(0.5, 0.9, (0, 1))], 3, cutoff=3)
        u = g.haar_random_unitary(3, 13)
        pure = f.fock_apply_unitary(st, u)
        mixed = f.fock_apply_unitary(
            f.FockState(3, st.cutoff, rho=st.density_matrix()), u
        )
        np.testing.assert_allclose(mixed.rho, pure.density_matrix(), atol=1e-10)

    def test_rejects_non_unitary(self):
        st = number_state(2, 2, (1, 0))
        with pytest.raises(ConfigurationError):
            f.fock_apply_unitary(st, np.array([[1.0, 0.2], [0.0, 1.0]]))


class TestApplyLoss:
    def test_full_transmission_unchanged(self):
        st = f.schmidt_input_state([g.SqueezerSpec(0.5, 0.0, (0, 1))], 2, cutoff=4)
        assert f.fock_apply_loss(st, 1.0) is st

    def test_single_photon_click_probability(self):
        st = f.fock_apply_loss(number_state(1, 3, (1,)), 0.37)
        dist = f.fock_click_distribution(st)
        assert dist[1] == pytest.approx(0.37, abs=1e-12)
        assert dist[0] == pytest.approx(0.63, abs=1e-12)

    def test_thermal_stays_thermal(self):
        nbar, eta, cut = 0.6, 0.5, 24
        occ = f.fock_basis(1, cut)[:, 0]
        p = (nbar / (1 + nbar)) ** occ / (1 + nbar)
        st = f.FockState(1, cut, rho=np.diag(p.astype(complex)), norm_deficit=1 - p.sum())
        out = f.fock_apply_loss(st, eta)
        want = (eta * nbar / (1 + eta * nbar)) ** occ / (1 + eta * nbar)
        # deep truncation makes the low-lying populations essentially exact
        np.testing.assert_allclose(out.diagonal()[:15], want[:15], atol=1e-10)

    def test_trace_preserved(self):
        for seed in range(3):
            rng = np.random.default_rng(seed)
            st = f.schmidt_input_state(
                [g.SqueezerSpec(0.6, rng.uniform(0, 6), (0, 1))], 3, cutoff=6
            )
            st = f.fock_apply_unitary(st, g.haar_random_unitary(3, seed + 60))
            out = f.fock_apply_loss(st, rng.uniform(0.3, 0.9, size=3))
            assert abs(out.trace() - st.trace()) < 1e-10

    def test_sequential_equals_combined(self):
        st = f.schmidt_input_state([g.SqueezerSpec(0.5, 0.0, (0, 1))], 2, cutoff=6)
        a = f.fock_apply_loss(f.fock_apply_loss(st, 0.8), 0.75)
        b = f.fock_apply_loss(st, 0.6)
        np.testing.assert_allclose(a.rho, b.rho, atol=1e-12)

    def test_validation(self):
        st = number_state(1, 2, (1,))
        with pytest.raises(ConfigurationError):
            f.fock_apply_loss(st, 1.2)


class TestClickDistribution:
    def test_vacuum(self):
        dist = f.fock_click_distribution(f.schmidt_input_state([], 3))
        assert dist[0] == 1.0
        assert dist.sum() == 1.0

    def test_tmss_frozen_distribution(self):
        st = f.schmidt_input_state([g.SqueezerSpec(0.5, 0.0, (0, 1))], 2)
        dist = f.fock_click_distribution(st)
        tail = st.norm_deficit
        assert dist[0] == pytest.approx(0.78645, abs=1e-5 + tail)
        assert dist[1] == 0.0 and dist[2] == 0.0
        assert dist[3] == pytest.approx(0.21355, abs=1e-5 + tail)
        assert dist.sum() == pytest.approx(st.trace(), abs=1e-12)

    def test_splitter_on_tmss_matches_engine(self):
        # 50/50 splitter on TMSS(r=0.5), the canonical cross-check circuit
        sq = [g.SqueezerSpec(0.5, 0.0, (0, 1))]
        bs = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        oracle = f.fock_click_distribution(
            f.fock_apply_unitary(f.schmidt_input_state(sq, 2), bs)
        )
        st = g.apply_unitary(g.build_input_state(sq, 2), bs)
        for idx in range(4):
            engine = t.pattern_probability(st, t.index_pattern(idx, 2))
            assert oracle[idx] == pytest.approx(engine, abs=1e-6)

    def test_mode_count_guard(self):
        with pytest.raises(CapacityError):
            f.fock_click_distribution(f.schmidt_input_state([], 7, cutoff=1))


class TestOracleAgreement:
    @pytest.mark.parametrize("seed,n_sq,eta,cutoff", [
        (1, 2, 1.0, 8),
        (2, 1, 1.0, 8),
        (4, 1, 0.7, 7),
        (6, 2, 0.7, 4),
    ])
    def test_one_sided_agreement(self, seed, n_sq, eta, cutoff):
        rng = np.random.default_rng(seed)
        sqs = [
            g.SqueezerSpec(rng.uniform(0.2, 0.6), rng.uniform(0, 2 * np.pi), (2 * k, 2 * k + 1))
            for k in range(n_sq)
        ]
        u = g.haar_random_unitary(4, seed + 500)
        fs = f.schmidt_input_state(sqs, 4, cutoff=cutoff)
        fs = f.fock_apply_unitary(fs, u)
        if eta < 1:
            fs = f.fock_apply_loss(fs, eta)
        dist = f.fock_click_distribution(fs)
        st = g.apply_loss(g.apply_unitary(g.build_input_state(sqs, 4), u), eta)
        for idx in range(16):
            engine = t.pattern_probability(st, t.index_pattern(idx, 4))
            diff = engine - dist[idx]
            # truncation only removes weight, so the oracle can only undershoot
            assert diff >= -1e-9
            assert diff <= fs.norm_deficit + 1e-9
        assert dist.sum() == pytest.approx(1.0 - fs.norm_deficit, abs=1e-10)


class TestTransitionAmplitude:
    def test_photon_mismatch_is_zero(self):
        u = g.haar_random_unitary(2, 1)
        assert f.transition_amplitude(u, (1, 0), (1, 1)) == 0

    def test_two_by_two_permanent(self):
        u = g.haar_random_unitary(2, 8)
        want = u[0, 0] * u[1, 1] + u[0, 1] * u[1, 0]
        assert f.transition_amplitude(u, (1, 1), (1, 1)) == pytest.approx(want, abs=1e-14)

    def test_bunched_normalization(self):
        u = g.haar_random_unitary(2, 9)
        want = np.sqrt(2.0) * u[0, 0] * u[0, 1]
        assert f.transition_amplitude(u, (1, 1), (2, 0)) == pytest.approx(want, abs=1e-14)

    def test_photon_limit_guard(self):
        u = np.eye(2)
        with pytest.raises(CapacityError):
            f.transition_amplitude(u, (7, 7), (7, 7))


class TestFockStateValidate:
    def test_pure_state_passes(self):
        st = f.schmidt_input_state([g.SqueezerSpec(0.5, 0.0, (0, 1))], 2)
        st.validate()

    def test_mixed_state_psd_check(self):
        st = f.schmidt_input_state([g.SqueezerSpec(0.4, 0.0, (0, 1))], 2, cutoff=4)
        lossy = f.fock_apply_loss(st, 0.6)
        lossy.validate(psd_check=True)

    def test_trace_deficit_mismatch_caught(self):
        amps = np.zeros(len(f.fock_basis(2, 2)), dtype=complex)
        amps[0] = 0.9
        with pytest.raises(PhysicalityError):
            f.FockState(2, 2, amplitudes=amps, norm_deficit=0.0).validate()

    def test_hermiticity_defect_caught(self):
        d = len(f.fock_basis(2, 2))
        rho = np.zeros((d, d), dtype=complex)
        rho[0, 0] = 1.0
        rho[0, 1] = 1e-6
        with pytest.raises(PhysicalityError):
            f.FockState(2, 2, rho=rho).validate()

    def test_representation_exclusivity(self):
        with pytest.raises(ConfigurationError):
            f.FockState(2, 2)
