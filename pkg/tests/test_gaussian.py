import numpy as np
import pytest

from gbsim import gaussian as g
from gbsim.errors import ConfigurationError, PhysicalityError

from helpers import random_circuit


class TestSqueezerSpec:
    def test_negative_r_rejected(self):
        with pytest.raises(ConfigurationError):
            g.SqueezerSpec(r=-0.1, phase=0.0, mode_pair=(0, 1))

    def test_equal_modes_rejected(self):
        with pytest.raises(ConfigurationError):
            g.SqueezerSpec(r=0.5, phase=0.0, mode_pair=(2, 2))

    def test_phase_normalized(self):
        sq = g.SqueezerSpec(r=0.5, phase=2 * np.pi + 0.25, mode_pair=(0, 1))
        assert sq.phase == pytest.approx(0.25, abs=1e-12)


class TestCircuitSpec:
    def test_non_unitary_rejected(self):
        with pytest.raises(ConfigurationError):
            g.CircuitSpec(2, np.eye(2) * 1.01, np.ones(2))

    def test_overlapping_squeezers_rejected(self):
        bank = (
            g.SqueezerSpec(0.5, 0.0, (0, 1)),
            g.SqueezerSpec(0.5, 0.0, (1, 2)),
        )
        with pytest.raises(ConfigurationError):
            g.CircuitSpec(4, np.eye(4), np.ones(4), squeezers=bank)

    def test_dark_count_ratio_bound(self):
        with pytest.raises(ConfigurationError):
            g.CircuitSpec(2, np.eye(2), np.ones(2), detector_efficiency=0.4, dark_count_prob=0.3)

    def test_transmission_range(self):
        with pytest.raises(ConfigurationError):
            g.CircuitSpec(2, np.eye(2), np.array([0.5, 1.2]))


class TestBuildInputState:
    def test_empty_bank_is_vacuum(self):
        st = g.build_input_state([], 3)
        assert np.all(st.n_mat == 0) and np.all(st.b_mat == 0)

    def test_tmss_moments_closed_form(self):
        st = g.build_input_state([g.SqueezerSpec(0.5, 0.0, (0, 1))], 2)
        # frozen: sinh^2(0.5) and sinh(0.5)cosh(0.5)
        assert st.n_mat[0, 0].real == pytest.approx(0.27154, abs=5e-6)
        assert st.b_mat[0, 1].real == pytest.approx(0.58760, abs=5e-6)
        assert st.n_mat[0, 0] == pytest.approx(np.sinh(0.5) ** 2, abs=1e-12)
        assert st.b_mat[0, 1] == pytest.approx(np.sinh(0.5) * np.cosh(0.5), abs=1e-12)
        assert st.n_mat[0, 1] == 0 and st.b_mat[0, 0] == 0

    def test_phase_rotates_b_only(self):
        st = g.build_input_state([g.SqueezerSpec(0.5, np.pi / 2, (0, 1))], 2)
        expected = 1j * np.sinh(0.5) * np.cosh(0.5)
        assert st.b_mat[0, 1] == pytest.approx(expected, abs=1e-12)
        assert abs(st.b_mat[0, 1]) == pytest.approx(np.sinh(0.5) * np.cosh(0.5), abs=1e-12)

    def test_pair_out_of_range(self):
        with pytest.raises(ConfigurationError):
            g.build_input_state([g.SqueezerSpec(0.5, 0.0, (0, 5))], 2)


class TestApplyUnitary:
    def test_identity_is_noop(self):
        st = g.build_input_state([g.SqueezerSpec(0.5, 0.3, (0, 1))], 2)
        out = g.apply_unitary(st, np.eye(2))
        np.testing.assert_allclose(out.n_mat, st.n_mat, atol=1e-14)
        np.testing.assert_allclose(out.b_mat, st.b_mat, atol=1e-14)

    def test_permutation_relabels(self):
        st = g.build_input_state([g.SqueezerSpec(0.5, 0.0, (0, 1))], 3)
        perm = np.eye(3)[[1, 0, 2]]
        out = g.apply_unitary(st, perm)
        np.testing.assert_allclose(out.n_mat, st.n_mat, atol=1e-14)  # diagonal symmetric here
        assert out.b_mat[1, 0] == pytest.approx(st.b_mat[0, 1], abs=1e-14)

    def test_composition(self):
        st = g.build_input_state([g.SqueezerSpec(0.7, 1.1, (0, 1))], 4)
        u = g.haar_random_unitary(4, 11)
        v = g.haar_random_unitary(4, 12)
        a = g.apply_unitary(g.apply_unitary(st, u), v)
        b = g.apply_unitary(st, v @ u)
        np.testing.assert_allclose(a.n_mat, b.n_mat, atol=1e-10)
        np.testing.assert_allclose(a.b_mat, b.b_mat, atol=1e-10)

    def test_rejects_non_unitary(self):
        st = g.vacuum_state(2)
        with pytest.raises(ConfigurationError):
            g.apply_unitary(st, np.array([[1.0, 0.1], [0.0, 1.0]]))


class TestApplyLoss:
    def test_unit_loss_noop(self):
        st = g.build_input_state([g.SqueezerSpec(0.5, 0.0, (0, 1))], 2)
        out = g.apply_loss(st, np.ones(2))
        np.testing.assert_allclose(out.n_mat, st.n_mat, atol=0)

    def test_total_loss_gives_vacuum(self):
        st = g.build_input_state([g.SqueezerSpec(0.9, 0.0, (0, 1))], 2)
        out = g.apply_loss(st, np.zeros(2))
        assert np.all(out.n_mat == 0) and np.all(out.b_mat == 0)

    def test_loss_composition(self):
        st = g.build_input_state([g.SqueezerSpec(0.8, 0.4, (0, 1))], 3)
        e1 = np.array([0.9, 0.5, 0.7])
        e2 = np.array([0.6, 0.8, 1.0])
        a = g.apply_loss(g.apply_loss(st, e1), e2)
        b = g.apply_loss(st, e1 * e2)
        np.testing.assert_allclose(a.n_mat, b.n_mat, atol=1e-12)
        np.testing.assert_allclose(a.b_mat, b.b_mat, atol=1e-12)

    def test_uniform_loss_commutes_with_unitary(self):
        st = g.build_input_state([g.SqueezerSpec(0.6, 0.9, (0, 1)), g.SqueezerSpec(0.4, 0.0, (2, 3))], 4)
        u = g.haar_random_unitary(4, 5)
        a = g.apply_loss(g.apply_unitary(st, u), 0.7)
        b = g.apply_unitary(g.apply_loss(st, 0.7), u)
        np.testing.assert_allclose(a.n_mat, b.n_mat, atol=1e-10)
        np.testing.assert_allclose(a.b_mat, b.b_mat, atol=1e-10)

    def test_mean_photon_scaling(self):
        st = g.build_input_state([g.SqueezerSpec(0.5, 0.0, (0, 1))], 2)
        before = g.mean_photon_number(st)
        after = g.mean_photon_number(g.apply_loss(st, 0.37))
        assert after == pytest.approx(0.37 * before, abs=1e-14)

    def test_range_validation(self):
        with pytest.raises(ConfigurationError):
            g.apply_loss(g.vacuum_state(2), [1.0, 1.5])


class TestReduceModes:
    def test_keep_all_identity(self):
        st = g.build_input_state([g.SqueezerSpec(0.5, 0.2, (0, 1))], 3)
        out = g.reduce_modes(st, [0, 1, 2])
        np.testing.assert_allclose(out.n_mat, st.n_mat, atol=0)

    def test_tmss_single_mode_is_thermal(self):
        st = g.build_input_state([g.SqueezerSpec(0.5, 0.0, (0, 1))], 2)
        red = g.reduce_modes(st, [0])
        assert red.n_mat[0, 0] == pytest.approx(np.sinh(0.5) ** 2, abs=1e-12)
        assert red.b_mat[0, 0] == 0

    def test_vacuum_probability_consistent_with_reduction(self):
        circ = random_circuit(3, mode_count=6)
        st = g.build_circuit_state(circ)
        full = g.vacuum_probability(st, [1, 4])
        red = g.vacuum_probability(g.reduce_modes(st, [1, 4]), [0, 1])
        assert red == pytest.approx(full, abs=1e-12)

    def test_empty_subset_rejected(self):
        with pytest.raises(ValueError):
            g.reduce_modes(g.vacuum_state(2), [])


class TestVacuumProbability:
    def test_empty_subset_is_one(self):
        assert g.vacuum_probability(g.vacuum_state(3), []) == 1.0

    @pytest.mark.parametrize("r", [0.1, 0.5, 1.0])
    def test_lossless_tmss_closed_form(self, r):
        st = g.build_input_state([g.SqueezerSpec(r, 0.0, (0, 1))], 2)
        assert g.vacuum_probability(st, [0, 1]) == pytest.approx(1 / np.cosh(r) ** 2, abs=1e-12)

    def test_lossy_tmss_frozen_value(self):
        st = g.apply_loss(g.build_input_state([g.SqueezerSpec(0.5, 0.0, (0, 1))], 2), 0.5)
        p = g.vacuum_probability(st, [0, 1])
        assert p == pytest.approx(0.83081, abs=1e-5)
        s2, c2 = np.sinh(0.5) ** 2, np.cosh(0.5) ** 2
        assert p == pytest.approx(1 / ((1 + 0.5 * s2) ** 2 - 0.25 * s2 * c2), abs=1e-12)

    def test_phase_does_not_change_vacuum_probability(self):
        for phi in (0.0, 0.7, np.pi / 2, 4.0):
            st = g.build_input_state([g.SqueezerSpec(0.5, phi, (0, 1))], 2)
            assert g.vacuum_probability(st, [0, 1]) == pytest.approx(1 / np.cosh(0.5) ** 2, abs=1e-12)


class TestHaarRandomUnitary:
    def test_scalar_case(self):
        u = g.haar_random_unitary(1, 9)
        assert abs(abs(u[0, 0]) - 1.0) < 1e-12

    def test_determinism(self):
        a = g.haar_random_unitary(6, 123)
        b = g.haar_random_unitary(6, 123)
        assert np.array_equal(a, b)

    def test_unitarity_defect(self):
        for seed in range(5):
            u = g.haar_random_unitary(12, seed)
            assert np.max(np.abs(u @ u.conj().T - np.eye(12))) < 1e-12

    @pytest.mark.slow
    def test_mean_square_element(self):
        # |U_ij|^2 averages to 1/M over the Haar measure
        m, seeds = 50, 120
        means = np.array([np.mean(np.abs(g.haar_random_unitary(m, s)) ** 2) for s in range(seeds)])
        grand = means.mean()
        se = means.std(ddof=1) / np.sqrt(seeds)
        assert abs(grand - 1.0 / m) < 3 * max(se, 1e-12)


class TestMeanPhotonNumber:
    def test_vacuum_zero(self):
        assert g.mean_photon_number(g.vacuum_state(4)) == 0.0

    def test_tmss_frozen_value(self):
        st = g.build_input_state([g.SqueezerSpec(0.5, 0.0, (0, 1))], 2)
        assert g.mean_photon_number(st) == pytest.approx(0.54308, abs=5e-6)
        assert g.mean_photon_number(st) == pytest.approx(2 * np.sinh(0.5) ** 2, abs=1e-12)


class TestPhysicality:
    def test_pipeline_states_stay_physical(self):
        for seed in range(8):
            circ = random_circuit(seed, mode_count=8, r_max=1.2)
            st = g.build_circuit_state(circ)
            st.validate()
            sigma = st.husimi_covariance()
            sign, logdet = np.linalg.slogdet(sigma)
            assert sign.real > 0
            assert logdet > np.log1p(-1e-9)

    def test_validate_catches_bad_block(self):
        st = g.build_input_state([g.SqueezerSpec(0.5, 0.0, (0, 1))], 2)
        broken = g.GaussianState(2, st.n_mat + np.array([[0, 1e-3], [0, 0]]), st.b_mat)
        with pytest.raises(PhysicalityError):
            broken.validate()


class TestCircuitState:
    def test_detector_efficiency_folds_into_loss(self):
        circ_a = random_circuit(21, mode_count=4, detector_efficiency=0.8)
        circ_b = g.CircuitSpec(
            mode_count=4,
            unitary=circ_a.unitary,
            transmission=circ_a.transmission * 0.8,
            detector_efficiency=1.0,
            squeezers=circ_a.squeezers,
        )
        a = g.build_circuit_state(circ_a)
        b = g.build_circuit_state(circ_b)
        np.testing.assert_allclose(a.n_mat, b.n_mat, atol=1e-14)
        np.testing.assert_allclose(a.b_mat, b.b_mat, atol=1e-14)
