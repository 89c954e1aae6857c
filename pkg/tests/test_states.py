import numpy as np
import pytest

from difisher.engine import differential_fisher_max
from difisher.noise import Flat
from difisher.spin import apply_one_axis_twist, apply_rotation, jz_values, rotation
from difisher.states import (
    JointState,
    PreparationConfig,
    adiabatic_ground_state,
    coherent_x_state,
    diabatic_state,
    noon_state,
    optimal_entangled_state,
    optimal_twist_rotation,
    twin_fock_state,
)

from conftest import dense_j


def jz_moment(state, power=1):
    return float(np.sum(np.abs(state.amplitudes) ** 2 * jz_values(state.n_particles) ** power))


class TestSimpleStates:
    def test_noon_amplitudes(self):
        s = noon_state(2)
        assert np.allclose(s.amplitudes, [1 / np.sqrt(2), 0, 1 / np.sqrt(2)])
        assert np.sum(np.abs(s.amplitudes) ** 2) == pytest.approx(1.0)

    def test_noon_jz_variance_by_two_term_oracle(self):
        n = 10
        assert jz_moment(noon_state(n), 2) == pytest.approx(n**2 / 4)

    def test_odd_n_rejected(self):
        for builder in (noon_state, coherent_x_state, twin_fock_state):
            with pytest.raises(ValueError):
                builder(5)

    def test_coherent_small_system(self):
        assert np.allclose(
            coherent_x_state(2).amplitudes, [0.5, 1 / np.sqrt(2), 0.5], atol=1e-12
        )

    def test_coherent_matches_rotated_top_state(self):
        n = 8
        top = np.zeros(n + 1)
        top[-1] = 1.0
        rotated = rotation(n, "y", np.pi / 2).entries @ top
        assert np.allclose(coherent_x_state(n).amplitudes, rotated, atol=1e-12)

    def test_coherent_mean_spin(self):
        n = 12
        s = coherent_x_state(n)
        jx = dense_j(n, "x")
        mean = np.vdot(s.amplitudes, jx @ s.amplitudes).real
        assert mean == pytest.approx(n / 2, abs=1e-10)

    def test_twin_fock_is_central_basis_vector(self):
        s = twin_fock_state(4)
        assert np.allclose(s.amplitudes, np.eye(5)[2])
        assert jz_moment(s) == pytest.approx(0.0)


class TestAdiabaticGroundState:
    def test_zero_interaction_is_coherent(self):
        n = 10
        gs = adiabatic_ground_state(n, 0.0)
        assert np.max(np.abs(gs.amplitudes - coherent_x_state(n).amplitudes)) < 1e-8

    def test_deep_interaction_is_twin_fock(self):
        n = 8
        gs = adiabatic_ground_state(n, 1e6 * n**2)
        overlap = abs(gs.overlap(twin_fock_state(n)))
        assert overlap > 1 - 1e-6

    def test_small_system_against_dense_eigensolver(self):
        n, lam = 2, 2.0
        h = (lam / n) * np.diag(jz_values(n) ** 2) - dense_j(n, "x").real
        vals, vecs = np.linalg.eigh(h)
        want = vecs[:, 0]
        want = want * np.sign(want[n // 2])
        got = adiabatic_ground_state(n, lam).amplitudes
        assert np.max(np.abs(got - want)) < 1e-10

    def test_continuity_in_lambda(self):
        n = 20
        for lam in (0.5, 20.0, 400.0):
            a = adiabatic_ground_state(n, lam)
            b = adiabatic_ground_state(n, lam * (1 + 1e-6))
            assert abs(a.overlap(b)) > 1 - 1e-6

    def test_amplitudes_real_and_even(self):
        gs = adiabatic_ground_state(12, 7.3)
        assert np.max(np.abs(gs.amplitudes.imag)) < 1e-10
        assert np.max(np.abs(gs.amplitudes - gs.amplitudes[::-1])) < 1e-10

    def test_negative_lambda_rejected(self):
        with pytest.raises(ValueError):
            adiabatic_ground_state(4, -1.0)


class TestDiabaticState:
    def test_composition_oracle_with_explicit_rotation(self):
        n, tau, delta = 4, 0.3, 0.7
        got = diabatic_state(n, tau, axis="x", delta=delta)
        oracle = apply_rotation(
            apply_one_axis_twist(coherent_x_state(n), tau), "x", -delta
        )
        assert np.max(np.abs(got.amplitudes - oracle.amplitudes)) < 1e-14

    def test_rotation_cannot_hurt_untwisted_state(self):
        # delta* maximizes the noiseless information, so it at least matches
        # the unrotated coherent state
        n = 6
        from difisher.states import _noiseless_mz_fisher_max

        base = _noiseless_mz_fisher_max(coherent_x_state(n))
        opt = _noiseless_mz_fisher_max(diabatic_state(n, 0.0))
        assert opt >= base - 1e-9

    def test_half_pi_twist_gives_two_component_cat_information(self):
        # the cat components sit along +-x, so the optimizing rotation is
        # equatorial; flat-total-noise differential information reaches N^2/4
        n = 20
        s = diabatic_state(n, np.pi / 2, axis="auto")
        res = differential_fisher_max(s, s, "mz-y", Flat())
        assert res.fisher == pytest.approx(n**2 / 4, rel=0.02)

    def test_auto_axis_never_loses_to_x(self):
        n = 10
        for tau in (0.1, np.pi / 2):
            sx = diabatic_state(n, tau, axis="x", rotation_grid=180)
            sa = diabatic_state(n, tau, axis="auto", rotation_grid=180)
            fx = differential_fisher_max(sx, sx, "mz-y", Flat()).fisher
            fa = differential_fisher_max(sa, sa, "mz-y", Flat()).fisher
            assert fa >= fx - 1e-9

    def test_tau_range_checked(self):
        with pytest.raises(ValueError, match="tau"):
            diabatic_state(4, -0.1)

    def test_optimal_rotation_reproducible(self):
        n, tau = 6, 0.4
        d1 = optimal_twist_rotation(n, tau, grid=90)
        d2 = optimal_twist_rotation(n, tau, grid=90)
        assert d1 == d2


class TestJointStates:
    def test_optimal_entangled_state_amplitudes(self):
        n = 4
        rel = optimal_entangled_state(n, "relative-delta")
        assert rel.amplitudes[n, 0] == pytest.approx(1 / np.sqrt(2))
        assert rel.amplitudes[0, n] == pytest.approx(1 / np.sqrt(2))
        tot = optimal_entangled_state(n, "total-delta")
        assert tot.amplitudes[n, n] == pytest.approx(1 / np.sqrt(2))
        assert tot.amplitudes[0, 0] == pytest.approx(1 / np.sqrt(2))
        assert np.sum(np.abs(rel.amplitudes) ** 2) == pytest.approx(1.0)

    def test_bad_variant_and_odd_n(self):
        with pytest.raises(ValueError, match="variant"):
            optimal_entangled_state(4, "bogus")
        with pytest.raises(ValueError):
            optimal_entangled_state(3, "relative-delta")

    def test_joint_state_validation(self):
        with pytest.raises(ValueError, match="normalized"):
            JointState(2, 2, np.ones((3, 3)))


class TestPreparationConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            PreparationConfig(lam=-1.0)
        with pytest.raises(ValueError):
            PreparationConfig(tau=4.0)
        with pytest.raises(ValueError):
            PreparationConfig(rotation_axis="w")

    def test_roundtrip_through_prepared_state(self):
        from difisher.states import prepared_state

        gs = prepared_state(6, PreparationConfig(lam=3.0))
        assert np.allclose(
            gs.amplitudes, adiabatic_ground_state(6, 3.0).amplitudes
        )
        dyn = prepared_state(6, PreparationConfig(tau=0.2, delta=0.5))
        assert np.allclose(
            dyn.amplitudes, diabatic_state(6, 0.2, delta=0.5).amplitudes
        )
