import numpy as np
import pytest

from hamest.controlled import (
    OptimizerSettings,
    aux_fi,
    auxiliary_model,
    cem_povm,
    equioriented,
    g_bound,
    lemma1_maximizer,
    maximize_fi,
)
from hamest.fisher import classical_fi, outcome_dist
from hamest.hamiltonians import (
    SIGMA_X,
    SIGMA_Z,
    diagonalizer,
    evolution,
    generator_of_diagonalizer,
    generator_of_evolution,
    phase_parameter,
    qubit_angle,
    transported_diagonalizers,
)
from hamest.linalg import (
    random_hermitian,
    random_ket,
    random_unitary,
    spectral_gap,
)

from conftest import interior_xi


class TestCemPovm:
    def test_identity_control_on_diagonal_family(self):
        fam = phase_parameter(np.diag([-1.0, 1.0]), name="diag")
        povm = cem_povm(fam, 0.8, np.eye(2))
        assert np.allclose(povm.elements[0], np.diag([1.0, 0.0]))
        assert np.allclose(povm.elements[1], np.diag([0.0, 1.0]))
        assert povm.labels == (0, 1)

    def test_elements_resolve_identity_for_any_control(self, qubit_angle_family, rng):
        for _ in range(10):
            v = random_unitary(2, rng)
            povm = cem_povm(qubit_angle_family, interior_xi(qubit_angle_family, rng), v)
            total = sum(povm.elements)
            assert np.linalg.norm(total - np.eye(2)) <= 1e-9
            for e in povm.elements:
                w = np.linalg.eigvalsh(e)
                assert w.min() >= -1e-10  # rank-1 projector
                assert w.max() == pytest.approx(1.0, abs=1e-9)

    def test_bare_measurement_statistics_time_independent(self, qubit_angle_family, rng):
        xi = 0.9
        psi0 = random_ket(2, rng)
        povm = cem_povm(qubit_angle_family, xi, np.eye(2))
        base = None
        for t in (0.0, 0.7, 1.9):
            u = evolution(qubit_angle_family, xi, t) if t else np.eye(2)
            p = outcome_dist(u @ psi0, povm).probabilities
            if base is None:
                base = p
            assert np.allclose(p, base, atol=1e-12)


class TestAuxiliaryModel:
    def test_encoding_is_unitary_and_statistics_match(self, qubit_angle_family, rng):
        xi, t = 0.7, 1.3
        v = random_unitary(2, rng)
        psi0 = random_ket(2, rng)
        aux = auxiliary_model(qubit_angle_family, xi, t, v, psi0)
        assert np.linalg.norm(aux.encoding.conj().T @ aux.encoding - np.eye(2)) <= 1e-10
        rho = evolution(qubit_angle_family, xi, t) @ np.outer(psi0, psi0.conj()) \
            @ evolution(qubit_angle_family, xi, t).conj().T
        reference = outcome_dist(rho, cem_povm(qubit_angle_family, xi, v))
        assert np.allclose(
            aux.outcome_probabilities(), reference.probabilities, atol=1e-12
        )


class TestAuxFi:
    def test_route_equivalence_with_cem_povm(self, qubit_angle_family, rng):
        xi, t = np.pi / 4, 1.1
        for _ in range(5):
            v = random_unitary(2, rng)
            psi0 = random_ket(2, rng)

            def dist(x):
                rho = evolution(qubit_angle_family, x, t) @ np.outer(
                    psi0, psi0.conj()
                ) @ evolution(qubit_angle_family, x, t).conj().T
                return outcome_dist(rho, cem_povm(qubit_angle_family, x, v))

            direct = aux_fi(qubit_angle_family, xi, t, v, psi0)
            via_povm = classical_fi(dist, xi)
            assert direct == pytest.approx(via_povm, abs=1e-8)

    def test_phase_family_bare_measurement_insensitive(self, phase_family, rng):
        psi0 = random_ket(2, rng)
        xi = 1.0
        povm = cem_povm(phase_family, xi, np.eye(2))
        probs = [
            outcome_dist(evolution(phase_family, x, 1.3) @ psi0, povm).probabilities
            for x in (0.9, 1.0, 1.1)
        ]
        for p in probs[1:]:
            assert np.allclose(p, probs[0], atol=1e-12)
        assert aux_fi(phase_family, xi, 1.3, np.eye(2), psi0) <= 1e-8

    def test_bare_fi_time_independent(self, qubit_angle_family, rng):
        xi = np.pi / 3
        psi0 = random_ket(2, rng)
        values = [
            aux_fi(qubit_angle_family, xi, t, np.eye(2), psi0)
            for t in (1e-9, 0.8, 2.1)
        ]
        assert max(values) - min(values) <= 1e-8

    def test_optimal_point_closed_form(self, qubit_angle_family):
        xi, t = np.pi / 4, 1.0
        rep = g_bound(qubit_angle_family, xi, t)
        fi = aux_fi(qubit_angle_family, xi, t, rep.v_opt, rep.psi0_opt)
        expected = 4 * np.sin(t) ** 2 + 4 * abs(np.sin(t)) + 1.0
        assert fi == pytest.approx(expected, abs=1e-6)


class TestLemma1:
    def test_aligned_pair(self):
        u, value = lemma1_maximizer(SIGMA_Z, SIGMA_Z)
        assert value == pytest.approx(4.0)
        assert np.allclose(u, np.eye(2))

    def test_z_and_x(self):
        u, value = lemma1_maximizer(SIGMA_Z, SIGMA_X)
        assert value == pytest.approx(4.0)
        achieved = spectral_gap(SIGMA_Z + u @ SIGMA_X @ u.conj().T)
        assert achieved == pytest.approx(4.0, abs=1e-9)

    def test_degenerate_input_allowed(self):
        u, value = lemma1_maximizer(np.eye(3), np.diag([2.0, 1.0, 0.0]))
        assert value == pytest.approx(2.0)
        achieved = spectral_gap(np.eye(3) + u @ np.diag([2.0, 1.0, 0.0]) @ u.conj().T)
        assert achieved == pytest.approx(2.0, abs=1e-9)

    @pytest.mark.parametrize("dim", [2, 3, 4, 5])
    def test_constructed_maximum_never_beaten(self, dim):
        rng = np.random.default_rng(100 + dim)
        for _ in range(50):
            m1 = random_hermitian(dim, rng)
            m2 = random_hermitian(dim, rng)
            u_star, value = lemma1_maximizer(m1, m2)
            achieved = spectral_gap(m1 + u_star @ m2 @ u_star.conj().T)
            assert achieved == pytest.approx(value, abs=1e-9)
            for _ in range(20):
                v = random_unitary(dim, rng)
                assert spectral_gap(m1 + v @ m2 @ v.conj().T) <= value + 1e-9


class TestEquioriented:
    def test_printed_pair(self):
        v1 = np.array([-1j, 1.0]) / np.sqrt(2)
        v2 = np.array([1j, 1.0]) / np.sqrt(2)
        assert equioriented(v1, v2)

    def test_basis_vectors_are_not(self):
        assert not equioriented(np.array([1.0, 0.0]), np.array([0.0, 1.0]))

    def test_global_phase_irrelevant(self, rng):
        v = random_ket(3, rng)
        assert equioriented(v, np.exp(0.7j) * v)


class TestGBound:
    def test_angle_model_closed_form(self, qubit_angle_family):
        for t in (0.4, 1.0, 2.2):
            rep = g_bound(qubit_angle_family, np.pi / 4, t)
            expected = (2 * abs(np.sin(t)) + 1.0) ** 2
            assert rep.g_bound == pytest.approx(expected, abs=1e-6)
            assert rep.delta == pytest.approx(rep.g_bound - rep.cqfi, abs=1e-12)
            assert rep.equioriented
            assert rep.fi_at_optimum == pytest.approx(rep.g_bound, rel=1e-6)

    def test_component_model_closed_form(self, qubit_component_family):
        xi, t = 1.0, 0.9
        om2 = 1.0 + xi**2
        om = np.sqrt(om2)
        cq = (2 / om2**2) * (2 * om2 * t**2 * xi**2 - np.cos(2 * om * t) + 1.0)
        expected = (1.0 / om2 + np.sqrt(2 * (2 * om2 * t**2 * xi**2
                                             - np.cos(2 * om * t) + 1.0)) / om2) ** 2
        rep = g_bound(qubit_component_family, xi, t)
        assert rep.cqfi == pytest.approx(cq, abs=1e-6)
        assert rep.g_bound == pytest.approx(expected, abs=1e-6)

    def test_phase_family_degenerates_to_regular_limit(self, phase_family):
        rep = g_bound(phase_family, 1.0, 1.2)
        assert rep.g_bound == pytest.approx(rep.cqfi, abs=1e-8)
        assert rep.delta == pytest.approx(0.0, abs=1e-8)
        assert rep.cqfi == pytest.approx(4 * 1.2**2, abs=1e-8)

    def test_v_opt_and_preparation_are_valid(self, all_builtin_families, rng):
        for fam in all_builtin_families:
            xi = interior_xi(fam, rng)
            rep = g_bound(fam, xi, 1.0)
            assert np.linalg.norm(
                rep.v_opt.conj().T @ rep.v_opt - np.eye(fam.dim)
            ) <= 1e-10
            assert np.linalg.norm(rep.psi0_opt) == pytest.approx(1.0, abs=1e-10)

    def test_phase_offset_invariance(self, qubit_angle_family):
        values = [
            g_bound(qubit_angle_family, np.pi / 4, 1.0, phi=phi).fi_at_optimum
            for phi in (0.0, np.pi / 3, np.pi)
        ]
        assert max(values) - min(values) <= 1e-8

    def test_saturation_whenever_equioriented(self, all_builtin_families, rng):
        for fam in all_builtin_families:
            for _ in range(5):
                xi = interior_xi(fam, rng)
                t = float(rng.uniform(0.3, 2.5))
                rep = g_bound(fam, xi, t)
                if rep.equioriented:
                    assert rep.fi_at_optimum >= (1 - 1e-4) * rep.g_bound


class TestDecompositionIdentity:
    def test_auxiliary_generator_splits(self, all_builtin_families, rng):
        # differencing the full encoding S V U in the transported gauge must
        # reproduce g_S + (SV) g_U (SV)^+
        for fam in all_builtin_families:
            xi = interior_xi(fam, rng)
            t = float(rng.uniform(0.3, 2.0))
            v = random_unitary(fam.dim, rng)
            h = 1e-5 * max(1.0, abs(xi))
            offsets = (-h, -0.5 * h, 0.0, 0.5 * h, h)
            s_list = transported_diagonalizers(fam, xi, offsets)
            u_list = [evolution(fam, xi + o, t) for o in offsets]
            enc = [s @ v @ u for s, u in zip(s_list, u_list)]
            d1 = (enc[4] - enc[0]) / (2 * h)
            d2 = (enc[3] - enc[1]) / h
            de = (4 * d2 - d1) / 3
            g_direct = 1j * de @ enc[2].conj().T
            g_direct = 0.5 * (g_direct + g_direct.conj().T)
            sv = s_list[2] @ v
            g_split = generator_of_diagonalizer(fam, xi) + sv @ generator_of_evolution(
                fam, xi, t
            ) @ sv.conj().T
            assert np.linalg.norm(g_direct - g_split) <= 1e-6


class TestUniversalBound:
    def test_random_strategies_never_beat_bound(self, all_builtin_families):
        rng = np.random.default_rng(77)
        for fam in all_builtin_families:
            for _ in range(100):
                xi = interior_xi(fam, rng)
                t = float(rng.uniform(0.1, 3.0))
                rep = g_bound(fam, xi, t)
                for _ in range(50):
                    v = random_unitary(fam.dim, rng)
                    psi0 = random_ket(fam.dim, rng)
                    fi = aux_fi(fam, xi, t, v, psi0)
                    assert fi <= rep.g_bound + 1e-6


class TestMaximizeFi:
    def test_angle_model_reaches_bound(self, qubit_angle_family):
        rep = g_bound(qubit_angle_family, np.pi / 4, 1.0)
        _, _, value = maximize_fi(
            qubit_angle_family, np.pi / 4, 1.0,
            OptimizerSettings(restarts=2, seed=11),
        )
        assert value >= 0.999 * rep.g_bound
        assert value <= rep.g_bound + 1e-6

    def test_phase_family_reaches_regular_optimum(self, phase_family):
        from hamest.fisher import cqfi

        _, _, value = maximize_fi(
            phase_family, 1.0, 0.7, OptimizerSettings(restarts=2, seed=11)
        )
        assert value == pytest.approx(cqfi(phase_family, 1.0, 0.7), rel=1e-3)

    def test_deterministic_per_seed(self, qubit_angle_family):
        settings = OptimizerSettings(restarts=1, seed=4)
        a = maximize_fi(qubit_angle_family, 0.8, 0.9, settings)
        b = maximize_fi(qubit_angle_family, 0.8, 0.9, settings)
        assert a[2] == b[2]
        assert np.array_equal(a[0], b[0])
