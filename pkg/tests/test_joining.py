import numpy as np
import pytest

from conftest import E11, E12, E21, E22
from wstarmix import algebras
from wstarmix.errors import InputError
from wstarmix.gns import build_gns, cond_expectation, mirror_system
from wstarmix.joining import build_product_gns, joining_invariant_reports, joining_value


class TestJoiningValue:
    def test_left_marginal_is_state(self, m2_diag):
        rng = np.random.default_rng(0)
        one = np.eye(4, dtype=complex)
        for _ in range(6):
            a = m2_diag.system.algebra.random_element(rng)
            got = joining_value(m2_diag.gns, m2_diag.mirror, m2_diag.condexp, [(a, one)])
            assert abs(got - m2_diag.system.state.value(a)) < 1e-10

    def test_trivial_subsystem_factorizes(self, m2_trivial):
        # expectation onto the scalars makes the joining a plain product
        rng = np.random.default_rng(1)
        built = m2_trivial
        for _ in range(6):
            a = built.system.algebra.random_element(rng)
            b = built.mirror.commutant_algebra.random_element(rng)
            got = built.product.value([(a, b)])
            want = built.system.state.value(a) * built.mirror.mirror_state(b)
            assert abs(got - want) < 1e-10

    def test_offdiagonal_left_factor_vanishes(self, m2_diag):
        # D(e12) = 0 kills every pair
        rng = np.random.default_rng(2)
        for _ in range(6):
            b = m2_diag.mirror.commutant_algebra.random_element(rng)
            assert abs(m2_diag.product.value([(E12, b)])) < 1e-12

    def test_linear_in_terms(self, m2_diag):
        one = np.eye(4, dtype=complex)
        split = m2_diag.product.value([(E11, one), (E22, one)])
        joint = m2_diag.product.value([(E11 + E22, one)])
        assert abs(split - joint) < 1e-12

    def test_rejects_elements_outside_factors(self, m2_diag):
        with pytest.raises(InputError):
            m2_diag.product.gamma([(np.eye(4), np.eye(4))])  # 4x4 is not in M2


def oracle_gram_m2_diag():
    """Direct formula for the joining Gram of M2 over its diagonal.

    On the trace representation the commutant acts by right multiplications
    and the mirrored expectation is again the diagonal part, so
    omega((e_i (x) r_j)^* (e_k (x) r_l)) = tr(diag(e_i^* e_k) diag(e_l e_j^*)) / 2.
    """
    units = [E11, E12, E21, E22]
    g = np.zeros((16, 16), dtype=complex)
    for i, ei in enumerate(units):
        for j, ej in enumerate(units):
            for k, ek in enumerate(units):
                for l, el in enumerate(units):
                    left = np.diag(np.diag(ei.conj().T @ ek))
                    right = np.diag(np.diag(el @ ej.conj().T))
                    g[i * 4 + j, k * 4 + l] = np.trace(left @ right) / 2
    return g


class TestProductGns:
    def test_scalar_system_product_is_trivial(self):
        alg = algebras.trivial_algebra(1)
        dyn = algebras.inner_automorphism(alg, np.eye(1))
        system = algebras.make_system(alg, np.eye(1), dyn)
        rep = build_gns(system)
        sub = algebras.validate_subsystem(system, alg)
        ce = cond_expectation(rep, sub)
        mirror = mirror_system(rep, ce)
        product = build_product_gns(rep, mirror, ce)
        assert product.dim == 1
        assert np.allclose(product.dynamics_unitary, np.eye(1))

    def test_m2_diag_rank_matches_oracle(self, m2_diag):
        evals = np.linalg.eigvalsh(oracle_gram_m2_diag())
        oracle_rank = int(np.sum(evals > 1e-10 * evals[-1]))
        assert oracle_rank == 8  # frozen from the dense Gram eigensolve
        assert m2_diag.product.dim == oracle_rank

    def test_full_subsystem_shared_equals_left(self, m2_full):
        p = m2_full.product
        assert p.shared_subspace.equals(p.left_subspace, 1e-9)

    def test_diag_shared_strictly_smaller(self, m2_diag):
        p = m2_diag.product
        assert p.shared_subspace.rank == 2
        assert p.left_subspace.rank == 4

    def test_dynamics_unitary(self, hand_instances):
        for name, built in hand_instances.items():
            w = built.product.dynamics_unitary
            n = w.shape[0]
            assert np.linalg.norm(w.conj().T @ w - np.eye(n)) < 1e-8, name

    def test_cyclic_vector_normalized(self, m2_diag):
        assert abs(np.linalg.norm(m2_diag.product.cyclic_vector) - 1.0) < 1e-10

    def test_invariant_battery(self, hand_instances):
        for name, built in hand_instances.items():
            for report in joining_invariant_reports(built.product):
                assert report.value, f"{name}: {report.name} {report.worst_residual}"

    def test_battery_non_tracial(self):
        alg = algebras.full_matrix_algebra(2)
        dyn = algebras.inner_automorphism(alg, np.diag([1.0, 1.0j]))
        system = algebras.make_system(alg, np.diag([2 / 3, 1 / 3]), dyn)
        sub = algebras.validate_subsystem(system, algebras.block_diagonal_algebra([1, 1]))
        rep = build_gns(system)
        ce = cond_expectation(rep, sub)
        mirror = mirror_system(rep, ce)
        product = build_product_gns(rep, mirror, ce)
        for report in joining_invariant_reports(product):
            assert report.value, f"{report.name}: {report.worst_residual}"


class TestLemmaOrthogonality:
    def test_kernel_tensors_orthogonal_to_shared(self, m2_diag):
        # for D(a) = 0 the class of a (x) b has no component along the shared space
        p = m2_diag.product
        r = p.shared_projector
        rng = np.random.default_rng(5)
        for _ in range(8):
            coeff = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            a = coeff[0] * E12 + coeff[1] * E21
            b = p.mirror.commutant_algebra.random_element(rng)
            v = p.gamma([(a, b)])
            assert np.linalg.norm(r @ v) < 1e-10

    def test_expectation_projects_simple_tensors(self, m2_diag):
        p = m2_diag.product
        rng = np.random.default_rng(6)
        for _ in range(6):
            a = p.gns.system.algebra.random_element(rng)
            b = p.mirror.commutant_algebra.random_element(rng)
            lhs = p.gamma([(p.condexp(a, p.gns), p.mirror.mirrored_expectation(b))])
            rhs = p.shared_projector @ p.gamma([(a, b)])
            assert np.linalg.norm(lhs - rhs) < 1e-8
