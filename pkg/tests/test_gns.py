import numpy as np
import pytest

from conftest import E11, E12, E21, E22, m2_system
from wstarmix import algebras
from wstarmix.gns import (
    build_gns,
    cond_expectation,
    condexp_invariant_reports,
    gns_invariant_reports,
    mirror_invariant_reports,
    mirror_system,
)


def trivial_system():
    alg = algebras.trivial_algebra(1)
    dyn = algebras.inner_automorphism(alg, np.eye(1))
    return algebras.make_system(alg, np.eye(1), dyn)


class TestBuildGns:
    def test_scalar_system_is_one_dimensional(self):
        rep = build_gns(trivial_system())
        assert rep.dim == 1
        assert np.allclose(rep.dynamics_unitary, np.eye(1))
        assert np.allclose(rep.cyclic_vector, [1.0])

    def test_m2_has_dimension_four(self, m2_diag):
        assert m2_diag.gns.dim == 4

    def test_left_multiplication_rank(self, m2_diag):
        # oracle: left multiplication by e11 on M2 has rank 2 (first-row span)
        rank = np.linalg.matrix_rank(m2_diag.gns.represent(E11))
        assert rank == 2

    def test_embedding_isometry(self, m2_diag):
        rep = m2_diag.gns
        rng = np.random.default_rng(0)
        for _ in range(5):
            a = rep.system.algebra.random_element(rng)
            b = rep.system.algebra.random_element(rng)
            want = rep.system.state.value(a.conj().T @ b)
            got = np.vdot(rep.embed(a), rep.embed(b))
            assert abs(want - got) < 1e-10

    def test_unembed_inverts_embed(self, m2_diag):
        rep = m2_diag.gns
        a = np.array([[1.0, 2.0], [3.0, 4.0 + 1.0j]])
        assert np.allclose(rep.unembed(rep.embed(a)), a)

    def test_tracial_conjugation_is_star(self, m2_diag):
        # both the direct star map and the polar-decomposition route are built;
        # for a trace they must coincide
        rep = m2_diag.gns
        assert np.allclose(rep.conjugation.matrix, rep.star_conjugation.matrix)
        a = np.array([[0.3, 1.0 - 2.0j], [0.0, 0.7j]])
        got = rep.conjugation.apply(rep.embed(a))
        assert np.allclose(got, rep.embed(a.conj().T))

    def test_invariant_battery(self, hand_instances):
        for name, built in hand_instances.items():
            for report in gns_invariant_reports(built.gns):
                assert report.value, f"{name}: {report.name} {report.worst_residual}"


@pytest.fixture(scope="module")
def skew():
    alg = algebras.full_matrix_algebra(2)
    dyn = algebras.inner_automorphism(alg, np.diag([1.0, 1.0j]))
    system = algebras.make_system(alg, np.diag([2 / 3, 1 / 3]), dyn)
    return build_gns(system)


class TestNonTracialGns:

    def test_state_not_tracial(self, skew):
        assert not skew.system.is_tracial

    def test_modular_operator_nontrivial(self, skew):
        evals = np.linalg.eigvalsh(skew.modular_matrix)
        assert evals[-1] / evals[0] > 1.5

    def test_conjugation_still_involutive(self, skew):
        assert skew.conjugation.involution_defect() < 1e-9
        assert skew.conjugation.antiunitarity_defect() < 1e-9

    def test_star_map_recovered(self, skew):
        rng = np.random.default_rng(1)
        a = skew.system.algebra.random_element(rng)
        got = skew.star_conjugation.apply(skew.embed(a))
        assert np.allclose(got, skew.embed(a.conj().T))

    def test_battery_passes(self, skew):
        for report in gns_invariant_reports(skew):
            assert report.value, f"{report.name}: {report.worst_residual}"


class TestMirror:
    def test_mirror_of_identity(self, m2_diag):
        rep = m2_diag.gns
        assert np.allclose(rep.mirror(np.eye(rep.dim)), np.eye(rep.dim))

    def test_mirror_involutive_random(self, m2_diag):
        rep = m2_diag.gns
        rng = np.random.default_rng(2)
        x = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        assert np.allclose(rep.mirror(rep.mirror(x)), x)

    def test_mirrored_algebra_commutes(self, m2_diag):
        # oracle: commutation residuals of j(pi(a)) against every pi(b)
        rep = m2_diag.gns
        for a in [E11, E12, E21, E22]:
            ja = rep.mirror(rep.represent(a))
            for b in [E11, E12, E21, E22]:
                pb = rep.represent(b)
                assert np.linalg.norm(ja @ pb - pb @ ja) < 1e-9

    def test_commutant_dimension(self, m2_diag):
        assert m2_diag.mirror.commutant_algebra.dim == 4

    def test_scalar_system_commutant(self):
        rep = build_gns(trivial_system())
        sub = algebras.validate_subsystem(rep.system, rep.system.algebra)
        ce = cond_expectation(rep, sub)
        mirror = mirror_system(rep, ce)
        assert mirror.commutant_algebra.dim == 1

    def test_mirrored_subalgebra_dimension(self, m2_diag):
        assert m2_diag.mirror.mirrored_subalgebra.dim == 2

    def test_mirrored_expectation_commutes_with_mirror(self, m2_diag):
        rep, mirror, ce = m2_diag.gns, m2_diag.mirror, m2_diag.condexp
        rng = np.random.default_rng(3)
        for _ in range(4):
            a = rep.system.algebra.random_element(rng)
            lhs = mirror.mirrored_expectation(rep.mirror(rep.represent(a)))
            rhs = rep.mirror(rep.represent(ce(a, rep)))
            assert np.linalg.norm(lhs - rhs) < 1e-8

    def test_invariant_battery(self, hand_instances):
        for name, built in hand_instances.items():
            for report in mirror_invariant_reports(built.gns, built.mirror, built.condexp):
                assert report.value, f"{name}: {report.name} {report.worst_residual}"


class TestCondExpectation:
    def test_trivial_subsystem_gives_state(self, m2_trivial):
        # expectation onto the scalars sends a to state(a) 1
        rep, ce = m2_trivial.gns, m2_trivial.condexp
        rng = np.random.default_rng(4)
        for _ in range(5):
            a = rep.system.algebra.random_element(rng)
            want = rep.system.state.value(a) * np.eye(2)
            assert np.allclose(ce(a, rep), want)

    def test_diagonal_subsystem_takes_diagonal(self, m2_diag):
        # oracle: direct Gram projection onto span{e11-hat, e22-hat} is the
        # diagonal part for the normalized trace
        rep, ce = m2_diag.gns, m2_diag.condexp
        a = np.array([[1.0, 2.0 + 1.0j], [3.0, -4.0]])
        assert np.allclose(ce(a, rep), np.diag([1.0, -4.0]))
        assert np.allclose(ce(E12, rep), 0.0)

    def test_full_subsystem_identity_map(self, m2_full):
        rep, ce = m2_full.gns, m2_full.condexp
        a = np.array([[0.0, 1.0], [2.0, 3.0j]])
        assert np.allclose(ce(a, rep), a)
        assert ce.kernel_coords().shape[0] == 0

    def test_kernel_dimension(self, m2_diag):
        assert m2_diag.condexp.kernel_coords().shape[0] == 2

    def test_invariant_battery(self, hand_instances):
        for name, built in hand_instances.items():
            for report in condexp_invariant_reports(built.gns, built.condexp):
                assert report.value, f"{name}: {report.name} {report.worst_residual}"

    def test_battery_non_tracial(self):
        alg = algebras.full_matrix_algebra(2)
        dyn = algebras.inner_automorphism(alg, np.diag([1.0, 1.0j]))
        system = algebras.make_system(alg, np.diag([2 / 3, 1 / 3]), dyn)
        sub = algebras.validate_subsystem(system, algebras.block_diagonal_algebra([1, 1]))
        rep = build_gns(system)
        ce = cond_expectation(rep, sub)
        for report in condexp_invariant_reports(rep, ce):
            assert report.value, f"{report.name}: {report.worst_residual}"
