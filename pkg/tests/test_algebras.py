import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import E11, E12, E21, E22, m2_system, swap_system
from wstarmix import algebras
from wstarmix.errors import InputError


class TestGenerateAlgebra:
    def test_empty_generators_give_scalars(self):
        alg = algebras.generate_algebra([], 2)
        assert alg.dim == 1
        assert alg.contains(np.eye(2))

    def test_single_matrix_unit_generates_everything(self):
        # oracle: e21 = e12*, e11 = e12 e21, e22 = e21 e12
        alg = algebras.generate_algebra([E12], 2)
        assert alg.dim == 4

    def test_generic_diagonal_generates_diagonals(self):
        # oracle: powers of diag(1, 2) span all diagonal matrices
        alg = algebras.generate_algebra([np.diag([1.0, 2.0])], 2)
        assert alg.dim == 2
        assert alg.contains(np.diag([5.0, -3.0]))
        assert not alg.contains(E12)

    def test_verify_passes_on_output(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            d = int(rng.integers(2, 5))
            gens = [rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
                    for _ in range(rng.integers(1, 3))]
            alg = algebras.generate_algebra(gens, d)
            assert alg.verify()


class TestCommutant:
    def test_scalars_commute_with_everything(self):
        alg = algebras.trivial_algebra(2)
        assert algebras.commutant(alg).dim == 4

    def test_diagonal_self_commutant(self):
        diag = algebras.block_diagonal_algebra([1, 1])
        comm = algebras.commutant(diag)
        assert comm.dim == 2
        assert comm.equals(diag)

    def test_left_multiplication_copy_of_m2(self):
        # oracle: left multiplications of M2 on itself; commutant = right
        # multiplications, dimension 4
        units = [E11, E12, E21, E22]
        left = [np.kron(u, np.eye(2)) for u in units]  # row-major vec: vec(ax) = (a kron 1) vec(x)
        alg = algebras.generate_algebra(left, 4)
        assert alg.dim == 4
        comm = algebras.commutant(alg)
        assert comm.dim == 4
        rights = [np.kron(np.eye(2), u.T) for u in units]
        for r in rights:
            assert comm.contains(r)

    def test_double_commutant_is_identity_on_generated_algebras(self):
        rng = np.random.default_rng(7)
        for trial in range(6):
            d = int(rng.integers(2, 7))
            gens = [rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
                    for _ in range(rng.integers(1, 4))]
            alg = algebras.generate_algebra(gens, d)
            double = algebras.commutant(algebras.commutant(alg))
            assert double.equals(alg), f"bicommutant failed at trial {trial}"

    def test_center_of_full_algebra_is_scalars(self):
        assert algebras.center(algebras.full_matrix_algebra(3)).dim == 1


class TestFixedAlgebra:
    def test_identity_automorphism_fixes_everything(self):
        alg = algebras.full_matrix_algebra(2)
        dyn = algebras.inner_automorphism(alg, np.eye(2))
        assert algebras.fixed_algebra(alg, dyn).equals(alg)

    def test_diag_conjugation_fixes_diagonals(self):
        # oracle: the commutant of diag(1, i) inside M2 is the diagonal algebra
        alg = algebras.full_matrix_algebra(2)
        dyn = algebras.inner_automorphism(alg, np.diag([1.0, 1.0j]))
        fix = algebras.fixed_algebra(alg, dyn)
        assert fix.equals(algebras.block_diagonal_algebra([1, 1]))

    def test_swap_fixes_scalars_only(self):
        alg = algebras.block_diagonal_algebra([1, 1])
        dyn = algebras.block_permutation_automorphism(alg, [1, 1], [1, 0])
        fix = algebras.fixed_algebra(alg, dyn)
        assert fix.dim == 1


class TestValidateState:
    def test_normalized_trace_accepted_tracial(self):
        alg = algebras.full_matrix_algebra(2)
        state = algebras.validate_state(alg, np.eye(2) / 2)
        assert state.is_trace

    def test_singular_density_rejected(self):
        alg = algebras.full_matrix_algebra(2)
        with pytest.raises(InputError, match="faithful"):
            algebras.validate_state(alg, np.diag([1.0, 0.0]))

    def test_wrong_trace_rejected(self):
        alg = algebras.full_matrix_algebra(2)
        with pytest.raises(InputError, match="trace"):
            algebras.validate_state(alg, np.eye(2))

    def test_abelian_algebra_makes_any_state_tracial(self):
        diag = algebras.block_diagonal_algebra([1, 1])
        state = algebras.validate_state(diag, np.diag([2 / 3, 1 / 3]))
        assert state.is_trace

    def test_generic_density_not_tracial_on_m2(self):
        alg = algebras.full_matrix_algebra(2)
        state = algebras.validate_state(alg, np.diag([2 / 3, 1 / 3]))
        assert not state.is_trace


class TestValidateAutomorphism:
    def test_inner_by_algebra_unitary_accepted(self):
        system = m2_system()
        assert system.dynamics.kind == "inner"

    def test_scaling_map_rejected(self):
        # e12 -> 2 e12, everything else fixed: not multiplicative
        alg = algebras.full_matrix_algebra(2)
        images = np.stack([E11, 2 * E12, E21, E22]).astype(complex)
        spec = algebras.automorphism_from_images(alg, images)
        state = algebras.validate_state(alg, np.eye(2) / 2)
        with pytest.raises(InputError, match="multiplicative|adjoints|invariant"):
            algebras.validate_automorphism(alg, spec, state)

    def test_non_invariant_state_rejected(self):
        alg = algebras.full_matrix_algebra(2)
        x = np.array([[0, 1], [1, 0]], dtype=complex)
        dyn = algebras.inner_automorphism(alg, x)
        good = algebras.validate_state(alg, np.eye(2) / 2)
        algebras.validate_automorphism(alg, dyn, good)  # trace is invariant
        bad = algebras.validate_state(alg, np.diag([2 / 3, 1 / 3]))
        with pytest.raises(InputError, match="invariant"):
            algebras.validate_automorphism(alg, dyn, bad)

    def test_unitary_outside_algebra_rejected(self):
        diag = algebras.block_diagonal_algebra([1, 1])
        x = np.array([[0, 1], [1, 0]], dtype=complex)
        with pytest.raises(InputError, match="not in the algebra"):
            algebras.inner_automorphism(diag, x)

    def test_block_permutation_realizes_swap(self):
        system = swap_system()
        z = np.diag([1.0, -1.0]).astype(complex)
        assert np.allclose(system.dynamics.apply(z), -z)


class TestModularInvariance:
    def test_tracial_state_always_modular(self):
        alg = algebras.full_matrix_algebra(2)
        state = algebras.validate_state(alg, np.eye(2) / 2)
        f = algebras.generate_algebra([E12 + E21], 2)
        assert algebras.modular_invariance_check(f, state)

    def test_diagonal_subalgebra_modular_for_diagonal_density(self):
        alg = algebras.full_matrix_algebra(2)
        state = algebras.validate_state(alg, np.diag([2 / 3, 1 / 3]))
        assert algebras.modular_invariance_check(
            algebras.block_diagonal_algebra([1, 1]), state)

    def test_offdiagonal_subalgebra_not_modular(self):
        # oracle: Ad(rho)(e12 + e21) = (2 e12 + e21 / 2) / 1 is outside the span
        alg = algebras.full_matrix_algebra(2)
        state = algebras.validate_state(alg, np.diag([2 / 3, 1 / 3]))
        f = algebras.generate_algebra([E12 + E21], 2)
        assert not algebras.modular_invariance_check(f, state)

    def test_validate_subsystem_rejects_non_modular(self):
        alg = algebras.full_matrix_algebra(2)
        dyn = algebras.inner_automorphism(alg, np.eye(2))
        system = algebras.make_system(alg, np.diag([2 / 3, 1 / 3]), dyn)
        f = algebras.generate_algebra([E12 + E21], 2)
        with pytest.raises(InputError, match="modular"):
            algebras.validate_subsystem(system, f)


class TestValidateSubsystem:
    def test_invariant_subalgebra_accepted(self):
        system = m2_system()
        sub = algebras.validate_subsystem(system, algebras.block_diagonal_algebra([1, 1]))
        assert sub.algebra.dim == 2
        assert sub.state.is_trace

    def test_non_invariant_subalgebra_rejected(self):
        # conjugation by diag(1, i) maps e12 + e21 to -i e12 + i e21, which
        # leaves the span of {1, e12 + e21}
        system = m2_system()
        f = algebras.generate_algebra([E12 + E21], 2)
        with pytest.raises(InputError, match="invariant"):
            algebras.validate_subsystem(system, f)

    def test_images_stay_inside_for_every_validated_subsystem(self):
        rng = np.random.default_rng(23)
        system = m2_system()
        fix = algebras.fixed_algebra(system.algebra, system.dynamics)
        for f_alg in [algebras.trivial_algebra(2), system.algebra, fix]:
            sub = algebras.validate_subsystem(system, f_alg)
            for f in sub.algebra.basis:
                img = system.dynamics.apply(f)
                assert sub.algebra.membership_residual(img) < 1e-8


@given(st.integers(min_value=0, max_value=10_000))
@settings(max_examples=20, deadline=None)
def test_generated_algebra_invariants_random(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 7))
    n_gen = int(rng.integers(0, 4))
    gens = [rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            for _ in range(n_gen)]
    alg = algebras.generate_algebra(gens, d)
    assert alg.verify()
    assert 1 <= alg.dim <= d * d
