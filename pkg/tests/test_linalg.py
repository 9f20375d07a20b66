import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wstarmix.errors import InputError
from wstarmix.linalg import (
    GramSpace,
    Subspace,
    dagger,
    orthonormalize,
    projector,
    solve_in_span,
    unitary_spectrum,
)


def haar_unitary(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    return q * (np.diag(r) / np.abs(np.diag(r)))[None, :]


class TestOrthonormalize:
    def test_collinear_vectors_collapse(self):
        sub = orthonormalize([np.array([1.0, 0.0]), np.array([2.0, 0.0])])
        assert sub.rank == 1
        assert abs(abs(sub.basis[0, 0]) - 1.0) < 1e-12

    def test_empty_input_gives_rank_zero(self):
        sub = orthonormalize([], dim=3)
        assert sub.rank == 0 and sub.ambient_dim == 3

    def test_empty_input_without_dim_rejected(self):
        with pytest.raises(InputError):
            orthonormalize([])

    def test_already_orthonormal_kept_up_to_phase(self):
        v1 = np.array([1.0, 1.0]) / np.sqrt(2)
        v2 = np.array([1.0, -1.0]) / np.sqrt(2)
        sub = orthonormalize([v1, v2])
        assert sub.rank == 2
        # same span: both inputs are contained
        assert sub.contains(v1) and sub.contains(v2)

    def test_mixed_dimensions_rejected(self):
        with pytest.raises(InputError):
            orthonormalize([np.ones(2), np.ones(3)])

    def test_idempotent_on_own_output(self):
        rng = np.random.default_rng(0)
        vecs = [rng.standard_normal(5) + 1j * rng.standard_normal(5) for _ in range(3)]
        first = orthonormalize(vecs)
        second = orthonormalize([first.basis[:, i] for i in range(first.rank)])
        assert second.rank == first.rank


class TestProjector:
    def test_axis_span(self):
        sub = orthonormalize([np.array([1.0, 0.0])])
        assert np.allclose(projector(sub), np.diag([1.0, 0.0]))

    def test_full_space(self):
        sub = orthonormalize([np.array([1.0, 0.0]), np.array([0.0, 1.0])])
        assert np.allclose(projector(sub), np.eye(2))

    def test_diagonal_line(self):
        # oracle: outer product of the unit vector (1,1)/sqrt(2)
        v = np.array([1.0, 1.0]) / np.sqrt(2)
        sub = orthonormalize([v])
        assert np.allclose(projector(sub), np.full((2, 2), 0.5))

    @pytest.mark.parametrize("seed", range(5))
    def test_projector_invariants(self, seed):
        rng = np.random.default_rng(seed)
        n, m = 8, 3
        vecs = [rng.standard_normal(n) + 1j * rng.standard_normal(n) for _ in range(m)]
        q = projector(orthonormalize(vecs))
        tol = 1e-9
        assert np.linalg.norm(q @ q - q) <= 10 * tol
        assert np.linalg.norm(dagger(q) - q) <= 10 * tol


class TestUnitarySpectrum:
    def test_identity(self):
        dec = unitary_spectrum(np.eye(3, dtype=complex))
        assert len(dec.projectors) == 1
        assert np.allclose(dec.eigenvalues, [1.0])
        assert np.allclose(dec.projectors[0], np.eye(3))

    def test_diag_plus_minus(self):
        dec = unitary_spectrum(np.diag([1.0, -1.0]).astype(complex))
        assert len(dec.projectors) == 2
        by_val = {complex(t): p for t, p in zip(dec.eigenvalues, dec.projectors)}
        assert np.allclose(by_val[1.0 + 0j], np.diag([1.0, 0.0]))
        assert np.allclose(by_val[-1.0 + 0j], np.diag([0.0, 1.0]))

    def test_degenerate_cluster_ranks(self):
        # oracle: direct eigensolve of diag(1, i, i)
        dec = unitary_spectrum(np.diag([1.0, 1.0j, 1.0j]))
        ranks = sorted(int(round(np.trace(p).real)) for p in dec.projectors)
        assert ranks == [1, 2]
        assert len(dec.projectors) == 2

    def test_non_unitary_rejected(self):
        with pytest.raises(InputError):
            unitary_spectrum(np.diag([1.0, 2.0]))

    def test_numerically_split_eigenvalues_merge(self):
        u = np.diag([1.0, np.exp(1e-10j), -1.0])
        dec = unitary_spectrum(u, cluster_tol=1e-8)
        assert len(dec.projectors) == 2

    @pytest.mark.parametrize("n", [2, 5, 16, 32])
    def test_reconstruction_random_unitary(self, n):
        rng = np.random.default_rng(n)
        u = haar_unitary(rng, n)
        dec = unitary_spectrum(u, cluster_tol=1e-8)
        assert np.linalg.norm(dec.reconstruct() - u) <= 10 * 1e-8
        total = sum(dec.projectors)
        assert np.linalg.norm(total - np.eye(n)) <= 1e-10 * n
        for i, p in enumerate(dec.projectors):
            assert np.linalg.norm(p @ p - p) < 1e-10
            for q in dec.projectors[i + 1:]:
                assert np.linalg.norm(p @ q) < 1e-10

    def test_fixed_projector_absent(self):
        dec = unitary_spectrum(np.diag([-1.0, 1.0j]))
        assert np.allclose(dec.fixed_projector(), 0.0)
        assert dec.fixed_subspace().rank == 0


class TestSolveInSpan:
    def test_exact_decomposition(self):
        sol = solve_in_span(np.array([1.0, 1.0]),
                            [np.array([1.0, 0.0]), np.array([0.0, 1.0])])
        assert sol.in_span and sol.residual < 1e-12
        assert np.allclose(sol.coefficients, [1.0, 1.0])

    def test_outside_span_flagged(self):
        sol = solve_in_span(np.array([0.0, 1.0]), [np.array([1.0, 0.0])])
        assert not sol.in_span
        assert abs(sol.residual - 1.0) < 1e-12

    def test_scaling(self):
        sol = solve_in_span(np.array([2.0, 2.0]), [np.array([1.0, 1.0])])
        assert sol.in_span
        assert np.allclose(sol.coefficients, [2.0])

    def test_empty_basis(self):
        sol = solve_in_span(np.array([1.0, 0.0]), [])
        assert not sol.in_span and abs(sol.residual - 1.0) < 1e-12


@st.composite
def unitary_and_tols(draw):
    n = draw(st.integers(min_value=1, max_value=8))
    seed = draw(st.integers(min_value=0, max_value=2**31 - 1))
    return n, seed

@given(unitary_and_tols())
@settings(max_examples=25, deadline=None)
def test_spectrum_reconstruction_property(params):
    n, seed = params
    u = haar_unitary(np.random.default_rng(seed), n)
    dec = unitary_spectrum(u)
    assert np.linalg.norm(dec.reconstruct() - u) <= 1e-7


class TestGramSpace:
    def test_quotient_of_singular_gram(self):
        # rank-1 Gram over two proportional spanning elements
        g = np.array([[1.0, 1.0], [1.0, 1.0]], dtype=complex)
        space = GramSpace.from_gram(g)
        assert space.rank == 1
        v1 = space.vector([1.0, 0.0])
        v2 = space.vector([0.0, 1.0])
        assert np.linalg.norm(v1 - v2) < 1e-12

    def test_push_map_unitary(self):
        rng = np.random.default_rng(3)
        u = haar_unitary(rng, 4)
        g = np.eye(4, dtype=complex)
        space = GramSpace.from_gram(g)
        op = space.push_map(u, require_unitary=True)
        assert np.linalg.norm(op @ op.conj().T - np.eye(4)) < 1e-10

    def test_inner_products_match_gram(self):
        rng = np.random.default_rng(4)
        m = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
        g = m.conj() @ m.T
        space = GramSpace.from_gram(g)
        c1 = rng.standard_normal(3)
        c2 = rng.standard_normal(3)
        want = c1 @ g @ c2
        got = np.vdot(space.vector(c1), space.vector(c2))
        assert abs(want - got) < 1e-10
