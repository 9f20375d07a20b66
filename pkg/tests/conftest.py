import numpy as np
import pytest

from wstarmix import algebras, gns, joining
from wstarmix.suite import build_all


def m2_system():
    """A = M2, normalized trace, conjugation by diag(1, i)."""
    alg = algebras.full_matrix_algebra(2)
    dyn = algebras.inner_automorphism(alg, np.diag([1.0, 1.0j]))
    return algebras.make_system(alg, np.eye(2) / 2, dyn)


def swap_system():
    """Two-point abelian system with the coordinate swap."""
    alg = algebras.block_diagonal_algebra([1, 1])
    dyn = algebras.block_permutation_automorphism(alg, [1, 1], [1, 0])
    return algebras.make_system(alg, np.eye(2) / 2, dyn)


@pytest.fixture(scope="session")
def m2_diag():
    """The key worked instance: M2 over its diagonal subalgebra."""
    system = m2_system()
    sub = algebras.validate_subsystem(system, algebras.block_diagonal_algebra([1, 1]))
    return build_all(system, sub)


@pytest.fixture(scope="session")
def m2_full():
    system = m2_system()
    sub = algebras.validate_subsystem(system, system.algebra)
    return build_all(system, sub)


@pytest.fixture(scope="session")
def m2_trivial():
    system = m2_system()
    sub = algebras.validate_subsystem(system, algebras.trivial_algebra(2))
    return build_all(system, sub)


@pytest.fixture(scope="session")
def swap_trivial():
    system = swap_system()
    sub = algebras.validate_subsystem(system, algebras.trivial_algebra(2))
    return build_all(system, sub)


@pytest.fixture(scope="session")
def hand_instances(m2_full, m2_diag, swap_trivial):
    return {"full": m2_full, "diag": m2_diag, "swap": swap_trivial}


E11 = np.array([[1, 0], [0, 0]], dtype=complex)
E12 = np.array([[0, 1], [0, 0]], dtype=complex)
E21 = np.array([[0, 0], [1, 0]], dtype=complex)
E22 = np.array([[0, 0], [0, 1]], dtype=complex)
