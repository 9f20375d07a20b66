"""Finite-dimensional von Neumann algebras as *-subalgebras of d x d matrices.

Algebras are stored as explicit Hilbert-Schmidt-orthonormal spans, which keeps
commutants, centers and fixed algebras uniform linear solves; no block
decomposition is ever needed. States are ambient density matrices,
automorphisms are linear maps realized on the span's coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConsistencyError, InputError
from .linalg import DEFAULT_TOL, as_matrix, dagger, orthonormalize


def _flat(mats):
    mats = np.asarray(mats, dtype=complex)
    return mats.reshape(mats.shape[0], -1)


@dataclass(frozen=True)
class MatrixStarAlgebra:
    """Unital *-closed subalgebra of M_d, spanned by HS-orthonormal basis matrices."""

    ambient_dim: int
    basis: np.ndarray  # (dim, d, d); rows orthonormal w.r.t. tr(x^* y)
    contains_unit: bool = True

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def identity(self):
        return np.eye(self.ambient_dim, dtype=complex)

    def coefficients(self, x):
        x = as_matrix(x)
        return np.conj(_flat(self.basis)) @ x.ravel()

    def element(self, coefficients):
        return np.tensordot(np.asarray(coefficients, dtype=complex), self.basis, axes=1)

    def project(self, x):
        return self.element(self.coefficients(x))

    def membership_residual(self, x) -> float:
        x = as_matrix(x)
        res = np.linalg.norm(x - self.project(x))
        return float(res / max(1.0, np.linalg.norm(x)))

    def contains(self, x, tol=DEFAULT_TOL) -> bool:
        return self.membership_residual(x) <= tol * 10

    def contains_algebra(self, other: "MatrixStarAlgebra", tol=DEFAULT_TOL) -> bool:
        return all(self.contains(b, tol) for b in other.basis)

    def equals(self, other: "MatrixStarAlgebra", tol=DEFAULT_TOL) -> bool:
        return self.dim == other.dim and self.contains_algebra(other, tol)

    def random_element(self, rng, hermitian=False):
        c = rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)
        x = self.element(c)
        return (x + dagger(x)) / 2 if hermitian else x

    def verify(self, tol=DEFAULT_TOL):
        """Check the span is unital and closed under products and adjoints."""
        if not self.contains(self.identity(), tol):
            raise InputError("algebra span does not contain the identity")
        adjs = dagger(self.basis)
        prods = np.einsum("iab,jbc->ijac", self.basis, self.basis).reshape(
            -1, self.ambient_dim, self.ambient_dim
        )
        for name, mats in (("adjoints", adjs), ("products", prods)):
            f = _flat(mats)
            resid = f - (f @ np.conj(_flat(self.basis)).T) @ _flat(self.basis)
            worst = float(np.max(np.linalg.norm(resid, axis=1), initial=0.0))
            if worst > tol * 10 * max(1.0, float(np.max(np.abs(f)))):
                raise InputError(f"algebra span not closed under {name} (residual {worst:.3e})")
        return True


def _matrix_span(mats, dim, tol):
    sub = orthonormalize([np.asarray(m, dtype=complex).ravel() for m in mats],
                         tol=tol, dim=dim * dim)
    return sub.basis.T.reshape(sub.rank, dim, dim)


def _extend_matrix_span(basis, candidates, tol):
    """Append new orthonormal directions found among `candidates` to `basis`."""
    bf = _flat(basis)
    cf = _flat(candidates)
    resid = cf - (cf @ np.conj(bf).T) @ bf
    norms = np.linalg.norm(resid, axis=1)
    fresh = resid[norms > tol * max(1.0, float(np.max(norms, initial=1.0)))]
    if fresh.shape[0] == 0:
        return basis
    _, s, vh = np.linalg.svd(fresh, full_matrices=False)
    rank = int(np.sum(s > tol * s[0])) if s.size and s[0] > 0 else 0
    if rank == 0:
        return basis
    new = vh[:rank]
    # Re-orthogonalize the additions against the old block once for stability.
    new = new - (new @ np.conj(bf).T) @ bf
    new = new / np.linalg.norm(new, axis=1)[:, None]
    d = basis.shape[1]
    return np.concatenate([basis, new.reshape(rank, d, d)], axis=0)


def generate_algebra(generators, dim, tol=DEFAULT_TOL) -> MatrixStarAlgebra:
    """Smallest unital *-closed subalgebra of M_dim containing the generators.

    Adjoins the identity and adjoints, then iterates pairwise products and
    span closure until the dimension stabilizes.
    """
    mats = [np.eye(dim, dtype=complex)]
    for g in generators:
        g = as_matrix(g, "generator")
        if g.shape != (dim, dim):
            raise InputError(f"generator has shape {g.shape}, expected ({dim}, {dim})")
        mats.append(g)
        mats.append(dagger(g))
    basis = _matrix_span(mats, dim, tol)
    full = dim * dim
    while basis.shape[0] < full:
        prods = np.einsum("iab,jbc->ijac", basis, basis).reshape(-1, dim, dim)
        grown = _extend_matrix_span(basis, prods, tol)
        if grown.shape[0] == basis.shape[0]:
            break
        basis = grown
    return MatrixStarAlgebra(dim, basis)


def full_matrix_algebra(dim) -> MatrixStarAlgebra:
    """All of M_dim, spanned by matrix units."""
    basis = np.zeros((dim * dim, dim, dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            basis[i * dim + j, i, j] = 1.0
    return MatrixStarAlgebra(dim, basis)


def block_diagonal_algebra(sizes) -> MatrixStarAlgebra:
    """Direct sum of full matrix blocks of the given sizes."""
    sizes = [int(s) for s in sizes]
    if any(s <= 0 for s in sizes):
        raise InputError("block sizes must be positive")
    dim = sum(sizes)
    mats = []
    off = 0
    for s in sizes:
        for i in range(s):
            for j in range(s):
                m = np.zeros((dim, dim), dtype=complex)
                m[off + i, off + j] = 1.0
                mats.append(m)
        off += s
    return MatrixStarAlgebra(dim, np.asarray(mats))


def trivial_algebra(dim) -> MatrixStarAlgebra:
    """Scalar multiples of the identity."""
    return MatrixStarAlgebra(dim, (np.eye(dim, dtype=complex) / np.sqrt(dim))[None, :, :])


def commutant(algebra: MatrixStarAlgebra, dim=None, tol=DEFAULT_TOL) -> MatrixStarAlgebra:
    """All matrices commuting with the algebra, by a stacked linear solve.

    Uses the row-major identity vec(AXB) = (A kron B^T) vec(X): the condition
    XB = BX becomes (I kron B^T - B kron I) vec(X) = 0 for every basis B.
    """
    d = algebra.ambient_dim if dim is None else dim
    eye = np.eye(d, dtype=complex)
    blocks = [np.kron(eye, b.T) - np.kron(b, eye) for b in algebra.basis]
    system = np.concatenate(blocks, axis=0)
    # rows >= cols here, so the economy SVD already carries the full row space.
    # The basis is HS-normalized, so the constraint scale is order 1: keep an
    # absolute floor in the cutoff or a numerically-zero system looks full rank.
    _, s, vh = np.linalg.svd(system, full_matrices=False)
    cutoff = tol * max(1.0, s[0] if s.size else 0.0)
    rank = int(np.sum(s > cutoff))
    null = vh[rank:].conj()
    basis = _matrix_span(null.reshape(-1, d, d), d, tol)
    return MatrixStarAlgebra(d, basis)


def intersect(a: MatrixStarAlgebra, b: MatrixStarAlgebra, tol=DEFAULT_TOL) -> MatrixStarAlgebra:
    """Span intersection of two algebras on the same ambient space."""
    if a.ambient_dim != b.ambient_dim:
        raise InputError("intersect: ambient dimensions differ")
    d = a.ambient_dim
    n = d * d
    pa = np.conj(_flat(a.basis)).T @ _flat(a.basis)
    pb = np.conj(_flat(b.basis)).T @ _flat(b.basis)
    stacked = np.concatenate([np.eye(n) - pa, np.eye(n) - pb], axis=0)
    _, s, vh = np.linalg.svd(stacked, full_matrices=False)
    small = s < 10 * tol * max(1.0, s[0] if s.size else 1.0)
    # Null directions of the stacked defect lie in both spans.
    null = vh[len(s) - int(np.sum(small)):].conj() if s.size else vh.conj()
    basis = _matrix_span(null.reshape(-1, d, d), d, tol)
    return MatrixStarAlgebra(d, basis)


def center(algebra: MatrixStarAlgebra, tol=DEFAULT_TOL) -> MatrixStarAlgebra:
    return intersect(algebra, commutant(algebra, tol=tol), tol=tol)


@dataclass(frozen=True)
class StateSpec:
    """Faithful state given by an ambient density matrix; is_trace is relative to the algebra."""

    density: np.ndarray
    is_trace: bool
    min_eigenvalue: float

    def value(self, x):
        return complex(np.trace(self.density @ np.asarray(x, dtype=complex)))

    def values(self, mats):
        return np.einsum("ab,mba->m", self.density, np.asarray(mats, dtype=complex))


def validate_state(algebra: MatrixStarAlgebra, density, tol=DEFAULT_TOL) -> StateSpec:
    """Check Hermiticity, faithfulness and normalization; detect traciality on the algebra."""
    rho = as_matrix(density, "density")
    d = algebra.ambient_dim
    if rho.shape != (d, d):
        raise InputError(f"density has shape {rho.shape}, expected ({d}, {d})")
    herm = np.linalg.norm(rho - dagger(rho))
    if herm > tol * 10 * max(1.0, float(np.linalg.norm(rho))):
        raise InputError(f"density not Hermitian (defect {herm:.3e})")
    rho = (rho + dagger(rho)) / 2
    evals = np.linalg.eigvalsh(rho)
    if evals[0] <= tol * 10 * max(1.0, evals[-1]):
        raise InputError(f"state not faithful: min eigenvalue {evals[0]:.3e}")
    tr = float(np.trace(rho).real)
    if abs(tr - 1.0) > tol * 10 * d:
        raise InputError(f"density trace {tr!r} != 1")
    # Traciality on the algebra: mu(ab) = mu(ba) on all basis pairs.
    mu_ab = np.einsum("ab,ibc,jca->ij", rho, algebra.basis, algebra.basis)
    worst = float(np.max(np.abs(mu_ab - mu_ab.T)))
    return StateSpec(rho, worst <= tol * 10, float(evals[0]))


@dataclass(eq=False)
class AutomorphismSpec:
    """A *-automorphism of a matrix algebra, realized on basis coordinates.

    `coeff_map` sends the coordinate vector of a to that of alpha(a);
    `ambient_unitary` is kept when the map is conjugation by a known unitary.
    """

    kind: str
    algebra: MatrixStarAlgebra
    coeff_map: np.ndarray
    ambient_unitary: np.ndarray | None = None
    parts: list = field(default_factory=list)

    def power_map(self, n: int):
        m = self.coeff_map
        if n < 0:
            m = np.linalg.inv(m)
            n = -n
        return np.linalg.matrix_power(m, n)

    def apply(self, x, n: int = 1):
        a = self.algebra
        c = a.coefficients(x)
        res = np.linalg.norm(x - a.element(c))
        if res > 1e-7 * max(1.0, float(np.linalg.norm(x))):
            raise InputError("automorphism applied to an element outside the algebra")
        return a.element(self.power_map(n) @ c)


def automorphism_from_images(algebra, images, kind="custom", ambient_unitary=None,
                             tol=DEFAULT_TOL) -> AutomorphismSpec:
    """Realize a linear map from images of the basis; rejects maps leaving the span."""
    images = np.asarray(images, dtype=complex)
    if images.shape != algebra.basis.shape:
        raise InputError("automorphism images must match the algebra basis in shape")
    coeffs = np.conj(_flat(algebra.basis)) @ _flat(images).T  # column i = coords of image i
    recon = np.tensordot(coeffs.T, algebra.basis, axes=1)
    worst = float(np.max(np.linalg.norm(_flat(images - recon), axis=1)))
    if worst > 10 * tol:
        raise InputError(f"automorphism image leaves the algebra (residual {worst:.3e})")
    return AutomorphismSpec(kind, algebra, coeffs, ambient_unitary)


def ambient_unitary_automorphism(algebra, u, kind="inner", tol=DEFAULT_TOL) -> AutomorphismSpec:
    """Conjugation x -> u x u^* restricted to the algebra."""
    u = as_matrix(u, "unitary")
    d = algebra.ambient_dim
    if u.shape != (d, d):
        raise InputError(f"unitary has shape {u.shape}, expected ({d}, {d})")
    udef = np.linalg.norm(dagger(u) @ u - np.eye(d))
    if udef > tol * 10 * (d + 1):
        raise InputError(f"matrix not unitary (defect {udef:.3e})")
    images = np.einsum("ab,ibc,cd->iad", u, algebra.basis, dagger(u))
    return automorphism_from_images(algebra, images, kind=kind, ambient_unitary=u, tol=tol)


def inner_automorphism(algebra, u, tol=DEFAULT_TOL) -> AutomorphismSpec:
    """Ad(u) for a unitary u belonging to the algebra."""
    u = as_matrix(u, "unitary")
    if algebra.membership_residual(u) > 10 * tol:
        raise InputError("inner automorphism: unitary is not in the algebra")
    return ambient_unitary_automorphism(algebra, u, kind="inner", tol=tol)


def block_permutation_unitary(sizes, perm):
    """Permutation matrix moving block i to the slot of block perm[i]."""
    sizes = [int(s) for s in sizes]
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(len(sizes))):
        raise InputError(f"perm {perm} is not a permutation of blocks")
    for i, p in enumerate(perm):
        if sizes[i] != sizes[p]:
            raise InputError(f"permuted blocks {i} and {p} have different sizes")
    dim = sum(sizes)
    offs = np.concatenate([[0], np.cumsum(sizes)])
    u = np.zeros((dim, dim), dtype=complex)
    for i, p in enumerate(perm):
        for r in range(sizes[i]):
            u[offs[p] + r, offs[i] + r] = 1.0
    return u


def block_permutation_automorphism(algebra, sizes, perm, tol=DEFAULT_TOL) -> AutomorphismSpec:
    u = block_permutation_unitary(sizes, perm)
    spec = ambient_unitary_automorphism(algebra, u, kind="block_permutation", tol=tol)
    return spec


def compose_automorphisms(specs, tol=DEFAULT_TOL) -> AutomorphismSpec:
    """Composition applied left to right: compose([f, g]) maps x to f(g(x))."""
    if not specs:
        raise InputError("compose_automorphisms: empty list")
    algebra = specs[0].algebra
    coeff = np.eye(algebra.dim, dtype=complex)
    ambient = np.eye(algebra.ambient_dim, dtype=complex)
    have_ambient = True
    for s in specs:
        coeff = coeff @ s.coeff_map
        if s.ambient_unitary is None:
            have_ambient = False
        elif have_ambient:
            ambient = ambient @ s.ambient_unitary
    return AutomorphismSpec("compose", algebra, coeff,
                            ambient if have_ambient else None, parts=list(specs))


def validate_automorphism(algebra, spec: AutomorphismSpec, state: StateSpec,
                          tol=DEFAULT_TOL) -> AutomorphismSpec:
    """Verify multiplicativity, *-preservation, invertibility and state invariance.

    Raises InputError naming the violated identity and the offending basis pair.
    """
    k = algebra.dim
    if spec.coeff_map.shape != (k, k):
        raise InputError("automorphism map has the wrong shape for the algebra")
    images = np.tensordot(spec.coeff_map.T, algebra.basis, axes=1)
    # invertibility
    s = np.linalg.svd(spec.coeff_map, compute_uv=False)
    if s[-1] <= tol * 10 * max(1.0, s[0]):
        raise InputError(f"automorphism not invertible (min singular value {s[-1]:.3e})")
    # *-preservation on the basis
    for i in range(k):
        target = algebra.element(spec.coeff_map @ algebra.coefficients(dagger(algebra.basis[i])))
        got = dagger(images[i])
        if np.linalg.norm(target - got) > 100 * tol:
            raise InputError(f"automorphism does not preserve adjoints at basis element {i}")
    # multiplicativity on basis pairs
    prods = np.einsum("iab,jbc->ijac", algebra.basis, algebra.basis)
    img_prods = np.einsum("iab,jbc->ijac", images, images)
    d = algebra.ambient_dim
    flat = prods.reshape(-1, d * d)
    coords = np.conj(_flat(algebra.basis)) @ flat.T
    mapped = np.tensordot((spec.coeff_map @ coords).T, algebra.basis, axes=1)
    diff = np.linalg.norm((mapped - img_prods.reshape(-1, d, d)).reshape(k * k, -1), axis=1)
    worst_idx = int(np.argmax(diff))
    if diff[worst_idx] > 100 * tol:
        i, j = divmod(worst_idx, k)
        raise InputError(
            f"automorphism not multiplicative on basis pair ({i}, {j}): defect {diff[worst_idx]:.3e}"
        )
    # state invariance
    vals = state.values(images) - state.values(algebra.basis)
    worst = float(np.max(np.abs(vals)))
    if worst > 100 * tol:
        raise InputError(f"state not invariant under automorphism (defect {worst:.3e})")
    return spec


@dataclass(frozen=True)
class SystemSpec:
    """A W*-dynamical system: algebra, invariant faithful state, *-automorphism."""

    algebra: MatrixStarAlgebra
    state: StateSpec
    dynamics: AutomorphismSpec

    @property
    def is_tracial(self) -> bool:
        return self.state.is_trace


def make_system(algebra, density, dynamics: AutomorphismSpec, tol=DEFAULT_TOL) -> SystemSpec:
    state = validate_state(algebra, density, tol)
    validate_automorphism(algebra, dynamics, state, tol)
    return SystemSpec(algebra, state, dynamics)


def modular_invariance_check(subalgebra: MatrixStarAlgebra, state: StateSpec,
                             tol=DEFAULT_TOL) -> bool:
    """True iff Ad(rho) maps the subalgebra into itself (always true for traces).

    In finite dimensions the modular group generated by the density matrix is
    t -> Ad(rho^{it}); invariance under Ad(rho) is the implemented criterion.
    """
    if state.is_trace:
        return True
    rho = state.density
    rho_inv = np.linalg.inv(rho)
    for f in subalgebra.basis:
        if subalgebra.membership_residual(rho @ f @ rho_inv) > 10 * tol:
            return False
    return True


@dataclass(frozen=True)
class Subsystem:
    """A globally invariant, modular subalgebra with the restricted state and dynamics."""

    algebra: MatrixStarAlgebra      # F
    state: StateSpec                # restriction of the ambient state to F
    dynamics: AutomorphismSpec      # restriction of the dynamics to F
    coords_in_parent: np.ndarray    # (dim F, dim A): F basis in A coordinates


def validate_subsystem(system: SystemSpec, subalgebra: MatrixStarAlgebra,
                       tol=DEFAULT_TOL) -> Subsystem:
    """Check F is a unital invariant modular subalgebra of the system and restrict."""
    a = system.algebra
    if subalgebra.ambient_dim != a.ambient_dim:
        raise InputError("subsystem lives on a different ambient space")
    for i, f in enumerate(subalgebra.basis):
        if a.membership_residual(f) > 10 * tol:
            raise InputError(f"subsystem basis element {i} is not in the algebra")
    if subalgebra.membership_residual(a.identity()) > 10 * tol:
        raise InputError("subsystem does not contain the unit")
    # alpha(F) = F: images stay in span(F); dimension is preserved automatically
    # because the automorphism is invertible.
    images = np.stack([system.dynamics.apply(f) for f in subalgebra.basis])
    for i, g in enumerate(images):
        if subalgebra.membership_residual(g) > 10 * tol:
            raise InputError(f"subsystem not globally invariant: image of basis element {i} leaves it")
    if not modular_invariance_check(subalgebra, system.state, tol):
        raise InputError("subsystem not invariant under the modular flow of the state")
    lam = validate_state(subalgebra, system.state.density, tol)
    restricted = automorphism_from_images(subalgebra, images, kind="restriction", tol=tol)
    coords = np.stack([a.coefficients(f) for f in subalgebra.basis])
    return Subsystem(subalgebra, lam, restricted, coords)


def fixed_algebra(algebra: MatrixStarAlgebra, spec: AutomorphismSpec,
                  tol=DEFAULT_TOL) -> MatrixStarAlgebra:
    """Eigenspace of the automorphism at eigenvalue 1, as a unital *-closed algebra."""
    k = algebra.dim
    _, s, vh = np.linalg.svd(spec.coeff_map - np.eye(k), full_matrices=True)
    cutoff = tol * max(1.0, s[0] if s.size else 1.0)
    rank = int(np.sum(s > cutoff))
    null_coords = vh[rank:].conj()
    mats = np.tensordot(null_coords, algebra.basis, axes=1)
    d = algebra.ambient_dim
    out = MatrixStarAlgebra(d, _matrix_span(mats, d, tol))
    try:
        out.verify(tol)
    except InputError as exc:
        raise ConsistencyError(f"fixed algebra failed closure checks: {exc}") from exc
    return out
