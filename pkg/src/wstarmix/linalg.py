"""Dense complex linear-algebra kernel.

Orthonormalization with rank control, orthogonal projectors, spectral
decomposition of unitary matrices with eigenvalue clustering, least-squares
span membership, and Gram-quotient coordinate spaces used by every GNS-style
construction in the package. All functions are pure and operate on plain
numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConsistencyError, InputError

# Rank thresholding is relative to the largest singular value: scale-free.
DEFAULT_TOL = 1e-9
# Eigenvalue clusters on the unit circle are connected components under this
# chordal distance, so numerically split degenerate eigenvalues merge.
CLUSTER_TOL = 1e-8
# Least-squares recovery of algebra elements from vectors.
RESIDUAL_TOL = 1e-8
# Gram eigenvalues below this relative threshold are quotiented away.
GRAM_NULL_TOL = 1e-10


def as_matrix(x, name="matrix"):
    a = np.asarray(x, dtype=complex)
    if a.ndim != 2:
        raise InputError(f"{name}: expected a 2-d array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError(f"{name}: entries must be finite")
    return a


def as_vector(x, name="vector"):
    v = np.asarray(x, dtype=complex)
    if v.ndim != 1:
        raise InputError(f"{name}: expected a 1-d array, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InputError(f"{name}: entries must be finite")
    return v


def dagger(a):
    return np.conj(np.swapaxes(a, -1, -2))


@dataclass(frozen=True)
class Subspace:
    """A subspace of C^ambient_dim given by orthonormal basis columns."""

    ambient_dim: int
    basis: np.ndarray  # shape (ambient_dim, rank), orthonormal columns
    tol: float = DEFAULT_TOL

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def projector(self):
        return self.basis @ dagger(self.basis)

    def distance(self, v) -> float:
        """Norm of the component of v outside the subspace."""
        v = np.asarray(v, dtype=complex)
        return float(np.linalg.norm(v - self.basis @ (dagger(self.basis) @ v)))

    def contains(self, v, tol=None) -> bool:
        tol = self.tol if tol is None else tol
        v = np.asarray(v, dtype=complex)
        return self.distance(v) <= tol * max(1.0, float(np.linalg.norm(v)))

    def containment_residual(self, other: "Subspace") -> float:
        """Largest defect of a basis vector of `other` from this subspace."""
        if other.rank == 0:
            return 0.0
        proj = self.basis @ (dagger(self.basis) @ other.basis)
        return float(np.max(np.linalg.norm(other.basis - proj, axis=0)))

    def contains_subspace(self, other: "Subspace", tol=None) -> bool:
        tol = self.tol if tol is None else tol
        return self.containment_residual(other) <= tol

    def equals(self, other: "Subspace", tol=None) -> bool:
        tol = self.tol if tol is None else tol
        return (
            self.contains_subspace(other, tol)
            and other.contains_subspace(self, tol)
        )


def orthonormalize(vectors, tol=DEFAULT_TOL, dim=None) -> Subspace:
    """Orthonormal basis of span(vectors), rank cut at tol * (largest singular value).

    `dim` is only needed to disambiguate the ambient space when `vectors` is empty.
    """
    vecs = [as_vector(v) for v in vectors]
    if not vecs:
        if dim is None:
            raise InputError("orthonormalize: ambient dim required for empty input")
        return Subspace(dim, np.zeros((dim, 0), dtype=complex), tol)
    n = vecs[0].shape[0]
    for v in vecs:
        if v.shape[0] != n:
            raise InputError("orthonormalize: vectors have mixed dimensions")
    if dim is not None and dim != n:
        raise InputError(f"orthonormalize: vectors of dim {n}, expected {dim}")
    m = np.column_stack(vecs)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    rank = int(np.sum(s > tol * s[0])) if s.size and s[0] > 0 else 0
    return Subspace(n, u[:, :rank], tol)


def projector(subspace: Subspace):
    """Orthogonal projector onto the subspace (Hermitian idempotent)."""
    return subspace.projector()


@dataclass(frozen=True)
class SpectralDecomposition:
    """Clustered spectral resolution of a unitary matrix.

    `eigenvalues` holds one unit-modulus representative per cluster,
    `members` the raw eigenvalues inside each cluster, and `projectors`
    the orthogonal spectral projectors, which sum to the identity.
    """

    eigenvalues: np.ndarray
    projectors: tuple
    members: tuple
    cluster_tol: float

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0] if self.projectors else 0

    def reconstruct(self):
        return sum(t * p for t, p in zip(self.eigenvalues, self.projectors))

    def fixed_index(self, tol=None):
        """Index of the cluster containing eigenvalue 1, or None."""
        tol = self.cluster_tol if tol is None else tol
        for i, mem in enumerate(self.members):
            if np.min(np.abs(mem - 1.0)) <= tol:
                return i
        return None

    def fixed_projector(self, tol=None):
        """Projector onto the fixed space (zero matrix if 1 is not in the spectrum)."""
        i = self.fixed_index(tol)
        if i is None:
            n = self.dim
            return np.zeros((n, n), dtype=complex)
        return self.projectors[i]

    def fixed_subspace(self, tol=None) -> Subspace:
        i = self.fixed_index(tol)
        n = self.dim
        if i is None:
            return Subspace(n, np.zeros((n, 0), dtype=complex))
        vals, vecs = np.linalg.eigh(self.projectors[i])
        return Subspace(n, vecs[:, vals > 0.5])


def _cluster_unit_circle(values, cluster_tol):
    """Connected components of points on the unit circle under chordal distance."""
    order = np.argsort(np.angle(values))
    groups = [[order[0]]]
    for idx in order[1:]:
        if abs(values[idx] - values[groups[-1][-1]]) < cluster_tol:
            groups[-1].append(idx)
        else:
            groups.append([idx])
    # wrap-around: the last group may connect to the first across angle -pi/pi
    if len(groups) > 1 and abs(values[groups[0][0]] - values[groups[-1][-1]]) < cluster_tol:
        groups[0] = groups.pop() + groups[0]
    return groups


def unitary_spectrum(u, cluster_tol=CLUSTER_TOL, tol=DEFAULT_TOL) -> SpectralDecomposition:
    """Spectral decomposition of a unitary matrix with eigenvalue clustering.

    Each cluster's projector is computed from a sorted Schur factorization,
    so projectors are orthogonal and sum to the identity even when the input
    has numerically split degenerate eigenvalues.
    """
    u = as_matrix(u, "unitary")
    n = u.shape[0]
    if u.shape[1] != n:
        raise InputError("unitary_spectrum: matrix must be square")
    defect = np.linalg.norm(dagger(u) @ u - np.eye(n))
    if defect > tol * 10 * (n + 1):
        raise InputError(f"unitary_spectrum: input not unitary (defect {defect:.3e})")

    raw = np.linalg.eigvals(u)
    raw = raw / np.abs(raw)
    groups = _cluster_unit_circle(raw, cluster_tol)

    reps, projs, members = [], [], []
    for group in groups:
        mem = raw[group]
        rep = mem.mean()
        rep = rep / abs(rep)
        # Schur-select the cluster to get an orthonormal invariant-subspace basis.
        sel = lambda w, mem=mem: bool(np.min(np.abs(w / max(abs(w), 1e-300) - mem)) < cluster_tol / 2)
        _, z, sdim = scipy.linalg.schur(u, output="complex", sort=sel)
        if sdim != len(group):
            raise ConsistencyError(
                f"unitary_spectrum: cluster of size {len(group)} matched {sdim} Schur eigenvalues"
            )
        basis = z[:, :sdim]
        reps.append(rep)
        projs.append(basis @ dagger(basis))
        members.append(mem)
    return SpectralDecomposition(np.array(reps), tuple(projs), tuple(members), cluster_tol)


@dataclass(frozen=True)
class SpanSolution:
    """Least-squares decomposition of a vector over a spanning set."""

    coefficients: np.ndarray
    residual: float
    in_span: bool


def solve_in_span(v, basis, tol=RESIDUAL_TOL) -> SpanSolution:
    """Least-squares coefficients of v over `basis` vectors; non-membership is reported, not raised."""
    v = as_vector(v)
    vecs = [as_vector(b) for b in basis]
    if not vecs:
        res = float(np.linalg.norm(v))
        return SpanSolution(np.zeros(0, dtype=complex), res, res <= tol * max(1.0, res))
    m = np.column_stack(vecs)
    if m.shape[0] != v.shape[0]:
        raise InputError("solve_in_span: dimension mismatch")
    coeff, *_ = np.linalg.lstsq(m, v, rcond=None)
    residual = float(np.linalg.norm(m @ coeff - v))
    in_span = residual <= tol * max(1.0, float(np.linalg.norm(v)))
    return SpanSolution(coeff, residual, in_span)


class GramSpace:
    """Hilbert-space coordinates for a span defined by a (possibly singular) Gram matrix.

    Given gram[i, j] = <s_i, s_j> for a spanning family (s_i), `embedding` maps a
    coefficient vector over the family to coordinates on the quotient by the
    null space; inner products of coordinates reproduce the Gram form.
    """

    def __init__(self, embedding, lift, eigenvalues):
        self.embedding = embedding  # (rank, m)
        self.lift = lift            # (m, rank), embedding @ lift = identity
        self.eigenvalues = eigenvalues

    @classmethod
    def from_gram(cls, gram, null_tol=GRAM_NULL_TOL):
        gram = as_matrix(gram, "gram")
        herm_defect = np.linalg.norm(gram - dagger(gram))
        scale = max(1.0, float(np.linalg.norm(gram)))
        if herm_defect > 1e-8 * scale:
            raise ConsistencyError(f"Gram matrix not Hermitian (defect {herm_defect:.3e})")
        h = (gram + dagger(gram)) / 2
        w, v = np.linalg.eigh(h)
        max_ev = float(w[-1]) if w.size else 0.0
        if w.size and float(w[0]) < -10 * null_tol * max(1.0, max_ev):
            raise ConsistencyError(f"Gram matrix not positive (min eigenvalue {w[0]:.3e})")
        keep = w > null_tol * max_ev
        wk = w[keep]
        vk = v[:, keep]
        embedding = np.sqrt(wk)[:, None] * dagger(vk)
        lift = vk / np.sqrt(wk)[None, :]
        return cls(embedding, lift, wk)

    @property
    def rank(self) -> int:
        return self.embedding.shape[0]

    @property
    def size(self) -> int:
        """Number of spanning elements the coordinates are built over."""
        return self.embedding.shape[1]

    def vector(self, coefficients):
        return self.embedding @ np.asarray(coefficients, dtype=complex)

    def coefficients(self, vec):
        """One preimage of a coordinate vector (exact when the Gram is nonsingular)."""
        return self.lift @ np.asarray(vec, dtype=complex)

    def push_map(self, coeff_map, tol=RESIDUAL_TOL, require_unitary=False, name="map"):
        """Operator induced on quotient coordinates by a map on coefficient space.

        Fails if the map does not descend to the quotient (does not preserve
        the Gram null space) or, optionally, if the result is not unitary.
        """
        target = self.embedding @ coeff_map
        op = target @ self.lift
        defect = np.linalg.norm(op @ self.embedding - target)
        if defect > tol * max(1.0, float(np.linalg.norm(target))):
            raise ConsistencyError(f"{name} does not descend to the Gram quotient (defect {defect:.3e})")
        if require_unitary:
            r = self.rank
            udef = np.linalg.norm(dagger(op) @ op - np.eye(r))
            if udef > tol * 10 * (r + 1):
                raise ConsistencyError(f"{name} not unitary on the quotient (defect {udef:.3e})")
        return op
