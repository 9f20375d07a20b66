"""The relatively independent joining of a system with its commutant mirror.

The joining is the state (a, b) -> <Omega, D(a) Dt(b) Omega> on the algebraic
tensor product of the algebra and its commutant, where D and Dt are the
conditional expectations onto the subsystem and its mirror. Its GNS space is
realized as a Gram quotient over all pairs of basis elements, carrying the
product dynamics unitary and the embedded copies of the factor spaces.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError
from .gns import CondExpectation, GnsRep, MirrorData
from .linalg import (
    DEFAULT_TOL,
    GRAM_NULL_TOL,
    RESIDUAL_TOL,
    GramSpace,
    Subspace,
    dagger,
    orthonormalize,
    unitary_spectrum,
)
from .reporting import report_from_residuals


def joining_value(gns: GnsRep, mirror: MirrorData, ce: CondExpectation, terms):
    """Evaluate the joining on sum_i a_i (x) b_i, independent of any Gram data."""
    omega = gns.cyclic_vector
    total = 0.0 + 0.0j
    for a, b in terms:
        da = gns.represent(ce(a, gns))
        db = mirror.mirrored_expectation(b)
        total += np.vdot(omega, da @ (db @ omega))
    return complex(total)


class ProductGns:
    """GNS data of the relatively independent joining.

    Coefficient vectors are indexed by pairs (i, j) of left/right basis
    elements in kron order: the coefficient vector of e_i (x) f_j is
    kron(delta_i, delta_j).
    """

    def __init__(self, gns, mirror, condexp, space, dynamics_unitary,
                 left_map, right_map, left_subspace, right_subspace,
                 shared_subspace, tol):
        self.gns = gns
        self.mirror = mirror
        self.condexp = condexp
        self.space: GramSpace = space
        self.dim = space.rank
        self.dynamics_unitary = dynamics_unitary
        self.left_map = left_map        # dynamics on left-factor coordinates
        self.right_map = right_map      # dynamics on right-factor coordinates
        self.left_subspace: Subspace = left_subspace
        self.right_subspace: Subspace = right_subspace
        self.shared_subspace: Subspace = shared_subspace
        self.shared_projector = shared_subspace.projector()
        self.tol = tol
        self._spectra = {}
        self.cyclic_vector = self.space.vector(self.pair_coefficients(
            [(gns.system.algebra.identity(), np.eye(gns.dim, dtype=complex))]))

    @property
    def left_dim(self) -> int:
        return self.gns.system.algebra.dim

    @property
    def right_dim(self) -> int:
        return self.mirror.commutant_algebra.dim

    def left_coords(self, a):
        alg = self.gns.system.algebra
        c = alg.coefficients(a)
        if np.linalg.norm(a - alg.element(c)) > 1e-7 * max(1.0, float(np.linalg.norm(a))):
            raise InputError("left tensor factor is not in the algebra")
        return c

    def right_coords(self, b):
        comm = self.mirror.commutant_algebra
        c = comm.coefficients(b)
        if np.linalg.norm(b - comm.element(c)) > 1e-7 * max(1.0, float(np.linalg.norm(b))):
            raise InputError("right tensor factor is not in the commutant")
        return c

    def pair_coefficients(self, terms):
        out = np.zeros(self.left_dim * self.right_dim, dtype=complex)
        for a, b in terms:
            out += np.kron(self.left_coords(a), self.right_coords(b))
        return out

    def gamma(self, terms):
        """Vector class of a tensor element."""
        return self.space.vector(self.pair_coefficients(terms))

    def value(self, terms):
        """The joining evaluated on a tensor element."""
        return joining_value(self.gns, self.mirror, self.condexp, terms)

    def dynamics_spectrum(self, cluster_tol):
        if cluster_tol not in self._spectra:
            self._spectra[cluster_tol] = unitary_spectrum(
                self.dynamics_unitary, cluster_tol=cluster_tol, tol=1e-7)
        return self._spectra[cluster_tol]


def build_product_gns(gns: GnsRep, mirror: MirrorData, ce: CondExpectation,
                      tol=DEFAULT_TOL, null_tol=GRAM_NULL_TOL) -> ProductGns:
    """Assemble the joining's Gram matrix over all basis pairs and quotient it.

    The dynamics unitary is induced from the tensor action on coefficient
    space; unitarity on the quotient is asserted rather than assumed, and the
    two spanning descriptions of the shared subsystem space are checked to
    agree.
    """
    alg = gns.system.algebra
    comm = mirror.commutant_algebra
    k, kp = alg.dim, comm.dim
    g = gns.dim
    omega = gns.cyclic_vector

    # Left factor: vectors pi(D(e_i* e_k))* Omega.
    eb = alg.basis
    prods = np.einsum("iba,jbc->ijac", np.conj(eb), eb).reshape(k * k, *eb.shape[1:])
    coords = np.conj(eb.reshape(k, -1)) @ prods.reshape(k * k, -1).T   # (k, k*k)
    d_coords = (ce.coeff_map @ coords).T                               # rows = coords of D(e_i* e_k)
    pi_d = np.tensordot(d_coords, gns.basis_reps, axes=1)              # (k*k, g, g)
    x = np.einsum("mba,b->ma", np.conj(pi_d), omega).reshape(k, k, g)

    # Right factor: vectors Dt(f_j* f_l) Omega.
    fb = comm.basis
    prods_r = np.einsum("jba,lbc->jlac", np.conj(fb), fb).reshape(kp * kp, g, g)
    y = np.empty((kp * kp, g), dtype=complex)
    for m in range(kp * kp):
        y[m] = mirror.mirrored_expectation(prods_r[m]) @ omega
    y = y.reshape(kp, kp, g)

    gram = np.einsum("ikg,jlg->ijkl", np.conj(x), y).reshape(k * kp, k * kp)
    gram = (gram + dagger(gram)) / 2
    space = GramSpace.from_gram(gram, null_tol=null_tol)

    # Dynamics on the right factor coordinates.
    right_images = np.stack([mirror.mirror_dynamics(f) for f in fb])
    right_map = np.conj(fb.reshape(kp, -1)) @ right_images.reshape(kp, -1).T  # col j = coords
    resid = np.linalg.norm(
        right_images - np.tensordot(right_map.T, fb, axes=1).reshape(right_images.shape))
    if resid > 1e-6 * max(1.0, float(np.linalg.norm(right_images))):
        raise InputError("mirror dynamics leaves the commutant span")
    left_map = gns.system.dynamics.coeff_map
    w = space.push_map(np.kron(left_map, right_map), tol=RESIDUAL_TOL,
                       require_unitary=True, name="joining dynamics")

    # Embedded subspaces.
    c_one_left = alg.coefficients(alg.identity())
    c_one_right = comm.coefficients(np.eye(g, dtype=complex))
    eye_k, eye_kp = np.eye(k), np.eye(kp)
    left_vecs = [space.vector(np.kron(eye_k[i], c_one_right)) for i in range(k)]
    right_vecs = [space.vector(np.kron(c_one_left, eye_kp[j])) for j in range(kp)]
    left_sub = orthonormalize(left_vecs, tol=tol, dim=space.rank)
    right_sub = orthonormalize(right_vecs, tol=tol, dim=space.rank)

    f_basis = ce.subsystem.algebra.basis
    shared_vecs = [space.vector(np.kron(alg.coefficients(f), c_one_right)) for f in f_basis]
    shared = orthonormalize(shared_vecs, tol=tol, dim=space.rank)
    mirrored_vecs = [
        space.vector(np.kron(c_one_left, comm.coefficients(gns.mirror(gns.represent(f)))))
        for f in f_basis
    ]
    shared_mirrored = orthonormalize(mirrored_vecs, tol=tol, dim=space.rank)
    if not shared.equals(shared_mirrored, 1e-7):
        raise InputError("the two spanning descriptions of the shared subspace disagree")

    return ProductGns(gns, mirror, ce, space, w, left_map, right_map,
                      left_sub, right_sub, shared, tol)


def joining_invariant_reports(product: ProductGns, tol=1e-7, rng=None):
    """State axioms, marginals, invariance, restriction, and orthogonality facts."""
    rng = np.random.default_rng(2) if rng is None else rng
    gns = product.gns
    mirror = product.mirror
    ce = product.condexp
    alg = gns.system.algebra
    comm = mirror.commutant_algebra
    state = gns.system.state
    out = []

    evs = product.space.eigenvalues
    out.append(report_from_residuals(
        "joining gram positive semidefinite",
        [("kept eigenvalue range", 0.0 if evs.size == 0 or evs[0] > 0 else 1.0)], tol))

    one_left = alg.identity()
    one_right = np.eye(gns.dim, dtype=complex)
    out.append(report_from_residuals(
        "joining normalized",
        [("omega(1 (x) 1) - 1", abs(product.value([(one_left, one_right)]) - 1.0))], tol))

    marg = []
    for i, a in enumerate(alg.basis):
        marg.append((f"left marginal e{i}",
                     abs(product.value([(a, one_right)]) - state.value(a))))
    for j, b in enumerate(comm.basis):
        marg.append((f"right marginal f{j}",
                     abs(product.value([(one_left, b)]) - mirror.mirror_state(b))))
    out.append(report_from_residuals("joining marginals", marg, tol))

    inv = []
    for i, a in enumerate(alg.basis):
        for j, b in enumerate(comm.basis):
            before = product.value([(a, b)])
            after = product.value([(gns.system.dynamics.apply(a), mirror.mirror_dynamics(b))])
            inv.append((f"pair ({i}, {j})", abs(after - before)))
    out.append(report_from_residuals("joining invariant under product dynamics", inv, tol))

    diag = []
    for i, f in enumerate(ce.subsystem.algebra.basis):
        for j, ftj in enumerate(ce.subsystem.algebra.basis):
            ft = gns.mirror(gns.represent(ftj))
            got = product.value([(f, ft)])
            want = gns.state_value(gns.represent(f) @ ft)
            diag.append((f"pair ({i}, {j})", abs(got - want)))
    out.append(report_from_residuals("joining restricts to the diagonal state", diag, tol))

    r = product.shared_projector
    ortho = []
    for ai, a in enumerate(ce.kernel_elements(gns)):
        for j, b in enumerate(comm.basis):
            v = product.gamma([(a, b)])
            ortho.append((f"kernel {ai} (x) f{j}", float(np.linalg.norm(r @ v))))
    out.append(report_from_residuals(
        "expectation-kernel tensors orthogonal to shared subspace", ortho, tol))

    # gamma(E(s)) = R gamma(s) for simple tensors.
    proj_pairs = []
    for i, a in enumerate(alg.basis):
        for j, b in enumerate(comm.basis):
            es = [(ce(a, gns), mirror.mirrored_expectation(b))]
            lhs = product.gamma(es)
            rhs = r @ product.gamma([(a, b)])
            proj_pairs.append((f"pair ({i}, {j})", float(np.linalg.norm(lhs - rhs))))
    out.append(report_from_residuals(
        "expectation acts as shared-subspace projection", proj_pairs, tol))

    out.append(report_from_residuals(
        "cyclic vector fixed by joining dynamics",
        [("W Omega - Omega", float(np.linalg.norm(
            product.dynamics_unitary @ product.cyclic_vector - product.cyclic_vector)))], tol))

    contain = [
        ("shared inside left", product.left_subspace.containment_residual(product.shared_subspace)),
        ("shared inside right", product.right_subspace.containment_residual(product.shared_subspace)),
    ]
    out.append(report_from_residuals("shared subspace inside both factors", contain, tol))
    return out
