"""GNS representation of a system, modular conjugation, conditional expectations,
and the mirror system carried onto the commutant.

Antilinear operators are carried as (matrix, conjugate-the-input) pairs with a
single fixed convention: apply(v) = matrix @ conj(v). Keeping the conjugation
in one place avoids silent double-conjugation bugs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebras import MatrixStarAlgebra, Subsystem, SystemSpec, commutant, _matrix_span
from .errors import ConsistencyError, InputError
from .linalg import (
    DEFAULT_TOL,
    RESIDUAL_TOL,
    GramSpace,
    Subspace,
    dagger,
    orthonormalize,
    solve_in_span,
)
from .reporting import report_from_residuals


@dataclass(frozen=True)
class AntilinearOp:
    """v -> matrix @ conj(v)."""

    matrix: np.ndarray

    def apply(self, v):
        return self.matrix @ np.conj(np.asarray(v, dtype=complex))

    def involution_defect(self) -> float:
        """|| K conj(K) - 1 ||, zero iff the operator squares to the identity."""
        n = self.matrix.shape[0]
        return float(np.linalg.norm(self.matrix @ np.conj(self.matrix) - np.eye(n)))

    def antiunitarity_defect(self) -> float:
        n = self.matrix.shape[0]
        return float(np.linalg.norm(dagger(self.matrix) @ self.matrix - np.eye(n)))


class GnsRep:
    """Cyclic representation of (algebra, state) with the dynamics unitary.

    Coordinates live on the quotient of the algebra by the (empty, for a
    faithful state) null space of <a, b> = state(a* b). The cyclic vector is
    the class of the identity.
    """

    def __init__(self, system: SystemSpec, coords: GramSpace, basis_reps,
                 dynamics_unitary, star_conjugation: AntilinearOp,
                 modular_matrix, conjugation: AntilinearOp, tol: float):
        self.system = system
        self.coords = coords
        self.dim = coords.rank
        self.basis_reps = basis_reps              # (k, dim, dim): left action of each basis element
        self.dynamics_unitary = dynamics_unitary  # U with U (a-hat) = (alpha(a))-hat
        self.star_conjugation = star_conjugation  # S: a-hat -> (a*)-hat
        self.modular_matrix = modular_matrix      # positive operator of the polar split S = J mod^{1/2}
        self.conjugation = conjugation            # modular conjugation J
        self.tol = tol
        self.cyclic_vector = self.embed(system.algebra.identity())
        self._spectra = {}

    # -- coordinate maps -------------------------------------------------

    def embed(self, a):
        """Vector class of an algebra element."""
        alg = self.system.algebra
        c = alg.coefficients(a)
        res = np.linalg.norm(np.asarray(a, dtype=complex) - alg.element(c))
        if res > 1e-7 * max(1.0, float(np.linalg.norm(a))):
            raise InputError("embed: element is not in the algebra")
        return self.coords.vector(c)

    def unembed(self, v):
        """The algebra element whose class is v (the cyclic vector is separating)."""
        return self.system.algebra.element(self.coords.coefficients(v))

    def represent(self, a):
        """Left-multiplication operator of an algebra element."""
        c = self.system.algebra.coefficients(a)
        return np.tensordot(c, self.basis_reps, axes=1)

    def dynamics_power(self, n: int):
        u = self.dynamics_unitary
        if n < 0:
            return np.linalg.matrix_power(dagger(u), -n)
        return np.linalg.matrix_power(u, n)

    def dynamics_spectrum(self, cluster_tol):
        from .linalg import unitary_spectrum

        if cluster_tol not in self._spectra:
            self._spectra[cluster_tol] = unitary_spectrum(
                self.dynamics_unitary, cluster_tol=cluster_tol, tol=1e-7)
        return self._spectra[cluster_tol]

    # -- modular structure -----------------------------------------------

    def mirror(self, x):
        """j(x) = J x* J, as a linear operator on the representation space."""
        k = self.conjugation.matrix
        return k @ np.asarray(x, dtype=complex).T @ np.conj(k)

    def state_value(self, x):
        """<Omega, x Omega> for an operator on the representation space."""
        return complex(np.vdot(self.cyclic_vector, np.asarray(x, dtype=complex) @ self.cyclic_vector))


def build_gns(system: SystemSpec, tol=DEFAULT_TOL) -> GnsRep:
    """GNS data of a system, including the modular conjugation.

    For a tracial state the conjugation reduces to a-hat -> (a*)-hat; in
    general it is obtained from the polar split of that antilinear map through
    the positive modular operator.
    """
    alg = system.algebra
    k = alg.dim
    gram = np.einsum("ab,ibc,jca->ij", system.state.density, dagger(alg.basis), alg.basis)
    gram = (gram + dagger(gram)) / 2
    coords = GramSpace.from_gram(gram, null_tol=tol)
    if coords.rank != k:
        raise ConsistencyError(
            f"GNS Gram matrix is singular (rank {coords.rank} < {k}); state not faithful on the algebra"
        )
    emb, lift = coords.embedding, coords.lift

    d = alg.ambient_dim
    prods = np.einsum("iab,jbc->ijac", alg.basis, alg.basis).reshape(k * k, d, d)
    prod_coords = np.conj(alg.basis.reshape(k, -1)) @ prods.reshape(k * k, -1).T  # (k, k*k)
    prod_coords = prod_coords.reshape(k, k, k)  # [c, i, j] = coord c of e_i e_j
    basis_reps = np.empty((k, k, k), dtype=complex)
    for i in range(k):
        mult = prod_coords[:, i, :]  # column j = coords of e_i e_j
        basis_reps[i] = emb @ mult @ lift

    u = coords.push_map(system.dynamics.coeff_map, tol=RESIDUAL_TOL,
                        require_unitary=True, name="dynamics unitary")

    star_coords = np.stack([alg.coefficients(dagger(b)) for b in alg.basis])  # row i = coords of e_i*
    k_star = emb @ star_coords.T @ np.conj(lift)
    star = AntilinearOp(k_star)

    modular = k_star.T @ np.conj(k_star)
    modular = (modular + dagger(modular)) / 2
    w, v = np.linalg.eigh(modular)
    if w[0] <= 0:
        raise ConsistencyError(f"modular operator not positive (min eigenvalue {w[0]:.3e})")
    inv_sqrt = (v / np.sqrt(w)[None, :]) @ dagger(v)
    k_j = k_star @ np.conj(inv_sqrt)
    conj_op = AntilinearOp(k_j)

    rep = GnsRep(system, coords, basis_reps, u, star, modular, conj_op, tol)

    # Defensive sanity: gross violations mean broken inputs, not round-off.
    omega = rep.cyclic_vector
    checks = {
        "U Omega = Omega": float(np.linalg.norm(u @ omega - omega)),
        "J involution": conj_op.involution_defect(),
        "J antiunitary": conj_op.antiunitarity_defect(),
        "UJ = JU": float(np.linalg.norm(u @ k_j - k_j @ np.conj(u))),
    }
    worst = max(checks.values())
    if worst > 1e-6:
        bad = max(checks, key=checks.get)
        raise ConsistencyError(f"GNS construction failed: {bad} defect {checks[bad]:.3e}")
    return rep


@dataclass(frozen=True)
class CondExpectation:
    """The state-preserving conditional expectation onto a subsystem.

    Acts on algebra elements through `projector` (the orthogonal projection
    onto the closure of the subsystem's vector classes) and is recovered as an
    algebra map because the cyclic vector is separating.
    """

    subsystem: Subsystem
    subspace: Subspace          # closure of F Omega inside the GNS space
    projector: np.ndarray
    coeff_map: np.ndarray       # A-coords -> A-coords, range inside F
    into_sub_coords: np.ndarray  # A-coords -> F-coords

    def __call__(self, a, gns: GnsRep):
        return gns.system.algebra.element(self.coeff_map @ gns.system.algebra.coefficients(a))

    def kernel_coords(self, tol=DEFAULT_TOL):
        """Orthonormal coordinate basis of ker(D) inside the algebra."""
        k = self.coeff_map.shape[0]
        _, s, vh = np.linalg.svd(self.coeff_map, full_matrices=True)
        cutoff = tol * max(1.0, s[0] if s.size else 1.0)
        rank = int(np.sum(s > cutoff))
        return vh[rank:].conj()

    def kernel_elements(self, gns: GnsRep, tol=DEFAULT_TOL):
        return [gns.system.algebra.element(c) for c in self.kernel_coords(tol)]


def cond_expectation(gns: GnsRep, subsystem: Subsystem, tol=DEFAULT_TOL) -> CondExpectation:
    """Build D with D(a)-hat = P a-hat; fails loudly if recovery leaves the subalgebra.

    A recovery residual beyond tolerance signals a subsystem that is not
    actually invariant under the modular flow, where no conditional
    expectation compatible with the state exists.
    """
    f_basis = subsystem.algebra.basis
    f_hats = [gns.embed(f) for f in f_basis]
    sub = orthonormalize(f_hats, tol=tol, dim=gns.dim)
    proj = sub.projector()

    alg = gns.system.algebra
    k = alg.dim
    into_sub = np.zeros((len(f_basis), k), dtype=complex)
    for i in range(k):
        w = proj @ gns.coords.vector(np.eye(k)[i])
        sol = solve_in_span(w, f_hats, tol=RESIDUAL_TOL)
        if not sol.in_span:
            raise ConsistencyError(
                f"conditional expectation recovery failed on basis element {i} "
                f"(residual {sol.residual:.3e}); subsystem likely not modular-invariant"
            )
        into_sub[:, i] = sol.coefficients
    coeff_map = subsystem.coords_in_parent.T @ into_sub
    return CondExpectation(subsystem, sub, proj, coeff_map, into_sub)


class MirrorData:
    """The system carried over to the commutant, with its mirrored subsystem."""

    def __init__(self, gns: GnsRep, condexp: CondExpectation,
                 commutant_algebra: MatrixStarAlgebra,
                 mirrored_subalgebra: MatrixStarAlgebra, tol: float):
        self.gns = gns
        self.condexp = condexp
        self.commutant_algebra = commutant_algebra       # A' on the GNS space
        self.mirrored_subalgebra = mirrored_subalgebra   # j(F), inside A'
        self.tol = tol

    def mirror_state(self, b):
        """State on the commutant: b -> <Omega, b Omega>."""
        return self.gns.state_value(b)

    def mirror_dynamics(self, b, n: int = 1):
        u = self.gns.dynamics_power(n)
        return u @ np.asarray(b, dtype=complex) @ dagger(u)

    def pull_back(self, b):
        """The algebra element a with j(b) equal to the left action of a."""
        g = self.gns
        mirrored = g.mirror(b)
        a = g.unembed(mirrored @ g.cyclic_vector)
        defect = np.linalg.norm(g.represent(a) - mirrored)
        if defect > 1e-6 * max(1.0, float(np.linalg.norm(mirrored))):
            raise ConsistencyError(
                f"commutant element does not mirror into the algebra (defect {defect:.3e})"
            )
        return a

    def mirrored_expectation(self, b):
        """The conditional expectation of the commutant system onto j(F)."""
        g = self.gns
        a = self.pull_back(b)
        return g.mirror(g.represent(self.condexp(a, g)))


def mirror_system(gns: GnsRep, condexp: CondExpectation, tol=DEFAULT_TOL) -> MirrorData:
    """Commutant system data; for traces the commutant is cross-checked against j(A)."""
    pi_basis = gns.basis_reps
    pi_alg = MatrixStarAlgebra(gns.dim, _matrix_span(pi_basis, gns.dim, tol))
    comm = commutant(pi_alg, tol=tol)
    mirrored = _matrix_span([gns.mirror(p) for p in pi_basis], gns.dim, tol)
    mirrored_alg = MatrixStarAlgebra(gns.dim, mirrored)
    if gns.system.is_tracial and not comm.equals(mirrored_alg, 100 * tol):
        raise ConsistencyError("commutant and mirrored algebra disagree for a tracial state")

    f_mirrored = _matrix_span(
        [gns.mirror(gns.represent(f)) for f in condexp.subsystem.algebra.basis], gns.dim, tol
    )
    return MirrorData(gns, condexp, comm, MatrixStarAlgebra(gns.dim, f_mirrored), tol)


# ---------------------------------------------------------------------------
# Invariant batteries. These return reports rather than raising so a whole
# suite can run and display every identity at once.
# ---------------------------------------------------------------------------

def gns_invariant_reports(gns: GnsRep, tol=DEFAULT_TOL):
    alg = gns.system.algebra
    k = alg.dim
    reps = gns.basis_reps
    u = gns.dynamics_unitary
    omega = gns.cyclic_vector
    out = []

    pairs = []
    prods = np.einsum("iab,jbc->ijac", alg.basis, alg.basis)
    for i in range(k):
        for j in range(k):
            got = reps[i] @ reps[j]
            want = gns.represent(prods[i, j])
            pairs.append((f"pi(e{i} e{j})", float(np.linalg.norm(got - want))))
    out.append(report_from_residuals("representation multiplicative", pairs, tol * 100))

    star_pairs = [
        (f"pi(e{i})*", float(np.linalg.norm(dagger(reps[i]) - gns.represent(dagger(alg.basis[i])))))
        for i in range(k)
    ]
    out.append(report_from_residuals("representation star-preserving", star_pairs, tol * 100))
    out.append(report_from_residuals(
        "representation unital",
        [("pi(1)", float(np.linalg.norm(gns.represent(alg.identity()) - np.eye(gns.dim))))],
        tol * 100,
    ))
    out.append(report_from_residuals(
        "cyclic vector normalized",
        [("norm", abs(float(np.linalg.norm(omega)) - 1.0))], tol * 100,
    ))
    out.append(report_from_residuals(
        "dynamics unitary",
        [("U*U - 1", float(np.linalg.norm(dagger(u) @ u - np.eye(gns.dim)))),
         ("U Omega - Omega", float(np.linalg.norm(u @ omega - omega)))],
        tol * 100,
    ))
    cov = [
        (f"U pi(e{i}) U*", float(np.linalg.norm(
            u @ reps[i] @ dagger(u) - gns.represent(gns.system.dynamics.apply(alg.basis[i])))))
        for i in range(k)
    ]
    out.append(report_from_residuals("dynamics covariance", cov, tol * 100))

    kj = gns.conjugation.matrix
    conj_checks = [
        ("J involution", gns.conjugation.involution_defect()),
        ("J antiunitary", gns.conjugation.antiunitarity_defect()),
        ("UJ = JU", float(np.linalg.norm(u @ kj - kj @ np.conj(u)))),
    ]
    star_defect = max(
        float(np.linalg.norm(gns.star_conjugation.apply(gns.embed(b)) - gns.embed(dagger(b))))
        for b in alg.basis
    )
    conj_checks.append(("S(a-hat) = (a*)-hat", star_defect))
    if gns.system.is_tracial:
        conj_checks.append(
            ("tracial J = S", float(np.linalg.norm(kj - gns.star_conjugation.matrix)))
        )
    out.append(report_from_residuals("modular conjugation", conj_checks, tol * 100))
    return out


def condexp_invariant_reports(gns: GnsRep, ce: CondExpectation, tol=RESIDUAL_TOL, rng=None):
    """Every defining identity of the conditional expectation, with residuals."""
    rng = np.random.default_rng(0) if rng is None else rng
    alg = gns.system.algebra
    sub = ce.subsystem.algebra
    k, kf = alg.dim, sub.dim
    state = gns.system.state
    u = gns.dynamics_unitary
    p = ce.projector
    out = []

    dm = ce.coeff_map
    out.append(report_from_residuals(
        "expectation idempotent", [("D^2 - D", float(np.linalg.norm(dm @ dm - dm)))], tol))
    one = alg.identity()
    out.append(report_from_residuals(
        "expectation unital", [("D(1) - 1", float(np.linalg.norm(ce(one, gns) - one)))], tol))

    basis_expect = np.stack([ce(b, gns) for b in alg.basis])
    out.append(report_from_residuals(
        "state compatibility",
        [(f"mu(D(e{i})) - mu(e{i})",
          abs(state.value(basis_expect[i]) - state.value(alg.basis[i])))
         for i in range(k)],
        tol,
    ))

    bim = []
    for fi in range(kf):
        for fj in range(kf):
            lhs = np.einsum("ab,ibc,cd->iad", sub.basis[fi], basis_expect, sub.basis[fj])
            mid = np.einsum("ab,ibc,cd->iad", sub.basis[fi], alg.basis, sub.basis[fj])
            rhs = np.stack([ce(m, gns) for m in mid])
            r = float(np.max(np.linalg.norm((lhs - rhs).reshape(k, -1), axis=1)))
            bim.append((f"f{fi} . f{fj}", r))
    out.append(report_from_residuals("bimodule property", bim, tol))

    t = gns.system.dynamics.coeff_map
    out.append(report_from_residuals(
        "intertwines dynamics",
        [("D alpha - alpha D", float(np.linalg.norm(dm @ t - t @ dm)))], tol))
    out.append(report_from_residuals(
        "projection commutes with dynamics",
        [("PU - UP", float(np.linalg.norm(p @ u - u @ p)))], tol))

    vec = [
        (f"D(e{i})-hat - P e{i}-hat",
         float(np.linalg.norm(gns.embed(basis_expect[i]) - p @ gns.embed(alg.basis[i]))))
        for i in range(k)
    ]
    out.append(report_from_residuals("vector formula", vec, tol))

    norm_pairs = []
    for i in range(k):
        a = alg.basis[i]
        da = ce(a, gns)
        lhs = state.value(dagger(da) @ da).real
        rhs = float(np.linalg.norm(p @ gns.embed(a)) ** 2)
        norm_pairs.append((f"e{i}", abs(lhs - rhs)))
    out.append(report_from_residuals("norm of expectation matches projection", norm_pairs, tol))

    contraction = []
    for trial in range(6):
        a = alg.random_element(rng)
        gap = np.linalg.norm(gns.embed(ce(a, gns))) - np.linalg.norm(gns.embed(a))
        contraction.append((f"random element {trial}", max(0.0, float(gap))))
    out.append(report_from_residuals("expectation contractive", contraction, tol))

    kj = gns.conjugation.matrix
    jf = [
        (f"(1-P) J f{i}-hat",
         float(np.linalg.norm((np.eye(gns.dim) - p) @ (kj @ np.conj(gns.embed(f))))))
        for i, f in enumerate(sub.basis)
    ]
    out.append(report_from_residuals("conjugation preserves subsystem space", jf, tol))

    mix = []
    sym = []
    tracial = gns.system.is_tracial
    for trial in range(8):
        a = alg.random_element(rng)
        b = alg.random_element(rng)
        n = int(rng.integers(0, 11))
        an = gns.system.dynamics.apply(a, n)
        lhs = state.value(ce(dagger(an) @ dagger(b), gns) @ ce(b @ an, gns))
        rhs = np.linalg.norm(p @ gns.represent(b) @ gns.dynamics_power(n) @ gns.embed(a)) ** 2
        mix.append((f"trial {trial} (n={n})", abs(lhs - rhs)))
        if tracial:
            left = np.linalg.norm(p @ gns.represent(b) @ gns.dynamics_power(n) @ gns.embed(a))
            right = np.linalg.norm(
                p @ gns.dynamics_power(n) @ gns.represent(dagger(a))
                @ gns.dynamics_power(-n) @ gns.embed(dagger(b))
            )
            sym.append((f"trial {trial} (n={n})", abs(left - right)))
    out.append(report_from_residuals("mixing term has two equal forms", mix, tol))
    if tracial:
        out.append(report_from_residuals("projected norm symmetry", sym, tol))
    return out


def mirror_invariant_reports(gns: GnsRep, mirror: MirrorData, ce: CondExpectation,
                             tol=RESIDUAL_TOL, rng=None):
    rng = np.random.default_rng(1) if rng is None else rng
    alg = gns.system.algebra
    out = []

    comm_pairs = []
    for i, b in enumerate(mirror.commutant_algebra.basis):
        worst = max(
            float(np.linalg.norm(b @ rep - rep @ b)) for rep in gns.basis_reps
        )
        comm_pairs.append((f"commutant basis {i}", worst))
    out.append(report_from_residuals("commutant commutes with representation", comm_pairs, tol))

    mirr_comm = []
    for i in range(alg.dim):
        jb = gns.mirror(gns.basis_reps[i])
        worst = max(float(np.linalg.norm(jb @ rep - rep @ jb)) for rep in gns.basis_reps)
        mirr_comm.append((f"j(pi(e{i}))", worst))
    out.append(report_from_residuals("mirror lands in the commutant", mirr_comm, tol))

    inv = []
    for trial in range(4):
        x = rng.standard_normal((gns.dim, gns.dim)) + 1j * rng.standard_normal((gns.dim, gns.dim))
        inv.append((f"random operator {trial}",
                    float(np.linalg.norm(gns.mirror(gns.mirror(x)) - x))))
    out.append(report_from_residuals("mirror involutive", inv, tol))

    state_inv = []
    for i, b in enumerate(mirror.commutant_algebra.basis):
        lhs = mirror.mirror_state(mirror.mirror_dynamics(b))
        rhs = mirror.mirror_state(b)
        state_inv.append((f"commutant basis {i}", abs(lhs - rhs)))
    out.append(report_from_residuals("mirror state invariant under mirror dynamics", state_inv, tol))

    ftilde_in = [
        (f"mirrored subalgebra basis {i}", mirror.commutant_algebra.membership_residual(b))
        for i, b in enumerate(mirror.mirrored_subalgebra.basis)
    ]
    out.append(report_from_residuals("mirrored subalgebra inside commutant", ftilde_in, tol))

    omega = gns.cyclic_vector
    p = ce.projector
    dt = [
        (f"commutant basis {i}",
         float(np.linalg.norm(mirror.mirrored_expectation(b) @ omega - p @ (b @ omega))))
        for i, b in enumerate(mirror.commutant_algebra.basis)
    ]
    out.append(report_from_residuals("mirrored expectation vector formula", dt, tol))

    mirror_exp = []
    for trial in range(4):
        a = alg.random_element(rng)
        lhs = mirror.mirrored_expectation(gns.mirror(gns.represent(a)))
        rhs = gns.mirror(gns.represent(ce(a, gns)))
        mirror_exp.append((f"random element {trial}", float(np.linalg.norm(lhs - rhs))))
    out.append(report_from_residuals("mirrored expectation intertwines mirror", mirror_exp, tol))

    f_span = orthonormalize([gns.embed(f) for f in ce.subsystem.algebra.basis],
                            tol=DEFAULT_TOL, dim=gns.dim)
    ftilde_span = orthonormalize(
        [b @ omega for b in mirror.mirrored_subalgebra.basis], tol=DEFAULT_TOL, dim=gns.dim)
    out.append(report_from_residuals(
        "subsystem space has two spanning descriptions",
        [("F Omega vs j(F) Omega",
          max(f_span.containment_residual(ftilde_span), ftilde_span.containment_residual(f_span)))],
        tol,
    ))
    return out
