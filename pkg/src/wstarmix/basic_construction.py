"""The basic construction: the algebra generated by the system and the
subsystem projection, with its canonical trace weight on the a-P-b span.

Tracial states only. The trace weight is defined by its values mu(ab) on
elements a P b; well-definedness on the span is verified on a null-space
basis rather than assumed.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from .algebras import MatrixStarAlgebra, generate_algebra
from .errors import ConsistencyError, InputError, TraceRequiredError
from .gns import CondExpectation, GnsRep
from .linalg import DEFAULT_TOL, GRAM_NULL_TOL, RESIDUAL_TOL, GramSpace, dagger
from .reporting import PredicateReport, Witness, report_from_residuals


class BasicConstruction:
    """Span data of {a P b} with the trace weight and the lifted dynamics."""

    def __init__(self, gns: GnsRep, condexp: CondExpectation, pair_ops, pair_values,
                 span_flat, pair_coeffs, solver, tol):
        self.gns = gns
        self.condexp = condexp
        self.pair_ops = pair_ops        # (k, k, g, g): pi(e_i) P pi(e_j)
        self.pair_values = pair_values  # (k, k): state(e_i e_j)
        self.span_flat = span_flat      # (r, g*g) orthonormal flat basis of span(APA)
        self.pair_coeffs = pair_coeffs  # (k*k, r): column p = pair coefficients of span row p
        self._solver = solver           # (k*k, g*g) least-squares map onto pair coefficients
        self.tol = tol

    @property
    def ambient_dim(self) -> int:
        return self.gns.dim

    @property
    def span_dim(self) -> int:
        return self.span_flat.shape[0]

    @cached_property
    def algebra(self) -> MatrixStarAlgebra:
        """The full generated algebra; its dimension can exceed the a-P-b span."""
        gens = list(self.gns.basis_reps) + [self.condexp.projector]
        return generate_algebra(gens, self.gns.dim, tol=self.tol)

    @property
    def dimension_gap(self) -> int:
        return self.algebra.dim - self.span_dim

    def span_element(self, coefficients):
        flat = np.asarray(coefficients, dtype=complex) @ self.span_flat
        g = self.ambient_dim
        return flat.reshape(g, g)

    def random_span_element(self, rng):
        r = self.span_dim
        return self.span_element(rng.standard_normal(r) + 1j * rng.standard_normal(r))

    def trace(self, x, tol=RESIDUAL_TOL):
        """The trace weight of an element of span(APA).

        Decomposes x over the pair elements a P b by least squares and sums
        the corresponding state values; the result is independent of the
        representative by the verified well-definedness.
        """
        x = np.asarray(x, dtype=complex)
        coeff = self._solver @ x.ravel()
        resid = np.linalg.norm(
            coeff @ self.pair_ops.reshape(-1, x.size) - x.ravel())
        if resid > tol * max(1.0, float(np.linalg.norm(x))):
            raise InputError(f"element is not in the a-P-b span (residual {resid:.3e})")
        return complex(coeff @ self.pair_values.ravel())

    def lifted(self, x, n: int = 1):
        """The dynamics extended to the construction: conjugation by the GNS unitary."""
        u = self.gns.dynamics_power(n)
        return u @ np.asarray(x, dtype=complex) @ dagger(u)


def build_basic_construction(gns: GnsRep, condexp: CondExpectation,
                             tol=DEFAULT_TOL) -> BasicConstruction:
    if not gns.system.is_tracial:
        raise TraceRequiredError("the basic construction trace requires a tracial state")
    alg = gns.system.algebra
    k, g = alg.dim, gns.dim
    reps = gns.basis_reps
    p = condexp.projector
    pair_ops = np.einsum("iab,bc,jcd->ijad", reps, p, reps)
    pair_values = np.einsum("ab,ibc,jca->ij", gns.system.state.density, alg.basis, alg.basis)

    flat = pair_ops.reshape(k * k, g * g)
    u, s, vh = np.linalg.svd(flat, full_matrices=False)
    cutoff = tol * s[0] if s.size and s[0] > 0 else tol
    rank = int(np.sum(s > cutoff))
    span_flat = vh[:rank]
    pair_coeffs = np.conj(u[:, :rank]) / s[:rank][None, :]

    # Well-definedness of the trace weight: vanishing combinations of the
    # pair elements must pair to zero against the state values.
    null = u[:, rank:]
    if null.shape[1]:
        defects = np.abs(np.conj(null).T @ pair_values.ravel())
        # scale by the singular values actually annihilated
        worst = float(np.max(defects))
        if worst > 1e-7:
            raise ConsistencyError(
                f"trace weight not well-defined on the a-P-b span (defect {worst:.3e})")

    solver = np.linalg.pinv(flat.T, rcond=1e-12)
    return BasicConstruction(gns, condexp, pair_ops, pair_values, span_flat,
                             pair_coeffs, solver, tol)


def mixing_identity_report(bc: BasicConstruction, a, b, n: int,
                           tol=RESIDUAL_TOL) -> PredicateReport:
    """trace(b* P b alpha^n(a P a*)) equals the relative mixing term, evaluated independently."""
    from .ergodic import relative_mixing_term

    gns = bc.gns
    pb = gns.represent(b)
    pa = gns.represent(a)
    p = bc.condexp.projector
    x = dagger(pb) @ p @ pb @ bc.lifted(pa @ p @ dagger(pa), n)
    lhs = bc.trace(x)
    rhs = relative_mixing_term(gns, bc.condexp, a, b, n)
    resid = abs(lhs - rhs)
    return PredicateReport(
        "trace weight reproduces mixing terms", resid <= tol, tol,
        [Witness(f"n={n}: {lhs!r} vs {rhs!r}", float(resid))])


def basic_construction_reports(bc: BasicConstruction, tol=RESIDUAL_TOL, rng=None,
                               max_power=10):
    """Traciality, invariance, positivity and the mixing identity on the span."""
    rng = np.random.default_rng(4) if rng is None else rng
    gns = bc.gns
    alg = gns.system.algebra
    out = []

    null_pairs = []
    flat = bc.pair_ops.reshape(bc.pair_values.size, -1)
    u, s, _ = np.linalg.svd(flat, full_matrices=False)
    rank = bc.span_dim
    for idx in range(rank, bc.pair_values.size):
        defect = abs(np.conj(u[:, idx]) @ bc.pair_values.ravel())
        null_pairs.append((f"null combination {idx - rank}", float(defect)))
    if not null_pairs:
        null_pairs.append(("no vanishing combinations", 0.0))
    out.append(report_from_residuals("trace weight well-defined", null_pairs, tol))

    tracial = []
    invariant = []
    positive = []
    for trial in range(8):
        x = bc.random_span_element(rng)
        y = bc.random_span_element(rng)
        tracial.append((f"trial {trial}",
                        abs(bc.trace(x @ y) - bc.trace(y @ x))))
        n = int(rng.integers(1, max_power + 1))
        invariant.append((f"trial {trial} (n={n})",
                          abs(bc.trace(bc.lifted(x, n)) - bc.trace(x))))
        val = bc.trace(dagger(x) @ x)
        positive.append((f"trial {trial}",
                         max(0.0, -val.real) + abs(val.imag)))
    out.append(report_from_residuals("trace weight tracial on the span", tracial, tol))
    out.append(report_from_residuals("trace weight invariant under lifted dynamics",
                                     invariant, tol))
    out.append(report_from_residuals("trace weight positive on squares", positive, tol))

    identity_pairs = []
    for trial in range(6):
        a = alg.random_element(rng)
        b = alg.random_element(rng)
        n = int(rng.integers(0, max_power + 1))
        rep = mixing_identity_report(bc, a, b, n, tol)
        identity_pairs.append((f"trial {trial} (n={n})", rep.worst_residual))
    out.append(report_from_residuals("trace weight reproduces mixing terms",
                                     identity_pairs, tol))
    return out


class BarGns:
    """GNS data of the construction's trace weight, restricted to the a-P-b span."""

    def __init__(self, bc: BasicConstruction, space: GramSpace, dynamics_unitary):
        self.construction = bc
        self.space = space
        self.dim = space.rank
        self.dynamics_unitary = dynamics_unitary


def build_bar_gns(bc: BasicConstruction, tol=DEFAULT_TOL) -> BarGns:
    """Quotient completion of the span under <x, y> = trace(x* y), with the lifted unitary.

    The trace weight is only guaranteed on span(APA); the Gram is therefore
    taken over that span rather than over the full generated algebra.
    """
    gns = bc.gns
    alg = gns.system.algebra
    k = alg.dim
    rho = gns.system.state.density
    eb = alg.basis

    prods = np.einsum("iba,jbc->ijac", np.conj(eb), eb)  # e_i^* e_j
    d = alg.ambient_dim
    coords = np.conj(eb.reshape(k, -1)) @ prods.reshape(k * k, -1).T
    d_coords = (bc.condexp.coeff_map @ coords).T
    d_ik = np.tensordot(d_coords, eb, axes=1).reshape(k, k, d, d)

    edag = dagger(eb)
    m4 = np.einsum("pq,jqr,ikrs,lsp->ijkl", rho, edag, d_ik, eb).reshape(k * k, k * k)

    c = bc.pair_coeffs  # (k*k, r)
    gram = dagger(c) @ m4 @ c
    gram = (gram + dagger(gram)) / 2
    space = GramSpace.from_gram(gram, null_tol=GRAM_NULL_TOL)

    # Cross-check a few entries against direct trace evaluation of products.
    rng = np.random.default_rng(5)
    for _ in range(4):
        pq = rng.integers(0, bc.span_dim, size=2)
        y_p = bc.span_element(np.eye(bc.span_dim)[pq[0]])
        y_q = bc.span_element(np.eye(bc.span_dim)[pq[1]])
        direct = bc.trace(dagger(y_p) @ y_q)
        if abs(direct - gram[pq[0], pq[1]]) > 1e-7:
            raise ConsistencyError("trace-weight Gram disagrees with direct evaluation")

    g = bc.ambient_dim
    images = np.stack([bc.lifted(bc.span_element(row)) for row in np.eye(bc.span_dim)])
    img_flat = images.reshape(bc.span_dim, g * g)
    coeff_map = (img_flat @ np.conj(bc.span_flat).T).T  # column p = coords of image of y_p
    resid = np.linalg.norm(img_flat - coeff_map.T @ bc.span_flat)
    if resid > 1e-7 * max(1.0, float(np.linalg.norm(img_flat))):
        raise ConsistencyError("lifted dynamics leaves the a-P-b span")
    ubar = space.push_map(coeff_map, tol=RESIDUAL_TOL, require_unitary=True,
                          name="lifted dynamics unitary")
    return BarGns(bc, space, ubar)
