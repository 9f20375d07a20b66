"""Cesaro averages and the mixing/ergodicity predicates.

Every limit of a Cesaro average is evaluated exactly through spectral
projectors of the relevant unitary (finite-dimensional mean ergodic theorem);
finite-horizon empirical averages only cross-check the exact values, because
truncated averages converge slowly near spectral clusters close to 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, TraceRequiredError
from .gns import CondExpectation, GnsRep
from .joining import ProductGns
from .linalg import CLUSTER_TOL, SpectralDecomposition, dagger, unitary_spectrum
from .reporting import PredicateReport, Witness, report_from_residuals

# Predicate tolerance is kept separate from the linear-algebra tolerance to
# absorb accumulated Gram/quotient error.
PREDICATE_TOL = 1e-7
DEFAULT_HORIZON = 512


@dataclass(frozen=True)
class CesaroResult:
    """Exact (spectral) and finite-horizon values of a Cesaro average."""

    exact: complex
    empirical: complex
    horizon: int
    gap: float


def cesaro(u, x, y, horizon=DEFAULT_HORIZON, cluster_tol=CLUSTER_TOL) -> CesaroResult:
    """Average of <x, u^n y> over n = 1..horizon, with its exact limit."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    decomp = unitary_spectrum(u, cluster_tol=cluster_tol)
    exact = complex(np.vdot(x, decomp.fixed_projector() @ y))
    acc = 0.0 + 0.0j
    v = y.copy()
    for _ in range(horizon):
        v = u @ v
        acc += np.vdot(x, v)
    empirical = complex(acc / horizon)
    return CesaroResult(exact, empirical, horizon, abs(exact - empirical))


def cesaro_error_bound(decomp: SpectralDecomposition, x, y, horizon) -> float:
    """Upper bound on |empirical - exact| from the spectral data.

    Each non-fixed cluster theta contributes 2 |<x, E_theta y>| / (N |1 - theta|);
    eigenvalues merged into the fixed cluster contribute through their distance
    to 1 (at most (N+1)/2 times it).
    """
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    fixed = decomp.fixed_index()
    bound = 0.0
    for i, (proj, members) in enumerate(zip(decomp.projectors, decomp.members)):
        weight = abs(np.vdot(x, proj @ y))
        if i == fixed:
            bound += weight * (horizon + 1) / 2 * float(np.max(np.abs(members - 1.0)))
        else:
            gap = float(np.min(np.abs(1.0 - members)))
            bound += weight * 2.0 / (horizon * gap)
    return float(bound)


def relative_mixing_term(gns: GnsRep, ce: CondExpectation, a, b, n: int,
                         check_tol=1e-8) -> float:
    """lambda(|D(b alpha^n(a))|^2), cross-checked between the vector and algebra pictures."""
    vec = ce.projector @ gns.represent(b) @ gns.dynamics_power(n) @ gns.embed(a)
    value = float(np.linalg.norm(vec) ** 2)
    c = np.asarray(b, dtype=complex) @ gns.system.dynamics.apply(a, n)
    dc = ce(c, gns)
    direct = gns.system.state.value(dagger(dc) @ dc).real
    if abs(value - direct) > check_tol * max(1.0, abs(value)):
        raise ConsistencyError(
            f"mixing term disagrees between pictures: {value!r} vs {direct!r}")
    return value


def _mixing_vectors(gns, ce, decomp, a_vecs, pb_ops):
    """w[t, b, a] = P pi(b) E_t a_hat, stacked over clusters, b's and a-vectors."""
    out = np.empty((len(decomp.projectors), len(pb_ops), a_vecs.shape[1], gns.dim),
                   dtype=complex)
    for t, proj in enumerate(decomp.projectors):
        filtered = proj @ a_vecs
        for bi, pb in enumerate(pb_ops):
            out[t, bi] = (pb @ filtered).T
    return out


def _empirical_mixing_cross_check(gns, ce, decomp, a_vecs, pb_ops, w, tol, horizon):
    """Verify finite-horizon averages against the exact spectral limits.

    When the exact limit vanishes the two must agree within 10*tol; otherwise
    the deviation is controlled by the rigorous cross-term bound.
    """
    n_cl = len(decomp.projectors)
    reps = decomp.eigenvalues
    widths = np.array([float(np.max(np.abs(m - r)))
                       for m, r in zip(decomp.members, reps)])
    u = gns.dynamics_unitary
    n_a = a_vecs.shape[1]
    emp = np.zeros((len(pb_ops), n_a))
    v = a_vecs.copy()
    for _ in range(horizon):
        v = u @ v
        for bi, pb in enumerate(pb_ops):
            emp[bi] += np.linalg.norm(pb @ v, axis=0) ** 2
    emp /= horizon

    z = np.abs(1.0 - np.conj(reps)[:, None] * reps[None, :])
    off = ~np.eye(n_cl, dtype=bool)
    for bi in range(len(pb_ops)):
        for ai in range(n_a):
            vecs = w[:, bi, ai, :]
            cross = np.abs(np.conj(vecs) @ vecs.T)
            norms2 = np.real(np.diag(cross))
            exact = float(np.sum(norms2))
            bound = float(np.sum(2 * cross[off] / (horizon * z[off]))) if n_cl > 1 else 0.0
            bound += float((horizon + 1) * np.sum(widths * norms2))
            if abs(emp[bi, ai] - exact) > bound + 10 * tol:
                raise ConsistencyError(
                    f"empirical mixing average at horizon {horizon} deviates from the "
                    f"spectral limit beyond its bound (pair b={bi}, a={ai}: "
                    f"{emp[bi, ai]!r} vs {exact!r}, bound {bound!r})")


def is_relatively_weakly_mixing(gns: GnsRep, ce: CondExpectation, tol=PREDICATE_TOL,
                                cluster_tol=CLUSTER_TOL,
                                horizon=DEFAULT_HORIZON) -> PredicateReport:
    """Exact decision of relative weak mixing.

    The Cesaro limit of lambda(|D(b alpha^n(a))|^2) equals the sum over
    eigenvalue clusters of ||P pi(b) E_theta a_hat||^2, because cross-cluster
    terms average to zero; linearity in a and b makes checking basis elements
    of the algebra and of ker(D) sufficient.
    """
    notes = []
    if not gns.system.is_tracial:
        notes.append("definition-level check only (state is not tracial)")
    kernel = ce.kernel_coords()
    if kernel.shape[0] == 0:
        rep = PredicateReport("relatively weakly mixing", True, tol,
                              [Witness("expectation kernel is trivial", 0.0)], notes)
        return rep
    a_vecs = np.column_stack([gns.coords.vector(c) for c in kernel])
    pb_ops = [ce.projector @ rep for rep in gns.basis_reps]
    decomp = gns.dynamics_spectrum(cluster_tol)
    w = _mixing_vectors(gns, ce, decomp, a_vecs, pb_ops)
    pairs = []
    for t in range(w.shape[0]):
        for bi in range(w.shape[1]):
            for ai in range(w.shape[2]):
                r = float(np.linalg.norm(w[t, bi, ai]))
                pairs.append((f"theta={decomp.eigenvalues[t]:.6g}, b=e{bi}, a=ker{ai}", r))
    _empirical_mixing_cross_check(gns, ce, decomp, a_vecs, pb_ops, w, tol, horizon)
    return report_from_residuals("relatively weakly mixing", pairs, tol, notes=notes)


def is_system_relatively_ergodic(gns: GnsRep, ce: CondExpectation, tol=PREDICATE_TOL,
                                 cluster_tol=CLUSTER_TOL) -> PredicateReport:
    """Fixed space of the dynamics inside the subsystem space, cross-checked
    against containment of the fixed algebra in the subsystem."""
    from .algebras import fixed_algebra  # local import to avoid a cycle at module load

    decomp = gns.dynamics_spectrum(cluster_tol)
    fixed = decomp.fixed_subspace()
    p = ce.projector
    pairs = []
    for i in range(fixed.rank):
        v = fixed.basis[:, i]
        pairs.append((f"fixed vector {i}", float(np.linalg.norm(v - p @ v))))
    by_space = not pairs or max(r for _, r in pairs) <= tol

    fix_alg = fixed_algebra(gns.system.algebra, gns.system.dynamics)
    alg_pairs = [
        (f"fixed algebra basis {i}", ce.subsystem.algebra.membership_residual(x))
        for i, x in enumerate(fix_alg.basis)
    ]
    by_algebra = not alg_pairs or max(r for _, r in alg_pairs) <= tol
    if by_space != by_algebra:
        raise ConsistencyError(
            f"relative ergodicity criteria disagree: fixed-space containment {by_space}, "
            f"fixed-algebra containment {by_algebra}")
    return report_from_residuals(
        "system relatively ergodic", pairs + alg_pairs, tol,
        notes=[f"fixed algebra dimension {fix_alg.dim}"])


def product_relatively_ergodic(product: ProductGns, tol=PREDICATE_TOL,
                               cluster_tol=CLUSTER_TOL) -> PredicateReport:
    """Fixed space of the joining dynamics inside the shared subsystem space."""
    decomp = product.dynamics_spectrum(cluster_tol)
    fixed = decomp.fixed_subspace()
    r = product.shared_projector
    pairs = [
        (f"fixed vector {i}",
         float(np.linalg.norm(fixed.basis[:, i] - r @ fixed.basis[:, i])))
        for i in range(fixed.rank)
    ]
    return report_from_residuals("product relatively ergodic", pairs, tol)


# ---------------------------------------------------------------------------
# Characterizations: each one evaluates both sides of a known equivalence by
# independent routes and reports whether they agree.
# ---------------------------------------------------------------------------

def _spectral_mixing_limit(decomp, left_ops, vec):
    """sum_theta || L E_theta v ||^2 for each operator L."""
    return [
        float(sum(np.linalg.norm(op @ (proj @ vec)) ** 2 for proj in decomp.projectors))
        for op in left_ops
    ]


def characterization_reports(gns: GnsRep, ce: CondExpectation, product: ProductGns,
                             tol=PREDICATE_TOL, cluster_tol=CLUSTER_TOL, rng=None):
    """Machine checks of the ergodic-limit characterizations.

    (i)   centered mixing limits vanish for all pairs  <=>  relative weak mixing;
    (ii)  the single-element form decides relative weak mixing (tracial only);
    (iii) joining limits collapse to expected ones  <=>  product relative ergodicity;
    (iv)  factored mixing limits match plain ones  <=>  product relative ergodicity
          (tracial only);
    (v)   state limits match subsystem limits  <=>  system relative ergodicity.
    """
    rng = np.random.default_rng(3) if rng is None else rng
    alg = gns.system.algebra
    k = alg.dim
    tracial = gns.system.is_tracial
    decomp = gns.dynamics_spectrum(cluster_tol)
    p = ce.projector
    reports = []

    rwm = is_relatively_weakly_mixing(gns, ce, tol, cluster_tol)
    sys_erg = is_system_relatively_ergodic(gns, ce, tol, cluster_tol)
    prod_erg = product_relatively_ergodic(product, tol, cluster_tol)

    basis_vecs = np.column_stack([gns.embed(e) for e in alg.basis])
    pb = [p @ rep for rep in gns.basis_reps]
    pd = [gns.represent(ce(e, gns)) @ p for e in alg.basis]

    # (i) centered form: limit of lambda(|D(b alpha^n a) - D(b) D(alpha^n a)|^2).
    centered = []
    for bi in range(k):
        op = pb[bi] - pd[bi]
        for ai in range(k):
            vals = _spectral_mixing_limit(decomp, [op], basis_vecs[:, ai])
            centered.append((f"b=e{bi}, a=e{ai}", float(np.sqrt(vals[0]))))
    centered_zero = max(r for _, r in centered) <= tol
    rep_i = PredicateReport(
        "centered mixing limits decide weak mixing", centered_zero == rwm.value, tol,
        [Witness(f"centered limits vanish = {centered_zero}", max(r for _, r in centered)),
         Witness(f"relatively weakly mixing = {rwm.value}", rwm.worst_residual)],
    )
    reports.append(rep_i)

    # (ii) single-element (a with D(a) = 0 against its own adjoint) form.
    if tracial:
        kernel = ce.kernel_coords()
        samples = [c for c in kernel]
        for i in range(len(kernel)):
            for j in range(i + 1, len(kernel)):
                samples.append(kernel[i] + kernel[j])
                samples.append(kernel[i] + 1j * kernel[j])
        for _ in range(3):
            if len(kernel):
                mix = rng.standard_normal(len(kernel)) + 1j * rng.standard_normal(len(kernel))
                samples.append(mix @ kernel)
        single = []
        for si, c in enumerate(samples):
            a = alg.element(c)
            op = p @ gns.represent(dagger(a))
            val = _spectral_mixing_limit(decomp, [op], gns.embed(a))[0]
            single.append((f"kernel sample {si}", float(np.sqrt(val))))
        single_zero = not single or max(r for _, r in single) <= tol * 10
        reports.append(PredicateReport(
            "single-element mixing limits decide weak mixing", single_zero == rwm.value,
            tol, [Witness(f"single-element limits vanish = {single_zero}",
                          max((r for _, r in single), default=0.0)),
                  Witness(f"relatively weakly mixing = {rwm.value}", rwm.worst_residual)],
        ))

    # (iii) joining limits against expected joining limits, over all basis pairs
    # s = e_i (x) f_j and t = e_ii (x) f_jj, assembled as whole matrices.
    wdec = product.dynamics_spectrum(cluster_tol)
    q = wdec.fixed_projector()
    comm = product.mirror.commutant_algebra
    kp = comm.dim
    star_left = np.stack([alg.coefficients(dagger(e)) for e in alg.basis])
    star_right = np.stack([comm.coefficients(dagger(f)) for f in comm.basis])
    dt_right = np.stack(
        [comm.coefficients(product.mirror.mirrored_expectation(f)) for f in comm.basis])
    d_left = ce.coeff_map

    emb = product.space.embedding
    gam_s = emb                                             # column (i, j) = gamma(e_i (x) f_j)
    gam_es = emb @ np.kron(d_left, dt_right.T)
    gam_tstar = emb @ np.kron(star_left.T, star_right.T)
    gam_etstar = emb @ np.kron(d_left @ star_left.T, dt_right.T @ star_right.T)
    lhs = dagger(gam_tstar) @ q @ gam_s
    rhs = dagger(gam_etstar) @ q @ gam_es
    diff = np.abs(lhs - rhs)
    worst_t, worst_s = np.unravel_index(int(np.argmax(diff)), diff.shape)
    worst_iii = float(diff[worst_t, worst_s])
    limits_equal_iii = worst_iii <= tol
    reports.append(PredicateReport(
        "joining limits decide product ergodicity", limits_equal_iii == prod_erg.value, tol,
        [Witness(f"limits agree = {limits_equal_iii} "
                 f"(worst t index {worst_t}, s index {worst_s})", worst_iii),
         Witness(f"product relatively ergodic = {prod_erg.value}", prod_erg.worst_residual)],
    ))

    # (iv) factored mixing limits (tracial only).
    if tracial:
        pairs_iv = []
        for bi in range(k):
            for ai in range(k):
                v = basis_vecs[:, ai]
                lhs = _spectral_mixing_limit(decomp, [pb[bi]], v)[0]
                rhs = _spectral_mixing_limit(decomp, [pd[bi]], v)[0]
                pairs_iv.append((f"b=e{bi}, a=e{ai}", abs(lhs - rhs)))
        limits_equal_iv = max(r for _, r in pairs_iv) <= tol
        reports.append(PredicateReport(
            "factored mixing limits decide product ergodicity",
            limits_equal_iv == prod_erg.value, tol,
            [Witness(f"limits agree = {limits_equal_iv}", max(r for _, r in pairs_iv)),
             Witness(f"product relatively ergodic = {prod_erg.value}",
                     prod_erg.worst_residual)],
        ))

    # (v) state limits against subsystem limits.
    qu = decomp.fixed_projector()
    pairs_v = []
    for bi in range(k):
        bstar = gns.embed(dagger(alg.basis[bi]))
        for ai in range(k):
            v = basis_vecs[:, ai]
            lhs = np.vdot(bstar, qu @ v)
            rhs = np.vdot(p @ bstar, qu @ (p @ v))
            pairs_v.append((f"b=e{bi}, a=e{ai}", abs(lhs - rhs)))
    limits_equal_v = max(r for _, r in pairs_v) <= tol
    reports.append(PredicateReport(
        "state limits decide system ergodicity", limits_equal_v == sys_erg.value, tol,
        [Witness(f"limits agree = {limits_equal_v}", max(r for _, r in pairs_v)),
         Witness(f"system relatively ergodic = {sys_erg.value}", sys_erg.worst_residual)],
    ))
    return reports


def main_theorem_report(gns: GnsRep, ce: CondExpectation, product: ProductGns,
                        tol=PREDICATE_TOL, cluster_tol=CLUSTER_TOL) -> PredicateReport:
    """Relative weak mixing iff relative ergodicity of the product (tracial states).

    Also asserts the one-way implication from weak mixing to relative
    ergodicity of the system itself.
    """
    if not gns.system.is_tracial:
        raise TraceRequiredError("the equivalence is only asserted for tracial states")
    rwm = is_relatively_weakly_mixing(gns, ce, tol, cluster_tol)
    prod = product_relatively_ergodic(product, tol, cluster_tol)
    sys_erg = is_system_relatively_ergodic(gns, ce, tol, cluster_tol)
    ok = (rwm.value == prod.value) and (not rwm.value or sys_erg.value)
    witnesses = [
        Witness(f"relatively weakly mixing = {rwm.value}", rwm.worst_residual),
        Witness(f"product relatively ergodic = {prod.value}", prod.worst_residual),
        Witness(f"system relatively ergodic = {sys_erg.value}", sys_erg.worst_residual),
    ]
    if not ok:
        witnesses = [Witness("predicate mismatch", 1.0)] + witnesses
    return PredicateReport("weak mixing equivalent to product ergodicity", ok, tol,
                           witnesses)
