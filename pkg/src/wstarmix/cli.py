"""Command-line entry point.

Subcommands: check-system (validation plus invariant batteries),
check-theorem (characterizations and the main equivalence, tracial only),
random-suite (seeded batch), freegroup-demo (the exact symbolic example).

Exit codes: 0 all checks pass, 1 an identity or biconditional violated,
2 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .config import load_config
from .errors import ConsistencyError, InputError
from .freegroup import (
    GroupAlgebraElement,
    ShiftPermAutomorphism,
    canonical_trace,
    commutator_norm,
    finite_orbit_part,
    perm_symbol,
    relative_mixing_term,
    shift_symbol,
    vanishing_horizon,
    word,
    word_inv,
    word_mul,
    word_str,
)
from .suite import Tolerances, random_suite, run_suite


def _dump_json(obj):
    return json.dumps(obj, sort_keys=True, indent=2)


def _tolerances(args) -> Tolerances:
    return Tolerances(tol=args.tol, predicate_tol=args.predicate_tol,
                      horizon=args.max_n)


def _print_suite(report, args):
    if args.format == "json":
        print(_dump_json(report.to_dict(include_timings=args.timings)))
        return
    for inst in report.instances:
        print(f"[{inst.verdict}] {inst.label}  ({inst.seconds:.2f}s)")
        if inst.error is not None:
            print(f"    error: {inst.error}")
        for check in inst.checks:
            mark = "ok " if check.value else "FAIL"
            line = f"    {mark} {check.name} (worst residual {check.worst_residual:.3e})"
            print(line)
            if not check.value:
                for w in check.witnesses[:4]:
                    print(f"         witness: {w.label} -> {w.residual:.3e}")
            for note in check.notes:
                print(f"         note: {note}")
    print(f"verdict: {report.verdict}")


def _cmd_check(args, theorem: bool) -> int:
    config = load_config(args.config)
    report = run_suite([config], tols=_tolerances(args), theorem=theorem)
    _print_suite(report, args)
    return report.exit_code()


def _cmd_random_suite(args) -> int:
    report = random_suite(args.seed, args.count, dims=tuple(args.dims),
                          tols=_tolerances(args))
    _print_suite(report, args)
    return report.exit_code()


def _fmt_exact(value):
    if isinstance(value, Fraction):
        return str(value) if value.denominator != 1 else str(value.numerator)
    return repr(value)


def _freegroup_demo(args):
    """The free-group example: a nontrivial noncommutative relatively mixing system."""
    m = args.perm_size
    cycle = list(range(1, m)) + [0]
    aut = ShiftPermAutomorphism(cycle)

    a_letter = word((perm_symbol(0), 1))
    b_letter = word((perm_symbol(1 % m), 1))
    s = [word((shift_symbol(k), 1)) for k in range(6)]

    expectation_rows = []
    samples = [
        word(),
        a_letter,
        word_mul(a_letter, b_letter),
        s[0],
        word_mul(a_letter, s[0]),
        word_mul(s[5], word_inv(s[0])),
    ]
    for w in samples:
        x = GroupAlgebraElement.from_word(w)
        kept = finite_orbit_part(x)
        expectation_rows.append({
            "word": word_str(w),
            "in_finite_orbit_subgroup": bool(kept.support),
        })

    mixing_rows = []
    a = GroupAlgebraElement.from_word(s[0])
    b = GroupAlgebraElement.from_word(word_inv(s[5]))
    for n in range(0, args.max_n + 1):
        term = relative_mixing_term(aut, a, b, n)
        mixing_rows.append({"n": n, "term": _fmt_exact(term)})
    horizon = vanishing_horizon(aut, a, b)

    horizon_rows = []
    for bw, label in [(word_inv(s[5]), "s5^-1"), (a_letter, "a"), (word(), "e")]:
        h = vanishing_horizon(aut, a, GroupAlgebraElement.from_word(bw))
        horizon_rows.append({"a": "s0", "b": label, "horizon": h})

    comm_rows = []
    for g, h, label in [
        (s[0], s[5], "s0 vs s5"),
        (a_letter, s[5], "a vs s5"),
        (a_letter, b_letter, "a vs b"),
        (a_letter, a_letter, "a vs a"),
    ]:
        norms = [commutator_norm(aut, g, h, n) for n in range(1, 4)]
        comm_rows.append({"pair": label, "norms_n_1_to_3": norms})

    x = GroupAlgebraElement.from_word(a_letter)
    non_ergodic = bool(finite_orbit_part(x).support) and canonical_trace(x) == 0

    out = {
        "permuted_set_size": m,
        "expectation_formula": expectation_rows,
        "mixing_terms_a_s0_b_s5inv": mixing_rows,
        "vanishing_horizon_a_s0_b_s5inv": horizon,
        "horizons": horizon_rows,
        "commutator_norms": comm_rows,
        "subsystem_nontrivial_and_fixed_by_expectation": non_ergodic,
    }
    if args.format == "json":
        print(_dump_json(out))
        return 0
    print(f"free group on a permuted set of {m} letters plus shifted letters s_k")
    print("\nconditional expectation onto finite-orbit words:")
    for row in expectation_rows:
        kept = "kept" if row["in_finite_orbit_subgroup"] else "killed"
        print(f"  {row['word']:>12}  -> {kept}")
    print("\nmixing terms for a = s0 (expectation zero), b = s5^-1:")
    for row in mixing_rows:
        print(f"  n = {row['n']:2d}: {row['term']}")
    print(f"  vanishing horizon: {horizon} (exact zero beyond it)")
    print("\ncertified horizons:")
    for row in horizon_rows:
        print(f"  a = {row['a']}, b = {row['b']:>6}: horizon {row['horizon']}")
    print("\ncommutator norms (nonzero = not asymptotically abelian):")
    for row in comm_rows:
        print(f"  {row['pair']:>9}: {row['norms_n_1_to_3']}")
    print("\nthe subsystem strictly contains the scalars and fixes non-scalar "
          "elements, so the system is not ergodic, yet every expectation-zero "
          "element mixes away exactly.")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wstarmix",
        description="verify mixing/ergodicity identities on finite-dimensional "
                    "W*-dynamical systems")
    parser.add_argument("--tol", type=float, default=1e-9,
                        help="linear-algebra tolerance (default 1e-9)")
    parser.add_argument("--predicate-tol", type=float, default=1e-7,
                        help="predicate tolerance (default 1e-7)")
    parser.add_argument("--max-n", type=int, default=512,
                        help="empirical averaging horizon (default 512)")
    parser.add_argument("--format", choices=("json", "text"), default="text")
    parser.add_argument("--timings", action="store_true",
                        help="include wall-clock timings in JSON reports")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sys = sub.add_parser("check-system", help="validate a config and run invariant batteries")
    p_sys.add_argument("config")
    p_thm = sub.add_parser("check-theorem",
                           help="run characterization and main-theorem checks (tracial)")
    p_thm.add_argument("config")
    p_rand = sub.add_parser("random-suite", help="run a seeded batch of random systems")
    p_rand.add_argument("--seed", type=int, default=0)
    p_rand.add_argument("--count", type=int, default=5)
    p_rand.add_argument("--dims", type=int, nargs="+", default=[2, 3, 4])
    p_free = sub.add_parser("freegroup-demo", help="exact free-group example")
    p_free.add_argument("--perm-size", type=int, default=2)
    p_free.set_defaults(max_n_demo=12)

    args = parser.parse_args(argv)
    if args.command == "freegroup-demo" and args.max_n == 512:
        args.max_n = 8  # sensible table length for the demo

    try:
        if args.command == "check-system":
            return _cmd_check(args, theorem=False)
        if args.command == "check-theorem":
            return _cmd_check(args, theorem=True)
        if args.command == "random-suite":
            return _cmd_random_suite(args)
        if args.command == "freegroup-demo":
            return _freegroup_demo(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except ConsistencyError as exc:
        print(f"internal identity violated: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
