"""Build pipelines and the randomized verification suite.

The suite runs, per instance: state/dynamics validation (at build), the GNS
and conditional-expectation invariants, the mirror identities, the joining
battery, the basic-construction battery (tracial instances), the
characterization biconditionals, the main-theorem equivalence and the
fixed-space/fixed-algebra ergodicity agreement.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .basic_construction import basic_construction_reports, build_basic_construction
from .config import SystemConfig, build_system, random_system
from .ergodic import (
    PREDICATE_TOL,
    characterization_reports,
    is_system_relatively_ergodic,
    main_theorem_report,
)
from .errors import ConsistencyError, InputError
from .gns import (
    build_gns,
    cond_expectation,
    condexp_invariant_reports,
    gns_invariant_reports,
    mirror_invariant_reports,
    mirror_system,
)
from .joining import build_product_gns, joining_invariant_reports
from .linalg import CLUSTER_TOL, DEFAULT_TOL, RESIDUAL_TOL
from .reporting import PredicateReport


@dataclass
class Tolerances:
    tol: float = DEFAULT_TOL
    residual_tol: float = RESIDUAL_TOL
    predicate_tol: float = PREDICATE_TOL
    cluster_tol: float = CLUSTER_TOL
    horizon: int = 512

    def to_dict(self):
        return {
            "tol": self.tol,
            "residual_tol": self.residual_tol,
            "predicate_tol": self.predicate_tol,
            "cluster_tol": self.cluster_tol,
            "horizon": self.horizon,
        }


@dataclass
class BuiltSystem:
    """Everything derived from one validated (system, subsystem) pair."""

    system: object
    subsystem: object
    gns: object
    condexp: object
    mirror: object
    product: object


def build_all(system, subsystem, tol=DEFAULT_TOL) -> BuiltSystem:
    gns = build_gns(system, tol)
    ce = cond_expectation(gns, subsystem, tol)
    mirror = mirror_system(gns, ce, tol)
    product = build_product_gns(gns, mirror, ce, tol)
    return BuiltSystem(system, subsystem, gns, ce, mirror, product)


def instance_reports(built: BuiltSystem, tols: Tolerances, seed=0,
                     theorem=True) -> list[PredicateReport]:
    rng = np.random.default_rng(seed)
    out = []
    out += gns_invariant_reports(built.gns, tols.tol)
    out += condexp_invariant_reports(built.gns, built.condexp, tols.residual_tol, rng=rng)
    out += mirror_invariant_reports(built.gns, built.mirror, built.condexp,
                                    tols.residual_tol, rng=rng)
    out += joining_invariant_reports(built.product, tols.predicate_tol, rng=rng)
    if built.system.is_tracial:
        bc = build_basic_construction(built.gns, built.condexp, tols.tol)
        out += basic_construction_reports(bc, tols.residual_tol, rng=rng)
    # The ergodicity predicate itself is an instance property, not a check; what
    # must hold is the agreement of its two criteria (it raises on disagreement).
    erg = is_system_relatively_ergodic(built.gns, built.condexp,
                                       tols.predicate_tol, tols.cluster_tol)
    out.append(PredicateReport(
        "relative-ergodicity criteria agree", True, tols.predicate_tol,
        notes=[f"system relatively ergodic = {erg.value}"] + erg.notes))
    if theorem:
        out += characterization_reports(built.gns, built.condexp, built.product,
                                        tols.predicate_tol, tols.cluster_tol, rng=rng)
        if built.system.is_tracial:
            out.append(main_theorem_report(built.gns, built.condexp, built.product,
                                           tols.predicate_tol, tols.cluster_tol))
    return out


@dataclass
class InstanceReport:
    label: str
    config: dict
    checks: list = field(default_factory=list)
    error: str | None = None
    seconds: float = 0.0

    @property
    def verdict(self) -> str:
        if self.error is not None:
            return "ERROR"
        return "PASS" if all(c.value for c in self.checks) else "FAIL"

    def to_dict(self, include_timings=False):
        out = {
            "label": self.label,
            "config": self.config,
            "checks": [c.to_dict() for c in self.checks],
            "verdict": self.verdict,
        }
        if self.error is not None:
            out["error"] = self.error
        if include_timings:
            out["seconds"] = self.seconds
        return out


@dataclass
class SuiteReport:
    instances: list
    tolerances: Tolerances
    seed: int | None = None

    @property
    def verdict(self) -> str:
        if any(i.verdict == "ERROR" for i in self.instances):
            return "ERROR"
        return "PASS" if all(i.verdict == "PASS" for i in self.instances) else "FAIL"

    def to_dict(self, include_timings=False):
        out = {
            "schema_version": 1,
            "tool": {"name": "wstarmix", "version": __version__},
            "tolerances": self.tolerances.to_dict(),
            "instances": [i.to_dict(include_timings) for i in self.instances],
            "verdict": self.verdict,
        }
        if self.seed is not None:
            out["seed"] = self.seed
        return out

    def exit_code(self) -> int:
        return 0 if self.verdict == "PASS" else 1


def run_instance(config: SystemConfig, tols: Tolerances, seed=0,
                 theorem=True) -> InstanceReport:
    report = InstanceReport(config.label or "unlabeled", config.to_dict())
    start = time.perf_counter()
    try:
        system, subsystem = build_system(config, tols.tol)
        built = build_all(system, subsystem, tols.tol)
        report.checks = instance_reports(built, tols, seed=seed, theorem=theorem)
    except ConsistencyError as exc:
        report.error = f"internal identity violated: {exc}"
    report.seconds = time.perf_counter() - start
    return report


def run_suite(configs, tols: Tolerances | None = None, seed=None,
              theorem=True) -> SuiteReport:
    """Run every check on each config; input errors abort, identity failures are recorded."""
    tols = tols or Tolerances()
    instances = []
    for i, config in enumerate(configs):
        instances.append(run_instance(config, tols, seed=i, theorem=theorem))
    return SuiteReport(instances, tols, seed=seed)


def random_suite(seed, count, dims=(2, 3, 4), tols: Tolerances | None = None) -> SuiteReport:
    """Seeded batch of random tracial systems, run through the full pipeline."""
    rng = np.random.default_rng(seed)
    child_seeds = rng.integers(0, 2**63 - 1, size=count)
    configs = []
    for i, child in enumerate(child_seeds):
        config = random_system(int(child), dims=dims)
        config.label = f"seed:{seed}/{i}"
        configs.append(config)
    report = run_suite(configs, tols=tols, theorem=True)
    report.seed = seed
    return report
