"""Named pass/fail reports carrying the residuals that decided them."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Witness:
    """One (inputs, residual) pair recorded while deciding a check."""

    label: str
    residual: float

    def to_dict(self):
        return {"label": self.label, "residual": self.residual}


@dataclass
class PredicateReport:
    """Outcome of one named check.

    A failing report always keeps at least one witness whose residual
    exceeds the tolerance, so a FAIL can be traced to concrete inputs.
    """

    name: str
    value: bool
    tolerance: float
    witnesses: list[Witness] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def worst_residual(self) -> float:
        return max((w.residual for w in self.witnesses), default=0.0)

    def to_dict(self):
        return {
            "name": self.name,
            "value": self.value,
            "tolerance": self.tolerance,
            "worst_residual": self.worst_residual,
            "witnesses": [w.to_dict() for w in self.witnesses],
            "notes": list(self.notes),
        }


def report_from_residuals(name, pairs, tol, keep=8, notes=()):
    """Aggregate (label, residual) pairs into a report; any residual > tol fails it.

    Only the `keep` worst witnesses are stored to keep reports readable.
    """
    ranked = sorted(pairs, key=lambda lr: -lr[1])
    value = not ranked or ranked[0][1] <= tol
    witnesses = [Witness(label, float(res)) for label, res in ranked[:keep]]
    return PredicateReport(name, value, float(tol), witnesses, list(notes))


def biconditional_report(name, left_label, left, right_label, right, tol, notes=()):
    """Report that two independently computed booleans agree."""
    witnesses = [
        Witness(f"{left_label} = {left}", 0.0 if left == right else 1.0),
        Witness(f"{right_label} = {right}", 0.0 if left == right else 1.0),
    ]
    return PredicateReport(name, left == right, float(tol), witnesses, list(notes))
