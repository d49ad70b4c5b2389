"""Shared report types: norm reports and stability certificates.

A :class:`Certificate` records the outcome of one criterion check: whether
the criterion applied, whether its strict inequality held, the two sides of
the inequality, the margin, the norm quantities that went in, and the chain
of prerequisite certificates (positivity of a comparison kernel, gate
conditions, ...).

Verdict semantics
-----------------
``satisfied`` requires ``applicable`` and the *strict* inequality
``lhs < rhs``.  Boundary equality is never certified; it yields
``satisfied = False`` with margin 0.  A criterion whose right-hand side is
unbounded (all delay terms vanish) reports ``satisfied = True`` with
``margin_unbounded = True`` and no numeric rhs/margin, so JSON output never
contains non-finite floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .rational import as_float

__all__ = ["EXACT", "SAMPLED", "NormReport", "Certificate"]

EXACT = "exact"
SAMPLED = "sampled"


@dataclass(frozen=True)
class NormReport:
    """One evaluated norm/bound quantity, with its provenance.

    ``exactness`` is ``"exact"`` for constant or declared values and
    ``"sampled"`` for grid suprema, in which case ``window`` and
    ``grid_points`` record the sampling resolution.
    """

    quantity: str
    value: float
    exactness: str = EXACT
    window: tuple[float, float] | None = None
    grid_points: int | None = None

    def __post_init__(self):
        if self.exactness not in (EXACT, SAMPLED):
            raise ValueError(f"bad exactness {self.exactness!r}")
        if self.exactness == SAMPLED and self.window is None:
            raise ValueError("sampled norm reports must carry their window")

    def to_dict(self):
        d = {"quantity": self.quantity, "value": self.value,
             "exactness": self.exactness}
        if self.exactness == SAMPLED:
            d["window"] = list(self.window)
            d["grid_points"] = self.grid_points
        return d


@dataclass
class Certificate:
    criterion_id: str
    applicable: bool
    satisfied: bool
    lhs: float | None = None
    rhs: float | None = None
    margin: float | None = None
    margin_unbounded: bool = False
    inputs: list = field(default_factory=list)
    prerequisites: list = field(default_factory=list)
    exactness: str = EXACT
    narrative: str = ""

    def __post_init__(self):
        if self.satisfied and not self.applicable:
            raise ValueError("satisfied certificate must be applicable")

    @property
    def rel_margin(self):
        """Dimensionless margin (rhs - lhs)/rhs for cross-criterion ranking."""
        if self.margin_unbounded:
            return math.inf
        if self.margin is None or self.rhs is None or self.rhs <= 0:
            return None
        return self.margin / self.rhs

    def region_margin(self):
        """Signed field whose zero level is the certified-region boundary.

        Takes the minimum of the main margin and all prerequisite margins,
        so gate conditions (e.g. the 1/e integral test) clip the region the
        way the verdict does.  Returns None when no numeric margin exists.
        """
        if self.margin_unbounded:
            return math.inf
        vals = []
        if self.margin is not None:
            vals.append(self.margin if self.rhs is None or self.rhs <= 0
                        else self.margin / self.rhs)
        for p in self.prerequisites:
            pm = p.region_margin()
            if pm is not None and not math.isinf(pm):
                vals.append(pm)
        if not vals:
            return None
        return min(vals)

    def to_dict(self):
        return {
            "criterion": self.criterion_id,
            "applicable": self.applicable,
            "satisfied": self.satisfied,
            "lhs": as_float(self.lhs),
            "rhs": as_float(self.rhs),
            "margin": as_float(self.margin),
            "margin_unbounded": self.margin_unbounded,
            "exactness": self.exactness,
            "inputs": [r.to_dict() for r in self.inputs],
            "prerequisites": [p.to_dict() for p in self.prerequisites],
            "narrative": self.narrative,
        }


def combined_exactness(*flags):
    """EXACT only when every contributing flag is EXACT."""
    return EXACT if all(f == EXACT for f in flags) else SAMPLED
