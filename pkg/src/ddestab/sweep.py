"""Two-parameter stability-region cartography.

Evaluates the criterion engine over a rectangular grid in two of the
tunable parameters (constant perturbation coefficients ``a1``/``b1`` or
constant lags ``delta``/``tau``), extracts the certified-region boundary
as a marching-squares contour of the margin field, and optionally
overlays simulated decay rates near the boundary as a falsification
check.

Output is plot-ready CSV; no plotting is built in.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .criteria import CRITERIA_ORDER, check_all
from .eqspec import MIXED, EquationSpec
from .solver import InitialValueProblem, default_step, estimate_decay, integrate

__all__ = ["SweepAxis", "SweepPlan", "RegionSweep", "run_sweep",
           "extract_boundary", "sweep_workers"]

SWEEP_PARAMS = ("a1", "b1", "delta", "tau")
SIM_SEED = 0  # fixed seed for the falsification overlay's interior points
SIM_INTERIOR_POINTS = 100


def sweep_workers():
    """Worker cap for grid evaluation, from DDESTAB_THREADS (default 1)."""
    raw = os.environ.get("DDESTAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class SweepAxis:
    param: str
    lo: float
    hi: float
    count: int

    def __post_init__(self):
        if self.param not in SWEEP_PARAMS:
            raise ValueError(f"axis parameter must be one of {SWEEP_PARAMS}, "
                             f"got {self.param!r}")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError("axis range must be finite")
        if self.count < 2:
            raise ValueError("axis grid count must be >= 2")
        if self.param in ("delta", "tau") and min(self.lo, self.hi) < 0:
            raise ValueError("lag axes must be nonnegative")

    def values(self):
        return np.linspace(self.lo, self.hi, self.count)

    @classmethod
    def from_dict(cls, d):
        return cls(param=d["param"], lo=float(d["min"]), hi=float(d["max"]),
                   count=int(d.get("count", 201)))

    def to_dict(self):
        return {"param": self.param, "min": self.lo, "max": self.hi,
                "count": self.count}


@dataclass(frozen=True)
class SweepPlan:
    spec: EquationSpec
    axis1: SweepAxis
    axis2: SweepAxis
    criteria: tuple | None = None
    simulate: bool = False

    def __post_init__(self):
        if self.axis1.param == self.axis2.param:
            raise ValueError("axis parameters must be distinct")
        for ax in (self.axis1, self.axis2):
            if ax.param in ("a1", "b1") and self.spec.form != MIXED:
                raise ValueError(f"axis {ax.param} requires the mixed form")
        if self.criteria is not None:
            unknown = set(self.criteria) - set(CRITERIA_ORDER)
            if unknown:
                raise ValueError(f"unknown criteria: {sorted(unknown)}")

    @classmethod
    def from_dict(cls, d):
        crit = d.get("criteria")
        return cls(spec=EquationSpec.from_dict(d["spec"]),
                   axis1=SweepAxis.from_dict(d["axis1"]),
                   axis2=SweepAxis.from_dict(d["axis2"]),
                   criteria=None if crit is None else tuple(crit),
                   simulate=bool(d.get("simulate", False)))

    def to_dict(self):
        return {"spec": self.spec.to_dict(),
                "axis1": self.axis1.to_dict(), "axis2": self.axis2.to_dict(),
                "criteria": None if self.criteria is None else list(self.criteria),
                "simulate": self.simulate}


def _apply_param(spec, param, value):
    if param in ("a1", "b1"):
        return spec.with_params(**{param: float(value)})
    key = "g" if param == "delta" else "h"
    return spec.with_params(**{key: float(value)})


@dataclass
class RegionSweep:
    """Grid of per-point summaries plus per-criterion boundary polylines."""

    plan: SweepPlan
    values1: np.ndarray
    values2: np.ndarray
    criteria: list
    satisfied: dict           # criterion -> bool grid [i, j]
    margin: dict              # criterion -> float grid (NaN where undefined)
    best_criterion: np.ndarray  # object grid (None or criterion id)
    best_margin: np.ndarray   # float grid, max region margin over criteria
    lambda_hat: np.ndarray    # float grid, NaN where not simulated
    errors: list = field(default_factory=list)
    boundaries: dict = field(default_factory=dict)

    def certified(self, cid=None):
        """Boolean grid: certified by the given criterion (or by any)."""
        if cid is not None:
            return self.satisfied[cid]
        out = np.zeros_like(self.best_margin, dtype=bool)
        for grid in self.satisfied.values():
            out |= grid
        return out

    def write_grid_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            ax1, ax2 = self.plan.axis1.param, self.plan.axis2.param
            w.writerow([ax1, ax2, "best_criterion", "margin", "lambda_hat"])
            for i, v1 in enumerate(self.values1):
                for j, v2 in enumerate(self.values2):
                    m = self.best_margin[i, j]
                    lam = self.lambda_hat[i, j]
                    w.writerow([repr(float(v1)), repr(float(v2)),
                                self.best_criterion[i, j] or "",
                                "" if math.isnan(m) else repr(float(m)),
                                "" if math.isnan(lam) else repr(float(lam))])

    def write_boundary_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["criterion", "segment_id", "x", "y"])
            for cid in self.criteria:
                for seg_id, line in enumerate(self.boundaries.get(cid, [])):
                    for x, y in line:
                        w.writerow([cid, seg_id, repr(float(x)), repr(float(y))])


def _evaluate_row(plan, i, v1, values2, criteria):
    spec1 = _apply_param(plan.spec, plan.axis1.param, v1)
    row = []
    for j, v2 in enumerate(values2):
        spec_ij = _apply_param(spec1, plan.axis2.param, v2)
        try:
            res = check_all(spec_ij, criteria=criteria)
            row.append((i, j, res, None))
        except Exception as exc:  # recorded in place, never aborts the sweep
            row.append((i, j, None, f"{type(exc).__name__}: {exc}"))
    return row


def run_sweep(plan):
    """Evaluate the criterion engine over the plan's grid.

    Row-major deterministic output regardless of worker count (workers are
    capped by the DDESTAB_THREADS environment variable).  When
    ``plan.simulate`` is set, decay rates are estimated at every cell that
    straddles a region boundary plus a fixed-seed sample of certified
    interior points.
    """
    criteria = list(plan.criteria) if plan.criteria is not None else None
    cids = [c for c in CRITERIA_ORDER if criteria is None or c in criteria]
    v1 = plan.axis1.values()
    v2 = plan.axis2.values()
    n1, n2 = len(v1), len(v2)

    satisfied = {c: np.zeros((n1, n2), dtype=bool) for c in cids}
    margin = {c: np.full((n1, n2), np.nan) for c in cids}
    best_criterion = np.full((n1, n2), None, dtype=object)
    best_margin = np.full((n1, n2), np.nan)
    lambda_hat = np.full((n1, n2), np.nan)
    errors = []

    workers = sweep_workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(
                lambda iv: _evaluate_row(plan, iv[0], iv[1], v2, criteria),
                enumerate(v1)))
    else:
        rows = [_evaluate_row(plan, i, x, v2, criteria)
                for i, x in enumerate(v1)]

    for row in rows:
        for i, j, res, err in row:
            if err is not None:
                errors.append((i, j, err))
                continue
            field_rm = -math.inf       # max region margin over all criteria
            best_cid, best_cid_rm = None, -math.inf
            for cert in res:
                cid = cert.criterion_id
                satisfied[cid][i, j] = cert.satisfied
                rm = cert.region_margin()
                if rm is None:
                    continue
                rm = min(rm, 1e30)     # keep the field finite for contouring
                margin[cid][i, j] = rm
                field_rm = max(field_rm, rm)
                if cert.satisfied and rm > best_cid_rm:
                    best_cid, best_cid_rm = cid, rm
            if field_rm > -math.inf:
                best_margin[i, j] = field_rm
            best_criterion[i, j] = best_cid

    sweep = RegionSweep(plan=plan, values1=v1, values2=v2, criteria=cids,
                        satisfied=satisfied, margin=margin,
                        best_criterion=best_criterion, best_margin=best_margin,
                        lambda_hat=lambda_hat, errors=errors)
    for cid in cids:
        sweep.boundaries[cid] = extract_boundary(v1, v2, margin[cid])
    if plan.simulate:
        _simulate_overlay(sweep)
    return sweep


def _simulate_overlay(sweep):
    plan = sweep.plan
    certified = sweep.certified()
    n1, n2 = certified.shape
    targets = set()
    # cells straddling any region boundary
    for i in range(n1):
        for j in range(n2):
            for di, dj in ((1, 0), (0, 1)):
                i2, j2 = i + di, j + dj
                if i2 < n1 and j2 < n2 and certified[i, j] != certified[i2, j2]:
                    targets.add((i, j))
                    targets.add((i2, j2))
    rng = np.random.default_rng(SIM_SEED)
    interior = np.argwhere(certified)
    if len(interior):
        picks = rng.choice(len(interior), size=min(SIM_INTERIOR_POINTS,
                                                   len(interior)), replace=False)
        for k in picks:
            targets.add(tuple(interior[k]))
    for i, j in sorted(targets):
        spec_ij = _apply_param(
            _apply_param(plan.spec, plan.axis1.param, sweep.values1[i]),
            plan.axis2.param, sweep.values2[j])
        try:
            est = _simulate_decay(spec_ij)
            sweep.lambda_hat[i, j] = est.lambda_hat
        except Exception as exc:
            sweep.errors.append((int(i), int(j), f"simulation: {exc}"))


def _simulate_decay(spec, horizon=160.0, max_horizon=1280.0):
    ivp = InitialValueProblem(spec, x0=1.0, x0p=0.0, horizon=horizon)
    step = default_step(spec)
    est = estimate_decay(integrate(ivp, step=step))
    while est.verdict == "inconclusive" and horizon < max_horizon:
        horizon *= 2.0
        ivp = InitialValueProblem(spec, x0=1.0, x0p=0.0, horizon=horizon)
        est = estimate_decay(integrate(ivp, step=step))
    return est


# ---------------------------------------------------------------------------
# Marching squares
# ---------------------------------------------------------------------------

def _interp(xa, ma, xb, mb):
    t = ma / (ma - mb)
    return xa + t * (xb - xa)


def extract_boundary(values1, values2, margin_grid):
    """Zero-level contour of the margin field, as chained polylines.

    Standard marching squares with linear interpolation on cell edges;
    saddle cells are disambiguated by the cell-center average.  Cells with
    undefined (NaN) corners are skipped.  An empty region (no sign change)
    yields an empty list, which is a valid boundary.
    """
    v1 = np.asarray(values1, dtype=float)
    v2 = np.asarray(values2, dtype=float)
    m = np.asarray(margin_grid, dtype=float)
    n1, n2 = m.shape
    if (n1, n2) != (len(v1), len(v2)):
        raise ValueError("margin grid does not match axis lengths")
    segments = []
    for i in range(n1 - 1):
        for j in range(n2 - 1):
            corners = (m[i, j], m[i + 1, j], m[i + 1, j + 1], m[i, j + 1])
            if any(math.isnan(c) for c in corners):
                continue
            ma_, mb_, mc_, md_ = corners
            idx = ((ma_ > 0) | ((mb_ > 0) << 1) | ((mc_ > 0) << 2)
                   | ((md_ > 0) << 3))
            if idx in (0, 15):
                continue
            x0, x1 = v1[i], v1[i + 1]
            y0, y1 = v2[j], v2[j + 1]
            # edge midpoints by linear interpolation (S, E, N, W)
            pts = {}
            if (ma_ > 0) != (mb_ > 0):
                pts["S"] = (_interp(x0, ma_, x1, mb_), y0)
            if (mb_ > 0) != (mc_ > 0):
                pts["E"] = (x1, _interp(y0, mb_, y1, mc_))
            if (md_ > 0) != (mc_ > 0):
                pts["N"] = (_interp(x0, md_, x1, mc_), y1)
            if (ma_ > 0) != (md_ > 0):
                pts["W"] = (x0, _interp(y0, ma_, y1, md_))
            links = _MS_TABLE[idx]
            if idx in (5, 10):
                center_pos = (ma_ + mb_ + mc_ + md_) / 4.0 > 0
                links = _MS_SADDLE[(idx, center_pos)]
            for e1, e2 in links:
                segments.append((pts[e1], pts[e2]))
    return _chain_segments(segments)


# corner bits: a=(i,j) -> 1, b=(i+1,j) -> 2, c=(i+1,j+1) -> 4, d=(i,j+1) -> 8
_MS_TABLE = {
    1: [("S", "W")], 2: [("S", "E")], 3: [("E", "W")], 4: [("N", "E")],
    6: [("S", "N")], 7: [("N", "W")], 8: [("N", "W")], 9: [("S", "N")],
    11: [("N", "E")], 12: [("E", "W")], 13: [("S", "E")], 14: [("S", "W")],
    5: None, 10: None,
}
_MS_SADDLE = {
    (5, True): [("S", "E"), ("N", "W")],
    (5, False): [("S", "W"), ("N", "E")],
    (10, True): [("S", "W"), ("N", "E")],
    (10, False): [("S", "E"), ("N", "W")],
}


def _key(pt):
    return (round(pt[0], 12), round(pt[1], 12))


def _chain_segments(segments):
    """Link matching segment endpoints into polylines (deterministic order)."""
    if not segments:
        return []
    adjacency = {}
    for si, (p, q) in enumerate(segments):
        adjacency.setdefault(_key(p), []).append((si, 0))
        adjacency.setdefault(_key(q), []).append((si, 1))
    used = [False] * len(segments)
    polylines = []
    for si in range(len(segments)):
        if used[si]:
            continue
        used[si] = True
        p, q = segments[si]
        line = [p, q]
        # extend forward from q, then backward from p
        for end in (1, 0):
            while True:
                tip = line[-1] if end == 1 else line[0]
                candidates = [(sj, side) for sj, side in
                              adjacency.get(_key(tip), []) if not used[sj]]
                if not candidates:
                    break
                sj, side = candidates[0]
                used[sj] = True
                nxt = segments[sj][1 - side]
                if end == 1:
                    line.append(nxt)
                else:
                    line.insert(0, nxt)
        polylines.append(line)
    return polylines
