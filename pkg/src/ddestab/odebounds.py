"""Certified integral bounds for the undelayed comparison equation.

For ``y'' + a y' + b y = 0`` with constants ``a, b > 0`` the fundamental
function ``Y(t, s)`` satisfies closed-form bounds

    Y  >= sup_t int |Y(t, s)| ds,     Yp >= sup_t int |Y'_t(t, s)| ds,

split by discriminant (overdamped / underdamped / critically damped).
For time-varying coefficients with a positive fundamental function
(``inf a > 0``, ``inf b > 0``, ``(inf a)^2 >= 4 sup b``) the kernel is
positive and ``int Y(t,s) b(s) ds <= 1`` gives ``Y <= 1/inf b``; no
``Yp`` bound is available on that route.

``quadrature_Y`` provides the independent numerical cross-check used by
the test suite: direct high-accuracy integration of the kernel's absolute
integrals, which must never exceed the closed-form bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp

from .certificates import EXACT, SAMPLED, Certificate
from .eqspec import NormContext
from .rational import exact_sqrt

__all__ = [
    "OdeBounds",
    "BoundsUnavailable",
    "lemma2_bounds",
    "lemma7_bounds",
    "condition_38a",
    "quadrature_Y",
    "CRITICAL_REL_TOL",
]

OVERDAMPED = "overdamped"
UNDERDAMPED = "underdamped"
CRITICAL = "critical"
LEMMA7 = "lemma7"

# Discriminant ties a^2 = 4b are detected with this relative tolerance; the
# critical-case formulas (the common limit of both branches) apply inside
# the band, keeping Yp bounded where the overdamped formula blows up.
CRITICAL_REL_TOL = 1e-12


class BoundsUnavailable(ValueError):
    """No certified comparison bounds exist for the requested inputs."""


@dataclass(frozen=True)
class OdeBounds:
    """Certified bounds on the comparison kernel's absolute integrals.

    ``Y``/``Yp`` may hold :class:`fractions.Fraction` values when the
    formulas are rational; criterion arithmetic then stays exact.  ``Yp``
    is None for the positive-kernel route, which certifies only ``Y``.
    """

    Y: object
    Yp: object | None
    case_tag: str
    provenance: str

    def __post_init__(self):
        if not (self.Y > 0 and math.isfinite(float(self.Y))):
            raise ValueError(f"Y bound must be finite and positive, got {self.Y}")
        if self.Yp is not None and not (self.Yp > 0 and math.isfinite(float(self.Yp))):
            raise ValueError(f"Yp bound must be finite and positive, got {self.Yp}")

    def to_dict(self):
        return {"Y": float(self.Y),
                "Yp": None if self.Yp is None else float(self.Yp),
                "case": self.case_tag, "provenance": self.provenance}


@lru_cache(maxsize=512)
def lemma2_bounds(a, b):
    """Closed-form ``(Y, Yp)`` for constant ``a > 0, b > 0``.

    overdamped  (a^2 > 4b):  Y = 1/b,
                             Yp = 2a / (sqrt(a^2-4b) (a - sqrt(a^2-4b)))
    underdamped (a^2 < 4b):  Y = 4 / (a sqrt(4b-a^2)),
                             Yp = 2 (a + sqrt(4b-a^2)) / (a sqrt(4b-a^2))
    critical    (a^2 = 4b):  Y = 1/b,  Yp = 2/sqrt(b)
    """
    if not (a > 0 and b > 0):
        raise ValueError(f"comparison coefficients must be positive, got a={a}, b={b}")
    af, bf = Fraction(a), Fraction(b)
    disc = af * af - 4 * bf
    band = CRITICAL_REL_TOL * max(af * af, 4 * bf)
    if abs(disc) <= band:
        return OdeBounds(Y=1 / bf, Yp=2 / exact_sqrt(bf),
                         case_tag=CRITICAL, provenance="lemma2.3")
    if disc > 0:
        s = exact_sqrt(disc)
        return OdeBounds(Y=1 / bf, Yp=2 * af / (s * (af - s)),
                         case_tag=OVERDAMPED, provenance="lemma2.1")
    s = exact_sqrt(-disc)
    return OdeBounds(Y=4 / (af * s), Yp=2 * (af + s) / (af * s),
                     case_tag=UNDERDAMPED, provenance="lemma2.2")


def condition_38a(ctx):
    """Gate certificate: inf a > 0, inf b > 0, (inf a)^2 >= 4 sup b.

    When it holds, the comparison kernel is positive, the comparison
    equation is exponentially stable, and ``int Y(t,s) b(s) ds <= 1``.
    The discriminant inequality is non-strict, matching its statement.
    """
    inf_a = ctx.inf("a")
    inf_b = ctx.inf("b")
    sup_b = ctx.sup("b")
    inputs = [inf_a.report, inf_b.report, sup_b.report]
    exactness = EXACT if all(r.exactness == EXACT for r in inputs) else SAMPLED
    lhs = 4 * sup_b.value
    rhs = inf_a.value * inf_a.value
    ok = inf_a.value > 0 and inf_b.value > 0 and lhs <= rhs
    notes = []
    if not inf_a.value > 0:
        notes.append("inf a <= 0")
    if not inf_b.value > 0:
        notes.append("inf b <= 0")
    if not lhs <= rhs:
        notes.append("(inf a)^2 < 4 sup b")
    narrative = ("positive-kernel gate holds: (inf a)^2 >= 4 sup b with positive infima"
                 if ok else "positive-kernel gate fails: " + ", ".join(notes))
    return Certificate("Cond38a", applicable=True, satisfied=ok,
                       lhs=float(lhs), rhs=float(rhs), margin=float(rhs - lhs),
                       inputs=inputs, exactness=exactness, narrative=narrative)


def lemma7_bounds(spec, norms=None):
    """Kernel-positivity route: ``Y = 1 / inf b``; no ``Yp``.

    Derivation recorded in provenance: the kernel is positive and
    ``int Y(t,s) b(s) ds <= 1`` with ``b >= inf b > 0``, hence
    ``int Y(t,s) ds <= 1 / inf b``.  Raises :class:`BoundsUnavailable`
    when the gate fails.
    """
    ctx = norms if norms is not None else NormContext(spec)
    gate = condition_38a(ctx)
    if not gate.satisfied:
        raise BoundsUnavailable(gate.narrative)
    inf_b = ctx.inf("b")
    return OdeBounds(Y=1 / inf_b.value, Yp=None, case_tag=LEMMA7,
                     provenance="positive-kernel int Y b <= 1, b >= inf b")


# ---------------------------------------------------------------------------
# Numerical cross-check
# ---------------------------------------------------------------------------

def _dominant_decay(a, b):
    """|Re| of the slowest characteristic root of r^2 + a r + b = 0."""
    disc = a * a - 4.0 * b
    if disc >= 0:
        r_slow = (-a + math.sqrt(disc)) / 2.0
        return abs(r_slow)
    return a / 2.0


def _sign_change_points(fn, lo, hi, probes=4096):
    """Refined roots of a smooth scalar function on [lo, hi]."""
    from scipy.optimize import brentq
    ts = np.linspace(lo, hi, probes)
    vals = np.array([fn(t) for t in ts])
    roots = []
    for k in np.nonzero(np.signbit(vals[:-1]) != np.signbit(vals[1:]))[0]:
        roots.append(brentq(fn, ts[k], ts[k + 1], xtol=1e-14, rtol=1e-15))
    return roots


def quadrature_Y(a, b, horizon=None):
    """Numerically integrate ``int_0^T |y| du`` and ``int_0^T |y'| du``.

    ``y`` solves ``y'' + a y' + b y = 0, y(0) = 0, y'(0) = 1``.  To avoid
    integrating across absolute-value kinks, the smooth antiderivative
    ``P = int y`` is carried as an extra state and the absolute integrals
    are assembled as sign-split differences between the roots of ``y``
    (for ``int |y|``) and of ``y'`` (for ``int |y'|``, the total variation
    of ``y``).  Raises ValueError when the horizon leaves an estimated
    exponential tail above tolerance.
    """
    if not (a > 0 and b > 0):
        raise ValueError(f"comparison coefficients must be positive, got a={a}, b={b}")
    lam = _dominant_decay(a, b)
    if lam <= 0:
        raise ValueError("comparison equation is not exponentially stable")
    if horizon is None:
        horizon = 30.0 / lam

    def rhs(t, u):
        y, yp, _ = u
        return (yp, -a * yp - b * y, y)

    sol = solve_ivp(rhs, (0.0, horizon), (0.0, 1.0, 0.0), method="DOP853",
                    rtol=1e-12, atol=1e-14, dense_output=True)
    if not sol.success:
        raise ValueError(f"integration failed: {sol.message}")
    y_T, yp_T, _ = sol.y[:, -1]

    dense = sol.sol
    knots_y = _sign_change_points(lambda t: dense(t)[0], 0.0, horizon)
    knots_yp = _sign_change_points(lambda t: dense(t)[1], 0.0, horizon)

    def split_sum(component, knots):
        pts = [0.0] + [k for k in knots if 1e-13 < k < horizon] + [horizon]
        total = 0.0
        for lo, hi in zip(pts[:-1], pts[1:]):
            total += abs(dense(hi)[component] - dense(lo)[component])
        return total

    Y_num = split_sum(2, knots_y)     # differences of P = int y
    Yp_num = split_sum(0, knots_yp)   # differences of y itself

    # Exponential tail estimate past the horizon (defective case included
    # via the (1 + lam (u-T)) envelope factor).
    state = abs(y_T) + abs(yp_T)
    tail = 3.0 * state * (1.0 / lam + 1.0 / lam ** 2)
    if tail > 1e-8 * max(1.0, Y_num):
        raise ValueError(
            f"horizon {horizon} too short: tail estimate {tail:.3g} above tolerance "
            f"(need roughly >= 30/{lam:.3g})")
    return float(Y_num), float(Yp_num)


def sample_kernel_columns(a_fn, b_fn, t0, s_values, T, step=1e-3):
    """Columns ``Y(., s)`` of a (possibly time-varying) comparison equation.

    Small helper for validating the positive-kernel route numerically:
    returns ``(ts, columns)`` with ``columns[j][i] = Y(ts[i], s_j)``.
    Uses fixed-step RK4 on the undelayed equation.
    """
    n = int(round((T - t0) / step))
    ts = t0 + step * np.arange(n + 1)
    cols = []
    for s in s_values:
        y = np.zeros(n + 1)
        yp = np.zeros(n + 1)
        k0 = int(round((s - t0) / step))
        yp[k0] = 1.0
        for i in range(k0, n):
            t = ts[i]
            u1, u2 = y[i], yp[i]

            def f(tt, v1, v2):
                return v2, -b_fn(tt) * v1 - a_fn(tt) * v2

            h = step
            p1 = f(t, u1, u2)
            p2 = f(t + h / 2, u1 + h / 2 * p1[0], u2 + h / 2 * p1[1])
            p3 = f(t + h / 2, u1 + h / 2 * p2[0], u2 + h / 2 * p2[1])
            p4 = f(t + h, u1 + h * p3[0], u2 + h * p3[1])
            y[i + 1] = u1 + h / 6 * (p1[0] + 2 * p2[0] + 2 * p3[0] + p4[0])
            yp[i + 1] = u2 + h / 6 * (p1[1] + 2 * p2[1] + 2 * p3[1] + p4[1])
        cols.append(y)
    return ts, cols
