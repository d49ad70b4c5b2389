"""Exponential-stability criterion checkers.

Each checker evaluates one explicit sufficient condition and returns a
:class:`Certificate`.  The catalog (ids used in reports, filters, and the
CLI) is::

    ThmA        delay-size bound from comparison bounds Y, Y'   (pure_delay)
    Thm1, Cor1  perturbation-norm bound ||a1|| Y' + ||b1|| Y < 1   (mixed)
    Thm2, Cor2, Cor3   delay-size bounds via a positive first-order
                kernel and the Y bound                          (pure_delay)
    Thm3        delay-size bound without the positivity prerequisite
    Thm4, Cor4, Cor5   a-priori-estimate bounds for the mixed form
    Thm5, Cor6  ratio-norm bounds needing no Y estimate         (pure_delay)
    Thm6, Cor7  ratio-norm bounds for the mixed form

All criteria are sufficient only: "not satisfied" never means unstable.
Strict inequalities are enforced; boundary equality is reported with
margin 0 and ``satisfied = False``.  For constant coefficients the
decisions are computed in exact rational arithmetic, so verdicts are
rigorous; sampled norms make verdicts heuristic and the certificate's
exactness flag says so.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from functools import lru_cache

from . import expressions as ex
from .certificates import EXACT, SAMPLED, Certificate, NormReport
from .eqspec import MIXED, PURE_DELAY, EquationSpec, NormContext
from .odebounds import condition_38a, lemma2_bounds, lemma7_bounds
from .rational import exact_sqrt

__all__ = [
    "CRITERIA_ORDER",
    "check_theorem_A",
    "check_theorem_1",
    "check_corollary_1",
    "check_theorem_2",
    "check_corollary_2",
    "check_corollary_3",
    "check_theorem_3",
    "check_theorem_4",
    "check_corollary_4",
    "check_corollary_5",
    "check_theorem_5",
    "check_corollary_6",
    "check_theorem_6",
    "check_corollary_7",
    "check_all",
    "CheckResult",
]

CRITERIA_ORDER = ["ThmA", "Thm1", "Cor1", "Thm2", "Cor2", "Cor3", "Thm3",
                  "Thm4", "Cor4", "Cor5", "Thm5", "Cor6", "Thm6", "Cor7"]


# ---------------------------------------------------------------------------
# Small constructors
# ---------------------------------------------------------------------------

def _inapplicable(cid, narrative, inputs=(), prerequisites=(), exactness=EXACT):
    return Certificate(cid, applicable=False, satisfied=False,
                       inputs=list(inputs), prerequisites=list(prerequisites),
                       exactness=exactness, narrative=narrative)


def _decide(cid, lhs, rhs, inputs, prerequisites, narrative, exactness):
    """Strict-inequality certificate; lhs/rhs may be exact rationals."""
    satisfied = lhs < rhs
    return Certificate(cid, applicable=True, satisfied=satisfied,
                       lhs=float(lhs), rhs=float(rhs), margin=float(rhs - lhs),
                       inputs=list(inputs), prerequisites=list(prerequisites),
                       exactness=exactness, narrative=narrative)


def _trivial(cid, inputs, prerequisites, narrative, exactness):
    """All delay terms vanish: the bound is unbounded and trivially met."""
    return Certificate(cid, applicable=True, satisfied=True, lhs=0.0,
                       rhs=None, margin=None, margin_unbounded=True,
                       inputs=list(inputs), prerequisites=list(prerequisites),
                       exactness=exactness, narrative=narrative)


def _gate(cid, lhs, rhs, inputs, exactness, strict, description):
    ok = (lhs < rhs) if strict else (lhs <= rhs)
    word = "holds" if ok else "fails"
    return Certificate(cid, applicable=True, satisfied=ok,
                       lhs=float(lhs), rhs=float(rhs), margin=float(rhs - lhs),
                       inputs=list(inputs), exactness=exactness,
                       narrative=f"{description} {word}")


def _exactness_of(reports, prerequisites=()):
    flags = [r.exactness for r in reports] + [p.exactness for p in prerequisites]
    return EXACT if all(f == EXACT for f in flags) else SAMPLED


@lru_cache(maxsize=2048)
def _bounds_reports_cached(bounds, exactness):
    reps = [NormReport("Y", float(bounds.Y), exactness)]
    if bounds.Yp is not None:
        reps.append(NormReport("Y'", float(bounds.Yp), exactness))
    return tuple(reps)


def _bounds_reports(bounds, exactness):
    return list(_bounds_reports_cached(bounds, exactness))


def _is_identically_zero(c):
    return c is not None and c.is_constant and c.value == 0.0


def _comparison(spec, ctx):
    """Certified (Y, Y') bounds for the undelayed comparison equation.

    Constant coefficients use the closed-form case bounds (both Y and Y',
    exact rational whenever the discriminant root is rational).  Otherwise
    the positive-kernel route supplies Y alone, gated on its certificate.
    Returns (bounds, prerequisite_certs, bound_reports, why_not).
    """
    a, b = spec.a, spec.b
    if a.is_constant and b.is_constant:
        if a.value > 0 and b.value > 0:
            bounds = lemma2_bounds(a.value, b.value)
            return bounds, [], _bounds_reports(bounds, EXACT), None
        return None, [], [], ("comparison equation is not exponentially stable "
                              "(constant coefficients must be positive)")
    gate = condition_38a(ctx)
    if gate.satisfied:
        bounds = lemma7_bounds(spec, ctx)
        # Y = 1/inf b inherits the provenance of the inf b norm
        src = ctx.inf("b").report
        reps = [NormReport("Y", float(bounds.Y), src.exactness, src.window,
                           src.grid_points)]
        return bounds, [gate], reps, None
    return None, [gate], [], ("no certified comparison bounds for time-varying "
                              "coefficients: positive-kernel gate fails")


def _nonnegative(ctx, name):
    """(ok, report) for the precondition coefficient >= 0."""
    nv = ctx.inf(name)
    return nv.value >= 0, nv.report


# ---------------------------------------------------------------------------
# Checkers: comparison-bounds family
# ---------------------------------------------------------------------------

def check_theorem_A(spec, bounds=None, ctx=None):
    """Delay-size bound ``max lag < 1 / (A^2 Y' + A B Y + B Y')``.

    ``A``/``B`` are the coefficient suprema, zeroed when the matching
    delay is the identity.  Pure-delay form only.
    """
    cid = "ThmA"
    if spec.form != PURE_DELAY:
        return _inapplicable(cid, "criterion applies to the pure-delay form")
    ctx = ctx or NormContext(spec)
    ok_a, rep_a0 = _nonnegative(ctx, "a")
    ok_b, rep_b0 = _nonnegative(ctx, "b")
    if not (ok_a and ok_b):
        return _inapplicable(cid, "coefficients must be nonnegative",
                             inputs=[rep_a0, rep_b0],
                             exactness=_exactness_of([rep_a0, rep_b0]))
    if bounds is None:
        bounds, prereqs, breps, why = _comparison(spec, ctx)
        if bounds is None:
            return _inapplicable(cid, why, prerequisites=prereqs)
    else:
        prereqs, breps = [], _bounds_reports(bounds, EXACT)

    sup_a = ctx.sup("a")
    sup_b = ctx.sup("b")
    delta = ctx.lag("g")
    tau = ctx.lag("h")
    cap_a = Fraction(0) if spec.g.is_identity else sup_a.value
    cap_b = Fraction(0) if spec.h.is_identity else sup_b.value
    inputs = breps + [sup_a.report, sup_b.report, delta.report, tau.report]
    exactness = _exactness_of([sup_a.report, sup_b.report, delta.report,
                               tau.report] + breps, prereqs)

    if cap_a == 0 and cap_b == 0:
        return _trivial(cid, inputs, prereqs,
                        "no effective delay terms: reduces to the stable "
                        "comparison equation", exactness)
    if bounds.Yp is None:
        return _inapplicable(cid, "no certified Y' bound for this comparison "
                                  "equation", inputs=inputs,
                             prerequisites=prereqs, exactness=exactness)
    denom = cap_a * cap_a * bounds.Yp + cap_a * cap_b * bounds.Y + cap_b * bounds.Yp
    lhs = max(delta.value, tau.value)
    rhs = 1 / denom
    return _decide(cid, lhs, rhs, inputs, prereqs,
                   "max lag against the reciprocal comparison-bound load",
                   exactness)


def _perturbation_certificate(cid, spec, ctx, bounds, prereqs, breps, narrative):
    """Core of Thm1/Cor1: ``||a1|| Y' + ||b1|| Y < 1``."""
    na1 = ctx.norm("a1")
    nb1 = ctx.norm("b1")
    inputs = breps + [na1.report, nb1.report]
    exactness = _exactness_of([na1.report, nb1.report] + breps, prereqs)
    if na1.value == 0:
        # the Y' term vanishes exactly; do not let a float Y' contaminate it
        lhs = nb1.value * bounds.Y
    elif bounds.Yp is None:
        return _inapplicable(cid, "no certified Y' bound and the delayed "
                                  "damping perturbation is nonzero",
                             inputs=inputs, prerequisites=prereqs,
                             exactness=exactness)
    else:
        lhs = na1.value * bounds.Yp + nb1.value * bounds.Y
    return _decide(cid, lhs, 1, inputs, prereqs, narrative, exactness)


def check_theorem_1(spec, bounds=None, ctx=None):
    """Perturbation bound ``||a1|| Y' + ||b1|| Y < 1`` for the mixed form."""
    cid = "Thm1"
    if spec.form != MIXED:
        return _inapplicable(cid, "criterion applies to the mixed form")
    ctx = ctx or NormContext(spec)
    ok_a, rep_a0 = _nonnegative(ctx, "a")
    ok_b, rep_b0 = _nonnegative(ctx, "b")
    if not (ok_a and ok_b):
        return _inapplicable(cid, "coefficients must be nonnegative",
                             inputs=[rep_a0, rep_b0],
                             exactness=_exactness_of([rep_a0, rep_b0]))
    if bounds is None:
        bounds, prereqs, breps, why = _comparison(spec, ctx)
        if bounds is None:
            return _inapplicable(cid, why, prerequisites=prereqs)
    else:
        prereqs, breps = [], _bounds_reports(bounds, EXACT)
    return _perturbation_certificate(
        cid, spec, ctx, bounds, prereqs, breps,
        "perturbation norms against the comparison bounds")


def check_corollary_1(spec, ctx=None):
    """Constant-coefficient case dispatch of the perturbation bound."""
    cid = "Cor1"
    if spec.form != MIXED:
        return _inapplicable(cid, "criterion applies to the mixed form")
    ctx = ctx or NormContext(spec)
    a, b = spec.a, spec.b
    if not (a.is_constant and b.is_constant):
        return _inapplicable(cid, "requires constant undelayed coefficients")
    if not (a.value > 0 and b.value > 0):
        return _inapplicable(cid, "constant coefficients must be positive")
    bounds = lemma2_bounds(a.value, b.value)
    breps = _bounds_reports(bounds, EXACT)
    return _perturbation_certificate(
        cid, spec, ctx, bounds, [], breps,
        f"{bounds.case_tag} case of the perturbation bound")


# ---------------------------------------------------------------------------
# Checkers: positive-kernel + Y family (pure-delay form)
# ---------------------------------------------------------------------------

def check_theorem_2(spec, bounds=None, ctx=None):
    """Delay-size bound gated on a positive first-order kernel.

    ``Y [ delta ||a|| (||a|| ||b/a|| + ||b||) + tau ||b|| ||b/a|| ] < 1``
    with coefficient norms taken from ``t1 = t0 + delta``.
    """
    cid = "Thm2"
    if spec.form != PURE_DELAY:
        return _inapplicable(cid, "criterion applies to the pure-delay form")
    ctx = ctx or NormContext(spec)
    inf_a = ctx.inf("a")
    if not inf_a.value > 0:
        return _inapplicable(cid, "requires damping bounded below by a "
                                  "positive constant", inputs=[inf_a.report],
                             exactness=inf_a.report.exactness)
    positivity = ctx.one_over_e()
    if not positivity.satisfied:
        return _inapplicable(cid, "positivity prerequisite for the first-order "
                                  "kernel fails", prerequisites=[positivity],
                             exactness=positivity.exactness)
    if bounds is None:
        bounds, prereqs, breps, why = _comparison(spec, ctx)
        if bounds is None:
            return _inapplicable(cid, why, prerequisites=[positivity] + prereqs)
    else:
        prereqs, breps = [], _bounds_reports(bounds, EXACT)
    prereqs = [positivity] + prereqs

    delta = ctx.lag("g")
    tau = ctx.lag("h")
    ctx1 = ctx.shifted(float(delta.value))
    norm_a = ctx1.norm("a")
    norm_b = ctx1.norm("b")
    ratio_ba = ctx1.ratio_norm("b", "a")
    inputs = breps + [inf_a.report, norm_a.report, norm_b.report,
                      ratio_ba.report, delta.report, tau.report]
    exactness = _exactness_of(inputs, prereqs)
    lhs = bounds.Y * (delta.value * norm_a.value
                      * (norm_a.value * ratio_ba.value + norm_b.value)
                      + tau.value * norm_b.value * ratio_ba.value)
    return _decide(cid, lhs, 1, inputs, prereqs,
                   "delay-size load against the Y bound (norms from t0 + delta)",
                   exactness)


def check_corollary_2(spec, ctx=None):
    """Constant-coefficient delay-size bound, gated on ``a delta <= 1/e``.

    Case a^2 >= 4b:  ``2 delta a + tau b / a < 1``.
    Case a^2 <  4b:  ``2 delta a b + tau b^2 / a < a sqrt(4b - a^2) / 4``.
    """
    cid = "Cor2"
    if spec.form != PURE_DELAY:
        return _inapplicable(cid, "criterion applies to the pure-delay form")
    ctx = ctx or NormContext(spec)
    a, b = spec.a, spec.b
    if not (a.is_constant and b.is_constant):
        return _inapplicable(cid, "requires constant coefficients")
    if not (a.value > 0 and b.value > 0):
        return _inapplicable(cid, "constant coefficients must be positive")
    af, bf = Fraction(a.value), Fraction(b.value)
    gate = ctx.one_over_e()
    delta = ctx.lag("g")
    tau = ctx.lag("h")
    inputs = [delta.report, tau.report]
    exactness = _exactness_of(inputs, [gate])
    if not gate.satisfied:
        return _inapplicable(cid, "1/e gate on the damping integral fails",
                             inputs=inputs, prerequisites=[gate],
                             exactness=exactness)
    if af * af >= 4 * bf:
        lhs = 2 * delta.value * af + tau.value * bf / af
        rhs = 1
        case = "a^2 >= 4b"
    else:
        lhs = 2 * delta.value * af * bf + tau.value * bf * bf / af
        rhs = af * exact_sqrt(4 * bf - af * af) / 4
        case = "a^2 < 4b"
    return _decide(cid, lhs, rhs, inputs, [gate],
                   f"constant-coefficient delay-size bound, case {case}",
                   exactness)


def check_corollary_3(spec, ctx=None):
    """No velocity delay: ``a^2 >= 4b`` and ``tau b < a`` certify stability."""
    cid = "Cor3"
    if spec.form != PURE_DELAY:
        return _inapplicable(cid, "criterion applies to the pure-delay form")
    ctx = ctx or NormContext(spec)
    if not spec.g.is_identity:
        return _inapplicable(cid, "requires an undelayed damping term")
    a, b = spec.a, spec.b
    if not (a.is_constant and b.is_constant):
        return _inapplicable(cid, "requires constant coefficients")
    if not (a.value > 0 and b.value > 0):
        return _inapplicable(cid, "constant coefficients must be positive")
    af, bf = Fraction(a.value), Fraction(b.value)
    tau = ctx.lag("h")
    inputs = [tau.report]
    if af * af < 4 * bf:
        return _inapplicable(cid, "requires the overdamped regime a^2 >= 4b",
                             inputs=inputs, exactness=_exactness_of(inputs))
    lhs = tau.value * bf
    return _decide(cid, lhs, af, inputs, [],
                   "position-delay load tau b against the damping level a",
                   _exactness_of(inputs))


def check_theorem_3(spec, bounds=None, ctx=None):
    """Delay-size bound with no positivity prerequisite.

    ``Y [ (delta ||a||^2 + tau ||b||) (||b/a|| + delta ||b||)
          / (1 - delta ||a||) + delta ||b|| ] < 1``
    """
    cid = "Thm3"
    if spec.form != PURE_DELAY:
        return _inapplicable(cid, "criterion applies to the pure-delay form")
    ctx = ctx or NormContext(spec)
    inf_a = ctx.inf("a")
    if not inf_a.value > 0:
        return _inapplicable(cid, "requires damping bounded below by a "
                                  "positive constant", inputs=[inf_a.report],
                             exactness=inf_a.report.exactness)
    if bounds is None:
        bounds, prereqs, breps, why = _comparison(spec, ctx)
        if bounds is None:
            return _inapplicable(cid, why, prerequisites=prereqs)
    else:
        prereqs, breps = [], _bounds_reports(bounds, EXACT)
    delta = ctx.lag("g")
    tau = ctx.lag("h")
    norm_a = ctx.norm("a")
    norm_b = ctx.norm("b")
    ratio_ba = ctx.ratio_norm("b", "a")
    gate = _gate("GateDeltaA", delta.value * norm_a.value, 1,
                 [delta.report, norm_a.report],
                 _exactness_of([delta.report, norm_a.report]), True,
                 "small-delay gate delta ||a|| < 1")
    prereqs = prereqs + [gate]
    inputs = breps + [inf_a.report, norm_a.report, norm_b.report,
                      ratio_ba.report, delta.report, tau.report]
    exactness = _exactness_of(inputs, prereqs)
    if not gate.satisfied:
        return _inapplicable(cid, "small-delay gate delta ||a|| < 1 fails",
                             inputs=inputs, prerequisites=prereqs,
                             exactness=exactness)
    da = delta.value * norm_a.value
    lhs = bounds.Y * ((delta.value * norm_a.value * norm_a.value
                       + tau.value * norm_b.value)
                      * (ratio_ba.value + delta.value * norm_b.value)
                      / (1 - da)
                      + delta.value * norm_b.value)
    return _decide(cid, lhs, 1, inputs, prereqs,
                   "a-priori delay-size load against the Y bound", exactness)


# ---------------------------------------------------------------------------
# Checkers: a-priori-estimate family (mixed form)
# ---------------------------------------------------------------------------

def check_theorem_4(spec, bounds=None, ctx=None):
    """Mixed-form bound ``Y [ ||a1|| (||b/a|| + ||b1/a||) / (1 - ||a1/a||)
    + ||b1|| ] < 1``; coincides with the perturbation bound when a1 = 0."""
    cid = "Thm4"
    if spec.form != MIXED:
        return _inapplicable(cid, "criterion applies to the mixed form")
    ctx = ctx or NormContext(spec)
    inf_a = ctx.inf("a")
    if not inf_a.value > 0:
        return _inapplicable(cid, "requires damping bounded below by a "
                                  "positive constant", inputs=[inf_a.report],
                             exactness=inf_a.report.exactness)
    if bounds is None:
        bounds, prereqs, breps, why = _comparison(spec, ctx)
        if bounds is None:
            return _inapplicable(cid, why, prerequisites=prereqs)
    else:
        prereqs, breps = [], _bounds_reports(bounds, EXACT)
    na1 = ctx.norm("a1")
    nb1 = ctx.norm("b1")
    ratio_a1a = ctx.ratio_norm("a1", "a")
    gate = _gate("GateA1A", ratio_a1a.value, 1,
                 [ratio_a1a.report], ratio_a1a.report.exactness, True,
                 "contraction gate ||a1/a|| < 1")
    prereqs = prereqs + [gate]
    if not gate.satisfied:
        return _inapplicable(cid, "contraction gate ||a1/a|| < 1 fails",
                             prerequisites=prereqs,
                             exactness=_exactness_of([ratio_a1a.report], prereqs))
    if na1.value == 0:
        # delayed damping absent: the bound reduces to ||b1|| Y exactly
        inputs = breps + [na1.report, nb1.report]
        exactness = _exactness_of(inputs, prereqs)
        lhs = nb1.value * bounds.Y
        return _decide(cid, lhs, 1, inputs, prereqs,
                       "a-priori mixed-form bound (no delayed damping term)",
                       exactness)
    ratio_ba = ctx.ratio_norm("b", "a")
    ratio_b1a = ctx.ratio_norm("b1", "a")
    inputs = breps + [na1.report, nb1.report, ratio_ba.report,
                      ratio_b1a.report, ratio_a1a.report]
    exactness = _exactness_of(inputs, prereqs)
    lhs = bounds.Y * (na1.value * (ratio_ba.value + ratio_b1a.value)
                      / (1 - ratio_a1a.value) + nb1.value)
    return _decide(cid, lhs, 1, inputs, prereqs,
                   "a-priori mixed-form load against the Y bound", exactness)


def check_corollary_4(spec, ctx=None):
    """Overdamped constants: ``||a1|| (b + ||b1||) < (a - ||a1||)(b - ||b1||)``."""
    cid = "Cor4"
    if spec.form != MIXED:
        return _inapplicable(cid, "criterion applies to the mixed form")
    ctx = ctx or NormContext(spec)
    a, b = spec.a, spec.b
    if not (a.is_constant and b.is_constant):
        return _inapplicable(cid, "requires constant undelayed coefficients")
    if not (a.value > 0 and b.value > 0):
        return _inapplicable(cid, "constant coefficients must be positive")
    af, bf = Fraction(a.value), Fraction(b.value)
    if af * af < 4 * bf:
        return _inapplicable(cid, "requires the overdamped regime a^2 >= 4b")
    na1 = ctx.norm("a1")
    nb1 = ctx.norm("b1")
    inputs = [na1.report, nb1.report]
    exactness = _exactness_of(inputs)
    if not na1.value < af:
        return _inapplicable(cid, "requires ||a1|| < a", inputs=inputs,
                             exactness=exactness)
    lhs = na1.value * (bf + nb1.value)
    rhs = (af - na1.value) * (bf - nb1.value)
    return _decide(cid, lhs, rhs, inputs, [],
                   "rhombus bound on the perturbation norms", exactness)


def check_corollary_5(spec, ctx=None):
    """Overdamped constants, no delayed damping: ``||b1|| < b``."""
    cid = "Cor5"
    if spec.form != MIXED:
        return _inapplicable(cid, "criterion applies to the mixed form")
    ctx = ctx or NormContext(spec)
    if not _is_identically_zero(spec.a1):
        return _inapplicable(cid, "requires a1 identically zero")
    a, b = spec.a, spec.b
    if not (a.is_constant and b.is_constant):
        return _inapplicable(cid, "requires constant undelayed coefficients")
    if not (a.value > 0 and b.value > 0):
        return _inapplicable(cid, "constant coefficients must be positive")
    af, bf = Fraction(a.value), Fraction(b.value)
    if af * af < 4 * bf:
        return _inapplicable(cid, "requires the overdamped regime a^2 >= 4b")
    nb1 = ctx.norm("b1")
    return _decide(cid, nb1.value, bf, [nb1.report], [],
                   "position perturbation below the restoring level",
                   _exactness_of([nb1.report]))


# ---------------------------------------------------------------------------
# Checkers: positive-kernel ratio family (no Y estimate needed)
# ---------------------------------------------------------------------------

def check_theorem_5(spec, ctx=None):
    """Ratio-norm bound ``delta ||a/b|| (||a|| ||b/a|| + ||b||)
    + tau ||b/a|| < 1``, gated on the positive-kernel condition and the
    1/e integral test; needs no explicit Y bound."""
    cid = "Thm5"
    if spec.form != PURE_DELAY:
        return _inapplicable(cid, "criterion applies to the pure-delay form")
    ctx = ctx or NormContext(spec)
    gate38a = condition_38a(ctx)
    if not gate38a.satisfied:
        return _inapplicable(cid, "positive-kernel gate fails",
                             prerequisites=[gate38a],
                             exactness=gate38a.exactness)
    positivity = ctx.one_over_e()
    prereqs = [gate38a, positivity]
    if not positivity.satisfied:
        return _inapplicable(cid, "1/e integral test fails",
                             prerequisites=prereqs,
                             exactness=_exactness_of([], prereqs))
    delta = ctx.lag("g")
    tau = ctx.lag("h")
    ctx1 = ctx.shifted(float(delta.value))
    norm_a = ctx1.norm("a")
    norm_b = ctx1.norm("b")
    ratio_ba = ctx1.ratio_norm("b", "a")
    ratio_ab = ctx1.ratio_norm("a", "b")
    inputs = [norm_a.report, norm_b.report, ratio_ba.report, ratio_ab.report,
              delta.report, tau.report]
    exactness = _exactness_of(inputs, prereqs)
    lhs = (delta.value * ratio_ab.value
           * (norm_a.value * ratio_ba.value + norm_b.value)
           + tau.value * ratio_ba.value)
    return _decide(cid, lhs, 1, inputs, prereqs,
                   "ratio-norm delay load (norms from t0 + delta)", exactness)


def check_corollary_6(spec, ctx=None):
    """Undelayed damping under the positive-kernel gate: ``tau ||b/a|| < 1``."""
    cid = "Cor6"
    if spec.form != PURE_DELAY:
        return _inapplicable(cid, "criterion applies to the pure-delay form")
    ctx = ctx or NormContext(spec)
    if not spec.g.is_identity:
        return _inapplicable(cid, "requires an undelayed damping term")
    gate38a = condition_38a(ctx)
    if not gate38a.satisfied:
        return _inapplicable(cid, "positive-kernel gate fails",
                             prerequisites=[gate38a],
                             exactness=gate38a.exactness)
    tau = ctx.lag("h")
    ratio_ba = ctx.ratio_norm("b", "a")
    inputs = [tau.report, ratio_ba.report]
    exactness = _exactness_of(inputs, [gate38a])
    lhs = tau.value * ratio_ba.value
    return _decide(cid, lhs, 1, inputs, [gate38a],
                   "position-delay ratio load", exactness)


def check_theorem_6(spec, ctx=None):
    """Mixed-form ratio bound ``||a1/b|| (||b/a|| + ||b1/a||)
    / (1 - ||a1/a||) + ||b1/b|| < 1`` under the positive-kernel gate."""
    cid = "Thm6"
    if spec.form != MIXED:
        return _inapplicable(cid, "criterion applies to the mixed form")
    ctx = ctx or NormContext(spec)
    gate38a = condition_38a(ctx)
    if not gate38a.satisfied:
        return _inapplicable(cid, "positive-kernel gate fails",
                             prerequisites=[gate38a],
                             exactness=gate38a.exactness)
    ratio_a1a = ctx.ratio_norm("a1", "a")
    gate = _gate("GateA1A", ratio_a1a.value, 1,
                 [ratio_a1a.report], ratio_a1a.report.exactness, True,
                 "contraction gate ||a1/a|| < 1")
    prereqs = [gate38a, gate]
    if not gate.satisfied:
        return _inapplicable(cid, "contraction gate ||a1/a|| < 1 fails",
                             prerequisites=prereqs,
                             exactness=_exactness_of([ratio_a1a.report], prereqs))
    ratio_a1b = ctx.ratio_norm("a1", "b")
    ratio_b1b = ctx.ratio_norm("b1", "b")
    if ratio_a1b.value == 0:
        inputs = [ratio_a1b.report, ratio_b1b.report, ratio_a1a.report]
        lhs = ratio_b1b.value
    else:
        ratio_ba = ctx.ratio_norm("b", "a")
        ratio_b1a = ctx.ratio_norm("b1", "a")
        inputs = [ratio_a1b.report, ratio_b1b.report, ratio_ba.report,
                  ratio_b1a.report, ratio_a1a.report]
        lhs = (ratio_a1b.value * (ratio_ba.value + ratio_b1a.value)
               / (1 - ratio_a1a.value) + ratio_b1b.value)
    exactness = _exactness_of(inputs, prereqs)
    return _decide(cid, lhs, 1, inputs, prereqs,
                   "mixed-form ratio load", exactness)


def check_corollary_7(spec, ctx=None):
    """No delayed damping under the positive-kernel gate: ``||b1/b|| < 1``."""
    cid = "Cor7"
    if spec.form != MIXED:
        return _inapplicable(cid, "criterion applies to the mixed form")
    ctx = ctx or NormContext(spec)
    if not _is_identically_zero(spec.a1):
        return _inapplicable(cid, "requires a1 identically zero")
    gate38a = condition_38a(ctx)
    if not gate38a.satisfied:
        return _inapplicable(cid, "positive-kernel gate fails",
                             prerequisites=[gate38a],
                             exactness=gate38a.exactness)
    ratio_b1b = ctx.ratio_norm("b1", "b")
    return _decide(cid, ratio_b1b.value, 1, [ratio_b1b.report], [gate38a],
                   "position-perturbation ratio",
                   _exactness_of([ratio_b1b.report], [gate38a]))


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

_CHECKERS = {
    "ThmA": check_theorem_A,
    "Thm1": check_theorem_1,
    "Cor1": check_corollary_1,
    "Thm2": check_theorem_2,
    "Cor2": check_corollary_2,
    "Cor3": check_corollary_3,
    "Thm3": check_theorem_3,
    "Thm4": check_theorem_4,
    "Cor4": check_corollary_4,
    "Cor5": check_corollary_5,
    "Thm5": check_theorem_5,
    "Cor6": check_corollary_6,
    "Thm6": check_theorem_6,
    "Cor7": check_corollary_7,
}


class CheckResult:
    """Ordered certificate list plus the aggregate verdict."""

    def __init__(self, certificates):
        self.certificates = certificates

    def __iter__(self):
        return iter(self.certificates)

    def __getitem__(self, cid):
        for c in self.certificates:
            if c.criterion_id == cid:
                return c
        raise KeyError(cid)

    @property
    def certified_stable(self):
        return any(c.satisfied for c in self.certificates)

    @property
    def best(self):
        sat = [c for c in self.certificates if c.satisfied]
        if not sat:
            return None
        return max(sat, key=lambda c: (c.rel_margin if c.rel_margin is not None
                                       else -math.inf))

    def summary(self):
        best = self.best
        out = {"certified_stable": self.certified_stable,
               "criteria_checked": [c.criterion_id for c in self.certificates],
               "criteria_satisfied": [c.criterion_id for c in self.certificates
                                      if c.satisfied]}
        if best is not None:
            out["best_criterion"] = best.criterion_id
            unbounded = best.margin_unbounded
            out["best_margin"] = None if unbounded else best.rel_margin
            out["best_margin_unbounded"] = unbounded
        else:
            out["best_criterion"] = None
            out["best_margin"] = None
            out["best_margin_unbounded"] = False
        return out

    def to_dict(self):
        return {"summary": self.summary(),
                "certificates": [c.to_dict() for c in self.certificates]}


def _run_one(cid, spec, ctx):
    try:
        return _CHECKERS[cid](spec, ctx=ctx)
    except ex.EvaluationError as exc:
        return _inapplicable(cid, f"norm evaluation failed: {exc}",
                             exactness=SAMPLED)


def check_all(spec, criteria=None, window=None, grid=None, max_workers=1):
    """Run every checker (optionally a filtered subset) in catalog order.

    Inapplicable checkers report themselves; the summary says "certified
    stable" exactly when at least one certificate is satisfied.  Checkers
    may run concurrently, but the emitted order is always the catalog
    order.
    """
    if not isinstance(spec, EquationSpec):
        raise TypeError(f"expected EquationSpec, got {type(spec).__name__}")
    selected = list(CRITERIA_ORDER) if criteria is None else [
        c for c in CRITERIA_ORDER if c in set(criteria)]
    if criteria is not None:
        unknown = set(criteria) - set(CRITERIA_ORDER)
        if unknown:
            raise ValueError(f"unknown criteria: {sorted(unknown)}")
    ctx = NormContext(spec, window=window, grid=grid)
    if max_workers > 1 and len(selected) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            certs = list(pool.map(lambda cid: _run_one(cid, spec, ctx), selected))
    else:
        certs = [_run_one(cid, spec, ctx) for cid in selected]
    return CheckResult(certs)
