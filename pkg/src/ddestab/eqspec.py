"""Data model for second-order delay equations with damping.

Two equation forms are supported:

``pure_delay``
    x''(t) + a(t) x'(g(t)) + b(t) x(h(t)) = 0

``mixed``
    x''(t) + a(t) x'(t) + b(t) x(t) + a1(t) x'(g(t)) + b1(t) x(h(t)) = 0

Coefficients are constants or expressions in ``t``; delays are the
identity (no delay), a constant lag, or an expression ``g(t) <= t``.

Norms over the semi-axis are approximated by sampled suprema over a
finite window ``[from, from + W]``.  Sampled suprema are lower bounds of
the true essential sup, so verdicts built from them are heuristic; every
report carries an exactness flag so consumers can tell certified-exact
values (constants, declared bounds) from sampled ones.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import integrate as _sciint

from . import expressions as ex
from .certificates import EXACT, SAMPLED, Certificate, NormReport
from .rational import ONE_OVER_E_LOWER

__all__ = [
    "SpecError",
    "CoefficientFn",
    "DelayFn",
    "EquationSpec",
    "NormValue",
    "NormContext",
    "sup_norm",
    "inf_norm",
    "lag_bounds",
    "one_over_e_check",
    "DEFAULT_NORM_GRID",
    "ONE_OVER_E_GRID_CAP",
]

PURE_DELAY = "pure_delay"
MIXED = "mixed"

DEFAULT_NORM_GRID = 100_000
# Per-t quadrature makes the 1/e test far more expensive than plain norms,
# so its t-sweep uses a capped grid.
ONE_OVER_E_GRID_CAP = 2001


class SpecError(ValueError):
    """Invalid equation specification."""


# ---------------------------------------------------------------------------
# Coefficients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoefficientFn:
    """A time-varying (or constant) scalar coefficient.

    ``value`` is set for the constant form; ``source``/``ast`` for the
    expression form.  ``declared_sup``/``declared_inf`` are user-certified
    bounds on the function's range and are trusted when present.
    """

    value: float | None = None
    source: str | None = None
    ast: object | None = field(default=None, compare=False, repr=False)
    declared_sup: float | None = None
    declared_inf: float | None = None
    _fn: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if (self.value is None) == (self.ast is None):
            raise SpecError("coefficient must be exactly one of constant/expression")
        if self.value is not None:
            object.__setattr__(self, "declared_sup", float(self.value))
            object.__setattr__(self, "declared_inf", float(self.value))
        else:
            object.__setattr__(self, "_fn", ex.compile_scalar(self.ast))
            if (self.declared_sup is not None and self.declared_inf is not None
                    and self.declared_inf > self.declared_sup):
                raise SpecError("declared_inf exceeds declared_sup")

    @classmethod
    def constant(cls, value):
        value = float(value)
        if not math.isfinite(value):
            raise SpecError(f"coefficient must be finite, got {value}")
        return cls(value=value)

    @classmethod
    def from_expression(cls, source, declared_sup=None, declared_inf=None):
        ast = ex.parse(source)
        if ex.is_constant_expr(ast):
            return cls.constant(ex.evaluate(ast, 0.0))
        return cls(source=source, ast=ast,
                   declared_sup=declared_sup, declared_inf=declared_inf)

    @classmethod
    def from_any(cls, obj):
        """Accept a number, an expression string, or ``{"expr":..., "sup":..., "inf":...}``."""
        if isinstance(obj, CoefficientFn):
            return obj
        if isinstance(obj, bool):
            raise SpecError("coefficient cannot be a boolean")
        if isinstance(obj, (int, float)):
            return cls.constant(obj)
        if isinstance(obj, str):
            return cls.from_expression(obj)
        if isinstance(obj, dict):
            if "expr" in obj:
                return cls.from_expression(obj["expr"],
                                           declared_sup=obj.get("sup"),
                                           declared_inf=obj.get("inf"))
            if "value" in obj:
                return cls.constant(obj["value"])
        raise SpecError(f"cannot interpret coefficient {obj!r}")

    @property
    def is_constant(self):
        return self.value is not None

    @property
    def exact_value(self):
        """Exact rational value for constants, else None."""
        return Fraction(self.value) if self.value is not None else None

    def __call__(self, t):
        if self.value is not None:
            return self.value
        return self._fn(t)

    def sample(self, ts):
        ts = np.asarray(ts, dtype=float)
        if self.value is not None:
            return np.full(ts.shape, self.value)
        return ex.evaluate_array(self.ast, ts)

    def serialize(self):
        if self.is_constant:
            return self.value
        src = ex.to_source(self.ast)
        if self.declared_sup is None and self.declared_inf is None:
            return src
        out = {"expr": src}
        if self.declared_sup is not None:
            out["sup"] = self.declared_sup
        if self.declared_inf is not None:
            out["inf"] = self.declared_inf
        return out

    def describe(self):
        return repr(self.value) if self.is_constant else ex.to_source(self.ast)


ZERO = CoefficientFn.constant(0.0)


# ---------------------------------------------------------------------------
# Delays
# ---------------------------------------------------------------------------

IDENTITY = "identity"
CONSTANT_LAG = "constant_lag"
EXPRESSION = "expression"


@dataclass(frozen=True)
class DelayFn:
    """Delayed argument ``g(t) <= t``; ``lag(t) = t - g(t)`` is the lag."""

    kind: str
    lag: float | None = None
    source: str | None = None
    ast: object | None = field(default=None, compare=False, repr=False)
    _fn: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind == CONSTANT_LAG:
            if self.lag is None or self.lag < 0 or not math.isfinite(self.lag):
                raise SpecError(f"constant lag must be finite and >= 0, got {self.lag}")
        elif self.kind == EXPRESSION:
            if self.ast is None:
                raise SpecError("expression delay needs an AST")
            object.__setattr__(self, "_fn", ex.compile_scalar(self.ast))
        elif self.kind != IDENTITY:
            raise SpecError(f"unknown delay kind {self.kind!r}")

    @classmethod
    def identity(cls):
        return cls(kind=IDENTITY)

    @classmethod
    def constant_lag(cls, lag):
        lag = float(lag)
        if lag == 0.0:
            return cls.identity()
        return cls(kind=CONSTANT_LAG, lag=lag)

    @classmethod
    def from_expression(cls, source):
        ast = ex.parse(source)
        # g(t) = t  ->  identity;  g(t) = t - c  ->  constant lag c
        if isinstance(ast, ex.Var):
            return cls.identity()
        if (isinstance(ast, ex.BinOp) and ast.op == "-"
                and isinstance(ast.left, ex.Var) and ex.is_constant_expr(ast.right)):
            return cls.constant_lag(ex.evaluate(ast.right, 0.0))
        return cls(kind=EXPRESSION, source=source, ast=ast)

    @classmethod
    def from_any(cls, obj):
        if isinstance(obj, DelayFn):
            return obj
        if obj is None:
            return cls.identity()
        if isinstance(obj, bool):
            raise SpecError("delay cannot be a boolean")
        if isinstance(obj, (int, float)):
            return cls.constant_lag(obj)
        if isinstance(obj, str):
            return cls.from_expression(obj)
        raise SpecError(f"cannot interpret delay {obj!r}")

    @property
    def is_identity(self):
        return self.kind == IDENTITY

    def __call__(self, t):
        if self.kind == IDENTITY:
            return t
        if self.kind == CONSTANT_LAG:
            return t - self.lag
        return self._fn(t)

    def sample(self, ts):
        ts = np.asarray(ts, dtype=float)
        if self.kind == IDENTITY:
            return ts.copy()
        if self.kind == CONSTANT_LAG:
            return ts - self.lag
        return ex.evaluate_array(self.ast, ts)

    def exact_lag(self):
        """Exact lag bound for identity/constant delays, else None."""
        if self.kind == IDENTITY:
            return Fraction(0)
        if self.kind == CONSTANT_LAG:
            return Fraction(self.lag)
        return None

    def serialize(self):
        if self.kind == IDENTITY:
            return "t"
        if self.kind == CONSTANT_LAG:
            return self.lag
        return ex.to_source(self.ast)


# ---------------------------------------------------------------------------
# Equation specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EquationSpec:
    """Full description of one delay equation plus norm-evaluation options."""

    form: str
    a: CoefficientFn
    b: CoefficientFn
    g: DelayFn
    h: DelayFn
    a1: CoefficientFn | None = None
    b1: CoefficientFn | None = None
    t0: float = 0.0
    norm_window: float | None = None
    norm_grid: int | None = None

    def __post_init__(self):
        if self.form not in (PURE_DELAY, MIXED):
            raise SpecError(f"form must be {PURE_DELAY!r} or {MIXED!r}, got {self.form!r}")
        if self.t0 < 0 or not math.isfinite(self.t0):
            raise SpecError(f"t0 must be finite and >= 0, got {self.t0}")
        if self.form == PURE_DELAY:
            if self.a1 is not None or self.b1 is not None:
                raise SpecError("pure_delay form takes no a1/b1 terms")
        else:
            if self.a1 is None:
                object.__setattr__(self, "a1", ZERO)
            if self.b1 is None:
                object.__setattr__(self, "b1", ZERO)
        if self.norm_window is not None and self.norm_window <= 0:
            raise SpecError("norm_window must be positive")
        if self.norm_grid is not None and self.norm_grid < 2:
            raise SpecError("norm_grid must be >= 2")

    # -- construction helpers ------------------------------------------------

    @classmethod
    def pure_delay(cls, a, b, g=None, h=None, t0=0.0, **kw):
        return cls(form=PURE_DELAY,
                   a=CoefficientFn.from_any(a), b=CoefficientFn.from_any(b),
                   g=DelayFn.from_any(g), h=DelayFn.from_any(h), t0=float(t0), **kw)

    @classmethod
    def mixed(cls, a, b, a1=0.0, b1=0.0, g=None, h=None, t0=0.0, **kw):
        return cls(form=MIXED,
                   a=CoefficientFn.from_any(a), b=CoefficientFn.from_any(b),
                   a1=CoefficientFn.from_any(a1), b1=CoefficientFn.from_any(b1),
                   g=DelayFn.from_any(g), h=DelayFn.from_any(h), t0=float(t0), **kw)

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise SpecError(f"spec must be a JSON object, got {type(d).__name__}")
        unknown = set(d) - {"form", "a", "b", "a1", "b1", "g", "h", "t0",
                            "norm_window", "norm_grid"}
        if unknown:
            raise SpecError(f"unknown spec keys: {sorted(unknown)}")
        for key in ("a", "b"):
            if key not in d:
                raise SpecError(f"spec is missing required key {key!r}")
        form = d.get("form")
        if form is None:
            form = MIXED if ("a1" in d or "b1" in d) else PURE_DELAY
        kw = dict(t0=d.get("t0", 0.0),
                  norm_window=d.get("norm_window"), norm_grid=d.get("norm_grid"))
        if form == PURE_DELAY:
            if "a1" in d or "b1" in d:
                raise SpecError("pure_delay form takes no a1/b1 terms")
            return cls.pure_delay(d["a"], d["b"], d.get("g"), d.get("h"), **kw)
        return cls.mixed(d["a"], d["b"], d.get("a1", 0.0), d.get("b1", 0.0),
                         d.get("g"), d.get("h"), **kw)

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self):
        out = {"form": self.form,
               "a": self.a.serialize(), "b": self.b.serialize()}
        if self.form == MIXED:
            out["a1"] = self.a1.serialize()
            out["b1"] = self.b1.serialize()
        out["g"] = self.g.serialize()
        out["h"] = self.h.serialize()
        out["t0"] = self.t0
        if self.norm_window is not None:
            out["norm_window"] = self.norm_window
        if self.norm_grid is not None:
            out["norm_grid"] = self.norm_grid
        return out

    def to_json(self):
        """Canonical echo; identical output for identical parsed specs."""
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    # -- convenience ---------------------------------------------------------

    def coefficient(self, name):
        c = getattr(self, name)
        if c is None:
            raise SpecError(f"form {self.form!r} has no coefficient {name!r}")
        return c

    def with_params(self, **kw):
        """Copy with coefficients/delays replaced (used by region sweeps)."""
        conv = {}
        for key, val in kw.items():
            if key in ("a", "b", "a1", "b1"):
                conv[key] = CoefficientFn.from_any(val)
            elif key in ("g", "h"):
                conv[key] = DelayFn.from_any(val)
            else:
                conv[key] = val
        return replace(self, **conv)


# ---------------------------------------------------------------------------
# Norm evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormValue:
    """Internal pairing of a possibly-exact value and its public report.

    ``value`` is a Fraction when the quantity is certified exact and a
    float when sampled, so downstream criterion arithmetic stays exact
    precisely as long as every ingredient is exact.
    """

    value: object
    report: NormReport

    @property
    def exactness(self):
        return self.report.exactness


def default_window(spec, bootstrap=100.0, bootstrap_grid=10_001):
    """Norm window length: 100 characteristic times of the damping term."""
    if spec.norm_window is not None:
        return float(spec.norm_window)
    a = spec.a
    if a.is_constant:
        inf_a = a.value
    elif a.declared_inf is not None:
        inf_a = a.declared_inf
    else:
        ts = np.linspace(spec.t0, spec.t0 + bootstrap, bootstrap_grid)
        inf_a = float(np.min(a.sample(ts)))
    if inf_a > 0:
        return 100.0 / inf_a
    return 100.0


def _sample_window(from_, window, grid):
    if window <= 0:
        raise SpecError(f"window must be positive, got {window}")
    if grid < 2:
        raise SpecError(f"grid must be >= 2, got {grid}")
    return np.linspace(from_, from_ + window, grid)


def sup_norm(f, from_=0.0, window=100.0, grid=DEFAULT_NORM_GRID):
    """Sup norm ``||f|| = ess-sup |f|`` over ``[from, infinity)``.

    Exact for constants and for declared two-sided bounds; otherwise a
    sampled supremum over a uniform grid on ``[from, from + window]``.
    """
    if f.is_constant:
        return NormReport("||f||", abs(f.value), EXACT)
    if f.declared_sup is not None and f.declared_inf is not None:
        return NormReport("||f||", max(abs(f.declared_sup), abs(f.declared_inf)), EXACT)
    ts = _sample_window(from_, window, grid)
    val = float(np.max(np.abs(f.sample(ts))))
    return NormReport("||f||", val, SAMPLED, (from_, from_ + window), grid)


def inf_norm(f, from_=0.0, window=100.0, grid=DEFAULT_NORM_GRID):
    """Signed essential infimum of ``f`` over the window (exact when declared)."""
    if f.is_constant:
        return NormReport("inf f", f.value, EXACT)
    if f.declared_inf is not None:
        return NormReport("inf f", f.declared_inf, EXACT)
    ts = _sample_window(from_, window, grid)
    val = float(np.min(f.sample(ts)))
    return NormReport("inf f", val, SAMPLED, (from_, from_ + window), grid)


def lag_bounds(d, from_=0.0, window=100.0, grid=DEFAULT_NORM_GRID):
    """Certified lag bound ``sup (t - g(t))``; validates ``g(t) <= t``."""
    if d.kind == IDENTITY:
        return NormReport("lag", 0.0, EXACT)
    if d.kind == CONSTANT_LAG:
        return NormReport("lag", d.lag, EXACT)
    ts = _sample_window(from_, window, grid)
    gs = d.sample(ts)
    bad = gs > ts
    if np.any(bad):
        t_bad = float(ts[bad][0])
        raise SpecError(f"delay violates g(t) <= t at t={t_bad} (g={float(gs[bad][0])})")
    val = float(np.max(ts - gs))
    return NormReport("lag", val, SAMPLED, (from_, from_ + window), grid)


def _lag_integral(a, g, t):
    """Quadrature of a over [g(t), t] (adaptive; exact fast path for constants)."""
    lo = g(t)
    if a.is_constant:
        return a.value * (t - lo)
    val, _ = _sciint.quad(a, lo, t, limit=200)
    return val


def one_over_e_check(a, g, from_=0.0, window=100.0, grid=ONE_OVER_E_GRID_CAP):
    """Positivity test for the first-order comparison kernel.

    Certifies ``sup_t  integral of a over [g(t), t]  <= 1/e``, which makes
    the fundamental function of ``x'(t) + a(t) x(g(t)) = 0`` positive.
    Requires ``a >= 0``; a negative sample makes the certificate
    inapplicable.  The decision threshold is a certified rational lower
    bound of 1/e, so exact inputs are judged soundly.
    """
    rhs = 1.0 / math.e
    # a >= 0 precondition
    if a.is_constant:
        a_nonneg = a.value >= 0
    elif a.declared_inf is not None:
        a_nonneg = a.declared_inf >= 0
    else:
        ts_pre = _sample_window(from_, window, min(grid, ONE_OVER_E_GRID_CAP))
        a_nonneg = bool(np.min(a.sample(ts_pre)) >= 0)
    if not a_nonneg:
        return Certificate(
            "Lem6", applicable=False, satisfied=False, rhs=rhs,
            exactness=EXACT if a.is_constant else SAMPLED,
            narrative="inapplicable: damping coefficient takes negative values")

    if g.kind == IDENTITY:
        lhs = Fraction(0)
        exactness = EXACT
        inputs = [NormReport("sup_t int_[g(t),t] a", 0.0, EXACT)]
        worst_t = None
    elif a.is_constant and g.kind == CONSTANT_LAG:
        lhs = Fraction(a.value) * Fraction(g.lag)
        exactness = EXACT
        inputs = [NormReport("sup_t int_[g(t),t] a", float(lhs), EXACT)]
        worst_t = None
    else:
        npts = min(grid, ONE_OVER_E_GRID_CAP)
        ts = _sample_window(from_, window, npts)
        vals = np.array([_lag_integral(a, g, t) for t in ts])
        k = int(np.argmax(vals))
        lhs = float(vals[k])
        worst_t = float(ts[k])
        exactness = SAMPLED
        inputs = [NormReport("sup_t int_[g(t),t] a", lhs, SAMPLED,
                             (from_, from_ + window), npts)]

    satisfied = lhs <= ONE_OVER_E_LOWER
    margin = float(rhs - lhs)
    note = "integral test against 1/e"
    if worst_t is not None:
        note += f"; worst sampled t = {worst_t:.6g}"
    return Certificate("Lem6", applicable=True, satisfied=satisfied,
                       lhs=float(lhs), rhs=rhs, margin=margin,
                       inputs=inputs, exactness=exactness, narrative=note)


# ---------------------------------------------------------------------------
# Cached per-spec norm evaluation
# ---------------------------------------------------------------------------

def _exact_or_float(report, exact):
    return exact if exact is not None else report.value


# Constant-coefficient quantities recur heavily in region sweeps; the
# NormValue/NormReport pairs are immutable, so they are shared via caches.

@lru_cache(maxsize=65536)
def _const_norm(name, value):
    return NormValue(abs(Fraction(value)), NormReport(f"||{name}||", abs(value), EXACT))


@lru_cache(maxsize=65536)
def _const_inf(name, value):
    return NormValue(Fraction(value), NormReport(f"inf {name}", value, EXACT))


@lru_cache(maxsize=65536)
def _const_sup(name, value):
    return NormValue(Fraction(value), NormReport(f"sup {name}", value, EXACT))


@lru_cache(maxsize=65536)
def _const_ratio(num, den, vnum, vden):
    val = abs(Fraction(vnum) / Fraction(vden))
    return NormValue(val, NormReport(f"||{num}/{den}||", float(val), EXACT))


@lru_cache(maxsize=65536)
def _const_lag(quantity, lag):
    return NormValue(Fraction(lag), NormReport(quantity, lag, EXACT))


class NormContext:
    """Evaluates and caches the norm quantities one equation spec needs.

    All quantities are evaluated on ``[from, from + window]``; norms used
    by criteria that require a shifted window (``t1 = t0 + delta``) come
    from a derived context created with :meth:`shifted`.
    """

    def __init__(self, spec, from_=None, window=None, grid=None):
        self.spec = spec
        self.from_ = spec.t0 if from_ is None else float(from_)
        self.window = default_window(spec) if window is None else float(window)
        self.grid = int(grid if grid is not None
                        else (spec.norm_grid or DEFAULT_NORM_GRID))
        self._cache = {}

    def shifted(self, offset):
        if offset == 0:
            return self
        return NormContext(self.spec, from_=self.from_ + float(offset),
                           window=self.window, grid=self.grid)

    def _window_args(self):
        return dict(from_=self.from_, window=self.window, grid=self.grid)

    def _memo(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    def norm(self, name):
        """||f|| = sup |f| as a NormValue (Fraction when exact)."""
        f = self.spec.coefficient(name)
        if f.is_constant:
            return _const_norm(name, f.value)

        def build():
            rep = sup_norm(f, **self._window_args())
            rep = replace_quantity(rep, f"||{name}||")
            exact = Fraction(rep.value) if rep.exactness == EXACT else None
            return NormValue(_exact_or_float(rep, exact), rep)
        return self._memo(("norm", name), build)

    def inf(self, name):
        f = self.spec.coefficient(name)
        if f.is_constant:
            return _const_inf(name, f.value)

        def build():
            rep = inf_norm(f, **self._window_args())
            rep = replace_quantity(rep, f"inf {name}")
            exact = Fraction(rep.value) if rep.exactness == EXACT else None
            return NormValue(_exact_or_float(rep, exact), rep)
        return self._memo(("inf", name), build)

    def sup(self, name):
        """Signed supremum (used by the positivity gate's B = sup b)."""
        f = self.spec.coefficient(name)
        if f.is_constant:
            return _const_sup(name, f.value)

        def build():
            if f.declared_sup is not None:
                rep = NormReport(f"sup {name}", f.declared_sup, EXACT)
                return NormValue(Fraction(f.declared_sup), rep)
            ts = _sample_window(**self._window_args())
            val = float(np.max(f.sample(ts)))
            rep = NormReport(f"sup {name}", val, SAMPLED,
                             (self.from_, self.from_ + self.window), self.grid)
            return NormValue(val, rep)
        return self._memo(("sup", name), build)

    def ratio_norm(self, num, den):
        """||num/den|| as the sup of the pointwise quotient, never a quotient of sups."""
        fnum = self.spec.coefficient(num)
        fden = self.spec.coefficient(den)
        if fnum.is_constant and fden.is_constant:
            if fden.value == 0:
                raise ex.EvaluationError(f"{den} is identically zero in ||{num}/{den}||")
            return _const_ratio(num, den, fnum.value, fden.value)

        def build():
            ts = _sample_window(**self._window_args())
            dens = fden.sample(ts)
            if np.any(dens == 0.0):
                raise ex.EvaluationError(f"{den}(t) = 0 inside the sampling window")
            val = float(np.max(np.abs(fnum.sample(ts) / dens)))
            rep = NormReport(f"||{num}/{den}||", val, SAMPLED,
                             (self.from_, self.from_ + self.window), self.grid)
            return NormValue(val, rep)
        return self._memo(("ratio", num, den), build)

    def lag(self, which):
        """delta = sup(t - g(t)) or tau = sup(t - h(t)), measured from t0."""
        d = getattr(self.spec, which)
        quantity = "delta" if which == "g" else "tau"
        if d.kind == IDENTITY:
            return _const_lag(quantity, 0.0)
        if d.kind == CONSTANT_LAG:
            return _const_lag(quantity, d.lag)

        def build():
            rep = lag_bounds(d, from_=self.spec.t0, window=self.window,
                             grid=self.grid)
            rep = replace_quantity(rep, quantity)
            return NormValue(rep.value, rep)
        return self._memo(("lag", which), build)

    def one_over_e(self):
        def build():
            return one_over_e_check(self.spec.a, self.spec.g,
                                    from_=self.from_, window=self.window,
                                    grid=min(self.grid, ONE_OVER_E_GRID_CAP))
        return self._memo(("one_over_e",), build)


def replace_quantity(report, quantity):
    return NormReport(quantity, report.value, report.exactness,
                      report.window, report.grid_points)
