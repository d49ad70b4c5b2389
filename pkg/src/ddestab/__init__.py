"""Exponential-stability certificates for damped second-order delay equations.

The package decides stability of

    x''(t) + a(t) x'(g(t)) + b(t) x(h(t)) = 0                (pure delay)
    x''(t) + a(t) x'(t) + b(t) x(t)
           + a1(t) x'(g(t)) + b1(t) x(h(t)) = 0              (mixed)

by checking a catalog of explicit sufficient criteria, each returning a
structured certificate, and cross-validates every verdict with a built-in
method-of-steps integrator and fundamental-function estimator.
"""

__version__ = "0.1.0"

from .certificates import Certificate, NormReport
from .criteria import (CRITERIA_ORDER, CheckResult, check_all,
                       check_corollary_1, check_corollary_2, check_corollary_3,
                       check_corollary_4, check_corollary_5, check_corollary_6,
                       check_corollary_7, check_theorem_1, check_theorem_2,
                       check_theorem_3, check_theorem_4, check_theorem_5,
                       check_theorem_6, check_theorem_A)
from .eqspec import (CoefficientFn, DelayFn, EquationSpec, NormContext,
                     SpecError, inf_norm, lag_bounds, one_over_e_check,
                     sup_norm)
from .expressions import EvaluationError, ParseError, parse, to_source
from .odebounds import (BoundsUnavailable, OdeBounds, condition_38a,
                        lemma2_bounds, lemma7_bounds, quadrature_Y)
from .solver import (DecayEstimate, InitialValueProblem, IntegrationError,
                     Trajectory, estimate_decay, first_order_positivity_probe,
                     fundamental_function, integrate, integrate_first_order,
                     verify_variation_of_constants)
from .sweep import RegionSweep, SweepAxis, SweepPlan, extract_boundary, run_sweep

__all__ = [
    "__version__",
    "Certificate", "NormReport",
    "CRITERIA_ORDER", "CheckResult", "check_all",
    "check_theorem_A", "check_theorem_1", "check_corollary_1",
    "check_theorem_2", "check_corollary_2", "check_corollary_3",
    "check_theorem_3", "check_theorem_4", "check_corollary_4",
    "check_corollary_5", "check_theorem_5", "check_corollary_6",
    "check_theorem_6", "check_corollary_7",
    "CoefficientFn", "DelayFn", "EquationSpec", "NormContext", "SpecError",
    "sup_norm", "inf_norm", "lag_bounds", "one_over_e_check",
    "ParseError", "EvaluationError", "parse", "to_source",
    "OdeBounds", "BoundsUnavailable", "lemma2_bounds", "lemma7_bounds",
    "condition_38a", "quadrature_Y",
    "InitialValueProblem", "Trajectory", "DecayEstimate", "IntegrationError",
    "integrate", "fundamental_function", "estimate_decay",
    "verify_variation_of_constants", "first_order_positivity_probe",
    "integrate_first_order",
    "SweepAxis", "SweepPlan", "RegionSweep", "run_sweep", "extract_boundary",
]
