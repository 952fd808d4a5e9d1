"""Kneading-map combinatorics, high-precision parameter realization, and
numerical no-acip diagnostics for real unicritical maps f(x) = x^ell + c.

The module layering mirrors the pipeline:

  kneading     exact integer combinatorics (rules, cutting times, checks)
  orbits       extended-precision orbit tables and precritical ladders
  solver       bisection realization of a rule as a parameter bracket
  diagnostics  scaling, derivative bands, partial sums, verification lemmas
  cplane       complex preimage trees, Poincare-series partials, wake angles
  cli          batch command-line surface over all of the above
"""

from .errors import (
    AdmissibilityViolation,
    ClosestReturnViolation,
    CriticalCollision,
    EscapeError,
    KneadlabError,
    NoRootError,
    PostcriticalBasePoint,
    PrecisionExhausted,
    RuleViolation,
    UndecidedSymbol,
    WindowExhausted,
    WitnessFailure,
)
from .extprec import escape_radius, to_decimal, working_precision
from .kneading import (
    CuttingTimes,
    KneadingMap,
    KneadingSequence,
    check_admissible,
    check_feigenbaum_periodic,
    check_fibonacci_like,
    check_renormalizable,
    check_strict_hofbauer,
    constant_map,
    cutting_times,
    feigenbaum_map,
    fibonacci_map,
    kneading_sequence_from_Q,
)
from .orbits import (
    OrbitTable,
    PrecriticalLadder,
    UnicriticalMap,
    closest_precritical,
    critical_orbit,
    derivative_along,
    iterate,
    repelling_fixed_point,
)
from .solver import (
    PrecisionPolicy,
    SolveResult,
    c_min,
    sign_itinerary,
    solve_parameter,
)
from .diagnostics import (
    assemble_report,
    branch_bound_L,
    derivative_band,
    fib_divergence_report,
    gap_kappa,
    longbranched_sum,
    place_among_precritical,
    saddle_node_cascade,
    scaling_ratios,
    sigma_hat,
    verify_monotone_neighborhood,
    verify_no2cpp,
)
from .cplane import (
    PoincareSummary,
    PreimageTree,
    WakeAngles,
    green,
    koebe_bound,
    poincare_partial,
    preimages,
    sector_check,
    wake_angles,
)

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityViolation",
    "ClosestReturnViolation",
    "CriticalCollision",
    "CuttingTimes",
    "EscapeError",
    "KneadingMap",
    "KneadingSequence",
    "KneadlabError",
    "NoRootError",
    "OrbitTable",
    "PoincareSummary",
    "PostcriticalBasePoint",
    "PrecisionExhausted",
    "PrecisionPolicy",
    "PrecriticalLadder",
    "PreimageTree",
    "RuleViolation",
    "SolveResult",
    "UndecidedSymbol",
    "UnicriticalMap",
    "WakeAngles",
    "WindowExhausted",
    "WitnessFailure",
    "assemble_report",
    "branch_bound_L",
    "c_min",
    "check_admissible",
    "check_feigenbaum_periodic",
    "check_fibonacci_like",
    "check_renormalizable",
    "check_strict_hofbauer",
    "closest_precritical",
    "constant_map",
    "critical_orbit",
    "cutting_times",
    "derivative_along",
    "derivative_band",
    "escape_radius",
    "feigenbaum_map",
    "fib_divergence_report",
    "fibonacci_map",
    "gap_kappa",
    "green",
    "iterate",
    "kneading_sequence_from_Q",
    "koebe_bound",
    "longbranched_sum",
    "place_among_precritical",
    "poincare_partial",
    "preimages",
    "repelling_fixed_point",
    "saddle_node_cascade",
    "scaling_ratios",
    "sector_check",
    "sigma_hat",
    "sign_itinerary",
    "solve_parameter",
    "to_decimal",
    "verify_monotone_neighborhood",
    "verify_no2cpp",
    "wake_angles",
    "working_precision",
]
