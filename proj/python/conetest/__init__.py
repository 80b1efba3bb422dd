"""Shape-constrained goodness-of-fit tests against double-cone alternatives.

The heavy lifting lives in the compiled extension; this package re-exports
its surface.
"""

from conetest._core import (  # noqa: F401
    ConeError,
    ConeSpec,
    ConvexFit,
    ConvexFitOptions,
    NullDistribution,
    ProjectionResult,
    TestOutcome,
    __version__,
    build_convex,
    build_monotone,
    build_partial_order,
    build_third_derivative,
    fit_concave,
    fit_convex,
    negate_cone,
    project_cone,
    project_cone_bruteforce,
    project_isotonic_pava,
    project_subspace,
    run_test,
    simulate_null_bootstrap,
    simulate_null_known_g,
    standardized_residuals,
    statistic,
    test_affine,
    test_constant,
    test_partial_linear,
)

__all__ = [name for name in dir() if not name.startswith("_")]
