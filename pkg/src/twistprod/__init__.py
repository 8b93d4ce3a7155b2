"""Numerical verification of doubly twisted product geometry.

Builds product Riemannian metrics with two positive scaling functions,
differentiates everything with exact second-order forward jets, and checks
connection, curvature-form, and mean-curvature statements at sampled
points. The `twistprod` command runs the bundled scene files.
"""

from .autodiff import Jet2, JetDomainError, seed_point
from .expr import (
    EvalDomainError, ExprError, ExprNameError, ExprSyntaxError, Expression,
    parse, pretty_print,
)
from .geometry import (
    ChartDomain, MetricField, NotPositiveDefinite, ScalarField, TangentVector,
    VectorField, christoffel, covariant_derivative, gradient, metric_at,
    orthonormal_frame,
)
from .immersion import (
    DegenerateSplit, GaussMismatch, ImmersionSetup, MeanCurvature,
    NormalVector, RankDeficient, SmoothMap, isometry_residual,
    mean_curvature, mixed_totally_geodesic_residual, partial_traces,
    second_fundamental_form, shape_operator, umbilicity_residual,
)
from .products import (
    DoublyTwistedProduct, MixedBlockField, NonPositiveTwist,
    build_doubly_twisted, lift, predicted_connection, verify_proposition1,
)
from .report import CheckRecord, VerificationReport
from .theorems import (
    DoublyTwistedImmersionScenario, FlatnessRequired, PsiValues,
    ScenarioError, check_totally_geodesic_characterization,
    moore_forward_check, psi, verify_connection_axioms,
    verify_corollary_chen, verify_corollary_doubly_warped,
    verify_hphi_decomposition, verify_minimality,
    verify_normal_gradient_lemma, verify_thm31_inequality,
    verify_totally_geodesic,
)

__version__ = "0.1.0"

__all__ = [
    "Jet2", "JetDomainError", "seed_point",
    "Expression", "parse", "pretty_print",
    "ExprError", "ExprSyntaxError", "ExprNameError", "EvalDomainError",
    "ChartDomain", "ScalarField", "VectorField", "TangentVector",
    "MetricField", "NotPositiveDefinite", "metric_at", "christoffel",
    "gradient", "covariant_derivative", "orthonormal_frame",
    "SmoothMap", "ImmersionSetup", "NormalVector", "MeanCurvature",
    "RankDeficient", "DegenerateSplit", "GaussMismatch",
    "isometry_residual", "second_fundamental_form", "shape_operator",
    "mean_curvature", "partial_traces", "mixed_totally_geodesic_residual",
    "umbilicity_residual",
    "DoublyTwistedProduct", "build_doubly_twisted", "lift",
    "NonPositiveTwist", "MixedBlockField", "predicted_connection",
    "verify_proposition1",
    "CheckRecord", "VerificationReport",
    "DoublyTwistedImmersionScenario", "ScenarioError", "FlatnessRequired",
    "PsiValues", "psi",
    "verify_hphi_decomposition", "verify_thm31_inequality",
    "check_totally_geodesic_characterization", "verify_totally_geodesic",
    "verify_minimality", "verify_corollary_doubly_warped",
    "verify_corollary_chen", "moore_forward_check",
    "verify_connection_axioms", "verify_normal_gradient_lemma",
    "__version__",
]
