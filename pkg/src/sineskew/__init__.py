"""Sine-skewed probability distributions on the d-torus.

Builds asymmetric toroidal distributions by multiplying any pointwise
symmetric base density (uniform, Sine, Cosine, bivariate wrapped
Cauchy) with a sine perturbation whose normalizing constant never
changes.  Provides exact sampling, trigonometric moments and shape
parameters, constrained maximum likelihood with asymptotic covariance,
a likelihood-ratio symmetry test, finite mixtures with AIC/BIC
selection, and a deterministic command-line interface.
"""

from .families import (
    Family,
    FamilyParams,
    Modality,
    WCCoefficients,
    base_cosine_moment,
    base_is_unimodal,
    base_log_density,
    base_sample,
    cosine_log_norm_const,
    sine_log_norm_const,
    wc_coefficients,
)
from .inference import (
    FitError,
    FitOptions,
    FitResult,
    SymmetryTestResult,
    fisher_information,
    fit_mle,
    free_param_count,
    log_likelihood,
    symmetry_test,
)
from .mixture import (
    DegenerateComponentError,
    MixtureModel,
    ModelRanking,
    ModelScore,
    fit_mixture,
    mixture_log_density,
    sample_mixture,
    select_model,
)
from .numerics import (
    QuadratureGrid,
    bessel_i,
    chi_square_quantile,
    log_bessel_i,
    torus_integrate,
    wrap_angle,
)
from .skew import (
    Mode,
    ShapeSummary,
    SkewModel,
    find_modes,
    marginal_closed_form_gate,
    marginal_log_density,
    sample,
    shape_summary,
    skew_cdf,
    skew_log_density,
    trig_moments,
)

__version__ = "0.1.0"

__all__ = [
    "Family", "FamilyParams", "Modality", "WCCoefficients",
    "base_cosine_moment", "base_is_unimodal", "base_log_density",
    "base_sample", "cosine_log_norm_const", "sine_log_norm_const",
    "wc_coefficients",
    "FitError", "FitOptions", "FitResult", "SymmetryTestResult",
    "fisher_information", "fit_mle", "free_param_count", "log_likelihood",
    "symmetry_test",
    "DegenerateComponentError", "MixtureModel", "ModelRanking", "ModelScore",
    "fit_mixture", "mixture_log_density", "sample_mixture", "select_model",
    "QuadratureGrid", "bessel_i", "chi_square_quantile", "log_bessel_i",
    "torus_integrate", "wrap_angle",
    "Mode", "ShapeSummary", "SkewModel", "find_modes",
    "marginal_closed_form_gate", "marginal_log_density", "sample",
    "shape_summary", "skew_cdf", "skew_log_density", "trig_moments",
]
