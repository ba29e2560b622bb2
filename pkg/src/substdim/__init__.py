"""Amorphic complexity of constant-length substitution subshifts."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    ParseError,
    PreconditionError,
    Substitution,
    factor_complexity,
    is_finite_subshift,
    language,
    parse_substitution,
)
from .spectral import (  # noqa: E402
    FiniteSubshiftError,
    GammaUndecided,
    agreement_stats,
    find_coincidence,
    height,
    injective_reduction,
    pure_base,
)
from .bounds import AcBounds, ClassifyConfig, binary_formula, classify, general_bounds, refine_bounds  # noqa: E402

__all__ = [
    "AcBounds", "ClassifyConfig", "FiniteSubshiftError", "GammaUndecided", "ParseError",
    "PreconditionError", "Substitution", "agreement_stats", "binary_formula", "classify",
    "factor_complexity", "find_coincidence", "general_bounds", "height", "injective_reduction",
    "is_finite_subshift", "language", "parse_substitution", "pure_base", "refine_bounds",
]
