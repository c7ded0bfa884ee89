"""Symbolic kernel: exact normal forms for the frame derivation algebra."""

from .algebra import (
    ALPHA,
    ALPHABAR,
    BETA,
    BETABAR,
    C,
    CBAR,
    GENERIC,
    HEISENBERG,
    MU_EXACT,
    FrameAlgebra,
)
from .evaluate import (
    DEFAULT_POLICY,
    ConfigurationError,
    MissingAssignment,
    PointSample,
    Randomized,
    Structural,
    equals,
    evaluate,
    is_zero,
)
from .expr import D0, D1, D2, DR, R, Atom, Poly, atom, const, cos_, exp_, log_, poly_pow, sin_
from .numbers import QI
from .parser import AtomTable, ParseError, parse
from .printing import to_latex, to_text
from .tree import D, conj, normalize

__all__ = [
    "ALPHA", "ALPHABAR", "BETA", "BETABAR", "C", "CBAR", "GENERIC", "HEISENBERG", "MU_EXACT",
    "FrameAlgebra", "DEFAULT_POLICY", "ConfigurationError", "MissingAssignment", "PointSample",
    "Randomized", "Structural", "equals", "evaluate", "is_zero", "D0", "D1", "D2", "DR", "R",
    "Atom", "Poly", "atom", "const", "cos_", "exp_", "log_", "poly_pow", "sin_", "QI",
    "AtomTable", "ParseError", "parse", "to_latex", "to_text", "D", "conj", "normalize",
    "differentiate", "conjugate",
]


def differentiate(e, w, ctx=GENERIC) -> Poly:
    """Normal form of ``D_w e``; ``w`` is a letter index or one of ``D1 D2 D0 Dr``."""
    return normalize(D(w, e), ctx)


def conjugate(e, ctx=GENERIC) -> Poly:
    """Normal form of the complex conjugate of ``e``."""
    return normalize(conj(e), ctx)
