"""Straight-line programs: representation, evaluation, derivatives and error bounds."""
from .blend import Homotopy, make_homotopy
from .bounds import CoeffBounds, accumulate_error, coeff_bounds, expand
from .exact import QC
from .homog import LinearForm, homogenize, random_patch, random_unit
from .parse import Problem, SlpParseError, format_problem, parse_problem, parse_system
from .program import Op, SlpBuilder, SlpSystem, evaluate, jacobian

__all__ = [
    "CoeffBounds", "Homotopy", "LinearForm", "Op", "Problem", "QC", "SlpBuilder",
    "SlpParseError", "SlpSystem", "accumulate_error", "coeff_bounds", "evaluate", "expand",
    "format_problem", "homogenize", "random_unit", "jacobian", "make_homotopy", "parse_problem",
    "parse_system", "random_patch",
]
