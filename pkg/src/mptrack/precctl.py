"""Precision requirements for the Newton corrector and the choice of working level.

Every rule returns a number of decimal digits; the working precision must
carry strictly more.  With u = 10^-P:

* A keeps the error-perturbed Jacobian safely nonsingular,
* B makes the remaining corrector iterations converge to 10^-tau,
* C keeps the attainable accuracy inside the tolerance,
* C' is C split between the Newton solve (P) and residual evaluation (P').
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .mpnum import DEFAULT_MAX_BITS, PrecisionLevel, level_for_digits

OUTSIDE_CORRECTOR = "outside_corrector"
INSIDE_CORRECTOR = "inside_corrector"


@dataclass(frozen=True)
class ErrorModel:
    Psi: float
    Phi: float
    eps_E: float | None = None  # None means n^2, filled in by for_dimension
    sigma1: int = 0
    sigma2: int = 0
    tau: float = 8.0
    N: int = 2

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.eps_E is not None and self.eps_E < 1:
            raise ValueError("eps_E must be at least 1")
        if self.Psi < 0 or self.Phi < 0:
            raise ValueError("Psi and Phi must be nonnegative")
        if self.sigma1 < 0 or self.sigma2 < 0:
            raise ValueError("safety digits must be nonnegative")

    def with_tau(self, tau: float) -> ErrorModel:
        return self if tau == self.tau else replace(self, tau=tau)

    def for_dimension(self, n: int) -> ErrorModel:
        return self if self.eps_E is not None else replace(self, eps_E=float(max(1, n * n)))

    @property
    def eps(self) -> float:
        if self.eps_E is None:
            raise ValueError("eps_E unresolved; call for_dimension(n) first")
        return self.eps_E


@dataclass(frozen=True)
class RuleInputs:
    J_norm: float
    Jinv_norm: float
    v_norm: float
    d_norm: float | None = None
    iteration: int = 0


def _log10(x: float) -> float:
    return math.log10(x) if x > 0 else -math.inf


def rule_A_digits(m: ErrorModel, inp: RuleInputs) -> float:
    return m.sigma1 + _log10(inp.Jinv_norm * m.eps * (inp.J_norm + m.Phi))


def rule_B_digits(m: ErrorModel, inp: RuleInputs) -> float:
    if inp.d_norm is None:
        raise ValueError("rule B needs the latest Newton step size")
    if not 0 <= inp.iteration < m.N:
        raise ValueError(f"rule B applies only with iterations remaining (i={inp.iteration}, N={m.N})")
    floor = _log10(inp.Jinv_norm * (2 + m.eps) * (inp.J_norm + m.Phi) + 1)
    return m.sigma1 + floor + (m.tau + _log10(inp.d_norm)) / (m.N - inp.iteration)


def rule_C_digits(m: ErrorModel, inp: RuleInputs) -> float:
    return m.sigma2 + m.tau + _log10(inp.Jinv_norm * m.Psi + inp.v_norm)


def rule_Cprime_digits(m: ErrorModel, inp: RuleInputs) -> tuple[float, float]:
    """(digits for the Newton step, digits for residual evaluation)."""
    p = m.sigma2 + m.tau + _log10(inp.v_norm)
    p_eval = m.sigma2 + m.tau + _log10(inp.Jinv_norm) + _log10(m.Psi)
    return p, p_eval


def applicable_digits(m: ErrorModel, inp: RuleInputs, context: str = OUTSIDE_CORRECTOR) -> dict[str, float]:
    """Rule values that govern precision in ``context``.

    Inside the corrector B replaces A, but only while the tolerance is unmet
    and iterations remain; otherwise A is used there too.
    """
    out = {"C": rule_C_digits(m, inp)}
    if context == INSIDE_CORRECTOR:
        if inp.d_norm is None:
            raise ValueError("inside the corrector the Newton step size is required")
        if inp.iteration < m.N and inp.d_norm > 10.0 ** -m.tau:
            out["B"] = rule_B_digits(m, inp)
        else:
            out["A"] = rule_A_digits(m, inp)
    elif context == OUTSIDE_CORRECTOR:
        out["A"] = rule_A_digits(m, inp)
    else:
        raise ValueError(f"unknown context {context!r}")
    return out


def required_level(m: ErrorModel, inp: RuleInputs, context: str = OUTSIDE_CORRECTOR,
                   max_bits: int = DEFAULT_MAX_BITS) -> PrecisionLevel:
    """Smallest lattice level whose digits strictly exceed every applicable rule.

    Raises PrecisionLimitExceeded above ``max_bits``.
    """
    need = max(applicable_digits(m, inp, context).values())
    return level_for_digits(need, max_bits)
