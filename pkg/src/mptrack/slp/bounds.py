"""Monomial expansion, coefficient-based error bounds and running error bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import gmpy2

from ..mpnum import MpComplex, MpVector, PrecisionLevel, level, to_raw, working
from .exact import QC, ZERO
from .program import SlpSystem

Poly = dict  # exponent tuple -> QC; the last exponent is the power of t


def _padd(p: Poly, q: Poly, sign: int = 1) -> Poly:
    out = dict(p)
    for m, c in q.items():
        c = c if sign > 0 else -c
        s = out.get(m)
        s = c if s is None else s + c
        if s:
            out[m] = s
        else:
            out.pop(m, None)
    return out


def _pmul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = tuple(a + b for a, b in zip(m1, m2))
            s = out.get(m)
            s = c1 * c2 if s is None else s + c1 * c2
            if s:
                out[m] = s
            else:
                out.pop(m)
    return out


def expand(sys: SlpSystem) -> list[Poly]:
    """Exact monomial expansion of each output.

    Monomials are exponent tuples of length ``n_vars + 1``; the last entry is
    the exponent of ``t``.
    """
    width = sys.n_vars + 1
    unit = (0,) * width
    polys: list[Poly] = []
    for op in sys.instructions:
        if op.kind == "const":
            c = sys.constants[op.a]
            polys.append({unit: c} if c else {})
        elif op.kind in ("var", "t"):
            e = [0] * width
            e[op.a if op.kind == "var" else width - 1] = 1
            polys.append({tuple(e): QC(Fraction(1))})
        elif op.kind == "add":
            polys.append(_padd(polys[op.a], polys[op.b]))
        elif op.kind == "sub":
            polys.append(_padd(polys[op.a], polys[op.b], -1))
        elif op.kind == "neg":
            polys.append({m: -c for m, c in polys[op.a].items()})
        else:
            polys.append(_pmul(polys[op.a], polys[op.b]))
    return [polys[o] for o in sys.outputs]


def abs_coeff_sum(poly: Poly) -> float:
    return math.fsum(abs(c) for c in poly.values())


def poly_degree(poly: Poly, groups: Sequence[Sequence[int]] | None) -> int:
    """Largest per-group degree of any monomial (total degree if no groups)."""
    if not poly:
        return 0
    if not groups:
        return max(sum(m[:-1]) for m in poly)
    return max(max(sum(m[i] for i in g) for g in groups) for m in poly)


@dataclass(frozen=True)
class CoeffBounds:
    """Scalar bounds: function error <= Psi*u, Jacobian error <= Phi*u."""

    Psi: float
    Phi: float
    source: str = "coeff_formula"

    def __post_init__(self):
        if self.Psi < 0 or self.Phi < 0:
            raise ValueError("Psi and Phi must be nonnegative")
        if self.source not in ("coeff_formula", "slp_accumulated", "user_supplied"):
            raise ValueError(f"unknown bound source {self.source!r}")


def coeff_bounds(sys: SlpSystem, groups: Sequence[Sequence[int]] | None = None) -> CoeffBounds:
    """Psi = max_eq D*sum|c_i| and Phi = max_eq D*(D-1)*sum|c_i|.

    D is the equation's degree; for multihomogeneous systems (``groups`` given
    or recorded on the system) it is the largest per-group degree.
    """
    groups = groups if groups is not None else (sys.groups or None)
    psi = phi = 0.0
    for poly in expand(sys):
        d = poly_degree(poly, groups)
        s = abs_coeff_sum(poly)
        psi = max(psi, d * s)
        phi = max(phi, d * (d - 1) * s)
    return CoeffBounds(psi, phi, "coeff_formula")


# -- running error bound -------------------------------------------------------

def _exactly_representable(c: QC, raw) -> bool:
    if isinstance(raw, complex):
        return Fraction(raw.real) == c.re and Fraction(raw.imag) == c.im
    return (Fraction(gmpy2.mpq(raw.real)) == c.re
            and Fraction(gmpy2.mpq(raw.imag)) == c.im)


def accumulate_error_raw(sys: SlpSystem, x: Sequence, t, lvl: PrecisionLevel) -> tuple[list, list[float]]:
    """Evaluate at ``lvl`` carrying an absolute error bound for every slot.

    Products get max(u|a||b|, e_a|b| + e_b|a|) and sums max(u|a+b|, e_a + e_b),
    the first-order rules for relative errors u_a = e_a/|a|.  Inputs (the
    point and t) count as exact; a constant carries u|c| unless it is exactly
    representable at ``lvl``.  Returns (output values, output error bounds).
    """
    u = lvl.unit_roundoff
    consts = sys.constants_at(lvl)
    cerr = [0.0 if _exactly_representable(c, r) else u * abs(c)
            for c, r in zip(sys.constants, consts)]
    val: list = []
    err: list[float] = []
    with working(lvl):
        for op in sys.instructions:
            if op.kind == "const":
                v, e = consts[op.a], cerr[op.a]
            elif op.kind == "var":
                v, e = x[op.a], 0.0
            elif op.kind == "t":
                v, e = t, 0.0
            elif op.kind == "neg":
                v, e = -val[op.a], err[op.a]
            elif op.kind == "mul":
                a, b = val[op.a], val[op.b]
                v = a * b
                ma, mb = float(abs(a)), float(abs(b))
                e = max(u * ma * mb, err[op.a] * mb + err[op.b] * ma)
            else:
                a, b = val[op.a], val[op.b]
                v = a + b if op.kind == "add" else a - b
                e = max(u * float(abs(v)), err[op.a] + err[op.b])
            val.append(v)
            err.append(e)
    return [val[o] for o in sys.outputs], [err[o] for o in sys.outputs]


def accumulate_error(sys: SlpSystem, point: MpVector, t=0,
                     prec: PrecisionLevel | int | None = None) -> float:
    """Running bound psi on max-norm error of evaluating ``sys`` at ``prec``."""
    lvl = level(prec) if prec is not None else point.prec
    x = point.with_precision(lvl).entries
    tv = t.value if isinstance(t, MpComplex) else t
    _, errs = accumulate_error_raw(sys, x, to_raw(tv, lvl), lvl)
    return max(errs, default=0.0)


__all__ = ["CoeffBounds", "coeff_bounds", "expand", "abs_coeff_sum", "poly_degree",
           "accumulate_error", "accumulate_error_raw", "ZERO"]
