"""Multihomogenization of straight-line programs."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .exact import QC, ZERO
from .program import Op, SlpBuilder, SlpSystem, slot_degrees


@dataclass(frozen=True)
class LinearForm:
    """sum(coeff * var) + constant, used as a patch equation."""

    coeffs: tuple[tuple[str, QC], ...]
    constant: QC = ZERO

    @classmethod
    def of(cls, coeffs: Mapping[str, object], constant=0) -> LinearForm:
        return cls(tuple((k, QC.of(v)) for k, v in coeffs.items()), QC.of(constant))

    def emit(self, b: SlpBuilder) -> int:
        terms = [b.mul(b.const(c), b.var(name)) for name, c in self.coeffs if c]
        if self.constant:
            terms.append(b.const(self.constant))
        if not terms:
            raise ValueError("patch is identically zero")
        return b.sum(terms)

    def value_at(self, point: Mapping[str, complex]) -> complex:
        return sum(complex(c) * point[name] for name, c in self.coeffs) + complex(self.constant)


def _group_indices(sys: SlpSystem, groups) -> list[tuple[int, ...]]:
    out = []
    for g in groups:
        out.append(tuple(sys.variables.index(v) if isinstance(v, str) else int(v) for v in g))
    seen = sorted(i for g in out for i in g)
    if seen != list(range(sys.n_vars)):
        raise ValueError("groups must partition the variables")
    return out


def homogenize(sys: SlpSystem, groups: Sequence[Sequence], patches: Sequence[LinearForm],
               names: Sequence[str] | None = None) -> SlpSystem:
    """Homogenize each equation per variable group and append one patch per group.

    One homogenizing variable per group is appended after the original
    variables (default names H1, H2, ...).  Setting them all to 1 gives back
    the original equations.
    """
    if len(patches) != len(groups):
        raise ValueError(f"{len(patches)} patches for {len(groups)} groups")
    gidx = _group_indices(sys, groups)
    if names is None:
        names = [f"H{g + 1}" for g in range(len(groups))]
    if len(names) != len(groups) or set(names) & set(sys.variables):
        raise ValueError("need one fresh homogenizing variable name per group")
    n = sys.n_vars
    b = SlpBuilder(list(sys.variables) + list(names))
    hom_slot = [b.var(n + g) for g in range(len(groups))]
    deg = slot_degrees(sys, gidx)
    lift_cache: dict[tuple[int, int], int] = {}

    def h_power(g: int, k: int) -> int:
        if (g, k) not in lift_cache:
            lift_cache[(g, k)] = b.pow(hom_slot[g], k)
        return lift_cache[(g, k)]

    def lift(slot: int, have: tuple, want: tuple) -> int:
        for g, (p, q) in enumerate(zip(have, want)):
            if q > p:
                slot = b.mul(slot, h_power(g, q - p))
        return slot

    new: list[int] = []
    for k, op in enumerate(sys.instructions):
        if op.kind == "const":
            new.append(b.const(sys.constants[op.a]))
        elif op.kind == "var":
            new.append(b.var(op.a))
        elif op.kind == "t":
            new.append(b.t())
        elif op.kind == "neg":
            new.append(b.neg(new[op.a]))
        elif op.kind == "mul":
            new.append(b.mul(new[op.a], new[op.b]))
        else:
            a = lift(new[op.a], deg[op.a], deg[k])
            c = lift(new[op.b], deg[op.b], deg[k])
            new.append(b._emit(Op(op.kind, a, c)))
    outs = [new[o] for o in sys.outputs] + [p.emit(b) for p in patches]
    out_groups = [gi + (n + g,) for g, gi in enumerate(gidx)]
    return b.build(outs, groups=out_groups, patch_count=len(patches))


def random_patch(names: Sequence[str], rng, digits: int = 8) -> LinearForm:
    """Patch with random unit-modulus coefficients, rounded to ``digits`` decimals."""
    coeffs = {v: random_unit(rng, digits) for v in names}
    return LinearForm(tuple(coeffs.items()), random_unit(rng, digits))


def random_unit(rng, digits: int = 8) -> QC:
    """Exact unit-modulus constant (up to rounding to ``digits`` decimals)."""
    z = cmath.exp(2j * math.pi * rng.random())
    scale = 10 ** digits
    return QC(Fraction(round(z.real * scale), scale), Fraction(round(z.imag * scale), scale))
