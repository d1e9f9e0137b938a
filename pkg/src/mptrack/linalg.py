"""Dense complex Gaussian elimination with partial pivoting at any precision.

Elimination gives up as soon as the largest available pivot is below
``u * eps_E * ||A||_max``: past that point the answer would be noise, so
the caller gets a singular declaration instead of a solution.
"""
from __future__ import annotations

import cmath
import math
import random
from dataclasses import dataclass
from typing import Sequence

from .mpnum import (MpMatrix, MpVector, PrecisionLevel, raw_max_norm, to_raw,
                    working)


class SingularMatrix(ArithmeticError):
    """Raised by the estimators when elimination declares the matrix singular."""


@dataclass(frozen=True)
class SolveReport:
    solution: MpVector | None
    pivot_min: float
    declared_singular: bool

    def __post_init__(self):
        if self.declared_singular and self.solution is not None:
            raise ValueError("a singular declaration carries no solution")


class LU:
    """Row-pivoted LU factors of a square raw-value matrix.

    Construct inside ``working(lvl)``.  ``singular`` is set instead of
    raising; ``solve`` must not be called on a singular factorization.
    """

    __slots__ = ("n", "a", "perm", "pivot_min", "singular", "norm")

    def __init__(self, rows: Sequence[Sequence], u: float, eps_E: float, norm: float | None = None):
        n = len(rows)
        a = [list(r) for r in rows]
        if any(len(r) != n for r in a):
            raise ValueError("matrix must be square")
        self.n = n
        self.norm = raw_max_norm(v for r in a for v in r) if norm is None else norm
        threshold = u * eps_E * self.norm
        perm = list(range(n))
        pivot_min = math.inf
        self.singular = False
        for k in range(n):
            p, best = k, abs(a[k][k])
            for i in range(k + 1, n):
                m = abs(a[i][k])
                if m > best:
                    p, best = i, m
            best = float(best)
            pivot_min = min(pivot_min, best)
            if best == 0.0 or best < threshold:
                self.singular = True
                break
            if p != k:
                a[k], a[p] = a[p], a[k]
                perm[k], perm[p] = perm[p], perm[k]
            rk = a[k]
            piv = rk[k]
            for i in range(k + 1, n):
                ri = a[i]
                if ri[k] == 0:
                    continue
                f = ri[k] / piv
                ri[k] = f
                for j in range(k + 1, n):
                    ri[j] -= f * rk[j]
        self.a, self.perm = a, perm
        self.pivot_min = 0.0 if n == 0 else pivot_min

    def solve(self, b: Sequence) -> list:
        n, a = self.n, self.a
        y = [b[p] for p in self.perm]
        for i in range(n):
            ri = a[i]
            s = y[i]
            for j in range(i):
                s -= ri[j] * y[j]
            y[i] = s
        for i in range(n - 1, -1, -1):
            ri = a[i]
            s = y[i]
            for j in range(i + 1, n):
                s -= ri[j] * y[j]
            y[i] = s / ri[i]
        return y


def default_eps_E(n: int) -> float:
    return float(max(1, n * n))


def solve(A: MpMatrix, b: MpVector, eps_E: float | None = None) -> SolveReport:
    """Solve ``A x = b`` at A's precision, or declare A singular."""
    n, m = A.shape
    if n != m or len(b) != n:
        raise ValueError(f"cannot solve a {n}x{m} system with a right-hand side of length {len(b)}")
    eps_E = default_eps_E(n) if eps_E is None else eps_E
    if eps_E < 1:
        raise ValueError("eps_E must be at least 1")
    lvl = A.prec
    rhs = b.with_precision(lvl).entries
    with working(lvl):
        lu = LU(A.rows, lvl.unit_roundoff, eps_E)
        if lu.singular:
            return SolveReport(None, lu.pivot_min, True)
        x = lu.solve(rhs)
    return SolveReport(MpVector(tuple(x), lvl), lu.pivot_min, False)


def random_unit_vector(n: int, rng: random.Random, lvl: PrecisionLevel) -> list:
    """Components uniform on the complex unit circle (max norm exactly 1 up to rounding)."""
    return [to_raw(cmath.exp(2j * math.pi * rng.random()), lvl) for _ in range(n)]


def inv_norm_from_lu(lu: LU, rng: random.Random, lvl: PrecisionLevel) -> float:
    """||y|| for J y = b with a random unit b; a cheap lower estimate of ||J^-1||."""
    y = lu.solve(random_unit_vector(lu.n, rng, lvl))
    return raw_max_norm(y)


def inv_norm_estimate(A: MpMatrix, rng: random.Random, eps_E: float | None = None) -> float:
    n, _ = A.shape
    eps_E = default_eps_E(n) if eps_E is None else eps_E
    with working(A.prec):
        lu = LU(A.rows, A.prec.unit_roundoff, eps_E)
        if lu.singular:
            raise SingularMatrix(f"pivot {lu.pivot_min:.3g} below the singularity threshold")
        return inv_norm_from_lu(lu, rng, A.prec)


def condition_estimate(A: MpMatrix, rng: random.Random, eps_E: float | None = None) -> float:
    """||A||_max times the one-solve estimate of ||A^-1||."""
    return A.max_norm() * inv_norm_estimate(A, rng, eps_E)
