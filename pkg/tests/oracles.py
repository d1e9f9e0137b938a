"""Reference computations that do not go through the package's own code paths.

Polynomials are dicts {exponent tuple: (re, im) Fraction pair}; they are
written to text for the parser and evaluated here term by term with gmpy2.
"""
from __future__ import annotations

import math
import random
from fractions import Fraction

import gmpy2

ORACLE_BITS = 256


def random_poly(rng: random.Random, nvars: int, max_deg: int, nterms: int,
                decimals: int | None = None) -> dict:
    poly = {}
    while len(poly) < nterms:
        d = rng.randint(0, max_deg)
        exps = [0] * nvars
        for _ in range(d):
            exps[rng.randrange(nvars)] += 1
        if decimals is None:
            re = Fraction(rng.randint(-99, 99), rng.randint(1, 16))
            im = Fraction(rng.randint(-99, 99), rng.randint(1, 16))
        else:
            scale = 10 ** decimals
            re = Fraction(rng.randint(-9 * scale, 9 * scale), scale)
            im = Fraction(rng.randint(-9 * scale, 9 * scale), scale)
        poly[tuple(exps)] = (re, im)
    return poly


def _frac_text(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    return f"({x.numerator}/{x.denominator})"


def poly_text(poly: dict, names) -> str:
    terms = []
    for exps, (re, im) in poly.items():
        factors = [f"({_frac_text(re)} + {_frac_text(im)}*I)"]
        factors += [f"{v}^{e}" for v, e in zip(names, exps) if e]
        terms.append("*".join(factors))
    return " + ".join(terms)


def poly_eval(poly: dict, point, bits: int = ORACLE_BITS):
    """Exact-coefficient evaluation at ``bits``."""
    with gmpy2.context(precision=bits):
        x = [gmpy2.mpc(p) for p in point]
        acc = gmpy2.mpc(0)
        for exps, (re, im) in poly.items():
            term = gmpy2.mpc(gmpy2.mpfr(gmpy2.mpq(re.numerator, re.denominator)),
                             gmpy2.mpfr(gmpy2.mpq(im.numerator, im.denominator)))
            for xi, e in zip(x, exps):
                for _ in range(e):
                    term = term * xi
            acc = acc + term
        return acc


def fd_jacobian(polys, point, h: str = "1e-30", bits: int = ORACLE_BITS):
    """Central differences (f(x+h e_j) - f(x-h e_j)) / 2h at ``bits``."""
    with gmpy2.context(precision=bits):
        hh = gmpy2.mpfr(h)
        base = [gmpy2.mpc(p) for p in point]
        rows = []
        for poly in polys:
            row = []
            for j in range(len(base)):
                up = list(base)
                dn = list(base)
                up[j] += hh
                dn[j] -= hh
                row.append((poly_eval(poly, up, bits) - poly_eval(poly, dn, bits)) / (2 * hh))
            rows.append(row)
        return rows


def chebyshev_roots_closed_form(n: int) -> list[float]:
    """cos((2m+1-2k) pi / (2m+2)), k = 0..m, for the degree n = m+1 polynomial."""
    m = n - 1
    return [math.cos((2 * m + 1 - 2 * k) * math.pi / (2 * m + 2)) for k in range(m + 1)]


def rule_A(Jinv, eps_E, J, Phi, sigma1):
    return sigma1 + math.log10(Jinv * eps_E * (J + Phi))


def rule_B(Jinv, eps_E, J, Phi, sigma1, tau, d, N, i):
    return sigma1 + math.log10(Jinv * (2 + eps_E) * (J + Phi) + 1) + (tau + math.log10(d)) / (N - i)


def rule_C(Jinv, Psi, v, sigma2, tau):
    return sigma2 + tau + math.log10(Jinv * Psi + v)


def lattice_digits(bits: int) -> int:
    return math.floor(bits * math.log10(2))


def solve_complex(A, b):
    """Plain Gaussian elimination with partial pivoting on Python complex lists."""
    n = len(A)
    M = [list(map(complex, row)) + [complex(bi)] for row, bi in zip(A, b)]
    for k in range(n):
        p = max(range(k, n), key=lambda i: abs(M[i][k]))
        M[k], M[p] = M[p], M[k]
        for i in range(k + 1, n):
            f = M[i][k] / M[k][k]
            for j in range(k, n + 1):
                M[i][j] -= f * M[k][j]
    x = [0j] * n
    for i in range(n - 1, -1, -1):
        x[i] = (M[i][n] - sum(M[i][j] * x[j] for j in range(i + 1, n))) / M[i][i]
    return x


def least_squares_patch(rows):
    """c with sum_j c_j w_j = 1 fitted through projective points ``rows`` (normal equations)."""
    n = len(rows[0])
    A = [[sum(r[i].conjugate() * r[j] for r in rows) for j in range(n)] for i in range(n)]
    b = [sum(r[i].conjugate() for r in rows) for i in range(n)]
    c = solve_complex(A, b)
    resid = [abs(sum(ci * wi for ci, wi in zip(c, r)) - 1) for r in rows]
    return c, resid
