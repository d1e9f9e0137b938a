"""Exact complex rationals used for SLP constants."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True, slots=True)
class QC:
    """re + im*i with Fraction parts."""

    re: Fraction
    im: Fraction = Fraction(0)

    @classmethod
    def of(cls, x) -> QC:
        if isinstance(x, QC):
            return x
        if isinstance(x, tuple):
            return cls(Fraction(x[0]), Fraction(x[1]))
        if isinstance(x, complex):
            return cls(Fraction(x.real), Fraction(x.imag))
        if isinstance(x, str):
            return cls(parse_decimal(x))
        return cls(Fraction(x))

    def __add__(self, o: QC) -> QC:
        return QC(self.re + o.re, self.im + o.im)

    def __sub__(self, o: QC) -> QC:
        return QC(self.re - o.re, self.im - o.im)

    def __mul__(self, o: QC) -> QC:
        return QC(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    def __truediv__(self, o: QC) -> QC:
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("division by an exact zero constant")
        return QC((self.re * o.re + self.im * o.im) / den,
                  (self.im * o.re - self.re * o.im) / den)

    def __neg__(self) -> QC:
        return QC(-self.re, -self.im)

    def __pow__(self, k: int) -> QC:
        if k < 0:
            return QC(Fraction(1)) / (self ** -k)
        out, base = QC(Fraction(1)), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __abs__(self) -> float:
        return math.hypot(float(self.re), float(self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    @property
    def is_real(self) -> bool:
        return self.im == 0


ZERO = QC(Fraction(0))
ONE = QC(Fraction(1))
IMAG = QC(Fraction(0), Fraction(1))


def parse_decimal(text: str) -> Fraction:
    """Exact value of a decimal literal such as ``0.000000002`` or ``1.5e-3``."""
    return Fraction(text.strip())


def format_rational(x: Fraction) -> str:
    """Shortest exact text for ``x``: a terminating decimal when possible."""
    if x.denominator == 1:
        return str(x.numerator)
    d = x.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d == 1:
        places = max(twos, fives)
        scaled = abs(x.numerator) * (10 ** places // x.denominator)
        digits = str(scaled).rjust(places + 1, "0")
        text = digits[:-places] + "." + digits[-places:]
        if len(text) <= 24:
            return ("-" if x < 0 else "") + text
    return f"{x.numerator}/{x.denominator}"


def format_qc(c: QC) -> str:
    if c.im == 0:
        return format_rational(c.re)
    im = format_rational(abs(c.im))
    sign = "-" if c.im < 0 else "+"
    if c.re == 0:
        return f"({'-' if c.im < 0 else ''}{im}*I)"
    return f"({format_rational(c.re)} {sign} {im}*I)"
