"""Complex scalars, vectors and matrices carried at a discrete set of precisions.

Precision levels are mantissa widths in bits: 52 (hardware double) and then
64, 96, 128, ... in packets of 32 bits.  Values at the 52-bit level are plain
Python ``complex``; higher levels are ``gmpy2.mpc`` numbers whose real and
imaginary parts carry exactly ``bits`` bits of mantissa.

Hot loops elsewhere in the package work on these raw values directly inside
``working(level)``; the small wrapper classes here exist for the public API.
"""
from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import gmpy2

LOG10_2 = math.log10(2.0)
DOUBLE_BITS = 52
PACKET_BITS = 32
DEFAULT_MAX_BITS = 1024


class PrecisionLimitExceeded(ArithmeticError):
    """No precision level at or below the cap satisfies a requirement."""

    def __init__(self, required_digits: float, max_bits: int):
        self.required_digits = required_digits
        self.max_bits = max_bits
        super().__init__(
            f"{required_digits:.2f} digits required but the cap is {max_bits} bits")


def _on_lattice(bits: int) -> bool:
    return bits == DOUBLE_BITS or (bits >= 64 and (bits - 64) % PACKET_BITS == 0)


@dataclass(frozen=True, order=True)
class PrecisionLevel:
    """A mantissa width in bits from the lattice {52} U {64 + 32k}."""

    bits: int

    def __post_init__(self):
        if not isinstance(self.bits, int) or not _on_lattice(self.bits):
            raise ValueError(f"{self.bits!r} is not a precision level "
                             "(use 52 or 64 + 32k)")

    @property
    def unit_roundoff(self) -> float:
        return math.ldexp(1.0, -self.bits)

    @property
    def decimal_digits(self) -> int:
        return math.floor(self.bits * LOG10_2)

    @property
    def is_double(self) -> bool:
        return self.bits == DOUBLE_BITS

    @property
    def print_digits(self) -> int:
        """Significant decimal digits needed for a string round trip."""
        mantissa = 53 if self.is_double else self.bits
        return 1 + math.ceil(mantissa * LOG10_2)

    def up(self) -> PrecisionLevel:
        return PrecisionLevel(64 if self.is_double else self.bits + PACKET_BITS)

    def down(self) -> PrecisionLevel | None:
        if self.is_double:
            return None
        if self.bits == 64:
            return DOUBLE
        return PrecisionLevel(self.bits - PACKET_BITS)

    def __str__(self):
        return f"{self.bits} bits"


DOUBLE = PrecisionLevel(DOUBLE_BITS)


def level(bits: int | PrecisionLevel) -> PrecisionLevel:
    return bits if isinstance(bits, PrecisionLevel) else PrecisionLevel(int(bits))


def lattice(max_bits: int = DEFAULT_MAX_BITS) -> list[PrecisionLevel]:
    """All levels up to and including ``max_bits``, in increasing order."""
    out = [DOUBLE]
    bits = 64
    while bits <= max_bits:
        out.append(PrecisionLevel(bits))
        bits += PACKET_BITS
    return out


def unit_roundoff(lvl: PrecisionLevel) -> float:
    return lvl.unit_roundoff


def decimal_digits(lvl: PrecisionLevel) -> int:
    return lvl.decimal_digits


def level_for_digits(digits: float, max_bits: int = DEFAULT_MAX_BITS) -> PrecisionLevel:
    """Smallest lattice level whose decimal digit count strictly exceeds ``digits``.

    Raises PrecisionLimitExceeded if that level would be above ``max_bits``.
    """
    if digits < DOUBLE.decimal_digits:
        return DOUBLE
    if not math.isfinite(digits):
        raise PrecisionLimitExceeded(digits, max_bits)
    # ceil(P / log10 2) bits, then up to the next packet boundary
    bits = max(64, math.ceil(digits / LOG10_2))
    bits = 64 + PACKET_BITS * math.ceil((bits - 64) / PACKET_BITS)
    lvl = PrecisionLevel(bits)
    while lvl.decimal_digits <= digits:
        lvl = lvl.up()
    if lvl.bits > max_bits:
        raise PrecisionLimitExceeded(digits, max_bits)
    return lvl


def working(lvl: PrecisionLevel):
    """Context manager that makes gmpy2 arithmetic round to ``lvl``."""
    if lvl.is_double:
        return contextlib.nullcontext()
    return gmpy2.context(precision=lvl.bits)


# -- raw value conversion ---------------------------------------------------

def _real_parts(x):
    if isinstance(x, MpComplex):
        x = x.value
    if isinstance(x, tuple):
        return x
    if isinstance(x, (complex, type(gmpy2.mpc(0)))):
        return x.real, x.imag
    return x, 0


def _to_float(x) -> float:
    if isinstance(x, str):
        return float(x)
    return float(x)


def _to_mpfr(x):
    if isinstance(x, Fraction):
        return gmpy2.mpfr(gmpy2.mpq(x.numerator, x.denominator))
    if isinstance(x, str):
        return gmpy2.mpfr(x.strip())
    return gmpy2.mpfr(x)


def to_raw(x, lvl: PrecisionLevel):
    """Round ``x`` to ``lvl`` and return the raw value (complex or mpc).

    ``x`` may be a number, a Fraction, a decimal string, an ``(re, im)`` pair
    of any of those, an mpc, or an MpComplex.
    """
    re, im = _real_parts(x)
    if lvl.is_double:
        return complex(_to_float(re), _to_float(im))
    with gmpy2.context(precision=lvl.bits):
        return gmpy2.mpc(_to_mpfr(re), _to_mpfr(im))


def raw_vector(values: Iterable, lvl: PrecisionLevel) -> list:
    return [to_raw(v, lvl) for v in values]


def format_real(x, lvl: PrecisionLevel) -> str:
    digits = lvl.print_digits
    if lvl.is_double:
        return f"{float(x):.{digits - 1}e}"
    return _scientific(gmpy2.mpfr(x, lvl.bits), digits)


def _scientific(x, digits: int) -> str:
    # gmpy2 2.3 mangles format specs such as ".39e", so build the string from digits()
    if gmpy2.is_zero(x):
        return f"{0.0 if not gmpy2.is_signed(x) else -0.0:.{digits - 1}e}"
    if not gmpy2.is_finite(x):
        return str(float(x))
    mant, exp, _ = x.digits(10, digits)
    sign = "-" if mant.startswith("-") else ""
    mant = mant.lstrip("-")
    e = exp - 1
    return f"{sign}{mant[0]}.{mant[1:]}e{'-' if e < 0 else '+'}{abs(e):02d}"


def parse_complex(re: str, im: str, lvl: PrecisionLevel) -> MpComplex:
    return MpComplex(to_raw((re, im), lvl), lvl)


# -- wrapped scalars and arrays ----------------------------------------------

@dataclass(frozen=True)
class MpComplex:
    """A complex number whose parts are representable at ``prec``."""

    value: object
    prec: PrecisionLevel

    @classmethod
    def of(cls, x, lvl: PrecisionLevel | int = DOUBLE) -> MpComplex:
        lvl = level(lvl)
        return cls(to_raw(x, lvl), lvl)

    def with_precision(self, lvl: PrecisionLevel | int) -> MpComplex:
        return with_precision(self, lvl)

    @property
    def real(self):
        return self.value.real

    @property
    def imag(self):
        return self.value.imag

    def __abs__(self) -> float:
        with working(self.prec):
            return float(abs(self.value))

    def __complex__(self):
        return complex(self.value)

    def to_strings(self) -> tuple[str, str]:
        return format_real(self.value.real, self.prec), format_real(self.value.imag, self.prec)

    def __eq__(self, other):
        if isinstance(other, MpComplex):
            return self.prec == other.prec and self.value == other.value
        return NotImplemented

    def __hash__(self):
        return hash((complex(self.value), self.prec.bits))

    def __neg__(self):
        return arith("neg", self)

    def __add__(self, other):
        return arith("add", self, _coerce(other, self.prec))

    def __sub__(self, other):
        return arith("sub", self, _coerce(other, self.prec))

    def __mul__(self, other):
        return arith("mul", self, _coerce(other, self.prec))

    def __truediv__(self, other):
        return arith("div", self, _coerce(other, self.prec))

    __radd__ = __add__
    __rmul__ = __mul__

    def __rsub__(self, other):
        return arith("sub", _coerce(other, self.prec), self)

    def __rtruediv__(self, other):
        return arith("div", _coerce(other, self.prec), self)

    def __repr__(self):
        re, im = self.to_strings()
        return f"MpComplex({re}, {im}, bits={self.prec.bits})"


def _coerce(x, lvl: PrecisionLevel) -> MpComplex:
    return x if isinstance(x, MpComplex) else MpComplex.of(x, lvl)


def with_precision(x: MpComplex, lvl: PrecisionLevel | int) -> MpComplex:
    """Correctly round ``x`` to ``lvl``; exact when ``lvl`` is not lower."""
    lvl = level(lvl)
    if lvl == x.prec:
        return x
    return MpComplex(to_raw(x.value, lvl), lvl)


def arith(op: str, a: MpComplex, b: MpComplex | None = None) -> MpComplex:
    """One complex operation at the shared precision of the operands."""
    if op == "neg":
        return MpComplex(-a.value, a.prec)
    if b is None or a.prec != b.prec:
        raise ValueError("arith needs two operands at the same precision")
    with working(a.prec):
        if op == "add":
            r = a.value + b.value
        elif op == "sub":
            r = a.value - b.value
        elif op == "mul":
            r = a.value * b.value
        elif op == "div":
            if b.value == 0:
                raise ZeroDivisionError("complex division by zero")
            r = a.value / b.value
        else:
            raise ValueError(f"unknown operation {op!r}")
    return MpComplex(r, a.prec)


def raw_max_norm(values: Iterable) -> float:
    """Largest complex modulus among raw values, as a float (0 for empty)."""
    best = 0.0
    for v in values:
        m = abs(v)
        if m > best:
            best = m
    return float(best)


@dataclass(frozen=True)
class MpVector:
    entries: tuple
    prec: PrecisionLevel

    @classmethod
    def of(cls, values: Iterable, lvl: PrecisionLevel | int = DOUBLE) -> MpVector:
        lvl = level(lvl)
        return cls(tuple(raw_vector(values, lvl)), lvl)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i) -> MpComplex:
        return MpComplex(self.entries[i], self.prec)

    def __iter__(self):
        return (MpComplex(v, self.prec) for v in self.entries)

    def with_precision(self, lvl: PrecisionLevel | int) -> MpVector:
        lvl = level(lvl)
        if lvl == self.prec:
            return self
        return MpVector(tuple(raw_vector(self.entries, lvl)), lvl)

    def max_norm(self) -> float:
        return max_norm(self)

    def to_complex(self) -> list[complex]:
        return [complex(v) for v in self.entries]


@dataclass(frozen=True)
class MpMatrix:
    rows: tuple
    prec: PrecisionLevel

    @classmethod
    def of(cls, rows: Sequence[Sequence], lvl: PrecisionLevel | int = DOUBLE) -> MpMatrix:
        lvl = level(lvl)
        return cls(tuple(tuple(raw_vector(r, lvl)) for r in rows), lvl)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), (len(self.rows[0]) if self.rows else 0)

    def with_precision(self, lvl: PrecisionLevel | int) -> MpMatrix:
        lvl = level(lvl)
        if lvl == self.prec:
            return self
        return MpMatrix(tuple(tuple(raw_vector(r, lvl)) for r in self.rows), lvl)

    def max_norm(self) -> float:
        with working(self.prec):
            return max((raw_max_norm(r) for r in self.rows), default=0.0)

    def to_complex(self) -> list[list[complex]]:
        return [[complex(v) for v in r] for r in self.rows]


def max_norm(v: MpVector | Sequence) -> float:
    """Max over entries of the exact complex modulus."""
    if isinstance(v, MpVector):
        if not v.entries:
            raise ValueError("max_norm of an empty vector")
        with working(v.prec):
            return raw_max_norm(v.entries)
    vals = list(v)
    if not vals:
        raise ValueError("max_norm of an empty vector")
    return raw_max_norm(vals)
