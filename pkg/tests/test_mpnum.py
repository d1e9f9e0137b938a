import math
import random
from fractions import Fraction

import gmpy2
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mptrack.mpnum import (DOUBLE, MpComplex, MpVector, PrecisionLevel, PrecisionLimitExceeded,
                           arith, decimal_digits, format_real, lattice, level, level_for_digits,
                           max_norm, unit_roundoff, with_precision)


def test_unit_roundoff_and_digits():
    assert unit_roundoff(level(52)) == 2.0 ** -52
    assert unit_roundoff(level(52)) == pytest.approx(2.220446e-16, rel=1e-6)
    assert decimal_digits(level(64)) == 19
    assert decimal_digits(level(96)) == 28
    assert decimal_digits(level(52)) == 15
    assert decimal_digits(level(128)) == 38


@pytest.mark.parametrize("bits", [0, 53, 63, 65, 80, 100])
def test_off_lattice_levels_rejected(bits):
    with pytest.raises(ValueError):
        PrecisionLevel(bits)


def test_lattice_is_ordered_and_monotone():
    levels = lattice(1024)
    assert levels[0] == DOUBLE and levels[-1].bits == 1024
    assert [l.bits for l in levels[:4]] == [52, 64, 96, 128]
    for lo, hi in zip(levels, levels[1:]):
        assert lo < hi
        assert unit_roundoff(lo) > unit_roundoff(hi)
        assert decimal_digits(lo) < decimal_digits(hi)
        assert lo.up() == hi and hi.down() == lo


@pytest.mark.parametrize("digits,bits", [(14.0, 52), (14.99, 52), (15.0, 64), (18.9, 64),
                                         (19.0, 96), (23.1, 96), (28.0, 128)])
def test_level_for_digits_strictly_exceeds(digits, bits):
    lvl = level_for_digits(digits)
    assert lvl.bits == bits
    assert lvl.decimal_digits > digits


def test_level_for_digits_cap():
    with pytest.raises(PrecisionLimitExceeded):
        level_for_digits(1e6, 1024)
    with pytest.raises(PrecisionLimitExceeded):
        level_for_digits(40, 128)


def test_with_precision_raise_and_lower():
    one = MpComplex.of(1, 52)
    up = with_precision(one, 96)
    assert up.prec.bits == 96 and complex(up) == 1
    third = MpComplex.of(Fraction(1, 3), 256)
    down = with_precision(third, 52)
    assert complex(down).real == 1 / 3
    x = MpComplex.of(0.1 + 0.7j, 52)
    assert with_precision(with_precision(x, 128), 52) == x


@settings(max_examples=50, deadline=None)
@given(st.floats(-1e10, 1e10), st.floats(-1e10, 1e10),
       st.sampled_from([64, 96, 128, 256]), st.sampled_from([52, 64, 96]))
def test_round_trip_through_higher_level(re, im, q, p):
    x = MpComplex.of(complex(re, im), q)
    if p <= q:
        assert with_precision(with_precision(x, q), p) == with_precision(x, p)


def test_arith_exact_cases():
    for bits in (52, 64, 256):
        one = MpComplex.of(1, bits)
        i = MpComplex.of(1j, bits)
        assert complex(arith("add", one, one)) == 2
        assert complex(arith("mul", i, i)) == -1
        assert complex(arith("neg", one)) == -1


def test_arith_division_against_oracle():
    x = arith("div", MpComplex.of(1, 52), MpComplex.of(3, 52))
    with gmpy2.context(precision=256):
        resid = abs(3 * gmpy2.mpc(complex(x)) - 1)
    assert resid <= 3 * 2.0 ** -52


def test_arith_errors():
    with pytest.raises(ZeroDivisionError):
        arith("div", MpComplex.of(1, 52), MpComplex.of(0, 52))
    with pytest.raises(ValueError):
        arith("add", MpComplex.of(1, 52), MpComplex.of(1, 64))


def test_arith_within_two_ulps_of_reference():
    rng = random.Random(5)
    u = 2.0 ** -52
    for _ in range(200):
        a = complex(rng.uniform(-10, 10), rng.uniform(-10, 10))
        b = complex(rng.uniform(-10, 10), rng.uniform(-10, 10))
        for op in ("add", "sub", "mul", "div"):
            got = complex(arith(op, MpComplex.of(a, 52), MpComplex.of(b, 52)))
            ref = arith(op, MpComplex.of(a, 256), MpComplex.of(b, 256))
            with gmpy2.context(precision=256):
                err = float(abs(gmpy2.mpc(got) - ref.value))
                scale = float(abs(ref.value))
                if op in ("add", "sub"):
                    scale = max(scale, abs(a), abs(b))
            assert err <= 4 * u * scale, (op, a, b)


def test_max_norm_examples():
    assert max_norm(MpVector.of([1, -2, 1j])) == 2
    assert max_norm(MpVector.of([0, 0])) == 0
    assert max_norm(MpVector.of([3 + 4j])) == 5
    assert max_norm(MpVector.of([3 + 4j], 128)) == 5


def test_format_round_trips():
    for bits in (52, 64, 128, 256):
        lvl = level(bits)
        with gmpy2.context(precision=bits):
            x = gmpy2.mpfr(1) / 7 if bits > 52 else 1 / 7
            s = format_real(x, lvl)
            back = gmpy2.mpfr(s, bits) if bits > 52 else float(s)
        assert back == x, (bits, s)
    assert format_real(0.0, DOUBLE).startswith("0.0")
    assert "e-" in format_real(-1.5e-30, DOUBLE)


def test_vector_precision_is_uniform():
    v = MpVector.of([1, 2 + 1j], 96)
    assert v.prec.bits == 96
    assert v.with_precision(52).prec.bits == 52
    assert math.isclose(v.max_norm(), math.sqrt(5))
