import random
from fractions import Fraction

import gmpy2
import pytest

from mptrack.homotopy import chebyshev, chemical_system, griewank_target
from mptrack.mpnum import MpVector
from mptrack.slp import (LinearForm, SlpParseError, accumulate_error, coeff_bounds, evaluate,
                         expand, format_problem, homogenize, jacobian, make_homotopy,
                         parse_problem, parse_system)

import oracles


def ev(sys, point, t=0, bits=None):
    return evaluate(sys, MpVector.of(point, bits or 52), t, bits).to_complex()


def test_parse_and_evaluate_examples():
    assert ev(parse_system("z1^2 - 1"), [2]) == [3]
    f = parse_system("(29/16)*z1^3 - 2*z1*z2")
    assert ev(f, [2, 1]) == [10.5]
    assert ev(griewank_target(), [0, 0]) == [0, 0]
    assert ev(chemical_system(), [0, 0, 1])[2] == pytest.approx(-849.96, abs=1e-12)
    assert ev(chebyshev(2), [1]) == [0.5]


@pytest.mark.parametrize("text", ["z1^2 -", "z1^1.5", "z1 + (2", "variables x; function y;"])
def test_parse_errors(text):
    with pytest.raises(SlpParseError):
        parse_system(text)


def test_parse_error_reports_position():
    with pytest.raises(SlpParseError) as info:
        parse_problem("variables x;\nfunction x^2 +* 1;\n")
    assert info.value.line == 2


def test_jacobian_examples():
    J, _ = jacobian(parse_system("z1^2"), MpVector.of([3]))
    assert J.to_complex() == [[6]]
    J, dt = jacobian(parse_system("z - t"), MpVector.of([0.3]), 0.7)
    assert J.to_complex() == [[1]] and dt.to_complex() == [-1]


def test_jacobian_random_cubic_high_precision():
    rng = random.Random(2)
    polys = [oracles.random_poly(rng, 2, 3, 5) for _ in range(2)]
    sys = parse_system(";".join(oracles.poly_text(p, ["x", "y"]) for p in polys))
    pt = [complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(2)]
    J, _ = jacobian(sys, MpVector.of(pt, 256), 0, 256)
    ref = oracles.fd_jacobian(polys, pt)
    with gmpy2.context(precision=256):
        for row, rrow in zip(J.rows, ref):
            for a, b in zip(row, rrow):
                assert float(abs(a - b)) <= 1e-20 * max(1.0, float(abs(b)))


def test_constants_re_round_at_high_precision():
    sys = parse_system("(1/3)*x")
    val = evaluate(sys, MpVector.of([1], 256), 0, 256).entries[0]
    with gmpy2.context(precision=256):
        assert abs(val * 3 - 1) < 2.0 ** -250
    sys = parse_system("0.1*x")
    val = evaluate(sys, MpVector.of([1], 256), 0, 256).entries[0]
    with gmpy2.context(precision=256):
        assert abs(val * 10 - 1) < 2.0 ** -250


def test_homogenize_single_group():
    g = parse_system("z^2 - 1")
    G = homogenize(g, [["z"]], [LinearForm.of({"z": 1, "H1": 2}, -1)])
    assert G.variables == ("z", "H1") and G.patch_count == 1
    # G(z, 1) = g(z); G(z, H) = z^2 - H^2
    assert ev(G, [3, 1])[0] == 8
    assert ev(G, [3, 2])[0] == 5


def test_homogenize_scaling_property():
    rng = random.Random(4)
    f = chemical_system()
    patch = LinearForm.of({"z1": 1, "z2": 1, "z3": 1, "H1": 1}, -1)
    G = homogenize(f, [["z1", "z2", "z3"]], [patch])
    x = [complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(4)]
    lam = complex(0.7, -0.4)
    a = evaluate(G, MpVector.of(x, 128), 0, 128).to_complex()
    b = evaluate(G, MpVector.of([lam * v for v in x], 128), 0, 128).to_complex()
    for k, D in enumerate(f.degrees):
        assert b[k] == pytest.approx(lam ** D * a[k], rel=1e-12)


def test_griewank_multidegrees():
    G = homogenize(griewank_target(), [["z1"], ["z2"]],
                   [LinearForm.of({"z1": 1, "H1": 1}, -1), LinearForm.of({"z2": 1, "H2": 1}, -1)])
    assert G.multidegrees()[:2] == [(3, 1), (2, 1)]


def test_homogenize_patch_count_mismatch():
    with pytest.raises(ValueError):
        homogenize(griewank_target(), [["z1"], ["z2"]], [LinearForm.of({"z1": 1}, 1)])


def test_coeff_bounds_examples():
    G = homogenize(griewank_target(), [["z1"], ["z2"]],
                   [LinearForm.of({"z1": 1, "H1": 1}, -1), LinearForm.of({"z2": 1, "H2": 1}, -1)])
    cb = coeff_bounds(G)
    # D = 3, sum|c| = 29/16 + 2
    assert cb.Psi == pytest.approx(3 * (29 / 16 + 2))
    assert cb.Phi == pytest.approx(6 * (29 / 16 + 2))
    cb = coeff_bounds(chemical_system())
    assert cb.Psi == pytest.approx(120000, rel=1e-4)
    assert cb.Phi == pytest.approx(240000, rel=1e-4)
    cb50 = coeff_bounds(chebyshev(50))
    assert cb50.Psi / 50 == pytest.approx(12300, rel=0.01)


def test_accumulate_error_examples():
    assert accumulate_error(parse_system("0.5"), MpVector.of([]), 0, 52) == 0
    assert accumulate_error(parse_system("x^2"), MpVector.of([1]), 0, 52) <= 2 * 2.0 ** -52


def test_error_containment_in_bound_regime():
    # homogeneous system with ||z|| <= 1: error stays under Psi*u
    rng = random.Random(8)
    f = homogenize(chemical_system(), [["z1", "z2", "z3"]],
                   [LinearForm.of({"z1": 1, "z2": 1, "z3": 1, "H1": 1}, -1)])
    psi = coeff_bounds(f).Psi
    u = 2.0 ** -52
    for _ in range(20):
        x = [complex(rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7)) for _ in range(4)]
        lo = evaluate(f, MpVector.of(x), 0, 52).to_complex()
        hi = evaluate(f, MpVector.of(x, 256), 0, 256).to_complex()
        assert max(abs(a - b) for a, b in zip(lo, hi)) <= psi * u


def test_homotopy_endpoints():
    f = parse_system("x^2 - 2")
    g = parse_system("x^2 - 1")
    H = make_homotopy(f, g, gamma=Fraction(3, 5) + 0)
    assert ev(H.system, [2], 1) == [pytest.approx(0.6 * 3)]
    assert ev(H.system, [2], 0) == [2]


def test_format_round_trip():
    p = parse_problem("variables x, y;\nfunction (1/3)*x^2 - 2.5*x*y + I;\nfunction x - y;\ngamma 0.6 0.8;\n")
    q = parse_problem(format_problem(p))
    assert expand(p.target) == expand(q.target)
    assert q.gamma == p.gamma
