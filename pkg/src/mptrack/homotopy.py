"""Start systems, homotopy assembly and the built-in example problems."""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Sequence

import gmpy2

from .mpnum import MpVector, level, to_raw, working
from .slp.blend import Homotopy, make_homotopy
from .slp.exact import ONE, QC, format_qc, parse_decimal
from .slp.homog import LinearForm, homogenize, random_patch, random_unit
from .slp.parse import Group, Problem, linear_form_to_text
from .slp.program import SlpBuilder, SlpSystem

START_BITS = 128


@dataclass(frozen=True)
class StartSystem:
    system: SlpSystem
    start_points: tuple[MpVector, ...]

    def __len__(self):
        return len(self.start_points)


def _roots_of(r: QC, d: int, lvl) -> list:
    """All d-th roots of r at ``lvl``."""
    with working(lvl):
        base = to_raw((r.re, r.im), lvl) ** (gmpy2.mpfr(1) / d)
        return [base * gmpy2.exp(gmpy2.mpc(0, 2 * gmpy2.const_pi() * k / d)) for k in range(d)]


def total_degree_start(degrees: Sequence[int], rng: random.Random,
                       variables: Sequence[str] | None = None,
                       hom_var: str | None = None,
                       patch: LinearForm | None = None) -> StartSystem:
    """g_i = z_i^d_i - r_i (times H^d_i when ``hom_var`` is given).

    The r_i are seeded unit-modulus constants.  Start points are every
    combination of d_i-th roots; with a homogenizing variable they are
    scaled onto ``patch``, which is appended as the last equation.
    """
    if not degrees or any(d < 1 for d in degrees):
        raise ValueError("degrees must be positive")
    n = len(degrees)
    variables = tuple(variables or (f"x{i + 1}" for i in range(n)))
    if len(variables) != n:
        raise ValueError("need one variable per degree")
    if (hom_var is None) != (patch is None):
        raise ValueError("a homogenizing variable needs a patch and vice versa")
    names = variables + ((hom_var,) if hom_var else ())
    b = SlpBuilder(names)
    rs = [random_unit(rng) for _ in degrees]
    outs = []
    for i, (d, r) in enumerate(zip(degrees, rs)):
        rhs = b.const(r)
        if hom_var:
            rhs = b.mul(rhs, b.pow(b.var(n), d))
        outs.append(b.sub(b.pow(b.var(i), d), rhs))
    if patch is not None:
        outs.append(patch.emit(b))
    sys = b.build(outs, groups=[tuple(range(n + 1))] if hom_var else (),
                  patch_count=1 if patch is not None else 0)

    lvl = level(START_BITS)
    choices = [_roots_of(r, d, lvl) for d, r in zip(degrees, rs)]
    points = []
    with working(lvl):
        for combo in itertools.product(*choices):
            pt = list(combo)
            if hom_var:
                pt.append(to_raw(1, lvl))
                coeff = dict(patch.coeffs)
                lin = sum((to_raw((coeff[v].re, coeff[v].im), lvl) * x
                           for v, x in zip(names, pt) if v in coeff), to_raw(0, lvl))
                lam = -to_raw((patch.constant.re, patch.constant.im), lvl) / lin
                pt = [lam * x for x in pt]
            points.append(MpVector(tuple(pt), lvl))
    return StartSystem(sys, tuple(points))


def _with_patches(start: SlpSystem, patches: Sequence[LinearForm], groups) -> SlpSystem:
    b = SlpBuilder(start.variables)
    outs = b.inline(start) + [p.emit(b) for p in patches]
    return b.build(outs, groups=groups, patch_count=len(patches))


def complete_problem(problem: Problem, rng: random.Random) -> tuple[Problem, StartSystem | None]:
    """Fill in what a system file may leave out: gamma, patches and a start system.

    Missing patches are drawn at random.  With no start functions a total
    degree start is generated (homogenized when there is a single group) and
    returned with its points; the completed problem then carries the start
    functions, so writing it out and reading it back gives the same homotopy.
    """
    gamma = problem.gamma if problem.gamma is not None else random_unit(rng)
    if problem.target.uses_t:
        if problem.start is not None:
            raise ValueError("a t-dependent system cannot also have start functions")
        return replace(problem, gamma=gamma), None
    groups = problem.groups
    patches = problem.patches
    if groups and not patches:
        patches = tuple(random_patch(g.members + (g.hvar,), rng) for g in groups)
    if len(patches) != len(groups):
        raise ValueError(f"{len(groups)} variable groups but {len(patches)} patches")
    done = replace(problem, gamma=gamma, patches=patches)
    if problem.start is not None:
        return done, None
    if groups:
        if len(groups) > 1:
            raise ValueError("automatic start systems need a single variable group; "
                             "give start_function lines and a start file")
        if list(groups[0].members) != list(problem.variables):
            raise ValueError("variables must be listed in group order")
        target = homogenize(problem.target, [groups[0].members], patches,
                            names=problem.hom_variables)
        degrees = [max(d) for d in target.multidegrees()[:target.n_eqs - 1]]
        ss = total_degree_start(degrees, rng, problem.variables, groups[0].hvar, patches[0])
    else:
        ss = total_degree_start(problem.target.degrees, rng, problem.variables)
    return replace(done, start=_without_patches(ss.system)), ss


def _without_patches(sys: SlpSystem) -> SlpSystem:
    b = SlpBuilder(sys.variables)
    outs = b.inline(sys)
    return b.build(outs[:sys.n_eqs - sys.patch_count])


def problem_homotopy(problem: Problem, rng: random.Random) -> tuple[Homotopy, StartSystem | None]:
    """Assemble the homotopy a system file describes, completing it first.

    The start system is returned when it was generated here; otherwise start
    points must come from elsewhere and None is returned.
    """
    problem, ss = complete_problem(problem, rng)
    return assemble(problem), ss


def assemble(problem: Problem) -> Homotopy:
    """Homotopy of a completed problem (gamma, patches and start all present)."""
    if problem.target.uses_t:
        return Homotopy.direct(problem.target)
    if problem.start is None or problem.gamma is None:
        raise ValueError("problem needs start functions and gamma")
    if problem.groups:
        target = homogenize(problem.target, [g.members for g in problem.groups], problem.patches,
                            names=problem.hom_variables)
        start = _with_patches(problem.start, problem.patches, target.groups)
        return make_homotopy(target, start, problem.gamma)
    return make_homotopy(problem.target, problem.start, problem.gamma)


# -- Griewank-Osborne ---------------------------------------------------------

def _qc(re: str, im: str) -> QC:
    return QC(parse_decimal(re), parse_decimal(im))


# (coefficient of the variable, coefficient of its homogenizing variable)
GRIEWANK_G1 = (
    ("z2", _qc("-0.74924187", "0.13780686"), _qc("0.18480353", "-0.41277609")),
    ("z1", _qc("-0.75689854", "-0.14979830"), _qc("-0.85948442", "0.60841378")),
    ("z1", _qc("0.63572306", "-0.62817501"), _qc("-0.23366512", "-0.46870314")),
    ("z1", _qc("0.86102153", "0.27872286"), _qc("-0.29470257", "0.33646578")),
)
GRIEWANK_G2 = (
    ("z2", _qc("0.35642681", "0.94511728"), _qc("0.61051543", "0.76031375")),
    ("z1", _qc("-0.84353895", "0.93981958"), _qc("0.57266034", "0.80575085")),
    ("z1", _qc("-0.13349728", "-0.51170231"), _qc("0.42999170", "0.98290700")),
)
GRIEWANK_PATCHES = (
    LinearForm.of({"z1": _qc("-0.42423834", "0.84693089"), "H1": 1}, _qc("-0.71988539", "0.59651665")),
    LinearForm.of({"z2": _qc("0.30408917", "0.78336869"), "H2": 1}, _qc("0.35005211", "-0.52159537")),
)
_HOM = {"z1": "H1", "z2": "H2"}


def griewank_target() -> SlpSystem:
    """f1 = (29/16) z1^3 - 2 z1 z2, f2 = z2 - z1^2 (triple root at the origin)."""
    b = SlpBuilder(["z1", "z2"])
    z1, z2 = b.var(0), b.var(1)
    f1 = b.sub(b.mul(b.const(Fraction(29, 16)), b.pow(z1, 3)), b.mul(b.const(2), b.mul(z1, z2)))
    f2 = b.sub(z2, b.pow(z1, 2))
    return b.build([f1, f2])


def _factor_text(var: str, a: QC, c: QC) -> str:
    return f"({format_qc(a)}*{var} + {format_qc(c)}*{_HOM[var]})"


def griewank_start_functions() -> list[str]:
    return [" * ".join(_factor_text(*f) for f in g) for g in (GRIEWANK_G1, GRIEWANK_G2)]


def griewank_text() -> str:
    """The Griewank-Osborne problem in the system file format."""
    lines = ["variables z1, z2;", "group H1: z1;", "group H2: z2;",
             "function (29/16)*z1^3 - 2*z1*z2;", "function z2 - z1^2;"]
    lines += [f"start_function {g};" for g in griewank_start_functions()]
    lines += [f"patch {linear_form_to_text(p)};" for p in GRIEWANK_PATCHES]
    lines.append("gamma 1 0;")
    return "\n".join(lines) + "\n"


def _solve_group(factor: tuple, patch: LinearForm) -> tuple[QC, QC]:
    """Exact (z, H) with a*z + c*H = 0 and the group's patch."""
    var, a, c = factor
    coeff = dict(patch.coeffs)
    p, q = coeff[var], coeff[_HOM[var]]
    # a z + c H = 0 ; p z + q H = -k
    det = a * q - c * p
    k = -patch.constant
    return (-c * k) / det, (a * k) / det


def griewank_start_points() -> list[tuple[QC, QC, QC, QC]]:
    """Exact (z1, z2, H1, H2) for every consistent choice of one factor per equation.

    A choice is consistent when the two factors constrain different groups.
    """
    points = []
    for f1, f2 in itertools.product(GRIEWANK_G1, GRIEWANK_G2):
        if f1[0] == f2[0]:
            continue
        sol = {}
        for f in (f1, f2):
            patch = GRIEWANK_PATCHES[0 if f[0] == "z1" else 1]
            z, h = _solve_group(f, patch)
            sol[f[0]], sol[_HOM[f[0]]] = z, h
        points.append((sol["z1"], sol["z2"], sol["H1"], sol["H2"]))
    return points


def griewank_osborne() -> tuple[Homotopy, StartSystem]:
    """Two-group homogenized homotopy t*g + (1-t)*f with the fixed start factors; gamma = 1."""
    target = homogenize(griewank_target(), [["z1"], ["z2"]], GRIEWANK_PATCHES, names=["H1", "H2"])
    b = SlpBuilder(target.variables)
    outs = []
    for g in (GRIEWANK_G1, GRIEWANK_G2):
        factors = [b.add(b.mul(b.const(a), b.var(v)), b.mul(b.const(c), b.var(_HOM[v])))
                   for v, a, c in g]
        prod = factors[0]
        for f in factors[1:]:
            prod = b.mul(prod, f)
        outs.append(prod)
    outs += [p.emit(b) for p in GRIEWANK_PATCHES]
    start = b.build(outs, groups=target.groups, patch_count=2)
    lvl = level(START_BITS)
    pts = tuple(MpVector(tuple(to_raw((c.re, c.im), lvl) for c in p), lvl)
                for p in griewank_start_points())
    return make_homotopy(target, start, ONE), StartSystem(start, pts)


# -- chemical equilibrium -----------------------------------------------------

CHEMICAL_TEXT = (
    "14*z1^2 + 6*z1*z2 + 5*z1 - 72*z2^2 - 18*z2 - 850*z3 + 0.000000002",
    "0.5*z1*z2^2 + 0.01*z1*z2 + 0.13*z2^2 + 0.04*z2 - 40000",
    "0.03*z1*z3 + 0.04*z3 - 850",
)


def chemical_system() -> SlpSystem:
    """The three-variable chemical equilibrium system (degrees 2, 3, 2)."""
    b = SlpBuilder(["z1", "z2", "z3"])
    z1, z2, z3 = (b.var(i) for i in range(3))
    c = lambda s: b.const(parse_decimal(s))
    f1 = b.sum([b.mul(c("14"), b.pow(z1, 2)), b.mul(c("6"), b.mul(z1, z2)), b.mul(c("5"), z1),
                b.neg(b.mul(c("72"), b.pow(z2, 2))), b.neg(b.mul(c("18"), z2)),
                b.neg(b.mul(c("850"), z3)), c("0.000000002")])
    f2 = b.sum([b.mul(c("0.5"), b.mul(z1, b.pow(z2, 2))), b.mul(c("0.01"), b.mul(z1, z2)),
                b.mul(c("0.13"), b.pow(z2, 2)), b.mul(c("0.04"), z2), b.neg(c("40000"))])
    f3 = b.sum([b.mul(c("0.03"), b.mul(z1, z3)), b.mul(c("0.04"), z3), b.neg(c("850"))])
    return b.build([f1, f2, f3])


def chemical_problem(seed: int = 0) -> tuple[Problem, StartSystem]:
    """Single group (H1) with a random patch, a total degree start and a random gamma."""
    rng = random.Random(seed)
    patch = random_patch(["z1", "z2", "z3", "H1"], rng)
    groups = (Group("H1", ("z1", "z2", "z3")),)
    target = homogenize(chemical_system(), [["z1", "z2", "z3"]], [patch], names=["H1"])
    degrees = [max(d) for d in target.multidegrees()[:3]]
    ss = total_degree_start(degrees, rng, ["z1", "z2", "z3"], "H1", patch)
    problem = Problem(("z1", "z2", "z3"), chemical_system(), groups, _without_patches(ss.system),
                      (patch,), random_unit(rng))
    return problem, ss


def chemical_homotopy(seed: int = 0) -> tuple[Homotopy, StartSystem]:
    problem, ss = chemical_problem(seed)
    return assemble(problem), ss


# Finite solutions as (H1, z1, z2, z3), each a (re, im) pair
CHEMICAL_SOLUTIONS = (
    (("2.15811678208e-03", "-2.32076062821e-03"), ("1.21933862567e-01", "4.02115643024e-01"),
     ("-2.29688938707e-02", "-7.44021609426e-02"), ("-6.62622511387e-01", "-1.55538216233e-00")),
    (("7.75265879929e-03", "5.61530748382e-03"), ("1.26177608967e-01", "-1.26295173168e+00"),
     ("-2.45549175888e-02", "2.33918398619e-01"), ("-1.87267506123e+00", "8.48441541195e-01")),
    (("-2.54171295092e-03", "1.43777404446e-03"), ("-3.34864497185e-01", "1.89423218369e-01"),
     ("6.25969991088e-02", "-3.54093238711e-02"), ("-5.41138529778e-01", "3.06106507778e-01")),
    (("6.32152240723e-03", "1.64022773970e-03"), ("-2.20546409488e-01", "-7.88700342178e-01"),
     ("-4.39498685300e-02", "-1.59117743373e-01"), ("-1.03394901752e+00", "1.06381058693e+00")),
    (("-2.64917471213e-05", "5.83090377404e-06"), ("1.23749450722e-05", "-2.72846568805e-06"),
     ("-3.62126436085e-03", "-1.64631735533e-02"), ("-8.66534113884e-01", "1.90904229879e-01")),
    (("2.72428081371e-03", "-2.22348561510e-03"), ("6.93769305944e-02", "4.35467392206e-01"),
     ("1.42630599439e-02", "8.77317115664e-02"), ("-7.45011925697e-01", "-2.88085192442e-01")),
    (("-2.37392215058e-03", "9.07039153390e-04"), ("-2.96180844307e-01", "1.13166145980e-01"),
     ("-6.00257143378e-02", "2.29349024594e-02"), ("-5.33404946327e-01", "2.03805834055e-01")),
    (("-2.73688783636e-05", "4.95136100653e-06"), ("1.27865341710e-05", "-2.30844830185e-06"),
     ("3.07919899933e-03", "1.70073434711e-02"), ("-8.95294964314e-01", "1.61788761616e-01")),
)


# Row 0's z3 imaginary part is given with exponent -00; only -01 makes the
# row satisfy f3 and lie on the common patch fitted through the other rows.
CHEMICAL_CORRECTIONS = {(0, 3): ("-6.62622511387e-01", "-1.55538216233e-01")}


def chemical_reference(corrected: bool = True) -> list[tuple[complex, ...]]:
    """Reference solutions as complex (H1, z1, z2, z3) tuples."""
    out = []
    for r, row in enumerate(CHEMICAL_SOLUTIONS):
        vals = []
        for c, (re, im) in enumerate(row):
            if corrected and (r, c) in CHEMICAL_CORRECTIONS:
                re, im = CHEMICAL_CORRECTIONS[(r, c)]
            vals.append(complex(float(re), float(im)))
        out.append(tuple(vals))
    return out


def chemical_reference_affine(corrected: bool = True) -> list[tuple[complex, complex, complex]]:
    """Reference solutions dehomogenized to (z1, z2, z3) = z/H1."""
    return [tuple(z / h for z in zs) for h, *zs in chemical_reference(corrected)]


# -- Chebyshev ------------------------------------------------------------------

def chebyshev(n: int) -> SlpSystem:
    """Monic-scaled T_n by T0 = 2, T1 = x, T_i = x T_{i-1} - T_{i-2}/4."""
    if n < 1:
        raise ValueError("degree must be at least 1")
    b = SlpBuilder(["x"])
    x = b.var(0)
    quarter = b.const(Fraction(1, 4))
    prev, cur = b.const(2), x
    for _ in range(2, n + 1):
        prev, cur = cur, b.sub(b.mul(x, cur), b.mul(prev, quarter))
    return b.build([cur])


def chebyshev_roots(n: int) -> list[float]:
    """Roots of T_n in increasing order."""
    m = n - 1
    return sorted(math.cos((2 * m + 1 - 2 * k) * math.pi / (2 * m + 2)) for k in range(n))


def chebyshev_text(n: int) -> list[tuple[str, str]]:
    """``let`` bindings spelling out the recursion; the last name is T_n."""
    if n < 1:
        raise ValueError("degree must be at least 1")
    lets = [("T0", "2"), ("T1", "x")]
    for i in range(2, n + 1):
        lets.append((f"T{i}", f"x*T{i - 1} - T{i - 2}/4"))
    return lets if n > 1 else lets[1:]


def chebyshev_problem(n: int, seed: int = 0) -> tuple[Problem, StartSystem]:
    """T_n against the start x^n - r, blended with a random gamma."""
    rng = random.Random(seed)
    ss = total_degree_start([n], rng, ["x"])
    return Problem(("x",), chebyshev(n), start=ss.system, gamma=random_unit(rng)), ss


def chebyshev_homotopy(n: int, seed: int = 0) -> tuple[Homotopy, StartSystem]:
    problem, ss = chebyshev_problem(n, seed)
    return assemble(problem), ss
