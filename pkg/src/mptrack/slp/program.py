"""Straight-line programs for polynomial systems and homotopies.

A program is a list of instructions, each producing one value ("slot") from
constants, variables, the homotopy parameter ``t`` or earlier slots.
Constants are exact complex rationals and are rounded afresh for every
working precision, so raising precision always refines the coefficients.

Evaluation is compiled: the instruction list is turned into straight Python
source once per program, and the generated functions run on raw values
(``complex`` or ``gmpy2.mpc``) at whatever precision is active.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from ..mpnum import (MpComplex, MpMatrix, MpVector, PrecisionLevel, level,
                     to_raw, working)
from .exact import ONE, QC

OPS = ("const", "var", "t", "add", "sub", "mul", "neg")


class Op(NamedTuple):
    kind: str
    a: int = -1
    b: int = -1


@dataclass(frozen=True, eq=False)
class SlpSystem:
    """A polynomial system (possibly depending on ``t``) as an SLP.

    ``groups`` optionally partitions the variable indices into homogeneous
    groups; ``patch_count`` says how many trailing outputs are patch
    equations added by homogenization.
    """

    variables: tuple[str, ...]
    instructions: tuple[Op, ...]
    outputs: tuple[int, ...]
    constants: tuple[QC, ...]
    groups: tuple[tuple[int, ...], ...] = ()
    patch_count: int = 0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        nvar = len(self.variables)
        for k, op in enumerate(self.instructions):
            if op.kind not in OPS:
                raise ValueError(f"slot {k}: unknown instruction {op.kind!r}")
            if op.kind == "const" and not 0 <= op.a < len(self.constants):
                raise ValueError(f"slot {k}: bad constant reference {op.a}")
            if op.kind == "var" and not 0 <= op.a < nvar:
                raise ValueError(f"slot {k}: bad variable index {op.a}")
            if op.kind in ("add", "sub", "mul") and not (0 <= op.a < k and 0 <= op.b < k):
                raise ValueError(f"slot {k}: operands must reference earlier slots")
            if op.kind == "neg" and not 0 <= op.a < k:
                raise ValueError(f"slot {k}: operand must reference an earlier slot")
        for o in self.outputs:
            if not 0 <= o < len(self.instructions):
                raise ValueError(f"output references missing slot {o}")

    def __getstate__(self):
        state = dict(self.__dict__)
        state["_cache"] = {}
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_eqs(self) -> int:
        return len(self.outputs)

    @property
    def uses_t(self) -> bool:
        return any(op.kind == "t" for op in self.instructions)

    @property
    def degrees(self) -> tuple[int, ...]:
        """Total degree in the variables (t excluded) of each output, read off the program."""
        if "degrees" not in self._cache:
            deg = slot_degrees(self, [tuple(range(self.n_vars))])
            self._cache["degrees"] = tuple(deg[o][0] for o in self.outputs)
        return self._cache["degrees"]

    def multidegrees(self, groups: Sequence[Sequence[int]] | None = None) -> list[tuple[int, ...]]:
        groups = groups if groups is not None else (self.groups or [tuple(range(self.n_vars))])
        deg = slot_degrees(self, groups)
        return [deg[o] for o in self.outputs]

    def constants_at(self, lvl: PrecisionLevel) -> list:
        key = ("const", lvl.bits)
        if key not in self._cache:
            self._cache[key] = [to_raw((c.re, c.im), lvl) for c in self.constants]
        return self._cache[key]

    @property
    def value_kernel(self):
        if "vk" not in self._cache:
            self._cache["vk"] = _compile_values(self)
        return self._cache["vk"]

    @property
    def jacobian_kernel(self):
        if "jk" not in self._cache:
            self._cache["jk"] = _compile_jacobian(self)
        return self._cache["jk"]

    # raw-value entry points used by the tracker; caller sets the precision
    def eval_raw(self, x: Sequence, t, lvl: PrecisionLevel) -> list:
        return self.value_kernel(x, t, self.constants_at(lvl))

    def eval_jac_raw(self, x: Sequence, t, lvl: PrecisionLevel):
        """Return (values, J rows, dH/dt) as raw lists."""
        one = to_raw(1, lvl)
        return self.jacobian_kernel(x, t, self.constants_at(lvl), one, one - one)


def slot_degrees(sys: SlpSystem, groups: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    """Per-slot degree vector with respect to each variable group."""
    where = {}
    for g, members in enumerate(groups):
        for v in members:
            where[v] = g
    zero = (0,) * len(groups)
    deg: list[tuple[int, ...]] = []
    for op in sys.instructions:
        if op.kind == "var":
            d = list(zero)
            if op.a in where:
                d[where[op.a]] = 1
            deg.append(tuple(d))
        elif op.kind in ("const", "t"):
            deg.append(zero)
        elif op.kind in ("add", "sub"):
            deg.append(tuple(max(p, q) for p, q in zip(deg[op.a], deg[op.b])))
        elif op.kind == "mul":
            deg.append(tuple(p + q for p, q in zip(deg[op.a], deg[op.b])))
        else:
            deg.append(deg[op.a])
    return deg


def _raw_t(t, lvl: PrecisionLevel):
    if isinstance(t, MpComplex):
        t = t.value
    return to_raw(t, lvl)


def evaluate(sys: SlpSystem, point: MpVector, t=0, prec: PrecisionLevel | int | None = None) -> MpVector:
    """Evaluate every output at ``point`` and ``t`` with all arithmetic at ``prec``."""
    lvl = level(prec) if prec is not None else point.prec
    if len(point) != sys.n_vars:
        raise ValueError(f"point has {len(point)} coordinates, system has {sys.n_vars} variables")
    x = point.with_precision(lvl).entries
    with working(lvl):
        vals = sys.eval_raw(x, _raw_t(t, lvl), lvl)
    return MpVector(tuple(vals), lvl)


def jacobian(sys: SlpSystem, point: MpVector, t=0,
             prec: PrecisionLevel | int | None = None) -> tuple[MpMatrix, MpVector]:
    """Forward-mode derivatives: (dH/dz as an n_eqs x n_vars matrix, dH/dt)."""
    lvl = level(prec) if prec is not None else point.prec
    if len(point) != sys.n_vars:
        raise ValueError(f"point has {len(point)} coordinates, system has {sys.n_vars} variables")
    x = point.with_precision(lvl).entries
    with working(lvl):
        _, jac, dt = sys.eval_jac_raw(x, _raw_t(t, lvl), lvl)
    return MpMatrix(tuple(tuple(r) for r in jac), lvl), MpVector(tuple(dt), lvl)


# -- construction -------------------------------------------------------------

class SlpBuilder:
    """Accumulates instructions; identical constants and leaves are shared."""

    def __init__(self, variables: Sequence[str]):
        self.variables = tuple(variables)
        self.index = {name: i for i, name in enumerate(self.variables)}
        self.instructions: list[Op] = []
        self.constants: list[QC] = []
        self._memo: dict = {}

    def _emit(self, op: Op) -> int:
        if op in self._memo:
            return self._memo[op]
        self.instructions.append(op)
        k = len(self.instructions) - 1
        self._memo[op] = k
        return k

    def const(self, value) -> int:
        c = QC.of(value)
        key = ("c", c)
        if key not in self._memo:
            self.constants.append(c)
            self._memo[key] = self._emit(Op("const", len(self.constants) - 1))
        return self._memo[key]

    def var(self, v: int | str) -> int:
        i = self.index[v] if isinstance(v, str) else v
        if not 0 <= i < len(self.variables):
            raise IndexError(f"no variable {v!r}")
        return self._emit(Op("var", i))

    def t(self) -> int:
        return self._emit(Op("t"))

    def add(self, a: int, b: int) -> int:
        return self._emit(Op("add", a, b))

    def sub(self, a: int, b: int) -> int:
        return self._emit(Op("sub", a, b))

    def mul(self, a: int, b: int) -> int:
        return self._emit(Op("mul", a, b))

    def neg(self, a: int) -> int:
        return self._emit(Op("neg", a))

    def pow(self, a: int, k: int) -> int:
        """a**k for k >= 1 by binary powering (lowered to multiplications)."""
        if k < 1:
            raise ValueError("pow needs a positive integer exponent")
        result = None
        base = a
        while k:
            if k & 1:
                result = base if result is None else self.mul(result, base)
            k >>= 1
            if k:
                base = self.mul(base, base)
        return result

    def sum(self, slots: Sequence[int]) -> int:
        out = slots[0]
        for s in slots[1:]:
            out = self.add(out, s)
        return out

    def inline(self, sys: SlpSystem, var_map: dict[int, int] | None = None) -> list[int]:
        """Copy ``sys`` into this builder; returns the slots of its outputs.

        Variables are matched by name unless ``var_map`` (source index to
        destination index) is given.
        """
        slot = []
        for op in sys.instructions:
            if op.kind == "const":
                slot.append(self.const(sys.constants[op.a]))
            elif op.kind == "var":
                if var_map is not None:
                    slot.append(self.var(var_map[op.a]))
                else:
                    slot.append(self.var(sys.variables[op.a]))
            elif op.kind == "t":
                slot.append(self.t())
            elif op.kind == "neg":
                slot.append(self.neg(slot[op.a]))
            else:
                slot.append(self._emit(Op(op.kind, slot[op.a], slot[op.b])))
        return [slot[o] for o in sys.outputs]

    def build(self, outputs: Sequence[int], groups=(), patch_count: int = 0) -> SlpSystem:
        return SlpSystem(self.variables, tuple(self.instructions), tuple(outputs),
                         tuple(self.constants), tuple(tuple(g) for g in groups), patch_count)


# -- code generation ---------------------------------------------------------

def _compile(name: str, args: str, body: list[str], namespace: dict | None = None):
    src = f"def {name}({args}):\n" + "\n".join("    " + line for line in body) + "\n"
    ns = dict(namespace or {})
    exec(compile(src, f"<slp:{name}>", "exec"), ns)
    fn = ns[name]
    fn.source = src
    return fn


def _compile_values(sys: SlpSystem):
    body = []
    for k, op in enumerate(sys.instructions):
        body.append(f"v{k} = {_value_expr(op)}")
    body.append("return [" + ", ".join(f"v{o}" for o in sys.outputs) + "]")
    return _compile("slp_values", "x, t, c", body)


def _value_expr(op: Op) -> str:
    if op.kind == "const":
        return f"c[{op.a}]"
    if op.kind == "var":
        return f"x[{op.a}]"
    if op.kind == "t":
        return "t"
    if op.kind == "neg":
        return f"-v{op.a}"
    sym = {"add": "+", "sub": "-", "mul": "*"}[op.kind]
    return f"v{op.a} {sym} v{op.b}"


def _compile_jacobian(sys: SlpSystem):
    """Forward mode with structural zeros and ones folded away at compile time.

    Derivative index ``n`` (one past the last variable) is the t-derivative.
    """
    n = sys.n_vars
    body = []
    # deriv[k] maps derivative index -> expression ("ONE" or a local name)
    deriv: list[dict[int, str]] = []
    for k, op in enumerate(sys.instructions):
        body.append(f"v{k} = {_value_expr(op)}")
        d: dict[int, str] = {}
        if op.kind == "var":
            d[op.a] = "ONE"
        elif op.kind == "t":
            d[n] = "ONE"
        elif op.kind == "neg":
            for j, e in deriv[op.a].items():
                name = f"d{k}_{j}"
                body.append(f"{name} = -{e}")
                d[j] = name
        elif op.kind in ("add", "sub"):
            da, db = deriv[op.a], deriv[op.b]
            for j in sorted(set(da) | set(db)):
                ea, eb = da.get(j), db.get(j)
                if eb is None:
                    d[j] = ea
                    continue
                name = f"d{k}_{j}"
                if ea is None:
                    body.append(f"{name} = {eb}" if op.kind == "add" else f"{name} = -{eb}")
                else:
                    body.append(f"{name} = {ea} {'+' if op.kind == 'add' else '-'} {eb}")
                d[j] = name
        elif op.kind == "mul":
            da, db = deriv[op.a], deriv[op.b]
            for j in sorted(set(da) | set(db)):
                terms = []
                if j in db:
                    terms.append(f"v{op.a}" if db[j] == "ONE" else f"v{op.a} * {db[j]}")
                if j in da:
                    terms.append(f"v{op.b}" if da[j] == "ONE" else f"{da[j]} * v{op.b}")
                name = f"d{k}_{j}"
                body.append(f"{name} = {' + '.join(terms)}")
                d[j] = name
        deriv.append(d)
    rows = []
    for o in sys.outputs:
        rows.append("[" + ", ".join(deriv[o].get(j, "ZERO") for j in range(n)) + "]")
    body.append("vals = [" + ", ".join(f"v{o}" for o in sys.outputs) + "]")
    body.append("jac = [" + ", ".join(rows) + "]")
    body.append("dt = [" + ", ".join(deriv[o].get(n, "ZERO") for o in sys.outputs) + "]")
    body.append("return vals, jac, dt")
    return _compile("slp_jacobian", "x, t, c, ONE, ZERO", body)


def raw_constant(value, lvl: PrecisionLevel):
    """Round an exact constant to ``lvl``."""
    c = QC.of(value)
    return to_raw((c.re, c.im), lvl)


__all__ = ["Op", "SlpSystem", "SlpBuilder", "evaluate", "jacobian", "slot_degrees",
           "raw_constant", "ONE"]
