"""The linear homotopy H(z, t) = gamma*t*g(z) + (1 - t)*f(z) as one program."""
from __future__ import annotations

from dataclasses import dataclass

from .exact import ONE, QC
from .program import SlpBuilder, SlpSystem


@dataclass(frozen=True, eq=False)
class Homotopy:
    """A square homotopy; ``system`` computes H(z, t).

    ``target`` and ``start`` are None when the homotopy was given directly as
    a t-dependent program.  Patch equations (trailing outputs of a
    homogenized target) are carried over unchanged and do not depend on t.
    """

    system: SlpSystem
    target: SlpSystem | None = None
    start: SlpSystem | None = None
    gamma: QC = ONE

    def __post_init__(self):
        if self.system.n_eqs != self.system.n_vars:
            raise ValueError(f"homotopy must be square, got {self.system.n_eqs} equations "
                             f"in {self.system.n_vars} variables")

    @property
    def variables(self) -> tuple[str, ...]:
        return self.system.variables

    @property
    def n(self) -> int:
        return self.system.n_vars

    @classmethod
    def direct(cls, system: SlpSystem) -> Homotopy:
        return cls(system)


def make_homotopy(target: SlpSystem, start: SlpSystem, gamma=ONE) -> Homotopy:
    """Blend ``start`` (at t=1, scaled by gamma) into ``target`` (at t=0)."""
    gamma = QC.of(gamma)
    if target.variables != start.variables:
        raise ValueError("target and start must use the same variables in the same order")
    if target.n_eqs != start.n_eqs or target.patch_count != start.patch_count:
        raise ValueError("target and start must have matching equations and patches")
    if target.uses_t or start.uses_t:
        raise ValueError("target and start systems must not depend on t")
    b = SlpBuilder(target.variables)
    f = b.inline(target)
    g = b.inline(start)
    t = b.t()
    gt = t if gamma == ONE else b.mul(b.const(gamma), t)
    one_minus_t = b.sub(b.const(1), t)
    blended = target.n_eqs - target.patch_count
    outs = [b.add(b.mul(gt, g[i]), b.mul(one_minus_t, f[i])) for i in range(blended)]
    outs += f[blended:]
    sys = b.build(outs, groups=target.groups, patch_count=target.patch_count)
    return Homotopy(sys, target, start, gamma)
