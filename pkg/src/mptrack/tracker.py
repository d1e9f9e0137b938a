"""Predictor/corrector path tracking with adaptive step size and precision.

Each step predicts along the Euler tangent from ``t`` to ``t - dt``, then
runs at most N Newton iterations at the new ``t``.  In adaptive mode the
working precision is checked against rules A and C at the predicted point
and against B and C between Newton iterations, and raised when violated; a
singular linear solve also raises it.  After M consecutive successes the
step grows by 1/a and the precision may drop one level.  A corrector that
does not reach 10^-tau within N iterations cuts the step by a.

Fixed mode never changes precision.  Re-run mode tracks at fixed precision
and, on failure, resumes from the last good point one rung up a ladder of
precisions.
"""
from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, field, replace
from typing import Sequence

from .linalg import LU, SingularMatrix, inv_norm_from_lu
from .mpnum import (DOUBLE, MpVector, PrecisionLevel, PrecisionLimitExceeded,
                    level, level_for_digits, raw_max_norm, to_raw, working)
from .precctl import (ErrorModel, RuleInputs, rule_A_digits, rule_B_digits,
                      rule_C_digits)
from .slp.blend import Homotopy

ADAPTIVE = "adaptive"
FIXED = "fixed"
RERUN = "rerun"
PREDICTION_AGREEMENT = "prediction_agreement"
REACH_T_END = "reach_t_end"


class PathStatus(str, enum.Enum):
    SUCCESS = "Success"
    FAILED_MIN_STEP = "FailedMinStep"
    FAILED_MAX_STEPS = "FailedMaxSteps"
    FAILED_PRECISION_LIMIT = "FailedPrecisionLimit"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class TrackerConfig:
    s_init: float = 0.1
    s_min: float = 1e-14
    a: float = 0.5
    M: int = 5
    N: int = 2
    # (t_threshold, tau) pairs with strictly decreasing thresholds
    tau_schedule: tuple[tuple[float, float], ...] = ((1.0, 8.0),)
    max_steps: int = 50000
    t_end: float = 0.0
    stop_mode: str = PREDICTION_AGREEMENT
    mode: str = ADAPTIVE
    bits: int = 52
    ladder: tuple[int, ...] = (52, 64, 96, 128, 256)
    precision_cap: int = 1024
    seed: int = 0
    initial_iterations: int = 10
    record_path: bool = False  # keep (t, point) for every accepted step

    def __post_init__(self):
        if not 0 < self.a < 1:
            raise ValueError("step factor a must lie in (0, 1)")
        if not 0 < self.s_min <= self.s_init:
            raise ValueError("need 0 < s_min <= s_init")
        if self.M < 1 or self.N < 1:
            raise ValueError("M and N must be at least 1")
        if not self.tau_schedule:
            raise ValueError("tau_schedule must not be empty")
        thresholds = [thr for thr, _ in self.tau_schedule]
        if any(b >= a for a, b in zip(thresholds, thresholds[1:])):
            raise ValueError("tau_schedule thresholds must strictly decrease")
        if any(tau <= 0 for _, tau in self.tau_schedule):
            raise ValueError("tau values must be positive")
        if not 0 <= self.t_end < 1:
            raise ValueError("t_end must lie in [0, 1)")
        if self.stop_mode not in (PREDICTION_AGREEMENT, REACH_T_END):
            raise ValueError(f"unknown stop_mode {self.stop_mode!r}")
        if self.mode not in (ADAPTIVE, FIXED, RERUN):
            raise ValueError(f"unknown mode {self.mode!r}")
        level(self.bits)
        for b in self.ladder:
            level(b)
        if list(self.ladder) != sorted(set(self.ladder)):
            raise ValueError("ladder must be strictly increasing")

    def tau_at(self, t: float) -> float:
        """Tolerance exponent of the last schedule entry whose threshold is >= t."""
        tau = self.tau_schedule[0][1]
        for thr, value in self.tau_schedule:
            if thr >= t:
                tau = value
        return tau


@dataclass
class TelemetryRecord:
    step: int
    t: float
    s: float
    bits: int
    J_norm: float
    Jinv_norm_est: float
    cond_est: float
    ruleA: float
    ruleB: float | None
    ruleC: float
    corrector_iterations: int
    d_norm_final: float
    accepted: bool
    tau: float
    outcome: str = ""

    @property
    def digits(self) -> int:
        return level(self.bits).decimal_digits


@dataclass
class PathState:
    z: list
    t: float
    s: float
    prec: PrecisionLevel
    z_prec: PrecisionLevel | None = None  # precision z is stored at; defaults to prec
    consecutive_successes: int = 0
    steps_taken: int = 0
    attempts: int = 0
    last_prediction_to_zero: list | None = None
    previous: tuple[list, float] | None = None

    def __post_init__(self):
        if self.z_prec is None:
            self.z_prec = self.prec


@dataclass
class PathResult:
    status: PathStatus
    endpoint: MpVector
    t_reached: float
    telemetry: list[TelemetryRecord] = field(default_factory=list)
    path_id: int = 0
    # (bits, status, t_reached) per fixed-precision run in re-run mode
    ladder_history: list[tuple[int, PathStatus, float]] = field(default_factory=list)
    message: str = ""
    path: list[tuple[float, list[complex]]] = field(default_factory=list)

    @property
    def success(self) -> bool:
        return self.status is PathStatus.SUCCESS

    @property
    def bits_max(self) -> int:
        bits = [r.bits for r in self.telemetry]
        return max(bits, default=self.endpoint.prec.bits)

    @property
    def steps(self) -> int:
        return sum(1 for r in self.telemetry if r.accepted)


class _StepOutcome:
    __slots__ = ("kind", "v", "v_prec", "d_norm", "iters", "rules", "norms")

    def __init__(self, kind, v=None, v_prec=None, d_norm=math.nan, iters=0, rules=None, norms=None):
        self.kind = kind          # accepted | not_converged | singular | precision_limit
        self.v = v
        self.v_prec = v_prec
        self.d_norm = d_norm
        self.iters = iters
        self.rules = rules or {}
        self.norms = norms or (math.nan, math.nan)


def path_rng(seed: int, path_id: int) -> random.Random:
    return random.Random(f"mptrack:{seed}:{path_id}")


class _Tracker:
    def __init__(self, H: Homotopy, cfg: TrackerConfig, model: ErrorModel, rng: random.Random,
                 fixed_bits: int | None = None):
        self.sys = H.system
        self.n = H.n
        self.cfg = cfg
        self.model = replace(model.for_dimension(self.n), N=cfg.N)
        self.rng = rng
        self.adaptive = fixed_bits is None
        self.fixed = level(fixed_bits) if fixed_bits is not None else None
        self.cap = cfg.precision_cap
        self.telemetry: list[TelemetryRecord] = []
        self.path: list[tuple[float, list[complex]]] = []

    # -- numerics ------------------------------------------------------------

    def _point(self, z: list, zp: PrecisionLevel, lvl: PrecisionLevel) -> list:
        return z if zp == lvl else [to_raw(v, lvl) for v in z]

    def _factor(self, x, t, lvl):
        """Evaluate H and its derivatives at (x, t) and factor dH/dz."""
        vals, jac, dt = self.sys.eval_jac_raw(x, to_raw(t, lvl), lvl)
        lu = LU(jac, lvl.unit_roundoff, self.model.eps)
        return vals, lu, dt

    def _attempt(self, st: PathState, t_new: float, dt: float, model: ErrorModel,
                 iterations: int) -> _StepOutcome:
        """One predict/correct cycle from (st.z, st.t) to t_new.

        Raises precision in place (st.prec) when rules A/C or B/C demand it.
        """
        tol = 10.0 ** -model.tau
        while True:
            lvl = st.prec
            with working(lvl):
                x = self._point(st.z, st.z_prec, lvl)
                if dt > 0:
                    vals, lu, dhdt = self._factor(x, st.t, lvl)
                    if lu.singular:
                        return _StepOutcome("singular", iters=0)
                    step = to_raw(dt, lvl)
                    dz = lu.solve([dhdt[i] * step - vals[i] for i in range(self.n)])
                    v = [x[i] + dz[i] for i in range(self.n)]
                else:
                    v = list(x)
                vals, lu, _ = self._factor(v, t_new, lvl)
                if lu.singular:
                    return _StepOutcome("singular", iters=0)
                J_norm = lu.norm
                Jinv = inv_norm_from_lu(lu, self.rng, lvl)
                if not (math.isfinite(J_norm) and math.isfinite(Jinv) and Jinv > 0):
                    # the prediction left the range of double summaries: a bad step, not a precision need
                    return _StepOutcome("not_converged", iters=0, norms=(J_norm, Jinv))
                inp = RuleInputs(J_norm, Jinv, raw_max_norm(v))
                rules = {"A": rule_A_digits(model, inp), "C": rule_C_digits(model, inp)}
            if self.adaptive:
                try:
                    need = level_for_digits(max(rules.values()), self.cap)
                except PrecisionLimitExceeded:
                    return _StepOutcome("precision_limit", rules=rules, norms=(J_norm, Jinv))
                if need > lvl:
                    st.prec = need
                    continue
            return self._correct(st, v, vals, lu, t_new, model, iterations, tol, rules, (J_norm, Jinv))

    def _correct(self, st, v, vals, lu, t_new, model, iterations, tol, rules, norms) -> _StepOutcome:
        lvl = st.prec
        d_norm = math.nan
        J_norm, Jinv = norms
        for i in range(1, iterations + 1):
            with working(lvl):
                d = lu.solve([-h for h in vals])
                v = [v[k] + d[k] for k in range(self.n)]
                d_norm = raw_max_norm(d)
            if d_norm < tol:
                return _StepOutcome("accepted", v, lvl, d_norm, i, rules, norms)
            if i == iterations or not math.isfinite(d_norm):
                break
            if self.adaptive:
                inp = RuleInputs(J_norm, Jinv, raw_max_norm(v), d_norm, i)
                rules["B"] = rule_B_digits(model, inp)
                rules["C"] = max(rules["C"], rule_C_digits(model, inp))
                try:
                    need = level_for_digits(max(rules["B"], rules["C"]), self.cap)
                except PrecisionLimitExceeded:
                    return _StepOutcome("precision_limit", rules=rules, norms=norms,
                                        d_norm=d_norm, iters=i)
                if need > lvl:
                    v = [to_raw(c, need) for c in v]
                    lvl = st.prec = need
            with working(lvl):
                vals, lu, _ = self._factor(v, t_new, lvl)
            if lu.singular:
                return _StepOutcome("singular", iters=i, d_norm=d_norm, rules=rules, norms=norms)
        return _StepOutcome("not_converged", v, lvl, d_norm, iterations, rules, norms)

    # -- bookkeeping -----------------------------------------------------------

    def _record(self, st: PathState, t_new, dt, out: _StepOutcome, tau) -> TelemetryRecord:
        J_norm, Jinv = out.norms
        rec = TelemetryRecord(
            step=len(self.telemetry), t=t_new, s=dt, bits=st.prec.bits,
            J_norm=J_norm, Jinv_norm_est=Jinv, cond_est=J_norm * Jinv,
            ruleA=out.rules.get("A", math.nan), ruleB=out.rules.get("B"),
            ruleC=out.rules.get("C", math.nan), corrector_iterations=out.iters,
            d_norm_final=out.d_norm, accepted=out.kind == "accepted", tau=tau, outcome=out.kind)
        self.telemetry.append(rec)
        return rec

    def _step_length(self, st: PathState) -> float:
        remaining = st.t - self.cfg.t_end
        if self.cfg.stop_mode == REACH_T_END and remaining <= st.s and (
                self.cfg.t_end == 0 or remaining <= 2 * self.cfg.t_end):
            return remaining
        return min(st.s, 0.5 * remaining)

    def _consider_lower_precision(self, st: PathState, rec: TelemetryRecord):
        lower = st.prec.down()
        if not self.adaptive or lower is None:
            return
        need = max(rec.ruleA, rec.ruleC)
        if need + 2 <= lower.decimal_digits:
            st.prec = lower

    def _target_step(self, z: list, lvl: PrecisionLevel) -> float:
        """Size of one Newton step for H(., 0) from z; inf when J is singular there.

        Agreement of extrapolations alone is fooled by a path that sits still
        over a long stretch of t and moves later.
        """
        with working(lvl):
            vals, lu, _ = self._factor(z, 0.0, lvl)
            if lu.singular:
                return math.inf
            return raw_max_norm(lu.solve([-h for h in vals]))

    def _predict_to_zero(self, st: PathState) -> list | None:
        if st.previous is None:
            return None
        z0, t0 = st.previous
        lvl = st.z_prec
        with working(lvl):
            z0 = self._point(z0, self._prev_prec, lvl)
            scale = to_raw(st.t / (t0 - st.t), lvl)
            return [z1 - (z0i - z1) * scale for z1, z0i in zip(st.z, z0)]

    def _result(self, status, st: PathState, endpoint=None, message="") -> PathResult:
        pts = endpoint if endpoint is not None else st.z
        return PathResult(status, MpVector(tuple(pts), st.z_prec), st.t, self.telemetry,
                          message=message, path=self.path)

    # -- main loop -------------------------------------------------------------

    def run(self, z_start: Sequence, t_start: float = 1.0, s: float | None = None) -> PathResult:
        cfg = self.cfg
        lvl0 = self.fixed or DOUBLE
        if isinstance(z_start, MpVector):
            z = [to_raw(v, lvl0) for v in z_start.entries]
        else:
            z = [to_raw(v, lvl0) for v in z_start]
        if len(z) != self.n:
            raise ValueError(f"start point has {len(z)} coordinates, homotopy has {self.n}")
        st = PathState(z, float(t_start), s or cfg.s_init, lvl0, lvl0)
        self._prev_prec = lvl0

        # refine the start point at t_start before stepping
        model = self.model.with_tau(cfg.tau_at(st.t))
        init_model = replace(model, N=max(cfg.N, cfg.initial_iterations))
        for _ in range(4):
            out = self._attempt(st, st.t, 0.0, init_model, init_model.N)
            if out.kind == "accepted":
                st.z, st.z_prec = out.v, out.v_prec
                break
            if out.kind == "precision_limit":
                return self._result(PathStatus.FAILED_PRECISION_LIMIT, st,
                                    message="start point needs more precision than the cap")
            if out.kind == "singular" and self.adaptive and st.prec.bits < self.cap:
                st.prec = st.prec.up()
        else:
            return self._result(PathStatus.FAILED_MIN_STEP, st,
                                message="start point did not converge")

        raises = 0
        while True:
            if cfg.stop_mode == REACH_T_END and st.t <= cfg.t_end:
                return self._result(PathStatus.SUCCESS, st)
            if st.s < cfg.s_min:
                return self._result(PathStatus.FAILED_MIN_STEP, st, message=f"step {st.s:.3g} below minimum")
            if st.attempts >= cfg.max_steps:
                return self._result(PathStatus.FAILED_MAX_STEPS, st)
            dt = self._step_length(st)
            t_new = st.t - dt
            if t_new == st.t:
                return self._result(PathStatus.FAILED_MIN_STEP, st, message="step below resolution of t")
            tau = cfg.tau_at(t_new)
            model = self.model.with_tau(tau)
            out = self._attempt(st, t_new, dt, model, cfg.N)
            st.attempts += 1
            rec = self._record(st, t_new, dt, out, tau)

            if out.kind == "precision_limit":
                return self._result(PathStatus.FAILED_PRECISION_LIMIT, st,
                                    message=f"rules need more than {self.cap} bits")
            if out.kind == "singular":
                st.consecutive_successes = 0
                if self.adaptive and st.prec.up().bits <= self.cap:
                    st.prec = st.prec.up()
                    raises += 1
                    if raises >= 3:
                        st.s *= cfg.a
                        raises = 0
                else:
                    st.s *= cfg.a
                continue
            raises = 0
            if out.kind == "not_converged":
                st.s *= cfg.a
                st.consecutive_successes = 0
                continue

            # accepted
            st.previous = (st.z, st.t)
            self._prev_prec = st.z_prec
            st.z, st.z_prec, st.t = out.v, out.v_prec, t_new
            if cfg.record_path:
                self.path.append((t_new, [complex(v) for v in out.v]))
            st.steps_taken += 1
            st.consecutive_successes += 1
            if st.consecutive_successes >= cfg.M:
                st.s /= cfg.a
                st.consecutive_successes = 0
                self._consider_lower_precision(st, rec)
            if cfg.stop_mode == PREDICTION_AGREEMENT:
                pred = self._predict_to_zero(st)
                last = st.last_prediction_to_zero
                st.last_prediction_to_zero = pred
                if pred is not None and last is not None:
                    with working(st.z_prec):
                        gap = raw_max_norm(p - q for p, q in zip(pred, last))
                    if gap < 10.0 ** -tau and self._target_step(pred, st.z_prec) < 10.0 ** -tau:
                        return self._result(PathStatus.SUCCESS, st, endpoint=pred)


@dataclass(frozen=True)
class Converged:
    z: MpVector
    d_norm: float
    iterations: int


@dataclass(frozen=True)
class NotConverged:
    z: MpVector
    d_norm: float
    iterations: int


@dataclass(frozen=True)
class SingularFailure:
    iterations: int = 0


def _entries(z) -> list:
    return list(z.entries) if isinstance(z, MpVector) else list(z)


def euler_predict(H: Homotopy, st: PathState, dt: float, model: ErrorModel | None = None) -> MpVector:
    """Euler step from (st.z, st.t) to t - dt at st.prec.

    Solves dH/dz * dz = -(H + dH/dt * (-dt)).  Raises SingularMatrix when
    the Jacobian is numerically singular.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    model = model or ErrorModel(0.0, 0.0)
    tr = _Tracker(H, TrackerConfig(), model, path_rng(0, 0), fixed_bits=st.prec.bits)
    lvl = st.prec
    with working(lvl):
        x = [to_raw(v, lvl) for v in _entries(st.z)]
        vals, lu, dhdt = tr._factor(x, st.t, lvl)
        if lu.singular:
            raise SingularMatrix("Jacobian is singular at the current point")
        step = to_raw(dt, lvl)
        dz = lu.solve([dhdt[i] * step - vals[i] for i in range(H.n)])
        return MpVector(tuple(x[i] + dz[i] for i in range(H.n)), lvl)


def newton_correct(H: Homotopy, z0, t: float, st: PathState, m: ErrorModel,
                   adaptive: bool = True, precision_cap: int = 1024,
                   rng: random.Random | None = None):
    """Up to m.N Newton iterations of H(., t) from z0, starting at st.prec.

    Success means a step of max-norm below 10^-m.tau.  When ``adaptive`` is
    set, rules B and C are checked between iterations and st.prec is raised
    in place as needed; PrecisionLimitExceeded propagates.
    """
    cfg = TrackerConfig(N=m.N, precision_cap=precision_cap)
    tr = _Tracker(H, cfg, m, rng or path_rng(0, 0), None if adaptive else st.prec.bits)
    model = tr.model
    lvl = st.prec
    with working(lvl):
        v = [to_raw(c, lvl) for c in _entries(z0)]
        vals, lu, _ = tr._factor(v, t, lvl)
        if lu.singular:
            return SingularFailure()
        J_norm = lu.norm
        Jinv = inv_norm_from_lu(lu, tr.rng, lvl)
        inp = RuleInputs(J_norm, Jinv, raw_max_norm(v))
        rules = {"A": rule_A_digits(model, inp), "C": rule_C_digits(model, inp)}
    out = tr._correct(st, v, vals, lu, t, model, model.N, 10.0 ** -model.tau, rules, (J_norm, Jinv))
    if out.kind == "precision_limit":
        raise PrecisionLimitExceeded(f"rules need more than {precision_cap} bits")
    if out.kind == "singular":
        return SingularFailure(out.iters)
    z = MpVector(tuple(out.v), out.v_prec)
    if out.kind == "accepted":
        return Converged(z, out.d_norm, out.iters)
    return NotConverged(z, out.d_norm, out.iters)


def track_path(H: Homotopy, z_start, cfg: TrackerConfig, model: ErrorModel,
               path_id: int = 0) -> PathResult:
    """Track one path from t=1 per ``cfg.mode``."""
    if cfg.mode == RERUN:
        return track_path_rerun(H, z_start, cfg, model, path_id)
    rng = path_rng(cfg.seed, path_id)
    fixed = cfg.bits if cfg.mode == FIXED else None
    result = _Tracker(H, cfg, model, rng, fixed).run(z_start)
    result.path_id = path_id
    return result


def track_path_rerun(H: Homotopy, z_start, cfg: TrackerConfig, model: ErrorModel,
                     path_id: int = 0) -> PathResult:
    """Fixed-precision runs up the ladder, each resuming from the last good point."""
    rng = path_rng(cfg.seed, path_id)
    telemetry: list[TelemetryRecord] = []
    path: list = []
    history = []
    z, t = z_start, 1.0
    result = None
    for bits in cfg.ladder:
        tr = _Tracker(H, cfg, model, rng, fixed_bits=bits)
        tr.telemetry = telemetry
        tr.path = path
        result = tr.run(z, t_start=t)
        history.append((bits, result.status, result.t_reached))
        if result.success:
            break
        # resume from the last accepted point of the failed run
        z, t = result.endpoint, result.t_reached
    result.ladder_history = history
    result.path_id = path_id
    result.telemetry = telemetry
    result.path = path
    return result
