"""Command line batch runner.

    mptrack track --system sys.txt [--start start.txt] [--config run.cfg] --out DIR
    mptrack gen chebyshev|griewank|chemical|totaldegree ... --out DIR
    mptrack verify --system sys.txt --out DIR

``track`` writes DIR/endpoints.csv, DIR/summary.txt and one telemetry CSV per
path under DIR/telemetry/.  Exit status is 0 when every path succeeds, 2 when
some fail and 1 on bad input.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import multiprocessing
import random
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from . import __version__
from .homotopy import (assemble, chebyshev_problem, chebyshev_text, chemical_problem,
                       complete_problem, CHEMICAL_TEXT, griewank_osborne, griewank_text)
from .mpnum import MpVector, format_real, level, to_raw, working
from .precctl import ErrorModel
from .slp import Homotopy, SlpParseError, accumulate_error, coeff_bounds, expand, parse_problem
from .slp.exact import format_rational
from .slp.parse import format_problem, poly_to_text
from .tracker import ADAPTIVE, FIXED, RERUN, PathResult, TrackerConfig, track_path

TELEMETRY_COLUMNS = ("step", "t", "s", "bits", "digits", "J_norm", "Jinv_est", "cond_est",
                     "ruleA", "ruleB", "ruleC", "corr_iters", "d_norm", "accepted")
ERROR_MODELS = ("coeff_formula", "slp_accumulate", "user")
START_READ_BITS = 256


class InputError(Exception):
    """Bad file contents or options; reported with file and line when known."""


# -- run configuration ----------------------------------------------------------

@dataclass
class RunConfig:
    mode: str = ADAPTIVE
    bits: int = 52
    ladder: tuple = (52, 64, 96, 128, 256)
    tau_schedule: tuple = ((1.0, 8.0),)
    sigma1: int = 0
    sigma2: int = 0
    N: int = 2
    a: float = 0.5
    M: int = 5
    s_init: float = 0.1
    s_min: float = 1e-14
    max_steps: int = 50000
    t_end: float = 0.0
    stop_mode: str = "prediction_agreement"
    precision_cap: int = 1024
    eps_E: float | None = None
    error_model: str = "coeff_formula"
    Psi: float | None = None
    Phi: float | None = None
    seed: int = 0

    def tracker_config(self) -> TrackerConfig:
        return TrackerConfig(
            s_init=self.s_init, s_min=self.s_min, a=self.a, M=self.M, N=self.N,
            tau_schedule=tuple(self.tau_schedule), max_steps=self.max_steps, t_end=self.t_end,
            stop_mode=self.stop_mode, mode=self.mode, bits=self.bits, ladder=tuple(self.ladder),
            precision_cap=self.precision_cap, seed=self.seed)


def _parse_schedule(text: str) -> tuple:
    out = []
    for part in text.split(","):
        thr, _, tau = part.partition(":")
        if not tau:
            raise ValueError("entries look like t_threshold:tau")
        out.append((float(thr), float(tau)))
    return tuple(out)


_CONVERTERS = {
    "mode": str, "stop_mode": str, "error_model": str,
    "bits": int, "sigma1": int, "sigma2": int, "N": int, "M": int, "max_steps": int,
    "precision_cap": int, "seed": int,
    "a": float, "s_init": float, "s_min": float, "t_end": float,
    "eps_E": float, "Psi": float, "Phi": float,
    "ladder": lambda v: tuple(int(b) for b in v.split(",")),
    "tau_schedule": _parse_schedule,
    "tau": lambda v: ((1.0, float(v)),),
}


def parse_config(text: str, path: str = "<config>") -> RunConfig:
    """Flat ``key = value`` lines with ``#`` comments; unknown keys are errors."""
    cfg = RunConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = (s.strip() for s in line.partition("="))
        if not eq or not value:
            raise InputError(f"{path}:{lineno}: expected 'key = value'")
        if key not in _CONVERTERS:
            raise InputError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            converted = _CONVERTERS[key](value)
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
        setattr(cfg, "tau_schedule" if key == "tau" else key, converted)
    if cfg.error_model not in ERROR_MODELS:
        raise InputError(f"{path}: error_model must be one of {', '.join(ERROR_MODELS)}")
    if cfg.mode not in (ADAPTIVE, FIXED, RERUN):
        raise InputError(f"{path}: mode must be adaptive, fixed or rerun")
    return cfg


def format_config(cfg: RunConfig) -> str:
    lines = []
    for f in fields(RunConfig):
        v = getattr(cfg, f.name)
        if v is None:
            continue
        if f.name == "ladder":
            v = ",".join(str(b) for b in v)
        elif f.name == "tau_schedule":
            v = ", ".join(f"{thr!r}:{tau!r}" for thr, tau in v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


# -- start points ---------------------------------------------------------------

def parse_start(text: str, n: int, path: str = "<start>") -> list[MpVector]:
    """Blocks of ``re im`` lines separated by blank lines, one block per path."""
    lvl = level(START_READ_BITS)
    points, block = [], []

    def flush(lineno):
        if not block:
            return
        if len(block) != n:
            raise InputError(f"{path}:{lineno}: start point has {len(block)} coordinates, expected {n}")
        points.append(MpVector(tuple(block), lvl))
        block.clear()

    lineno = 0
    with working(lvl):
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                flush(lineno)
                continue
            parts = line.split()
            if len(parts) != 2:
                raise InputError(f"{path}:{lineno}: expected 're im'")
            try:
                block.append(to_raw((parts[0], parts[1]), lvl))
            except ValueError:
                raise InputError(f"{path}:{lineno}: bad number in {line!r}") from None
        flush(lineno)
    if not points:
        raise InputError(f"{path}: no start points")
    return points


def format_start(points) -> str:
    blocks = []
    for p in points:
        blocks.append("\n".join(f"{format_real(v.real, p.prec)} {format_real(v.imag, p.prec)}"
                                for v in p.entries))
    return "\n\n".join(blocks) + "\n"


# -- error model -----------------------------------------------------------------

def error_model_for(H: Homotopy, cfg: RunConfig, points) -> ErrorModel:
    if cfg.error_model == "user" or (cfg.Psi is not None and cfg.Phi is not None):
        if cfg.Psi is None or cfg.Phi is None:
            raise InputError("error_model = user needs both Psi and Phi")
        psi, phi = cfg.Psi, cfg.Phi
    elif cfg.error_model == "coeff_formula":
        parts = [p for p in (H.target, H.start) if p is not None] or [H.system]
        bounds = [coeff_bounds(p) for p in parts]
        psi = max(b.Psi for b in bounds)
        phi = max(b.Phi for b in bounds)
    else:
        psi, phi = slp_accumulate_bounds(H, points)
    return ErrorModel(psi, phi, cfg.eps_E, cfg.sigma1, cfg.sigma2, cfg.tau_schedule[0][1], cfg.N)


def slp_accumulate_bounds(H: Homotopy, points) -> tuple[float, float]:
    """Psi from running error bounds of H at the start points, t = 1, 1/2, 0.

    Phi takes the coefficient formula's ratio (max degree - 1) to Psi.  Both
    hold only near the sampled points; the coefficient formula is global.
    """
    u = level(52).unit_roundoff
    worst = 0.0
    for p in points:
        for t in (1.0, 0.5, 0.0):
            worst = max(worst, accumulate_error(H.system, p, t, 52))
    psi = worst / u
    dmax = max((max(d) for d in H.system.multidegrees()), default=1)
    return psi, psi * max(1, dmax - 1)


# -- tracking -------------------------------------------------------------------

_JOB: tuple | None = None


def _track_one(i: int) -> PathResult:
    H, points, tcfg, model = _JOB
    return track_path(H, points[i], tcfg, model, i)


def track_all(H, points, tcfg, model, jobs: int = 1) -> list[PathResult]:
    global _JOB
    _JOB = (H, points, tcfg, model)
    try:
        if jobs <= 1 or len(points) <= 1:
            return [_track_one(i) for i in range(len(points))]
        ctx = multiprocessing.get_context("fork")
        with concurrent.futures.ProcessPoolExecutor(jobs, mp_context=ctx) as pool:
            return list(pool.map(_track_one, range(len(points))))
    finally:
        _JOB = None


def _num(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def telemetry_csv(result: PathResult) -> str:
    rows = [",".join(TELEMETRY_COLUMNS)]
    for r in result.telemetry:
        rows.append(",".join([
            str(r.step), _num(r.t), _num(r.s), str(r.bits), str(r.digits), _num(r.J_norm),
            _num(r.Jinv_norm_est), _num(r.cond_est), _num(r.ruleA), _num(r.ruleB), _num(r.ruleC),
            str(r.corrector_iterations), _num(r.d_norm_final), "1" if r.accepted else "0"]))
    return "\n".join(rows) + "\n"


def emit_telemetry(result: PathResult, path_id: int, out_dir: Path) -> Path:
    tdir = out_dir / "telemetry"
    tdir.mkdir(parents=True, exist_ok=True)
    path = tdir / f"path_{path_id:04d}.csv"
    path.write_text(telemetry_csv(result))
    return path


def endpoints_csv(results, variables) -> str:
    head = ["path", "status", "t_final"]
    for v in variables:
        head += [f"{v}_re", f"{v}_im"]
    head += ["bits_max", "steps"]
    rows = [",".join(head)]
    for r in results:
        lvl = r.endpoint.prec
        row = [str(r.path_id), str(r.status), _num(r.t_reached)]
        for c in r.endpoint.entries:
            row += [format_real(c.real, lvl), format_real(c.imag, lvl)]
        row += [str(r.bits_max), str(r.steps)]
        rows.append(",".join(row))
    return "\n".join(rows) + "\n"


def summary_text(results, cfg: RunConfig, model: ErrorModel, gamma) -> str:
    lines = [f"mptrack {__version__}",
             f"mode {cfg.mode}  seed {cfg.seed}  stop {cfg.stop_mode}",
             f"Psi {model.Psi!r}  Phi {model.Phi!r}  eps_E {model.eps_E!r}  "
             f"sigma1 {model.sigma1}  sigma2 {model.sigma2}"]
    if gamma is not None:
        lines.append(f"gamma {format_rational(gamma.re)} {format_rational(gamma.im)}")
    lines += ["", f"{'path':>5}  {'status':<22}{'t_final':>12}  {'bits_max':>8}  {'steps':>7}  message"]
    for r in results:
        lines.append(f"{r.path_id:>5}  {str(r.status):<22}{r.t_reached:>12.3e}  {r.bits_max:>8}  "
                     f"{r.steps:>7}  {r.message}")
    counts: dict[str, int] = {}
    for r in results:
        counts[str(r.status)] = counts.get(str(r.status), 0) + 1
    lines += ["", f"paths {len(results)}"]
    lines += [f"{k} {v}" for k, v in sorted(counts.items())]
    by_bits: dict[int, int] = {}
    for r in results:
        by_bits[r.bits_max] = by_bits.get(r.bits_max, 0) + 1
    lines.append("bits_max " + "  ".join(f"{b}:{c}" for b, c in sorted(by_bits.items())))
    return "\n".join(lines) + "\n"


def _read(path: str, what: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {what} {path}: {exc.strerror}") from None


def load_problem(path: str):
    try:
        return parse_problem(_read(path, "system file"))
    except SlpParseError as exc:
        raise InputError(f"{path}: {exc}") from None


def cmd_track(args) -> int:
    cfg = parse_config(_read(args.config, "config"), args.config) if args.config else RunConfig()
    if args.mode:
        cfg.mode = args.mode
    if args.bits:
        cfg.bits = args.bits
    if args.seed is not None:
        cfg.seed = args.seed
    problem = load_problem(args.system)
    try:
        problem, ss = complete_problem(problem, random.Random(cfg.seed))
        H = assemble(problem)
        tcfg = cfg.tracker_config()
    except ValueError as exc:
        raise InputError(f"{args.system}: {exc}") from None
    if args.start:
        points = parse_start(_read(args.start, "start file"), H.n, args.start)
    elif ss is not None:
        points = list(ss.start_points)
    else:
        raise InputError("this system needs start points (--start)")
    model = error_model_for(H, cfg, points)
    model = model.for_dimension(H.n)
    results = track_all(H, points, tcfg, model, args.jobs)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "endpoints.csv").write_text(endpoints_csv(results, H.variables))
    (out / "summary.txt").write_text(summary_text(results, cfg, model, problem.gamma))
    (out / "config_used.txt").write_text(format_config(cfg))
    for r in results:
        emit_telemetry(r, r.path_id, out)
    failed = sum(1 for r in results if not r.success)
    print(f"{len(results) - failed}/{len(results)} paths succeeded; output in {out}")
    return 0 if failed == 0 else 2


# -- generators --------------------------------------------------------------------

GEN_CONFIGS = {
    "chebyshev": "tau = 10\nsigma1 = 4\nsigma2 = 4\ns_init = 1e-9\ns_min = 1e-40\n",
    "griewank": ("tau_schedule = 1.0:8, 0.1:12\nerror_model = user\nPsi = 12\nPhi = 24\n"
                 "stop_mode = reach_t_end\nt_end = 1e-30\ns_min = 1e-40\n"),
    "chemical": "tau = 8\ns_init = 1e-6\ns_min = 1e-40\n",
    "totaldegree": "",
}


def _start_functions(start_sys) -> list[str]:
    polys = expand(start_sys)[:start_sys.n_eqs - start_sys.patch_count]
    return [poly_to_text(p, start_sys.variables) for p in polys]


def cmd_gen(args) -> int:
    seed = args.seed if args.seed is not None else 0
    header = [f"generated by: mptrack gen {args.problem} --seed {seed}"
              + (f" --degree {args.degree}" if args.problem == "chebyshev" else "")]
    if args.problem == "chebyshev":
        if args.degree is None or args.degree < 1:
            raise InputError("gen chebyshev needs --degree >= 1")
        problem, ss = chebyshev_problem(args.degree, seed)
        lets = chebyshev_text(args.degree)
        text = format_problem(problem, functions=[lets[-1][0]], lets=lets,
                              start_functions=_start_functions(problem.start), header=header)
    elif args.problem == "griewank":
        _, ss = griewank_osborne()
        text = "# " + header[0] + "\n" + griewank_text()
    elif args.problem == "chemical":
        problem, ss = chemical_problem(seed)
        text = format_problem(problem, functions=list(CHEMICAL_TEXT),
                              start_functions=_start_functions(problem.start), header=header)
    else:
        if not args.system:
            raise InputError("gen totaldegree needs --system")
        try:
            problem, ss = complete_problem(load_problem(args.system), random.Random(seed))
        except ValueError as exc:
            raise InputError(f"{args.system}: {exc}") from None
        if ss is None:
            raise InputError(f"{args.system}: already has start functions (or depends on t)")
        header.append(f"from {args.system}")
        text = format_problem(problem, start_functions=_start_functions(problem.start), header=header)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "system.txt").write_text(text)
    (out / "start.txt").write_text(format_start(ss.start_points))
    config = GEN_CONFIGS[args.problem] + f"seed = {seed}\n"
    (out / "config.txt").write_text(config)
    print(f"wrote {out / 'system.txt'}, {out / 'start.txt'} ({len(ss)} paths) and {out / 'config.txt'}")
    return 0


# -- verify --------------------------------------------------------------------------

def read_endpoints(path: str, variables) -> list[tuple[int, str, list]]:
    text = _read(path, "endpoints file")
    lines = text.splitlines()
    if not lines:
        raise InputError(f"{path}: empty")
    head = lines[0].split(",")
    want = [f"{v}_{part}" for v in variables for part in ("re", "im")]
    try:
        idx = [head.index(c) for c in want]
    except ValueError:
        raise InputError(f"{path}:1: columns do not match the system's variables") from None
    lvl = level(START_READ_BITS)
    rows = []
    with working(lvl):
        for lineno, line in enumerate(lines[1:], 2):
            cells = line.split(",")
            try:
                coords = [to_raw((cells[i], cells[j]), lvl) for i, j in zip(idx[::2], idx[1::2])]
            except (ValueError, IndexError):
                raise InputError(f"{path}:{lineno}: bad row") from None
            rows.append((int(cells[0]), cells[1], coords))
    return rows


def relative_residual(polys, point: list, lvl) -> float:
    """max_i |f_i(z)| / sum_a |c_a| |z^a|, a scale-free residual."""
    worst = 0.0
    with working(lvl):
        for poly in polys:
            val, den = to_raw(0, lvl), 0.0
            for mono, c in poly.items():
                term = to_raw((c.re, c.im), lvl)
                for x, e in zip(point, mono):
                    if e:
                        term = term * x ** e
                val += term
                den += float(abs(term))
            if den > 0:
                worst = max(worst, float(abs(val)) / den)
    return worst


def cmd_verify(args) -> int:
    problem = load_problem(args.system)
    endpoints = args.endpoints or str(Path(args.out) / "endpoints.csv")
    variables = problem.variables + problem.hom_variables
    rows = read_endpoints(endpoints, variables)
    lvl = level(START_READ_BITS)
    polys = expand(problem.target)
    hom_of = {m: g.hvar for g in problem.groups for m in g.members}
    bad = 0
    print(f"{'path':>5}  {'status':<22}  relative residual")
    for pid, status, coords in rows:
        vals = dict(zip(variables, coords))
        with working(lvl):
            scale = max((float(abs(c)) for c in coords), default=1.0) or 1.0
            if any(float(abs(vals[h])) <= args.inf_tol * scale for h in problem.hom_variables):
                print(f"{pid:>5}  {status:<22}  at infinity")
                continue
            point = [vals[v] / vals[hom_of[v]] if v in hom_of else vals[v] for v in problem.variables]
        res = relative_residual(polys, point, lvl)
        flag = ""
        if status == "Success" and res > args.tol:
            bad += 1
            flag = "  > tol"
        print(f"{pid:>5}  {status:<22}  {res:.3e}{flag}")
    return 0 if bad == 0 else 2


# -- entry point -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mptrack",
                                description="Homotopy path tracking with adaptive precision.")
    p.add_argument("--version", action="version", version=f"mptrack {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("track", help="track every start point to t=0")
    t.add_argument("--system", required=True, help="system file")
    t.add_argument("--start", help="start points (re im per line, blank line between paths)")
    t.add_argument("--config", help="key = value run configuration")
    t.add_argument("--mode", choices=(ADAPTIVE, FIXED, RERUN))
    t.add_argument("--bits", type=int, help="precision for fixed mode")
    t.add_argument("--seed", type=int)
    t.add_argument("--out", required=True, help="output directory")
    t.add_argument("--jobs", type=int, default=1, help="worker processes")
    t.set_defaults(func=cmd_track)

    g = sub.add_parser("gen", help="write a built-in problem as system.txt, start.txt and config.txt")
    g.add_argument("problem", choices=("chebyshev", "griewank", "chemical", "totaldegree"))
    g.add_argument("--degree", type=int, help="Chebyshev degree")
    g.add_argument("--system", help="target system for totaldegree")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    v = sub.add_parser("verify", help="substitute endpoints into the target system")
    v.add_argument("--system", required=True)
    v.add_argument("--out", default=".", help="directory holding endpoints.csv")
    v.add_argument("--endpoints", help="endpoints file (overrides --out)")
    v.add_argument("--tol", type=float, default=1e-6,
                   help="relative residual bound for successful paths")
    v.add_argument("--inf-tol", type=float, default=1e-8,
                   help="relative size of a homogenizing coordinate treated as zero")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"mptrack: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
