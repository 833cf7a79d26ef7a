"""Command-line front end: single bounds, sweeps, eta and figure data."""

import argparse
import csv
import io
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bounds, coherent, qmat, sdp, serialize, zoo
from .channel import CPDecomposition, CPMap
from .qmat import DensityMatrix

EXIT_PARSE = 2
EXIT_SOLVER = 3

KINDS = ("approx-degradable", "choi-flag", "pure-flag", "private-flag", "degradable-flag",
         "private-degradable", "general-flag", "gad-flag", "dp-gad", "q1")

# x-axis annotation for sweep headers
_PARAM_UNITS = {"p": "p (error probability)", "w": "w (=3p/4)", "y": "y (damping)",
                "N": "N (thermal)", "pX": "pX (bit flip)", "pZ": "pZ (phase flip)"}


class UsageError(ValueError):
    pass


@dataclass
class SweepConfig:
    spec: str
    param: str
    start: float
    stop: float
    steps: int
    kinds: tuple
    alpha_grid: int = 101
    alpha_refine: int = 30
    rank_tol: float = qmat.RANK_TOL
    sdp_tol: float = sdp.DEFAULT_TOL
    fmt: str = "csv"
    out: str = None
    seed: int = 0
    jobs: int = 1
    restarts: int = 20
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.steps < 1:
            raise UsageError("steps must be >= 1")
        if self.rank_tol <= 0 or self.sdp_tol <= 0:
            raise UsageError("tolerances must be positive")

    def points(self):
        if self.steps == 1:
            return [float(self.start)]
        return [float(v) for v in np.linspace(self.start, self.stop, self.steps)]


# --------------------------------------------------------------------------
# targets: named specs or JSON files
# --------------------------------------------------------------------------

def load_target(text):
    """A NamedChannelSpec, or a CPMap / CPDecomposition / DensityMatrix from a file."""
    path = Path(text)
    if text.endswith(".json") or path.is_file():
        try:
            content = path.read_text()
        except OSError as exc:
            raise UsageError(f"cannot read {text}: {exc}") from None
        return serialize.load_object(content)
    return zoo.NamedChannelSpec.parse(text)


def _as_decomposition(target):
    if isinstance(target, zoo.NamedChannelSpec):
        return target.decomposition()
    if isinstance(target, CPDecomposition):
        return target
    if isinstance(target, CPMap):
        return CPDecomposition((target,))
    raise UsageError("this bound needs a channel or a decomposition")


def _as_channel(target):
    if isinstance(target, zoo.NamedChannelSpec):
        return target.channel()
    if isinstance(target, CPDecomposition):
        return target.channel
    if isinstance(target, CPMap):
        return target
    raise UsageError("this bound needs a channel")


def evaluate(target, kind, opts):
    """One BoundReport for ``kind`` on ``target``."""
    tol, rt = opts["sdp_tol"], opts["rank_tol"]
    grid, refine = opts["alpha_grid"], opts["alpha_refine"]
    q1kw = {"restarts": opts["restarts"], "seed": opts["seed"]}
    alpha = opts.get("alpha")
    if kind == "approx-degradable":
        return bounds.approx_degradable_bound(_as_channel(target), tol, rt, **q1kw)
    if kind == "choi-flag":
        if isinstance(target, zoo.NamedChannelSpec):
            tau, omega = target.choi_split()
        else:
            raise UsageError("choi-flag needs a named depolarizing spec")
        return bounds.choi_channel_bound(tau, omega, None, grid, refine, tol, rt)
    if kind in ("pure-flag", "private-flag"):
        dec = _as_decomposition(target)
        flavor = "quantum" if kind == "pure-flag" else "private"
        if alpha is not None:
            return bounds.channel_flag_bound(dec, alpha, flavor, tol, rt, **q1kw)
        return bounds.alpha_scan(
            lambda a: bounds.channel_flag_bound(dec, a, flavor, tol, rt, **q1kw),
            grid, refine)[1]
    if kind in ("degradable-flag", "private-degradable"):
        flavor = "quantum" if kind == "degradable-flag" else "private"
        return bounds.degradable_flag_bound(_as_decomposition(target), flavor, grid, refine,
                                            tol, rt, **q1kw)
    if kind == "general-flag":
        dec = _as_decomposition(target)
        if dec.flags is None:
            k = len(dec.parts)
            dec = dec.with_flags([np.diag(np.eye(k)[j]) for j in range(k)])
        return bounds.general_flag_bound(dec, None, tol, rt, **q1kw)
    if kind in ("gad-flag", "dp-gad"):
        if not (isinstance(target, zoo.NamedChannelSpec) and target.family == "gad"):
            raise UsageError(f"{kind} needs a gad:y=...,N=... spec")
        p = target.normalized()
        if kind == "gad-flag":
            return bounds.gad_flag_bound(p["y"], p["N"], tol, rt)
        return bounds.dp_gad_report(p["y"], p["N"])
    if kind == "q1":
        res = coherent.q1_maximize(_as_channel(target), **q1kw)
        return bounds.BoundReport(value=res.value, kind="q1", terms={"q1": res.value},
                                  value_upper=res.value, heuristic=res.heuristic,
                                  notes=[f"lower bound; best of {res.restarts} ascents"])
    raise UsageError(f"unknown bound kind {kind!r}")


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.9g}"


def _point_row(args):
    spec_text, param, x, kinds, opts = args
    spec = zoo.NamedChannelSpec.parse(spec_text).with_param(param, x)
    rows = []
    try:
        lower = coherent.q1_maximize(spec.channel(), restarts=opts["restarts"],
                                     seed=opts["seed"]).value
    except (ValueError, sdp.SolverError) as exc:
        lower, lower_err = None, str(exc)
    else:
        lower_err = ""
    for kind in kinds:
        row = {"x": x, "kind": kind, "q1_lower": lower}
        try:
            rep = evaluate(spec, kind, opts)
        except (ValueError, sdp.SolverError) as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        else:
            row.update(rep.csv_fields())
            row["report"] = rep.to_dict()
            row["error"] = lower_err
        rows.append(row)
    return rows


CSV_COLUMNS = ("kind", "value", "value_upper", "q1_lower", "alpha", "eta", "env_dim",
               "heuristic", "error")
CSV_HEADER = ("bound kind", "value [bits, log2]", "value_upper [bits, log2]",
              "q1_lower [bits, log2]", "alpha [1]", "eta [1]", "env_dim [count]",
              "heuristic [0/1]", "error")


def default_jobs():
    try:
        return max(int(os.environ.get("CAPBOUND_JOBS", "1")), 1)
    except ValueError:
        return 1


def run_sweep(cfg):
    """Rows ordered by parameter, then by kind order in the config."""
    opts = {"alpha_grid": cfg.alpha_grid, "alpha_refine": cfg.alpha_refine,
            "rank_tol": cfg.rank_tol, "sdp_tol": cfg.sdp_tol, "seed": cfg.seed,
            "restarts": cfg.restarts, **cfg.extra}
    zoo.NamedChannelSpec.parse(cfg.spec)  # fail early on a bad spec
    tasks = [(cfg.spec, cfg.param, x, tuple(cfg.kinds), opts) for x in cfg.points()]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            chunks = list(pool.map(_point_row, tasks))
    else:
        chunks = [_point_row(t) for t in tasks]
    return [row for chunk in chunks for row in chunk]


def sweep_csv(rows, param):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow((_PARAM_UNITS.get(param, param),) + CSV_HEADER)
    for r in rows:
        w.writerow([_fmt(r["x"])] + [r.get(c, "") if c in ("kind", "error")
                                     else _fmt(r.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def sweep_json(rows, param):
    out = [{"param": param, "x": r["x"], "kind": r["kind"], "q1_lower": r["q1_lower"],
            "error": r.get("error", ""), "report": r.get("report")} for r in rows]
    return serialize.dumps(out, indent=1) + "\n"


def _emit(text, out):
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# built-in figure sweeps
# --------------------------------------------------------------------------

FIGURES = {
    "fig1": ("depolarizing:w=0", "w", 0.0, 0.02, 21, ("choi-flag", "approx-degradable")),
    "fig2": ("depolarizing:w=0", "w", 0.0, 0.15, 31, ("choi-flag",)),
    "fig3a": ("gad:y=0,N=0.1", "y", 0.0, 0.5, 26, ("gad-flag", "dp-gad")),
    "fig3b": ("gad:y=0,N=0.3", "y", 0.0, 0.5, 26, ("gad-flag", "dp-gad")),
    "fig3c": ("gad:y=0,N=0.5", "y", 0.0, 0.5, 26, ("gad-flag", "dp-gad")),
    "fig4": ("bb84:p=0", "p", 0.0, 0.04, 21, ("private-degradable",)),
}


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def _common(p):
    p.add_argument("--alpha-grid", type=int, default=101, help="alpha grid points")
    p.add_argument("--alpha-refine", type=int, default=30, help="refinement iterations")
    p.add_argument("--rank-tol", type=float, default=qmat.RANK_TOL)
    p.add_argument("--sdp-tol", type=float, default=sdp.DEFAULT_TOL)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=20, help="Q1 ascent restarts")
    p.add_argument("--out", help="output path (default stdout)")


def build_parser():
    ap = argparse.ArgumentParser(prog="capbound",
                                 description="Single-letter capacity upper bounds.")
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bound", help="evaluate one bound")
    b.add_argument("target", help="spec like depolarizing:p=0.04, or a JSON file")
    b.add_argument("--kind", choices=KINDS, required=True)
    b.add_argument("--alpha", type=float, help="fix alpha instead of scanning")
    b.add_argument("--format", choices=("json", "csv"), default="json")
    _common(b)

    s = sub.add_parser("sweep", help="evaluate bounds over a parameter range")
    s.add_argument("target", help="base spec, e.g. depolarizing:w=0")
    s.add_argument("--param", required=True, help="parameter to sweep (p, w, y, N, pX, pZ)")
    s.add_argument("--start", type=float, required=True)
    s.add_argument("--stop", type=float, required=True)
    s.add_argument("--steps", type=int, default=21)
    s.add_argument("--kind", required=True, help="comma-separated bound kinds")
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.add_argument("--jobs", type=int, default=None, help="worker processes")
    _common(s)

    e = sub.add_parser("eta", help="degradability parameter of a channel or state")
    e.add_argument("target", help="spec or JSON file (channel or state)")
    e.add_argument("--dump-sdp", metavar="PATH", help="write the conic problem as JSON")
    e.add_argument("--sdp-tol", type=float, default=sdp.DEFAULT_TOL)
    e.add_argument("--rank-tol", type=float, default=qmat.RANK_TOL)
    e.add_argument("--out")

    f = sub.add_parser("figures", help="regenerate the built-in figure sweeps")
    f.add_argument("--out", default="figures", help="output directory")
    f.add_argument("--only", help="comma-separated subset of " + ",".join(FIGURES))
    f.add_argument("--format", choices=("csv", "json"), default="csv")
    f.add_argument("--jobs", type=int, default=None)
    f.add_argument("--alpha-grid", type=int, default=101)
    f.add_argument("--alpha-refine", type=int, default=30)
    f.add_argument("--rank-tol", type=float, default=qmat.RANK_TOL)
    f.add_argument("--sdp-tol", type=float, default=sdp.DEFAULT_TOL)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--restarts", type=int, default=20)
    return ap


def _opts(a):
    return {"alpha_grid": a.alpha_grid, "alpha_refine": a.alpha_refine,
            "rank_tol": a.rank_tol, "sdp_tol": a.sdp_tol, "seed": a.seed,
            "restarts": a.restarts, "alpha": getattr(a, "alpha", None)}


def cmd_bound(a):
    rep = evaluate(load_target(a.target), a.kind, _opts(a))
    if a.format == "json":
        _emit(serialize.report_to_json(rep) + "\n", a.out)
    else:
        row = {"x": math.nan, "kind": a.kind, "q1_lower": None, **rep.csv_fields()}
        _emit(sweep_csv([row], "x"), a.out)
    return 0


def _sweep_cfg(a, spec, param, start, stop, steps, kinds):
    jobs = a.jobs if a.jobs is not None else default_jobs()
    return SweepConfig(spec, param, start, stop, steps, tuple(kinds), a.alpha_grid,
                       a.alpha_refine, a.rank_tol, a.sdp_tol, a.format, a.out, a.seed,
                       jobs, a.restarts)


def _write_sweep(cfg, out):
    rows = run_sweep(cfg)
    text = sweep_csv(rows, cfg.param) if cfg.fmt == "csv" else sweep_json(rows, cfg.param)
    _emit(text, out)
    return rows


def cmd_sweep(a):
    kinds = [k.strip() for k in a.kind.split(",") if k.strip()]
    bad = [k for k in kinds if k not in KINDS]
    if bad or not kinds:
        raise UsageError(f"unknown bound kind(s): {', '.join(bad) or '(none)'}")
    cfg = _sweep_cfg(a, a.target, a.param, a.start, a.stop, a.steps, kinds)
    _write_sweep(cfg, a.out)
    return 0


def cmd_eta(a):
    target = load_target(a.target)
    if isinstance(target, DensityMatrix):
        builder, _ = sdp.eta_state_problem(target, rel_tol=a.rank_tol)
        res = sdp.eta_state(target, tol=a.sdp_tol, rel_tol=a.rank_tol)
        what = "state"
    else:
        n = _as_channel(target)
        builder, _ = sdp.eta_channel_problem(n, a.rank_tol)
        res = sdp.eta_channel(n, a.sdp_tol, a.rank_tol)
        what = "channel"
    if a.dump_sdp:
        Path(a.dump_sdp).write_text(serialize.dumps(builder.build().to_dict()) + "\n")
    out = {"target": what, "eta": res.eta, "env_dim": res.env_dim,
           "rank_tol": a.rank_tol, "diagnostics": res.solution.diagnostics()}
    _emit(serialize.dumps(out, indent=2) + "\n", a.out)
    return 0


def cmd_figures(a):
    names = list(FIGURES) if not a.only else [s.strip() for s in a.only.split(",")]
    unknown = [n for n in names if n not in FIGURES]
    if unknown:
        raise UsageError(f"unknown figure(s): {', '.join(unknown)}")
    outdir = Path(a.out)
    for name in names:
        spec, param, start, stop, steps, kinds = FIGURES[name]
        cfg = _sweep_cfg(a, spec, param, start, stop, steps, kinds)
        path = outdir / f"{name}.{a.format}"
        _write_sweep(cfg, str(path))
        print(f"wrote {path}", file=sys.stderr)
    return 0


COMMANDS = {"bound": cmd_bound, "sweep": cmd_sweep, "eta": cmd_eta, "figures": cmd_figures}


def main(argv=None):
    parser = build_parser()
    a = parser.parse_args(argv)  # argparse exits with status 2 itself
    try:
        return COMMANDS[a.command](a)
    except sdp.SolverError as exc:
        print(f"capbound: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, OSError) as exc:
        print(f"capbound: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
