"""Command-line interface: ``bequest <command> ...``."""

from __future__ import annotations

import argparse
import contextlib
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import discrete, montecarlo, optimal, sweep
from .actuarial import safe_level
from .config import ScenarioConfig, load_scenario
from .errors import DomainError, NoCrossingError, NumericalError
from .strategies import eval_full, eval_wait

EPILOG = """\
CSV schemas:
  sweep      w,t,phi_full,phi_wait,phi_full_dw,phi_wait_dw,tf,t0,safe_level
  threshold  t,wstar,valid
  vicheck    w,t,residual,action,violation
  dp         k,wealth,action,value,tie
  simulate   policy,w,t,n,seed,estimate,stderr

Law tags: constant (mu), demoivre (T), gamma2 (mu), linearpdf (r, T),
tabulated (csv | knots+values, interpolation, extrapolation).
BEQUEST_THREADS sets the worker process count.
Exit status: 0 ok, 2 domain or config error, 3 numerical failure.
"""


def _fmt(x) -> str:
    return "nan" if x is None else f"{x:.9f}"


@contextlib.contextmanager
def _sink(cfg: ScenarioConfig | None, override: str | None):
    """Output stream: ``-o`` path, else the config's path, else stdout."""
    path = override or (cfg.output.path if cfg is not None else None)
    if path is None:
        yield sys.stdout
        return
    buf = io.StringIO()
    yield buf
    try:
        Path(path).write_text(buf.getvalue())
    except OSError as exc:
        raise DomainError(f"cannot write {path}: {exc}") from exc


def _json_format(cfg, args) -> bool:
    if getattr(args, "format", None):
        return args.format == "json"
    return cfg is not None and cfg.output.format == "json"


def _rows_as_json(fh, header, rows):
    json.dump([dict(zip(header, r)) for r in rows], fh, indent=1)
    fh.write("\n")


def _csv_rows(text: str):
    lines = text.strip().splitlines()
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]


def _emit(cfg, args, write_csv):
    """Render with a CSV writer, converting to JSON records when asked."""
    with _sink(cfg, args.output) as fh:
        if _json_format(cfg, args):
            buf = io.StringIO()
            write_csv(buf)
            header, rows = _csv_rows(buf.getvalue())
            _rows_as_json(fh, header, rows)
        else:
            write_csv(fh)


def _note(args, cfg, line: str):
    # with a file sink the summary goes to stdout, otherwise keep stdout clean
    to_file = args.output or (cfg is not None and cfg.output.path)
    print(line, file=sys.stdout if to_file else sys.stderr)


def cmd_eval(args):
    cfg = load_scenario(args.config)
    spec = cfg.spec
    w, t = args.w, args.t
    f = eval_full(spec, w, t)
    z = eval_wait(spec, w, t)
    for key, val in [
        ("phi_full", f.phi),
        ("phi_wait", z.phi),
        ("phi_full_dw", f.phi_w),
        ("phi_wait_dw", z.phi_w),
        ("tf", f.hit_time),
        ("t0", z.hit_time),
        ("safe_level", safe_level(spec, t)),
    ]:
        print(f"{key} {_fmt(val)}")
    return 0


def cmd_sweep(args):
    cfg = load_scenario(args.config)
    rows = sweep.sweep(cfg.spec, cfg.grid.times(), cfg.grid.w_points)
    _emit(cfg, args, lambda fh: sweep.write_sweep(fh, rows))
    return 0


def cmd_classify(args):
    cfg = load_scenario(args.config)
    spec = cfg.spec
    regime = optimal.classify(spec)
    ev = optimal.classify_evidence(spec)
    print(f"regime {regime}")
    print(f"grid_points {len(ev['grid'])}")
    print(f"max_hazard {ev['max_hazard']:.9g}")
    print(f"hazard_at_zero {spec.law.hazard(0.0):.9g}")
    print(f"density_margin {ev['density_margin']:.9g}")
    print(f"density_nondecreasing {str(ev['density_nondecreasing']).lower()}")
    print(f"t_r {optimal.compute_tr(spec):.9g}")
    return 0


def _threshold_slice(args):
    spec, t = args
    try:
        p = optimal.find_threshold(spec, t)
    except NoCrossingError:
        return t, math.nan, False
    return t, p.wstar, p.valid


def cmd_threshold(args):
    cfg = load_scenario(args.config)
    times = [float(t) for t in cfg.grid.times()]
    pts = sweep.pmap(_threshold_slice, [(cfg.spec, t) for t in times])
    curve = optimal.ThresholdCurve(tuple(p[0] for p in pts), tuple(p[1] for p in pts), tuple(p[2] for p in pts))
    _emit(cfg, args, lambda fh: optimal.write_threshold_curve(fh, curve))
    _note(args, cfg, f"valid_from {curve.valid_from}")
    return 0


def _candidate(cfg, name):
    spec = cfg.spec
    if name == "optimal":
        return optimal.optimal_candidate(spec)
    if name == "full":
        return optimal.full_candidate(spec)
    if name == "wait":
        return optimal.wait_candidate(spec)
    if name == "threshold":
        cache = {}

        def wstar(t):
            if t not in cache:
                cache[t] = optimal.find_crossing(spec, t)
            return cache[t]

        return optimal.composite_candidate(spec, wstar)
    raise DomainError(f"unknown candidate {name!r}")


def cmd_vicheck(args):
    cfg = load_scenario(args.config)
    spec = cfg.spec
    if args.from_sweep:
        try:
            with open(args.from_sweep, newline="") as fh:
                rows = sweep.read_sweep(fh)
        except OSError as exc:
            raise DomainError(f"cannot read {args.from_sweep}: {exc}") from exc
        name = "max" if args.candidate == "threshold" else args.candidate
        regime = optimal.classify(spec) if name == "optimal" else None
        report = optimal.vi_check_lattice(spec, *sweep.lattice(rows, name, regime))
    else:
        report = optimal.vi_check(spec, _candidate(cfg, args.candidate), cfg.grid.times(), cfg.grid.w_points)
    _emit(cfg, args, lambda fh: optimal.write_vi_report(fh, report))
    _note(
        args,
        cfg,
        f"verdict {'pass' if report.verdict else 'fail'} pde_residual_max {report.pde_residual_max:.9g} "
        f"violations {len(report.buy_condition_violations)} tolerance {report.tolerance.pde:g}",
    )
    return 0


def cmd_dp(args):
    spec = discrete.DiscreteSpec.from_json(args.spec) if args.spec else None
    if spec is None:
        raise DomainError("dp needs a discrete spec file")
    table = discrete.dp_policy_path(spec, args.w0)
    value = discrete.dp_value(spec, args.w0)
    _emit(None, args, lambda fh: discrete.write_policy_rows(fh, table.rows))
    if spec.periods <= discrete.MAX_ORACLE_PERIODS:
        oracle = discrete.enumerate_oracle(spec, args.w0)
        path = table.actions
        agree = value == oracle.value and any(seq[: len(path)] == path for seq in oracle.argmax)
        seqs = ";".join("-".join(s) for s in oracle.argmax)
        line = (
            f"oracle value {oracle.value:.9g} dp value {value:.9g} dp path {'-'.join(path)} "
            f"oracle argmax {seqs} agree {str(agree).lower()}"
        )
    else:
        line = f"dp value {value:.9g} (oracle skipped: more than {discrete.MAX_ORACLE_PERIODS} periods)"
    _note(args, None, line)
    return 0


def _policy(spec, desc, t):
    if isinstance(desc, str):
        desc = {"type": desc}
    kind = desc.get("type")
    if kind == "full":
        return montecarlo.FullUntilRuin()
    if kind == "wait":
        return montecarlo.WaitUntilSafe()
    if kind == "deferred":
        if "t_prime" in desc:
            return montecarlo.Deferred(float(desc["t_prime"]))
        return montecarlo.Deferred(t + float(desc.get("delay", 0.0)))
    if kind == "threshold":
        times = np.linspace(float(desc.get("t_min", t)), float(desc["t_max"]), int(desc.get("t_points", 50)))
        return montecarlo.Threshold(optimal.threshold_curve(spec, times))
    raise DomainError(f"unknown policy {kind!r}")


def _sim_task(args):
    spec, desc, w, t, n, seed = args
    return montecarlo.simulate(spec, _policy(spec, desc, t), w, t, n, seed)


def cmd_simulate(args):
    cfg = load_scenario(args.config)
    sim = cfg.extra.get("simulate", {})
    policies = sim.get("policies", ["full", "wait"])
    points = sim.get("points", [[0.0, cfg.grid.t_min]])
    n = int(args.paths or sim.get("n", 10_000))
    seed = cfg.seed if args.seed is None else args.seed
    tasks = [(cfg.spec, p, float(w), float(t), n, seed) for w, t in points for p in policies]
    results = sweep.pmap(_sim_task, tasks)
    if _json_format(cfg, args):
        with _sink(cfg, args.output) as fh:
            fh.write("[" + ",\n".join(r.to_json() for r in results) + "]\n")
    else:
        _emit(cfg, args, lambda fh: montecarlo.write_batch(fh, results))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="bequest",
        description="Optimal life-insurance purchase for a bequest goal.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help, config=True):
        p = sub.add_parser(name, help=help, epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
        if config:
            p.add_argument("config", help="scenario JSON")
        p.add_argument("-o", "--output", help="output path (default: config output.path, else stdout)")
        p.add_argument("--format", choices=["csv", "json"], help="override the config output format")
        p.set_defaults(func=fn)
        return p

    p = add("eval", cmd_eval, "evaluate both strategies at one (w, t)")
    p.add_argument("w", type=float)
    p.add_argument("t", type=float)
    add("sweep", cmd_sweep, "tabulate both strategies over the config grid")
    add("classify", cmd_classify, "report the regime and its evidence")
    add("threshold", cmd_threshold, "threshold w*(t) with validity flags over the grid times")
    p = add("vicheck", cmd_vicheck, "verify a candidate against the variational inequality")
    p.add_argument("--candidate", default="optimal", choices=["optimal", "full", "wait", "threshold"])
    p.add_argument("--from-sweep", help="check the values tabulated in a sweep CSV instead")
    p = add("dp", cmd_dp, "discrete-time policy by backward induction", config=False)
    p.add_argument("spec", help='discrete spec JSON {"q": [...], "i": ..., "theta": ...}')
    p.add_argument("--w0", type=float, required=True)
    p = add("simulate", cmd_simulate, "Monte Carlo success estimates")
    p.add_argument("--paths", type=int, help="paths per estimate (default: config simulate.n)")
    p.add_argument("--seed", type=int, help="override the config seed")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"bequest: error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"bequest: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
