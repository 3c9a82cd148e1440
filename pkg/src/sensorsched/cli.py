"""Command-line front end.

    sensorsched solve    --horizon 100 --budget 100 --shape 1 --out table.json
    sensorsched simulate --horizon 100 --budget 50 --shape 10 --episodes 10000 --trace trace.csv
    sensorsched sweep    --horizon 100 --gammas 0.1,1,10 --out figs/
    sensorsched validate --out report.json

Exit status: 0 success, 1 validation failure, 2 bad arguments, 3 I/O failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import analysis, validation
from .coding import ModelParams
from .dp import HorizonSpec, SolverError, solve
from .distributions import RngStream
from .simulator import run_batch, run_episode

EXIT_OK, EXIT_VALIDATION, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    horizon: int = 100
    budget: int = 100
    rate: float = 1.0
    shape: float = 1.0
    power: float = 1.0
    episodes: int = 10_000
    seed: int = 0
    out: Optional[str] = None
    format: str = "json"

    def params(self) -> ModelParams:
        return ModelParams(rate=self.rate, shape=self.shape, power=self.power)

    def horizon_spec(self) -> HorizonSpec:
        return HorizonSpec(self.horizon, self.budget)


def _config(args) -> RunConfig:
    cfg = RunConfig(**{k: getattr(args, k) for k in RunConfig.__dataclass_fields__ if hasattr(args, k)})
    if cfg.episodes < 1:
        raise UsageError("--episodes must be >= 1")
    if cfg.seed < 0:
        raise UsageError("--seed must be nonnegative")
    try:
        cfg.params()
        cfg.horizon_spec()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return cfg


def _write(path, text: str) -> None:
    p = Path(path)
    if p.parent != Path("."):
        p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text)


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def cmd_solve(cfg: RunConfig) -> int:
    table = solve(cfg.horizon_spec(), cfg.params())
    out = cfg.out or ("value_table.csv" if cfg.format == "csv" else "value_table.json")
    if cfg.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("t", "e", "J", "beta", "c"))
        for t in range(1, table.T + 1):
            for e in range(table.cap + 1):
                beta = _fmt(table.beta[t - 1, e - 1]) if e else "inf"
                c = _fmt(table.c[t - 1, e - 1]) if e else ""
                w.writerow((t, e, _fmt(table.J[t - 1, e]), beta, c))
        _write(out, buf.getvalue())
    else:
        _write(out, table.to_json())

    p = table.params
    print(f"J*(1,{cfg.budget}) = {table.value(1, cfg.budget)!r}")
    print(f"gamma = {p.gamma!r}, m = {p.m!r}, threshold floor sqrt(m) = {p.m ** 0.5!r}")
    if table.cap:
        b = table.beta
        at_floor = int(np.count_nonzero(table.c == 0.0))
        print(f"thresholds: {b.shape[0]}x{b.shape[1]} cells, min {float(b.min())!r}, max {float(b.max())!r}, "
              f"{at_floor} at the floor")
        print("t=1 thresholds by budget: " + " ".join(f"{v:.4f}" for v in b[0]))
    else:
        print("thresholds: none (zero budget, never transmit)")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, trace: Optional[str] = None) -> int:
    table = solve(cfg.horizon_spec(), cfg.params())
    stats = run_batch(table, cfg.episodes, cfg.seed)
    out = cfg.out or ("batch_stats.csv" if cfg.format == "csv" else "batch_stats.json")
    if cfg.format == "csv":
        d = stats.to_dict()
        d["leftover_budget_histogram"] = " ".join(map(str, d["leftover_budget_histogram"]))
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(d))
        w.writerow([_fmt(v) for v in d.values()])
        _write(out, buf.getvalue())
    else:
        _write(out, stats.to_json())
    if trace:
        _write(trace, run_episode(table, RngStream(cfg.seed, 0)).to_csv())

    j = table.value(1, cfg.budget)
    z = (stats.mean_total_cost - j) / stats.std_err_total_cost if cfg.episodes > 1 else float("nan")
    print(f"episodes {cfg.episodes}: mean cost {stats.mean_total_cost:.6g} "
          f"+/- {stats.std_err_total_cost:.3g} (J* = {j:.6g}, z = {z:.2f})")
    print(f"mean transmissions {stats.mean_transmissions:.6g} of budget {cfg.budget}")
    print(f"wrote {out}" + (f" and {trace}" if trace else ""))
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, gammas, plateau_tol: float = 1e-3) -> int:
    if not gammas:
        raise UsageError("--gammas must list at least one SNR")
    if any(not g > 0 for g in gammas):
        raise UsageError("--gammas must be positive")
    sweep = analysis.sweep_error_vs_budget(cfg.horizon, gammas, rate=cfg.rate, power=cfg.power)
    curve = analysis.threshold_vs_minimal_error_curve(gammas, cfg.horizon, rate=cfg.rate)

    outdir = Path(cfg.out or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    _write(outdir / "fig2.csv", sweep.to_csv())
    _write(outdir / "fig2_overlay.json", sweep.overlay_json())

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("gamma", "opportunity_threshold", "minimal_error", "empirical_plateau"))
    for g, (thr, err) in zip(sweep.gammas, curve):
        w.writerow((_fmt(g), _fmt(thr), _fmt(err), analysis.detect_plateau(sweep, g, plateau_tol)))
    _write(outdir / "fig4.csv", buf.getvalue())

    for g, thr, err in sweep.overlay:
        print(f"gamma {g:g}: minimal error {err:.6g}, opportunity threshold {thr:.2f}, "
              f"plateau {analysis.detect_plateau(sweep, g, plateau_tol)}")
    print(f"wrote {outdir / 'fig2.csv'}, {outdir / 'fig2_overlay.json'}, {outdir / 'fig4.csv'}")
    return EXIT_OK


def cmd_validate(out: Optional[str] = None, plateau_tol: float = 1e-3) -> int:
    report = validation.run_validation(plateau_rel_tol=plateau_tol)
    text = json.dumps(report, indent=1, default=_json_default)
    if out:
        _write(out, text)
    for c in report["checks"]:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}")
    for row in report["findings"]["opportunity_threshold_candidates"]:
        print(f"  gamma {row['gamma']:g}: plateau {row['plateau']}, "
              f"T*exp(-rate*sqrt(m)) = {row['exp_sqrt_m_candidate']:.2f} "
              f"({'match' if row['exp_sqrt_m_matches'] else 'no match'}), "
              f"T*exp(-rate*m) = {row['exp_m_candidate']:.2f} "
              f"({'match' if row['exp_m_matches'] else 'no match'})")
    for row in report["findings"]["update_rule_coefficient"]:
        alt = row["two_rate_beta_plus_1"]
        alt_txt = f"rel err {alt['rel_err']:.3g}" if "rel_err" in alt else alt["error"]
        print(f"  gamma {row['gamma']:g}: coefficient (rate*beta+1) rel err "
              f"{row['rate_beta_plus_1']['rel_err']:.3g}; (2*rate*beta+1) {alt_txt}")
    if out:
        print(f"wrote {out}")
    return EXIT_OK if report["passed"] else EXIT_VALIDATION


def _json_default(o):
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _gamma_list(text: str):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sensorsched", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def model_flags(p, budget=True):
        p.add_argument("--horizon", type=int, default=100, help="number of stages T")
        if budget:
            p.add_argument("--budget", type=int, default=100, help="transmission budget N")
        p.add_argument("--rate", type=float, default=1.0, help="Laplace source rate")
        p.add_argument("--shape", type=float, default=1.0, help="Gamma noise shape k (SNR = 1/k)")
        p.add_argument("--power", type=float, default=1.0, help="encoder power budget P_T")

    p = sub.add_parser("solve", help="solve the value table")
    model_flags(p)
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("simulate", help="Monte Carlo rollouts of the optimal policy")
    model_flags(p)
    p.add_argument("--episodes", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", help="also write the episode-0 trace CSV here")
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("sweep", help="error vs budget and threshold vs minimal error data")
    model_flags(p, budget=False)
    p.add_argument("--gammas", type=_gamma_list, default=[0.1, 1.0, 10.0],
                   help="comma-separated SNR list")
    p.add_argument("--plateau-tol", type=float, default=1e-3)
    p.add_argument("--out", help="output directory")

    p = sub.add_parser("validate", help="run the numerical oracle suite")
    p.add_argument("--plateau-tol", type=float, default=1e-3)
    p.add_argument("--out", help="write the JSON report here")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.command == "validate":
            return cmd_validate(args.out, args.plateau_tol)
        cfg = _config(args)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.trace)
        return cmd_sweep(cfg, args.gammas, args.plateau_tol)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
