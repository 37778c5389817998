"""Command-line entry point."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import csvio
from .config import ConfigError, RunConfig, default_config_text, load_config, parse_config
from .data import Dataset
from .evaluation import (
    SolverOptions, compare, ex_post_evaluate, framework_a_set, phase_scenario_sets,
    run_day_a, run_day_b,
)
from .market import TRACE_FIELDS, T, ValidationError
from .scenarios import price_scenarios, regulation_scenarios
from .synth import SynthConfig, synth_generate

log = logging.getLogger("wspp")

COMMANDS = ("synth", "scenarios", "solve-a", "solve-b", "evaluate", "compare")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wspp", description="Wind and storage plant market scheduling.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="run configuration file (default: synthetic data)")
    p.add_argument("--days", type=int, help="number of evaluation days")
    p.add_argument("--seed", type=int, help="synthetic data seed")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--framework", choices=("a", "b"), default="b", help="framework for evaluate")
    p.add_argument("--tol", type=float, help="solver optimality tolerance")
    p.add_argument("--day", type=int, help="day label to run (default: first evaluation day)")
    p.add_argument("--scenarios", type=Path, help="scenarios CSV for solve-a")
    p.add_argument("--commitments", type=Path, help="commitments CSV for evaluate")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else parse_config(default_config_text())
    changes = {}
    if args.tol is not None:
        changes["tol"] = args.tol
    if args.out is not None:
        changes["out_dir"] = args.out
    if cfg.synthetic is not None and (args.seed is not None or args.days is not None):
        synth = cfg.synthetic.__dict__.copy()
        if args.seed is not None:
            synth["seed"] = args.seed
        if args.days is not None:
            synth["n_days"] = args.days
        changes["synthetic"] = SynthConfig(**synth)
    return cfg.replace(**changes) if changes else cfg


def load_dataset(cfg: RunConfig) -> Dataset:
    if cfg.synthetic is not None:
        return synth_generate(cfg.synthetic)
    return csvio.ingest(cfg.data)


def _pick_day(data: Dataset, label):
    if label is None:
        return data.days[0]
    for d in data.days:
        if d.day == label:
            return d
    raise ValidationError(f"day {label} not among evaluation days "
                          f"{data.days[0].day}..{data.days[-1].day}")


def _families(cfg: RunConfig, data: Dataset):
    return (price_scenarios(data.price_history, cfg.k_prices, cfg.seed),
            regulation_scenarios(data.regulation_history, cfg.k_reg, cfg.seed))


def _write_income(path, income):
    csvio._write(path, ("i_dam", "i_idm", "i_bm", "i_rm", "total"), [list(income.as_dict().values())])


def _write_trace(path, trace):
    cols = [getattr(trace, f) for f in TRACE_FIELDS]
    csvio._write(path, ("hour",) + TRACE_FIELDS, ([h] + [c[h] for c in cols] for h in range(T)))


def cmd_synth(cfg, args):
    data = load_dataset(cfg)
    paths = csvio.emit_dataset(data, cfg.out_dir)
    print(f"wrote {len(data.price_history)} history days and {len(data.days)} evaluation days to {paths.prices.parent}")


def cmd_scenarios(cfg, args):
    data = load_dataset(cfg)
    day = _pick_day(data, args.day)
    prices, reg = _families(cfg, data)
    scen = framework_a_set(day, prices, reg, cfg.a_snapshot)
    csvio.write_scenarios(cfg.out_dir / "scenarios.csv", scen)
    print(f"day {day.day}: {len(scen)} scenarios -> {cfg.out_dir / 'scenarios.csv'}")


def cmd_solve_a(cfg, args):
    opts = SolverOptions(cfg.method, cfg.tol)
    if args.scenarios is not None:
        # stand-alone solve on a given scenario set; no realized day to score against
        from .builder import PhaseId, build_framework_a, expected_income_breakdown, extract_commitments
        from .lp import solve

        scen = csvio.read_scenarios(args.scenarios)
        lp, index = build_framework_a(cfg.params, scen)
        sol = solve(lp, tol=opts.tol, method=opts.method)
        if not sol.optimal:
            raise ValidationError(f"Framework A LP ended {sol.status.value}")
        csvio.write_commitments(cfg.out_dir / "commitments.csv", extract_commitments(PhaseId.FRAMEWORK_A, sol, index))
        _write_income(cfg.out_dir / "expected_income.csv", expected_income_breakdown(sol, index, scen))
        print(f"expected income {sol.objective_value:.2f}")
        return
    data = load_dataset(cfg)
    day = _pick_day(data, args.day)
    prices, reg = _families(cfg, data)
    res = run_day_a(cfg.params, framework_a_set(day, prices, reg, cfg.a_snapshot), day.realized, opts, day.day)
    _emit_day(cfg, res)


def cmd_solve_b(cfg, args):
    opts = SolverOptions(cfg.method, cfg.tol)
    data = load_dataset(cfg)
    day = _pick_day(data, args.day)
    prices, reg = _families(cfg, data)
    res = run_day_b(cfg.params, phase_scenario_sets(day, prices, reg), day.realized, opts, day.day)
    _emit_day(cfg, res)


def _emit_day(cfg, res):
    csvio.write_commitments(cfg.out_dir / "commitments.csv", res.commitments)
    csvio.write_report(cfg.out_dir / "report.csv", [csvio.report_row(res)])
    _write_trace(cfg.out_dir / "trace.csv", res.realized_trace)
    print(f"day {res.day} framework {res.framework}: expected {res.expected.total:.2f}, "
          f"realized {res.realized.total:.2f}")


def cmd_evaluate(cfg, args):
    opts = SolverOptions(cfg.method, cfg.tol)
    data = load_dataset(cfg)
    day = _pick_day(data, args.day)
    if args.commitments is None:
        prices, reg = _families(cfg, data)
        if args.framework == "a":
            res = run_day_a(cfg.params, framework_a_set(day, prices, reg, cfg.a_snapshot), day.realized, opts, day.day)
        else:
            res = run_day_b(cfg.params, phase_scenario_sets(day, prices, reg), day.realized, opts, day.day)
        _emit_day(cfg, res)
        return
    commitments = csvio.read_commitments(args.commitments)
    income, trace = ex_post_evaluate(cfg.params, commitments, day.realized, opts)
    _write_income(cfg.out_dir / "income.csv", income)
    _write_trace(cfg.out_dir / "trace.csv", trace)
    print(f"day {day.day}: realized {income.total:.2f}")


def cmd_compare(cfg, args):
    data = load_dataset(cfg)
    report, pairs = compare(cfg.params, data, args.days, cfg.k_prices, cfg.k_reg, cfg.seed,
                            SolverOptions(cfg.method, cfg.tol), cfg.a_snapshot)
    csvio.write_report(cfg.out_dir / "report.csv", [csvio.report_row(r) for p in pairs for r in p])
    csvio.write_summary(cfg.out_dir / "summary.csv", report)
    print(f"days {report.n_days}: win rate B over A {report.win_rate_b_over_a:.1%}, "
          f"mean daily delta {report.mean_daily_delta:.2f}, "
          f"relative improvement {report.mean_relative_improvement:.2%}")
    print(f"mean realized income A {report.mean_income_a['total']:.2f}, B {report.mean_income_b['total']:.2f}")


HANDLERS = {
    "synth": cmd_synth,
    "scenarios": cmd_scenarios,
    "solve-a": cmd_solve_a,
    "solve-b": cmd_solve_b,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits 2 with usage on unknown commands
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.days is not None and args.days < 1:
            raise ValidationError("--days must be at least 1")
        cfg = resolve_config(args)
        HANDLERS[args.command](cfg, args)
    except (ValidationError, ConfigError) as exc:
        print(f"wspp {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
