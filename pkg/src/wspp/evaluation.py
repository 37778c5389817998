"""Running days under Framework A / B and scoring them against realized data."""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .builder import (
    B_PHASES, PhaseId, build_framework_a, build_phase, expected_income_breakdown,
    extract_commitments, recourse_traces,
)
from .data import Dataset, MarketDay, RealizedDay
from .lp import OPT_TOL, Solution, solve
from .market import (
    CommitmentSchedule, IncomeBreakdown, RecourseTrace, Scenario, ScenarioSet,
    SystemParams, validate,
)
from .scenarios import (
    Observation, collapse_to_realized, combine, price_scenarios, regulation_scenarios,
    wind_scenarios,
)
from .synth import SynthConfig, synth_generate

logger = logging.getLogger(__name__)

# price columns observed before each Framework B phase
OBSERVED_PRICES = (
    (),
    ("beta_dam",),
    ("beta_dam", "gamma_rm", "beta_rm_up", "beta_rm_dw"),
    None,  # all
)

MARKETS = ("i_dam", "i_idm", "i_bm", "i_rm", "total")


@dataclass(frozen=True)
class SolverOptions:
    method: str = "auto"
    tol: float = OPT_TOL


@dataclass(frozen=True, eq=False)
class DayResult:
    framework: str
    commitments: CommitmentSchedule
    expected: IncomeBreakdown
    realized: IncomeBreakdown
    realized_trace: RecourseTrace
    durations: tuple               # seconds, one per phase
    phase_objectives: tuple = ()
    day: Optional[int] = None


@dataclass(frozen=True)
class ComparisonReport:
    """Aggregate of paired A/B days.

    ``mean_relative_improvement`` is ``mean_daily_delta`` divided by
    Framework A's mean realized income.
    """

    n_days: int
    win_rate_b_over_a: float
    mean_daily_delta: float
    mean_relative_improvement: float
    mean_income_a: dict
    mean_income_b: dict

    def __post_init__(self):
        if self.n_days < 1:
            raise ValueError("n_days must be at least 1")
        if not 0.0 <= self.win_rate_b_over_a <= 1.0:
            raise ValueError("win rate outside [0,1]")


def _solve(lp, opts: SolverOptions) -> Solution:
    sol = solve(lp, tol=opts.tol, method=opts.method)
    if not sol.optimal:
        raise RuntimeError(f"LP ended {sol.status.value}")
    return sol


def realized_scenario_set(day: RealizedDay) -> ScenarioSet:
    return ScenarioSet([Scenario(day.wind, day.prices, day.regulation, 1.0)])


def ex_post_evaluate(params: SystemParams, commitments: CommitmentSchedule, day: RealizedDay,
                     opts: SolverOptions = SolverOptions()):
    """Income actually earned by ``commitments`` on the realized day.

    The real-time recourse is re-optimized with perfect knowledge of the day;
    BM deviations absorb any imbalance, so the LP is always feasible.
    """
    if not commitments.is_complete:
        raise ValueError("ex-post evaluation needs all four commitments")
    commitments.check(params)
    scen = realized_scenario_set(day)
    lp, index = build_phase(PhaseId.B_PHASE4, params, scen, commitments)
    sol = _solve(lp, opts)
    return expected_income_breakdown(sol, index, scen), recourse_traces(sol, index)[0]


def run_day_a(params: SystemParams, scenario_set: ScenarioSet, day: RealizedDay,
              opts: SolverOptions = SolverOptions(), label: Optional[int] = None) -> DayResult:
    validate(params)
    t0 = time.perf_counter()
    lp, index = build_framework_a(params, scenario_set)
    sol = _solve(lp, opts)
    commitments = extract_commitments(PhaseId.FRAMEWORK_A, sol, index)
    expected = expected_income_breakdown(sol, index, scenario_set)
    elapsed = time.perf_counter() - t0
    realized, trace = ex_post_evaluate(params, commitments, day, opts)
    return DayResult("A", commitments, expected, realized, trace, (elapsed,),
                     (sol.objective_value,), label)


def run_day_b(params: SystemParams, phase_sets: Sequence[ScenarioSet], day: RealizedDay,
              opts: SolverOptions = SolverOptions(), label: Optional[int] = None) -> DayResult:
    """Solve the four phases in order, threading each phase's decisions forward.

    ``expected`` reports the Phase 1 view (made at the same time as Framework A).
    """
    validate(params)
    if len(phase_sets) != 4:
        raise ValueError(f"Framework B needs 4 scenario sets, got {len(phase_sets)}")
    fixed = CommitmentSchedule()
    durations, objectives = [], []
    expected = None
    for phase, scen in zip(B_PHASES, phase_sets):
        t0 = time.perf_counter()
        lp, index = build_phase(phase, params, scen, fixed)
        sol = _solve(lp, opts)
        fixed = fixed.merge(extract_commitments(phase, sol, index))
        durations.append(time.perf_counter() - t0)
        objectives.append(sol.objective_value)
        if expected is None:
            expected = expected_income_breakdown(sol, index, scen)
    realized, trace = ex_post_evaluate(params, fixed, day, opts)
    return DayResult("B", fixed, expected, realized, trace, tuple(durations), tuple(objectives), label)


def framework_a_set(day: MarketDay, prices: list, regulation: list, snapshot: int = 1) -> ScenarioSet:
    return combine(wind_scenarios(day.snapshots[snapshot - 1]), prices, regulation)


def phase_scenario_sets(day: MarketDay, prices: list, regulation: list) -> tuple:
    """Scenario sets for Phases 1-4 given what is known before each phase."""
    sets = []
    for k, observed in enumerate(OBSERVED_PRICES):
        scen = combine(wind_scenarios(day.snapshots[k]), prices, regulation)
        if observed is None or observed:
            obs = Observation(prices=day.realized.prices, price_columns=observed)
            scen = collapse_to_realized(scen, obs)
        sets.append(scen)
    return tuple(sets)


def evaluate_day(params: SystemParams, day: MarketDay, prices: list, regulation: list,
                 opts: SolverOptions = SolverOptions(), a_snapshot: int = 1):
    """(A result, B result) for one day on identical data."""
    res_a = run_day_a(params, framework_a_set(day, prices, regulation, a_snapshot),
                      day.realized, opts, day.day)
    res_b = run_day_b(params, phase_scenario_sets(day, prices, regulation),
                      day.realized, opts, day.day)
    return res_a, res_b


def _evaluate_day_args(args):
    return evaluate_day(*args)


def summarize(pairs: Sequence) -> ComparisonReport:
    if not pairs:
        raise ValueError("no days to summarize")
    a = np.array([[getattr(ra.realized, m) for m in MARKETS] for ra, _ in pairs])
    b = np.array([[getattr(rb.realized, m) for m in MARKETS] for _, rb in pairs])
    delta = b[:, -1] - a[:, -1]
    mean_a = a[:, -1].mean()
    rel = delta.mean() / mean_a if mean_a != 0 else float("nan")
    return ComparisonReport(
        n_days=len(pairs),
        win_rate_b_over_a=float(np.mean(delta > 1e-6)),
        mean_daily_delta=float(delta.mean()),
        mean_relative_improvement=float(rel),
        mean_income_a=dict(zip(MARKETS, map(float, a.mean(axis=0)))),
        mean_income_b=dict(zip(MARKETS, map(float, b.mean(axis=0)))),
    )


def compare(params: SystemParams, data: Union[SynthConfig, Dataset], n_days: Optional[int] = None,
            k_prices: int = 10, k_reg: int = 3, seed: int = 0,
            opts: SolverOptions = SolverOptions(), a_snapshot: int = 1, workers: int = 1):
    """Run both frameworks on the same days; returns (report, [(A, B), ...]).

    One price and one regulation cluster model are fitted on the whole history
    and shared by every evaluated day.
    """
    validate(params)
    if isinstance(data, SynthConfig):
        if n_days is not None and n_days != data.n_days:
            data = SynthConfig(**{**data.__dict__, "n_days": n_days})
        data = synth_generate(data)
    days = list(data.days)
    if n_days is not None:
        if n_days < 1:
            raise ValueError("n_days must be at least 1")
        if n_days > len(days):
            raise ValueError(f"asked for {n_days} days, data has {len(days)}")
        days = days[:n_days]
    prices = price_scenarios(data.price_history, k_prices, seed)
    regulation = regulation_scenarios(data.regulation_history, k_reg, seed)
    jobs = [(params, d, prices, regulation, opts, a_snapshot) for d in days]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            pairs = list(pool.map(_evaluate_day_args, jobs))
    else:
        pairs = []
        for job in jobs:
            pairs.append(evaluate_day(*job))
            ra, rb = pairs[-1]
            logger.info("day %s: A %.2f  B %.2f", ra.day, ra.realized.total, rb.realized.total)
    return summarize(pairs), pairs
