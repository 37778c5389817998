"""Two-stage stochastic trading of a wind farm with battery storage across
day-ahead, intraday, reserve and balancing markets."""

from .builder import PhaseId, build_framework_a, build_phase
from .evaluation import ComparisonReport, DayResult, compare, ex_post_evaluate, run_day_a, run_day_b
from .lp import LinearProgram, Solution, Status, solve
from .market import (
    CommitmentSchedule, DayPrices, IncomeBreakdown, RegulationPair, Scenario, ScenarioSet,
    SystemParams, ValidationError, default_params,
)
from .synth import SynthConfig, synth_generate

__version__ = "0.1.0"
