"""Deterministic-equivalent LPs for Framework A and the four Framework B phases.

Every model shares the same plant/market constraint block; the phases only
differ in how each commitment family (DAM, IDM, reserve band) enters:

* ``first``  - one scenario-independent column per hour,
* ``second`` - one column per scenario and hour,
* ``fixed``  - a constant taken from an earlier phase.

Column layout (frozen): first-stage block ``p_dam, p_idm, p_rm_up, p_rm_dw``
(each 24 consecutive columns, only the families staged ``first``), followed by
one block per scenario, each holding 24 hourly groups of the 15 recourse
variables in :data:`RECOURSE_VARS` plus that phase's scenario-indexed
commitments.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .lp import EQ, LE, LinearProgram, Solution
from .market import (
    PRICE_INDEX, T, TRACE_FIELDS, CommitmentSchedule, IncomeBreakdown,
    RecourseTrace, ScenarioSet, SystemParams, ValidationError, validate,
)


class PhaseId(str, Enum):
    FRAMEWORK_A = "FrameworkA"
    B_PHASE1 = "B_Phase1"
    B_PHASE2 = "B_Phase2"
    B_PHASE3 = "B_Phase3"
    B_PHASE4 = "B_Phase4"


B_PHASES = (PhaseId.B_PHASE1, PhaseId.B_PHASE2, PhaseId.B_PHASE3, PhaseId.B_PHASE4)

STAGING = {
    PhaseId.FRAMEWORK_A: {"dam": "first", "idm": "first", "rm": "first"},
    PhaseId.B_PHASE1: {"dam": "first", "idm": "second", "rm": "second"},
    PhaseId.B_PHASE2: {"dam": "fixed", "idm": "second", "rm": "first"},
    PhaseId.B_PHASE3: {"dam": "fixed", "idm": "first", "rm": "fixed"},
    PhaseId.B_PHASE4: {"dam": "fixed", "idm": "fixed", "rm": "fixed"},
}

FAMILY_COLUMNS = {"dam": ("p_dam",), "idm": ("p_idm",), "rm": ("p_rm_up", "p_rm_dw")}
COMMITMENTS = ("p_dam", "p_idm", "p_rm_up", "p_rm_dw")
_FAMILY_OF = {col: fam for fam, cols in FAMILY_COLUMNS.items() for col in cols}

RECOURSE_VARS = (
    "wind_used", "ess_energy", "ess_in", "ess_out", "soc", "pm_traded", "bm_delta",
    "bm_up", "bm_dw", "rm_energy_req_up", "rm_energy_req_dw",
    "rm_energy_off_up", "rm_energy_off_dw", "rm_dev_up", "rm_dev_dw",
)


class StagingError(ValueError):
    """Fixed decisions do not match what the phase expects."""


def required_fixed(phase: PhaseId) -> frozenset:
    return frozenset(f for f, mode in STAGING[phase].items() if mode == "fixed")


@dataclass(frozen=True, eq=False)
class VariableIndex:
    phase: PhaseId
    n_scenarios: int
    first: dict        # name -> (T,) column ids
    second: dict       # name -> (S, T) column ids
    n_cols: int
    fixed: CommitmentSchedule
    kappa: float

    @property
    def n_first(self) -> int:
        return sum(v.size for v in self.first.values())

    def column_names(self) -> list:
        names = [""] * self.n_cols
        for name, cols in self.first.items():
            for t, j in enumerate(cols):
                names[j] = f"{name}[{t}]"
        for name, cols in self.second.items():
            for (s, t), j in np.ndenumerate(cols):
                names[j] = f"{name}[{s},{t}]"
        return names

    def commitment_values(self, x: np.ndarray, name: str) -> np.ndarray:
        """(S, T) value of a commitment under every scenario, whatever its staging."""
        if name in self.first:
            return np.broadcast_to(x[self.first[name]], (self.n_scenarios, T))
        if name in self.second:
            return x[self.second[name]]
        value = getattr(self.fixed, name)
        return np.broadcast_to(value, (self.n_scenarios, T))


def _layout(phase: PhaseId, n_scen: int):
    staging = STAGING[phase]
    first, second = {}, {}
    col = 0
    for name in COMMITMENTS:
        if staging[_FAMILY_OF[name]] == "first":
            first[name] = np.arange(col, col + T)
            col += T
    per_hour = list(RECOURSE_VARS) + [c for c in COMMITMENTS if staging[_FAMILY_OF[c]] == "second"]
    width = len(per_hour)
    base = col + (np.arange(n_scen)[:, None] * T + np.arange(T)[None, :]) * width
    for k, name in enumerate(per_hour):
        second[name] = base + k
    return first, second, col + n_scen * T * width


class _Rows:
    """Accumulates constraint rows as COO triplets."""

    def __init__(self):
        self.r, self.c, self.v = [], [], []
        self.senses, self.rhs = [], []
        self.count = 0

    def block(self, n: int, sense: str, rhs) -> np.ndarray:
        ids = np.arange(self.count, self.count + n)
        self.count += n
        self.senses.extend([sense] * n)
        rhs = np.asarray(rhs, dtype=float)
        self.rhs.append(np.broadcast_to(rhs.ravel() if rhs.size == n else rhs, (n,)).copy())
        return ids

    def add(self, rows, cols, vals):
        cols = np.asarray(cols)
        rows = np.broadcast_to(np.asarray(rows), cols.shape)
        vals = np.broadcast_to(np.asarray(vals, dtype=float), cols.shape)
        self.r.append(rows.ravel())
        self.c.append(cols.ravel())
        self.v.append(vals.ravel())

    def matrix(self, n_cols: int) -> sp.csr_matrix:
        r = np.concatenate(self.r)
        c = np.concatenate(self.c)
        v = np.concatenate(self.v)
        keep = v != 0
        return sp.csr_matrix((v[keep], (r[keep], c[keep])), shape=(self.count, n_cols))


def _check_fixed(phase: PhaseId, params: SystemParams, fixed: Optional[CommitmentSchedule]):
    fixed = fixed if fixed is not None else CommitmentSchedule()
    need = required_fixed(phase)
    if fixed.present != need:
        raise StagingError(
            f"{phase.value} expects fixed {sorted(need) or 'nothing'}, got {sorted(fixed.present) or 'nothing'}")
    fixed.check(params)
    return fixed


def build_phase(phase: PhaseId, params: SystemParams, scenarios: ScenarioSet,
                fixed: Optional[CommitmentSchedule] = None):
    """Deterministic-equivalent LP of ``phase`` and its column index."""
    validate(params)
    if not isinstance(scenarios, ScenarioSet):
        scenarios = ScenarioSet(scenarios)
    phase = PhaseId(phase)
    fixed = _check_fixed(phase, params, fixed)
    p = params
    S = len(scenarios)
    rho = scenarios.probabilities
    wind = scenarios.wind
    prices = scenarios.prices
    pi = scenarios.regulation
    price = lambda name: prices[:, :, PRICE_INDEX[name]]  # (S, T)

    first, second, n_cols = _layout(phase, S)
    staging = STAGING[phase]
    lim = p.trade_limit

    lower = np.zeros(n_cols)
    upper = np.full(n_cols, np.inf)
    c = np.zeros(n_cols)
    offset = 0.0

    def bounds(name, lo, hi):
        cols = first[name] if name in first else second[name]
        lower[cols] = lo
        upper[cols] = hi

    bounds("wind_used", 0.0, np.minimum(wind, p.rated_wind_power))
    bounds("ess_energy", 0.0, p.ess_capacity)
    bounds("ess_in", 0.0, p.ess_power_limit)
    bounds("ess_out", 0.0, p.ess_power_limit)
    bounds("soc", p.soc_min, 1.0)
    bounds("pm_traded", -np.inf, np.inf)
    bounds("bm_delta", -np.inf, np.inf)
    bounds("bm_up", 0.0, lim)
    bounds("bm_dw", 0.0, lim)
    for name, lo, hi in (("p_dam", -p.ess_power_limit, lim), ("p_idm", -lim, lim),
                         ("p_rm_up", 0.0, p.ess_power_limit), ("p_rm_dw", 0.0, p.ess_power_limit)):
        if name in first or name in second:
            bounds(name, lo, hi)

    # objective: first-stage prices are expectations, second-stage weighted by rho
    w = rho[:, None]
    income_price = {"p_dam": price("beta_dam"), "p_idm": price("beta_idm"),
                    "p_rm_up": price("gamma_rm"), "p_rm_dw": price("gamma_rm")}
    for name, pr in income_price.items():
        if name in first:
            c[first[name]] += (w * pr).sum(axis=0)
        elif name in second:
            c[second[name]] += w * pr
        else:
            offset += float((w * pr * getattr(fixed, name)[None, :]).sum())
    kappa = p.kappa_rm
    c[second["rm_energy_off_up"]] += w * price("beta_rm_up")
    c[second["rm_energy_off_dw"]] -= w * price("beta_rm_dw")
    c[second["rm_dev_up"]] -= w * kappa * price("beta_rm_up")
    c[second["rm_dev_dw"]] -= w * kappa * price("beta_rm_dw")
    c[second["bm_up"]] += w * price("lambda_bm_up")
    c[second["bm_dw"]] -= w * price("lambda_bm_dw")

    rows = _Rows()
    ST = S * T
    col = second

    def commitment_terms(row_ids, name, coef):
        """Add coef*commitment to rows (S, T); fixed values move to the rhs."""
        mode = staging[_FAMILY_OF[name]]
        coef = np.broadcast_to(coef, (S, T))
        if mode == "first":
            rows.add(row_ids, np.broadcast_to(first[name], (S, T)), coef)
            return 0.0
        if mode == "second":
            rows.add(row_ids, second[name], coef)
            return 0.0
        return -coef * getattr(fixed, name)[None, :]

    def grid(ids):
        return ids.reshape(S, T)

    # stored energy recursion (cumulative form of the storage balance)
    rhs = np.zeros((S, T))
    rhs[:, 0] = p.initial_energy
    r = grid(rows.block(ST, EQ, rhs))
    rows.add(r, col["ess_energy"], 1.0)
    rows.add(r[:, 1:], col["ess_energy"][:, :-1], -1.0)
    rows.add(r, col["ess_in"], -p.eta_in)
    rows.add(r, col["ess_out"], 1.0 / p.eta_out)

    # state of charge definition
    r = grid(rows.block(ST, EQ, 0.0))
    rows.add(r, col["soc"], p.ess_capacity)
    rows.add(r, col["ess_energy"], -1.0)

    # deviation from the energy-market position: pm - delta - dam - idm = 0
    r = grid(rows.block(ST, EQ, 0.0))
    rows.add(r, col["pm_traded"], 1.0)
    rows.add(r, col["bm_delta"], -1.0)
    rhs = commitment_terms(r, "p_dam", -1.0) + commitment_terms(r, "p_idm", -1.0)
    rows.rhs[-1] = np.broadcast_to(rhs, (S, T)).ravel().astype(float)

    # two-price split of the deviation
    r = grid(rows.block(ST, EQ, 0.0))
    rows.add(r, col["bm_delta"], 1.0)
    rows.add(r, col["bm_up"], -1.0)
    rows.add(r, col["bm_dw"], 1.0)

    # energy requested by the operator, offered, and unserved
    for side, k in (("up", 0), ("dw", 1)):
        req, off, dev = (col[f"rm_energy_req_{side}"], col[f"rm_energy_off_{side}"],
                         col[f"rm_dev_{side}"])
        r = grid(rows.block(ST, EQ, 0.0))
        rows.add(r, req, 1.0)
        rhs = commitment_terms(r, f"p_rm_{side}", -pi[:, k:k + 1] * np.ones((S, T)))
        rows.rhs[-1] = np.broadcast_to(rhs, (S, T)).ravel().astype(float)

        r = grid(rows.block(ST, LE, 0.0))
        rows.add(r, off, 1.0)
        rows.add(r, req, -1.0)

        r = grid(rows.block(ST, EQ, 0.0))
        rows.add(r, dev, 1.0)
        rows.add(r, req, -1.0)
        rows.add(r, off, 1.0)

    # power balance
    r = grid(rows.block(ST, EQ, 0.0))
    rows.add(r, col["pm_traded"], 1.0)
    rows.add(r, col["rm_energy_off_up"], 1.0)
    rows.add(r, col["rm_energy_off_dw"], -1.0)
    rows.add(r, col["wind_used"], -1.0)
    rows.add(r, col["ess_out"], -1.0)
    rows.add(r, col["ess_in"], 1.0)

    # reserve band shape: up = R * (up + dw)
    mode = staging["rm"]
    if mode == "first":
        r = rows.block(T, EQ, 0.0)
        rows.add(r, first["p_rm_up"], 1.0 - p.r_rm_up)
        rows.add(r, first["p_rm_dw"], -p.r_rm_up)
    elif mode == "second":
        r = grid(rows.block(ST, EQ, 0.0))
        rows.add(r, second["p_rm_up"], 1.0 - p.r_rm_up)
        rows.add(r, second["p_rm_dw"], -p.r_rm_up)

    A = rows.matrix(n_cols)
    lp = LinearProgram(c, A, tuple(rows.senses), np.concatenate(rows.rhs), lower, upper, offset)
    index = VariableIndex(phase, S, first, second, n_cols, fixed, kappa)
    return lp, index


def build_framework_a(params: SystemParams, scenarios: ScenarioSet):
    if len(scenarios) == 0:
        raise ValidationError("empty scenario set")
    return build_phase(PhaseId.FRAMEWORK_A, params, scenarios, CommitmentSchedule())


def _require_optimal(solution: Solution):
    if not solution.optimal:
        raise ValueError(f"solution is {solution.status.value}, not Optimal")


def extract_commitments(phase: PhaseId, solution: Solution, index: VariableIndex) -> CommitmentSchedule:
    """First-stage decisions of ``phase`` read off an optimal solution."""
    _require_optimal(solution)
    phase = PhaseId(phase)
    if phase is not index.phase:
        raise StagingError(f"index belongs to {index.phase.value}, not {phase.value}")
    x = solution.x
    values = {name: x[cols].copy() for name, cols in index.first.items()}
    return CommitmentSchedule(**values)


def expected_income_breakdown(solution: Solution, index: VariableIndex,
                              scenarios: ScenarioSet) -> IncomeBreakdown:
    """Probability-weighted income per market, fixed-decision income included."""
    _require_optimal(solution)
    if len(scenarios) != index.n_scenarios:
        raise ValueError("scenario count differs from the index")
    x = solution.x
    rho = scenarios.probabilities[:, None]
    prices = scenarios.prices
    price = lambda name: prices[:, :, PRICE_INDEX[name]]
    val = lambda name: x[index.second[name]]
    com = lambda name: index.commitment_values(x, name)
    kappa = index.kappa

    i_dam = float((rho * price("beta_dam") * com("p_dam")).sum())
    i_idm = float((rho * price("beta_idm") * com("p_idm")).sum())
    rm = (price("gamma_rm") * (com("p_rm_up") + com("p_rm_dw"))
          + price("beta_rm_up") * val("rm_energy_off_up")
          - price("beta_rm_dw") * val("rm_energy_off_dw")
          - kappa * price("beta_rm_up") * val("rm_dev_up")
          - kappa * price("beta_rm_dw") * val("rm_dev_dw"))
    i_rm = float((rho * rm).sum())
    bm = price("lambda_bm_up") * val("bm_up") - price("lambda_bm_dw") * val("bm_dw")
    i_bm = float((rho * bm).sum())
    return IncomeBreakdown(i_dam=i_dam, i_idm=i_idm, i_bm=i_bm, i_rm=i_rm)


def recourse_traces(solution: Solution, index: VariableIndex) -> list:
    """One :class:`RecourseTrace` per scenario."""
    _require_optimal(solution)
    x = solution.x
    traces = []
    for s in range(index.n_scenarios):
        traces.append(RecourseTrace(**{f: x[index.second[f][s]].copy() for f in TRACE_FIELDS}))
    return traces


def scenario_commitments(solution: Solution, index: VariableIndex, s: int) -> CommitmentSchedule:
    """All four commitments as seen by scenario ``s`` (first, second or fixed)."""
    x = solution.x
    return CommitmentSchedule(**{n: np.array(index.commitment_values(x, n)[s]) for n in COMMITMENTS})
