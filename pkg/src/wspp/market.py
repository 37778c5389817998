"""Domain types for a wind-and-storage plant trading in DAM, IDM, RM and BM.

All arrays are hourly (``T = 24``) and are frozen (read-only) after
construction so values can be shared freely between workers.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

T = 24

PRICE_COLUMNS = (
    "beta_dam",
    "beta_idm",
    "gamma_rm",
    "beta_rm_up",
    "beta_rm_dw",
    "lambda_bm_up",
    "lambda_bm_dw",
)
N_PRICES = len(PRICE_COLUMNS)
PRICE_INDEX = {name: i for i, name in enumerate(PRICE_COLUMNS)}


class ValidationError(ValueError):
    """Raised when a domain value violates one of its invariants."""


def _frozen(values, shape, name) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.shape != shape:
        raise ValidationError(f"{name}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name}: non-finite values")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class SystemParams:
    rated_wind_power: float
    ess_capacity: float
    ess_power_limit: float
    eta_in: float
    eta_out: float
    initial_energy: float
    soc_min: float
    kappa_rm: float
    r_rm_up: float

    @property
    def trade_limit(self) -> float:
        """Largest power the plant can move through any energy market."""
        return self.rated_wind_power + self.ess_power_limit

    def replace(self, **changes) -> "SystemParams":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return SystemParams(**values)


def default_params() -> SystemParams:
    return SystemParams(
        rated_wind_power=50.0,
        ess_capacity=20.0,
        ess_power_limit=10.0,
        eta_in=0.9,
        eta_out=0.9,
        initial_energy=10.0,
        soc_min=0.1,
        kappa_rm=1.5,
        r_rm_up=0.6,
    )


def validate(params: SystemParams) -> SystemParams:
    """Return ``params`` unchanged, or raise on the first violated invariant."""
    p = params
    for name in ("rated_wind_power", "ess_capacity", "ess_power_limit", "eta_in",
                 "eta_out", "initial_energy", "soc_min", "kappa_rm", "r_rm_up"):
        if not np.isfinite(getattr(p, name)):
            raise ValidationError(f"{name} must be finite")
    if not 0.0 < p.eta_in < 1.0:
        raise ValidationError("eta_in out of (0,1)")
    if not 0.0 < p.eta_out < 1.0:
        raise ValidationError("eta_out out of (0,1)")
    if p.rated_wind_power <= 0:
        raise ValidationError("rated_wind_power must be positive")
    if p.ess_capacity <= 0:
        raise ValidationError("ess_capacity must be positive")
    if p.ess_power_limit <= 0:
        raise ValidationError("ess_power_limit must be positive")
    if not 0.0 <= p.soc_min <= 1.0:
        raise ValidationError("soc_min out of [0,1]")
    if not p.soc_min * p.ess_capacity <= p.initial_energy <= p.ess_capacity:
        raise ValidationError("initial_energy outside [soc_min*ess_capacity, ess_capacity]")
    if not p.kappa_rm > 1.0:
        raise ValidationError("kappa_rm must exceed 1")
    if not 0.0 < p.r_rm_up < 1.0:
        raise ValidationError("r_rm_up out of (0,1)")
    return params


def ess_trajectory(params: SystemParams, charge, discharge) -> np.ndarray:
    """Stored energy after each hour given hourly charge/discharge power."""
    charge = np.asarray(charge, dtype=float)
    discharge = np.asarray(discharge, dtype=float)
    flow = params.eta_in * charge - discharge / params.eta_out
    return params.initial_energy + np.cumsum(flow)


def soc(params: SystemParams, energy) -> np.ndarray:
    return np.asarray(energy, dtype=float) / params.ess_capacity


@dataclass(frozen=True, eq=False)
class DayPrices:
    """24 x 7 price matrix, columns ordered as :data:`PRICE_COLUMNS`."""

    values: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.values, (T, N_PRICES), "DayPrices")
        if np.any(arr < 0):
            raise ValidationError("DayPrices: negative price")
        up = arr[:, PRICE_INDEX["lambda_bm_up"]]
        dw = arr[:, PRICE_INDEX["lambda_bm_dw"]]
        if np.any(up > dw):
            hour = int(np.argmax(up > dw))
            raise ValidationError(f"DayPrices: lambda_bm_up > lambda_bm_dw at hour {hour}")
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_columns(cls, **columns) -> "DayPrices":
        missing = set(PRICE_COLUMNS) - set(columns)
        if missing:
            raise ValidationError(f"DayPrices: missing columns {sorted(missing)}")
        arr = np.column_stack([np.broadcast_to(np.asarray(columns[c], float), (T,))
                               for c in PRICE_COLUMNS])
        return cls(arr)

    @classmethod
    def flat(cls, **columns) -> "DayPrices":
        """Constant-per-hour prices; unspecified columns are zero."""
        full = {c: 0.0 for c in PRICE_COLUMNS}
        full.update(columns)
        return cls.from_columns(**full)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, PRICE_INDEX[name]]

    beta_dam = property(lambda self: self.column("beta_dam"))
    beta_idm = property(lambda self: self.column("beta_idm"))
    gamma_rm = property(lambda self: self.column("gamma_rm"))
    beta_rm_up = property(lambda self: self.column("beta_rm_up"))
    beta_rm_dw = property(lambda self: self.column("beta_rm_dw"))
    lambda_bm_up = property(lambda self: self.column("lambda_bm_up"))
    lambda_bm_dw = property(lambda self: self.column("lambda_bm_dw"))

    def flatten(self) -> np.ndarray:
        """Hour-major 168-vector (7 prices of hour 0, then hour 1, ...)."""
        return self.values.reshape(-1).copy()

    @classmethod
    def from_flat(cls, vector) -> "DayPrices":
        return cls(np.asarray(vector, dtype=float).reshape(T, N_PRICES))

    def __eq__(self, other):
        return isinstance(other, DayPrices) and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())


def rm_penalty_prices(prices: DayPrices, kappa: float) -> tuple[np.ndarray, np.ndarray]:
    """Deviation penalties for unserved regulation up/down energy."""
    return kappa * prices.beta_rm_up, kappa * prices.beta_rm_dw


@dataclass(frozen=True)
class RegulationPair:
    pi_up: float
    pi_dw: float

    def __post_init__(self):
        for name in ("pi_up", "pi_dw"):
            v = getattr(self, name)
            if not (np.isfinite(v) and 0.0 <= v <= 1.0):
                raise ValidationError(f"RegulationPair: {name}={v} outside [0,1]")
        object.__setattr__(self, "pi_up", float(self.pi_up))
        object.__setattr__(self, "pi_dw", float(self.pi_dw))


def wind_curve(values) -> np.ndarray:
    arr = _frozen(values, (T,), "WindCurve")
    if np.any(arr < 0):
        raise ValidationError("WindCurve: negative value")
    return arr


@dataclass(frozen=True, eq=False)
class Scenario:
    wind: np.ndarray
    prices: DayPrices
    regulation: RegulationPair
    probability: float

    def __post_init__(self):
        object.__setattr__(self, "wind", wind_curve(self.wind))
        if not 0.0 < self.probability <= 1.0 + 1e-12:
            raise ValidationError(f"Scenario: probability {self.probability} outside (0,1]")

    def key(self) -> bytes:
        """Identity of the realization, ignoring the probability."""
        return (self.wind.tobytes() + self.prices.values.tobytes()
                + np.array([self.regulation.pi_up, self.regulation.pi_dw]).tobytes())

    def __eq__(self, other):
        return (isinstance(other, Scenario) and self.key() == other.key()
                and self.probability == other.probability)


class ScenarioSet(tuple):
    """Non-empty ordered tuple of scenarios whose probabilities sum to one."""

    def __new__(cls, scenarios):
        items = tuple(scenarios)
        if not items:
            raise ValidationError("ScenarioSet: empty")
        total = sum(s.probability for s in items)
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"ScenarioSet: probabilities sum to {total!r}")
        return super().__new__(cls, items)

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([s.probability for s in self])

    @property
    def wind(self) -> np.ndarray:
        return np.stack([s.wind for s in self])

    @property
    def prices(self) -> np.ndarray:
        """Array of shape (S, T, 7)."""
        return np.stack([s.prices.values for s in self])

    @property
    def regulation(self) -> np.ndarray:
        """Array of shape (S, 2) with columns (pi_up, pi_dw)."""
        return np.array([[s.regulation.pi_up, s.regulation.pi_dw] for s in self])


@dataclass(frozen=True, eq=False)
class CommitmentSchedule:
    """Hourly market commitments; any field may be absent (partial schedule).

    The same type carries the decisions fixed between Framework B phases.
    """

    p_dam: Optional[np.ndarray] = None
    p_idm: Optional[np.ndarray] = None
    p_rm_up: Optional[np.ndarray] = None
    p_rm_dw: Optional[np.ndarray] = None

    def __post_init__(self):
        if (self.p_rm_up is None) != (self.p_rm_dw is None):
            raise ValidationError("CommitmentSchedule: p_rm_up and p_rm_dw must come together")
        for name in ("p_dam", "p_idm", "p_rm_up", "p_rm_dw"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, _frozen(v, (T,), name))

    @property
    def present(self) -> frozenset:
        fs = set()
        if self.p_dam is not None:
            fs.add("dam")
        if self.p_idm is not None:
            fs.add("idm")
        if self.p_rm_up is not None:
            fs.add("rm")
        return frozenset(fs)

    @property
    def is_complete(self) -> bool:
        return self.present == {"dam", "idm", "rm"}

    @property
    def p_pm(self) -> np.ndarray:
        return self.p_dam + self.p_idm

    @property
    def p_rm(self) -> np.ndarray:
        return self.p_rm_up + self.p_rm_dw

    def merge(self, other: "CommitmentSchedule") -> "CommitmentSchedule":
        """Fields of ``other`` fill (and override) fields of ``self``."""
        pick = lambda a, b: b if b is not None else a
        return CommitmentSchedule(
            p_dam=pick(self.p_dam, other.p_dam),
            p_idm=pick(self.p_idm, other.p_idm),
            p_rm_up=pick(self.p_rm_up, other.p_rm_up),
            p_rm_dw=pick(self.p_rm_dw, other.p_rm_dw),
        )

    def check(self, params: SystemParams, tol: float = 1e-7) -> "CommitmentSchedule":
        """Raise if a present field violates the market bounds or band ratio."""
        lim = params.trade_limit
        if self.p_dam is not None:
            if np.any(self.p_dam < -params.ess_power_limit - tol) or np.any(self.p_dam > lim + tol):
                raise ValidationError("p_dam outside [-ess_power_limit, rated+ess]")
        if self.p_idm is not None and np.any(np.abs(self.p_idm) > lim + tol):
            raise ValidationError("|p_idm| exceeds rated+ess")
        if self.p_rm_up is not None:
            for name in ("p_rm_up", "p_rm_dw"):
                v = getattr(self, name)
                if np.any(v < -tol) or np.any(v > params.ess_power_limit + tol):
                    raise ValidationError(f"{name} outside [0, ess_power_limit]")
            band = self.p_rm
            # looser than the 1e-9 of exact input because solver output carries roundoff
            gap = self.p_rm_up - params.r_rm_up * band
            if np.any(np.abs(gap) > max(tol, 1e-9)):
                raise ValidationError("reserve band violates the up/total ratio")
        return self

    def __eq__(self, other):
        if not isinstance(other, CommitmentSchedule):
            return NotImplemented
        for name in ("p_dam", "p_idm", "p_rm_up", "p_rm_dw"):
            a, b = getattr(self, name), getattr(other, name)
            if (a is None) != (b is None) or (a is not None and not np.array_equal(a, b)):
                return False
        return True


FixedDecisions = CommitmentSchedule


@dataclass(frozen=True)
class IncomeBreakdown:
    i_dam: float = 0.0
    i_idm: float = 0.0
    i_bm: float = 0.0
    i_rm: float = 0.0
    total: float = field(default=None)

    def __post_init__(self):
        parts = self.i_dam + self.i_idm + self.i_bm + self.i_rm
        if self.total is None:
            object.__setattr__(self, "total", parts)
        elif abs(self.total - parts) > 1e-6 * max(1.0, abs(parts)):
            raise ValidationError(f"IncomeBreakdown: total {self.total} != sum of parts {parts}")

    def as_dict(self) -> dict:
        return {"i_dam": self.i_dam, "i_idm": self.i_idm, "i_bm": self.i_bm,
                "i_rm": self.i_rm, "total": self.total}


TRACE_FIELDS = (
    "wind_used", "ess_energy", "ess_in", "ess_out", "soc", "pm_traded",
    "bm_up", "bm_dw", "rm_energy_req_up", "rm_energy_req_dw",
    "rm_energy_off_up", "rm_energy_off_dw", "rm_dev_up", "rm_dev_dw",
)


@dataclass(frozen=True, eq=False)
class RecourseTrace:
    """Second-stage operation of one scenario, hour by hour."""

    wind_used: np.ndarray
    ess_energy: np.ndarray
    ess_in: np.ndarray
    ess_out: np.ndarray
    soc: np.ndarray
    pm_traded: np.ndarray
    bm_up: np.ndarray
    bm_dw: np.ndarray
    rm_energy_req_up: np.ndarray
    rm_energy_req_dw: np.ndarray
    rm_energy_off_up: np.ndarray
    rm_energy_off_dw: np.ndarray
    rm_dev_up: np.ndarray
    rm_dev_dw: np.ndarray

    @property
    def bm_deviation(self) -> np.ndarray:
        return self.bm_up - self.bm_dw

    def balance_residual(self) -> np.ndarray:
        """Left minus right side of the hourly power balance."""
        return (self.pm_traded + self.rm_energy_off_up - self.rm_energy_off_dw
                - self.wind_used - self.ess_out + self.ess_in)
