"""Containers for market history and evaluation days, whatever their source."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .market import N_PRICES, T, DayPrices, RegulationPair, ValidationError, wind_curve
from .scenarios import ForecastSnapshot


@dataclass(frozen=True, eq=False)
class RealizedDay:
    wind: np.ndarray
    prices: DayPrices
    regulation: RegulationPair

    def __post_init__(self):
        object.__setattr__(self, "wind", wind_curve(self.wind))

    def __eq__(self, other):
        return (isinstance(other, RealizedDay) and np.array_equal(self.wind, other.wind)
                and self.prices == other.prices and self.regulation == other.regulation)


@dataclass(frozen=True, eq=False)
class MarketDay:
    """One evaluation day: four forecast snapshots plus what actually happened."""

    day: int
    snapshots: tuple
    realized: RealizedDay

    def __post_init__(self):
        if len(self.snapshots) != 4:
            raise ValidationError(f"day {self.day}: expected 4 forecast snapshots, got {len(self.snapshots)}")
        labels = [s.issue_label for s in self.snapshots]
        if labels != [1, 2, 3, 4]:
            raise ValidationError(f"day {self.day}: snapshot labels {labels} != [1, 2, 3, 4]")
        object.__setattr__(self, "snapshots", tuple(self.snapshots))

    def __eq__(self, other):
        return (isinstance(other, MarketDay) and self.day == other.day
                and self.snapshots == other.snapshots and self.realized == other.realized)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Price/regulation history for clustering plus the days to evaluate."""

    price_history: np.ndarray        # (N, 168), hour-major
    regulation_history: np.ndarray   # (N, 2)
    days: tuple

    def __post_init__(self):
        ph = np.asarray(self.price_history, dtype=float)
        rh = np.asarray(self.regulation_history, dtype=float)
        if ph.ndim != 2 or ph.shape[1] != T * N_PRICES:
            raise ValidationError("price history must have 168 columns")
        if rh.ndim != 2 or rh.shape[1] != 2:
            raise ValidationError("regulation history must have 2 columns")
        ph.flags.writeable = False
        rh.flags.writeable = False
        object.__setattr__(self, "price_history", ph)
        object.__setattr__(self, "regulation_history", rh)
        object.__setattr__(self, "days", tuple(self.days))
