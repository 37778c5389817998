"""Scenario generation: wind percentiles, clustered prices and regulation needs."""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .market import (
    N_PRICES, PRICE_COLUMNS, PRICE_INDEX, T, DayPrices, RegulationPair, Scenario,
    ScenarioSet, ValidationError, wind_curve,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ClusterModel:
    centroids: np.ndarray            # (k, d)
    probabilities: np.ndarray        # (k,)
    inertia: float
    labels: np.ndarray               # (n,)
    inertia_history: tuple = field(default=())
    n_iter: int = 0

    @property
    def counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=len(self.centroids))


def _sq_dist(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # exact differences rather than the |a|^2 - 2ab + |b|^2 expansion: ties must stay ties
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _kmeans_pp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(points)
    chosen = [int(rng.integers(n))]
    d2 = _sq_dist(points, points[chosen]).min(axis=1)
    while len(chosen) < k:
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            nxt = next(i for i in range(n) if i not in chosen)
        chosen.append(nxt)
        d2 = np.minimum(d2, _sq_dist(points, points[[nxt]])[:, 0])
    return points[chosen].copy()


def kmeans(points, k: int, seed: int = 0, max_iter: int = 300) -> ClusterModel:
    """Lloyd's algorithm with seeded k-means++ initialization.

    An empty cluster is reseeded at the point farthest from its current
    centroid. Ties in assignment go to the lowest cluster index.
    """
    try:
        X = np.asarray(points, dtype=float)
    except ValueError:
        X = None
    if X is None or X.ndim != 2:
        raise ValidationError("points must be a list of equal-length vectors")
    n = len(X)
    if k < 1:
        raise ValidationError("k must be at least 1")
    if k > n:
        raise ValidationError(f"k={k} exceeds the number of points ({n})")

    rng = np.random.default_rng(seed)
    C = _kmeans_pp(X, k, rng)
    labels = _sq_dist(X, C).argmin(axis=1)
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        _repair_empty(X, C, labels, k)
        C = np.stack([X[labels == j].mean(axis=0) if np.any(labels == j) else C[j]
                      for j in range(k)])
        history.append(_inertia(X, C, labels))
        new = _sq_dist(X, C).argmin(axis=1)
        if np.array_equal(new, labels):
            break
        labels = new
    else:
        labels = _sq_dist(X, C).argmin(axis=1)
    final = _inertia(X, C, labels)
    counts = np.bincount(labels, minlength=k)
    return ClusterModel(C, counts / n, final, labels, tuple(history), it)


def _inertia(X, C, labels) -> float:
    diff = X - C[labels]
    return float(np.einsum("nd,nd->", diff, diff))


def _repair_empty(X, C, labels, k):
    for j in range(k):
        if np.any(labels == j):
            continue
        d2 = np.einsum("nd,nd->n", X - C[labels], X - C[labels])
        counts = np.bincount(labels, minlength=k)
        movable = counts[labels] > 1
        d2 = np.where(movable, d2, -1.0)
        far = int(np.argmax(d2))
        if d2[far] <= 0:
            continue  # all points coincide with their centroids; nothing to split
        labels[far] = j
        C[j] = X[far]


def price_scenarios(history, k: int = 10, seed: int = 0) -> list:
    """Cluster daily 168-attribute price vectors into ``k`` weighted scenarios."""
    H = np.asarray(history, dtype=float)
    width = T * N_PRICES
    if H.ndim != 2 or H.shape[1] != width:
        raise ValidationError(f"price history must be N x {width}")
    if len(H) < k:
        raise ValidationError(f"price history has {len(H)} days, fewer than k={k}")
    model = kmeans(H, k, seed)
    out = []
    for j in range(k):
        if model.probabilities[j] == 0:
            continue
        day = model.centroids[j].reshape(T, N_PRICES).copy()
        if np.any(day < 0):
            logger.warning("price centroid %d: clamping %d negative entries to 0", j, int((day < 0).sum()))
            np.maximum(day, 0.0, out=day)
        up, dw = PRICE_INDEX["lambda_bm_up"], PRICE_INDEX["lambda_bm_dw"]
        bad = day[:, up] > day[:, dw]
        if bad.any():
            logger.warning("price centroid %d: swapping BM up/down prices in %d hours", j, int(bad.sum()))
            day[bad, up], day[bad, dw] = day[bad, dw].copy(), day[bad, up].copy()
        out.append((DayPrices(day), float(model.probabilities[j])))
    return out


def regulation_scenarios(history, k: int = 3, seed: int = 0) -> list:
    """Cluster (pi_up, pi_dw) observations into ``k`` weighted pairs."""
    H = np.asarray(history, dtype=float)
    if H.ndim != 2 or H.shape[1] != 2:
        raise ValidationError("regulation history must be a list of (pi_up, pi_dw)")
    if np.any(H < 0) or np.any(H > 1):
        raise ValidationError("regulation ratios must lie in [0,1]")
    if len(H) < k:
        raise ValidationError(f"regulation history has {len(H)} points, fewer than k={k}")
    model = kmeans(H, k, seed)
    out = []
    for j in range(k):
        if model.probabilities[j] == 0:
            continue
        up, dw = np.clip(model.centroids[j], 0.0, 1.0)
        out.append((RegulationPair(up, dw), float(model.probabilities[j])))
    return out


@dataclass(frozen=True, eq=False)
class ForecastSnapshot:
    issue_label: int
    p25: np.ndarray
    p50: np.ndarray
    p75: np.ndarray

    def __post_init__(self):
        for name in ("p25", "p50", "p75"):
            object.__setattr__(self, name, wind_curve(getattr(self, name)))
        if np.any(self.p25 > self.p50) or np.any(self.p50 > self.p75):
            hour = int(np.argmax((self.p25 > self.p50) | (self.p50 > self.p75)))
            raise ValidationError(f"forecast {self.issue_label}: percentiles out of order at hour {hour}")

    @property
    def band_width(self) -> float:
        return float(np.mean(self.p75 - self.p25))

    def __eq__(self, other):
        return (isinstance(other, ForecastSnapshot) and self.issue_label == other.issue_label
                and all(np.array_equal(getattr(self, a), getattr(other, a)) for a in ("p25", "p50", "p75")))


def wind_scenarios(snapshot: ForecastSnapshot) -> list:
    """p25/p50/p75 curves as three equally weighted scenarios."""
    return [(snapshot.p25, 1 / 3), (snapshot.p50, 1 / 3), (snapshot.p75, 1 / 3)]


def combine(wind: Sequence, prices: Sequence, regulation: Sequence) -> ScenarioSet:
    """Cartesian product of independent families (wind-major ordering)."""
    for name, fam in (("wind", wind), ("prices", prices), ("regulation", regulation)):
        if len(fam) == 0:
            raise ValidationError(f"empty {name} family")
        total = sum(p for _, p in fam)
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"{name} probabilities sum to {total!r}")
    return ScenarioSet(
        Scenario(w, pr, rg, pw * pp * pg)
        for (w, pw), (pr, pp), (rg, pg) in itertools.product(wind, prices, regulation)
    )


@dataclass(frozen=True, eq=False)
class Observation:
    """Partially realized data: any subset of wind, price columns, regulation."""

    wind: Optional[np.ndarray] = None
    prices: Optional[DayPrices] = None
    price_columns: Optional[tuple] = None  # None with prices set means all columns
    regulation: Optional[RegulationPair] = None

    def __post_init__(self):
        if self.price_columns is not None:
            unknown = set(self.price_columns) - set(PRICE_COLUMNS)
            if unknown:
                raise ValidationError(f"unknown price columns {sorted(unknown)}")
            if self.prices is None:
                raise ValidationError("price_columns given without prices")


def collapse_to_realized(scenarios: ScenarioSet, realized: Observation) -> ScenarioSet:
    """Overwrite observed components in every scenario, then merge duplicates."""
    cols = None
    if realized.prices is not None:
        names = realized.price_columns if realized.price_columns is not None else PRICE_COLUMNS
        cols = [PRICE_INDEX[c] for c in names]
    merged: dict = {}
    for sc in scenarios:
        wind = realized.wind if realized.wind is not None else sc.wind
        prices = sc.prices
        if cols is not None:
            values = sc.prices.values.copy()
            values[:, cols] = realized.prices.values[:, cols]
            prices = DayPrices(values)
        reg = realized.regulation if realized.regulation is not None else sc.regulation
        new = Scenario(wind, prices, reg, sc.probability)
        key = new.key()
        if key in merged:
            old = merged[key]
            merged[key] = Scenario(old.wind, old.prices, old.regulation, old.probability + sc.probability)
        else:
            merged[key] = new
    items = list(merged.values())
    # re-normalise away float drift from the merges
    total = sum(s.probability for s in items)
    return ScenarioSet(Scenario(s.wind, s.prices, s.regulation, s.probability / total) for s in items)
