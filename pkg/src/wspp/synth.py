"""Seeded synthetic market/wind/regulation data.

Every day ``d`` draws from its own generator seeded with ``seed ^ d``, so any
subset of days can be produced independently and in any order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, MarketDay, RealizedDay
from .market import PRICE_INDEX, T, DayPrices, RegulationPair, ValidationError
from .scenarios import ForecastSnapshot

Z75 = 0.6744897501960817  # standard-normal 75th percentile

_WIND, _PRICE, _REG = 1, 2, 3


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 7
    n_days: int = 60
    history_days: int = 365
    price_level: float = 50.0
    price_volatility: float = 0.2
    wind_level: float = 20.0
    wind_volatility: float = 0.3
    decay: tuple = (1.0, 0.6, 0.3, 0.1)
    reg_up_rate: float = 0.3
    reg_dw_rate: float = 0.3
    rated_wind_power: float = 50.0

    def __post_init__(self):
        object.__setattr__(self, "decay", tuple(float(v) for v in self.decay))
        if self.n_days < 1 or self.history_days < 1:
            raise ValidationError("n_days and history_days must be at least 1")
        if self.price_level < 0 or self.wind_level < 0 or self.rated_wind_power <= 0:
            raise ValidationError("levels must be non-negative and rated power positive")
        if self.price_volatility < 0 or self.wind_volatility < 0:
            raise ValidationError("volatilities must be non-negative")
        if len(self.decay) != 4 or any(not 0.0 <= v <= 1.0 for v in self.decay):
            raise ValidationError("decay needs four factors in [0,1]")
        if any(b > a for a, b in zip(self.decay, self.decay[1:])):
            raise ValidationError("decay factors must be non-increasing")
        if not (0.0 <= self.reg_up_rate <= 1.0 and 0.0 <= self.reg_dw_rate <= 1.0):
            raise ValidationError("regulation rates must lie in [0,1]")


def _rng(cfg: SynthConfig, day: int, stream: int) -> np.random.Generator:
    return np.random.default_rng((cfg.seed ^ day, stream))


def _ar1(rng, n, phi):
    """Unit-variance AR(1) path."""
    z = rng.standard_normal(n)
    out = np.empty(n)
    out[0] = z[0]
    s = np.sqrt(1 - phi * phi)
    for i in range(1, n):
        out[i] = phi * out[i - 1] + s * z[i]
    return out


def day_prices(cfg: SynthConfig, day: int) -> DayPrices:
    rng = _rng(cfg, day, _PRICE)
    h = np.arange(T)
    sig = cfg.price_volatility
    shape = 1 + 0.2 * np.cos(2 * np.pi * (h - 19) / 24) + 0.1 * np.cos(4 * np.pi * (h - 9) / 24)
    season = 1 + 0.15 * np.cos(2 * np.pi * day / 365)
    weekend = 0.9 if day % 7 in (5, 6) else 1.0
    level = cfg.price_level * season * weekend * np.exp(sig * rng.standard_normal() - sig * sig / 2)
    dam = level * shape * np.exp(0.5 * sig * _ar1(rng, T, 0.7))
    cols = {
        "beta_dam": dam,
        "beta_idm": np.maximum(dam * (1 + 0.25 * sig * rng.standard_normal(T)), 0.0),
        "gamma_rm": 0.3 * level * np.exp(0.3 * sig * rng.standard_normal(T)),
        "beta_rm_up": dam * rng.uniform(1.0, 1.3, T),
        "beta_rm_dw": dam * rng.uniform(0.4, 0.8, T),
        "lambda_bm_up": dam * rng.uniform(0.6, 0.95, T),
        "lambda_bm_dw": dam * rng.uniform(1.05, 1.5, T),
    }
    return DayPrices.from_columns(**cols)


def day_regulation(cfg: SynthConfig, day: int) -> RegulationPair:
    rng = _rng(cfg, day, _REG)
    up, dw = cfg.reg_up_rate, cfg.reg_dw_rate
    regimes = np.array([[1.6 * up, 0.4 * dw], [0.4 * up, 1.6 * dw], [0.5 * up, 0.5 * dw]])
    centre = regimes[rng.choice(3, p=[0.3, 0.3, 0.4])]
    noise = 0.15 * max(up, dw) * rng.standard_normal(2)
    pair = np.clip(centre + noise, 0.0, 1.0)
    return RegulationPair(pair[0], pair[1])


def day_wind(cfg: SynthConfig, day: int):
    """Realized available wind and its four forecast snapshots."""
    rng = _rng(cfg, day, _WIND)
    mean = cfg.wind_level * np.exp(0.5 * rng.standard_normal() - 0.125)
    actual = mean * np.exp(0.25 * _ar1(rng, T, 0.9) - 0.03125)
    actual = np.clip(actual, 0.0, 1.1 * cfg.rated_wind_power)
    err = _ar1(rng, T, 0.8)
    scale = cfg.wind_volatility * cfg.wind_level
    snaps = []
    for label, f in enumerate(cfg.decay, start=1):
        p50 = np.maximum(actual + f * scale * err, 0.0)
        half = Z75 * f * scale
        snaps.append(ForecastSnapshot(label, np.maximum(p50 - half, 0.0), p50, p50 + half))
    return actual, tuple(snaps)


def synth_generate(cfg: SynthConfig) -> Dataset:
    """History days ``0..history_days-1`` then ``n_days`` evaluation days."""
    hist = range(cfg.history_days)
    price_history = np.stack([day_prices(cfg, d).flatten() for d in hist])
    reg_history = np.array([[r.pi_up, r.pi_dw] for r in (day_regulation(cfg, d) for d in hist)])
    days = []
    for d in range(cfg.history_days, cfg.history_days + cfg.n_days):
        actual, snaps = day_wind(cfg, d)
        days.append(MarketDay(d, snaps, RealizedDay(actual, day_prices(cfg, d), day_regulation(cfg, d))))
    return Dataset(price_history, reg_history, tuple(days))
