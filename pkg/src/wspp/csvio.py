"""CSV ingest and emission for market data, scenarios, commitments and reports.

Floats are written with 9 significant digits; values already carrying at most
9 significant digits survive a write/read cycle unchanged.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .data import Dataset, MarketDay, RealizedDay
from .market import (
    PRICE_COLUMNS, T, CommitmentSchedule, DayPrices, RegulationPair, Scenario, ScenarioSet,
    ValidationError,
)
from .scenarios import ForecastSnapshot

PRICES_HEADER = ("day", "hour") + PRICE_COLUMNS
FORECAST_HEADER = ("day", "snapshot", "hour", "p25", "p50", "p75")
ACTUAL_HEADER = ("day", "hour", "mw")
REGULATION_HEADER = ("day", "hour", "pi_up", "pi_dw")
COMMITMENT_HEADER = ("hour", "p_dam", "p_idm", "p_rm_up", "p_rm_dw")
SCENARIO_HEADER = ("scenario", "probability", "hour", "wind", "pi_up", "pi_dw") + PRICE_COLUMNS
REPORT_HEADER = ("day", "framework", "i_dam", "i_idm", "i_bm", "i_rm", "total_expected",
                 "total_realized", "duration_phase1_ms", "duration_phase2_ms",
                 "duration_phase3_ms", "duration_phase4_ms")
SUMMARY_HEADER = ("metric", "value")
PROBABILITY_SLACK = 1e-6
SUMMARY_NOTE = "# mean_relative_improvement = mean_daily_delta / mean realized total of framework A"


class CsvFormatError(ValidationError):
    pass


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".9g")


def _write(path, header, rows, preamble: Optional[str] = None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        if preamble:
            fh.write(preamble + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])


class _Reader:
    """Yields (line number, row dict) with header and numeric checking."""

    def __init__(self, path, header):
        self.path = Path(path)
        self.header = header

    def error(self, line, msg):
        return CsvFormatError(f"{self.path.name}:{line}: {msg}")

    def rows(self):
        try:
            fh = open(self.path, newline="")
        except OSError as exc:
            raise CsvFormatError(f"{self.path}: cannot read ({exc.strerror})") from None
        with fh:
            lines = [(n, ln) for n, ln in enumerate(fh, start=1) if not ln.startswith("#")]
        if not lines:
            raise self.error(1, "missing header row")
        reader = csv.reader(ln for _, ln in lines)
        numbers = [n for n, _ in lines]
        head = next(reader)
        if tuple(h.strip() for h in head) != self.header:
            raise self.error(numbers[0], f"header {head} != {list(self.header)}")
        for line, row in zip(numbers[1:], reader):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(self.header):
                raise self.error(line, f"expected {len(self.header)} fields, got {len(row)}")
            yield line, dict(zip(self.header, (c.strip() for c in row)))

    def int(self, line, row, key):
        try:
            return int(row[key])
        except ValueError:
            raise self.error(line, f"{key}={row[key]!r} is not an integer") from None

    def float(self, line, row, key, optional=False):
        if optional and row[key] == "":
            return None
        try:
            v = float(row[key])
        except ValueError:
            raise self.error(line, f"{key}={row[key]!r} is not a number") from None
        if not math.isfinite(v):
            raise self.error(line, f"{key} is not finite")
        return v

    def hour(self, line, row):
        h = self.int(line, row, "hour")
        if not 0 <= h < T:
            raise self.error(line, f"hour {h} outside 0-23")
        return h


def _complete(reader: _Reader, by_key: dict, what: str):
    """Every key must carry all 24 hours exactly once."""
    for key, hours in by_key.items():
        if len(hours) != T:
            missing = sorted(set(range(T)) - set(hours))
            raise reader.error(min(ln for ln, _ in hours.values()),
                               f"incomplete day {what}{key}: missing hours {missing}")


def _contiguous(reader: _Reader, days):
    days = sorted(days)
    for a, b in zip(days, days[1:]):
        if b != a + 1:
            raise CsvFormatError(f"{reader.path.name}: days not contiguous ({a} then {b})")


def _collect(reader: _Reader, key_fn, value_fn):
    out: dict = {}
    for line, row in reader.rows():
        key = key_fn(line, row)
        h = reader.hour(line, row)
        hours = out.setdefault(key, {})
        if h in hours:
            raise reader.error(line, f"duplicate hour {h}")
        hours[h] = (line, value_fn(line, row))
    return out


# --- market data -------------------------------------------------------------

def write_prices(path, prices: dict):
    rows = ([d, h] + list(p.values[h]) for d, p in sorted(prices.items()) for h in range(T))
    _write(path, PRICES_HEADER, rows)


def read_prices(path) -> dict:
    r = _Reader(path, PRICES_HEADER)
    raw = _collect(r, lambda ln, row: r.int(ln, row, "day"),
                   lambda ln, row: [r.float(ln, row, c) for c in PRICE_COLUMNS])
    _complete(r, raw, "")
    _contiguous(r, raw)
    out = {}
    for day, hours in sorted(raw.items()):
        try:
            out[day] = DayPrices(np.array([hours[h][1] for h in range(T)]))
        except ValidationError as exc:
            raise CsvFormatError(f"{r.path.name}: day {day}: {exc}") from None
    return out


def write_regulation(path, regulation: dict):
    rows = ([d, h, rp.pi_up, rp.pi_dw] for d, rp in sorted(regulation.items()) for h in range(T))
    _write(path, REGULATION_HEADER, rows)


def _daily_mean(values) -> float:
    v = np.asarray(values, dtype=float)
    # constant hours reproduce the value exactly; summation would not
    return float(v[0]) if v.min() == v.max() else math.fsum(v) / len(v)


def read_regulation(path) -> dict:
    r = _Reader(path, REGULATION_HEADER)
    raw = _collect(r, lambda ln, row: r.int(ln, row, "day"),
                   lambda ln, row: (r.float(ln, row, "pi_up"), r.float(ln, row, "pi_dw")))
    _complete(r, raw, "")
    _contiguous(r, raw)
    out = {}
    for day, hours in sorted(raw.items()):
        pairs = np.array([v for _, v in hours.values()])
        try:
            out[day] = RegulationPair(_daily_mean(pairs[:, 0]), _daily_mean(pairs[:, 1]))
        except ValidationError as exc:
            raise CsvFormatError(f"{r.path.name}: day {day}: {exc}") from None
    return out


def write_wind_actual(path, wind: dict):
    _write(path, ACTUAL_HEADER, ([d, h, w[h]] for d, w in sorted(wind.items()) for h in range(T)))


def read_wind_actual(path) -> dict:
    r = _Reader(path, ACTUAL_HEADER)

    def mw(ln, row):
        v = r.float(ln, row, "mw")
        if v < 0:
            raise r.error(ln, "negative wind")
        return v

    raw = _collect(r, lambda ln, row: r.int(ln, row, "day"), mw)
    _complete(r, raw, "")
    _contiguous(r, raw)
    return {d: np.array([hours[h][1] for h in range(T)]) for d, hours in sorted(raw.items())}


def write_wind_forecasts(path, forecasts: dict):
    rows = ([d, s.issue_label, h, s.p25[h], s.p50[h], s.p75[h]]
            for d, snaps in sorted(forecasts.items()) for s in snaps for h in range(T))
    _write(path, FORECAST_HEADER, rows)


def read_wind_forecasts(path) -> dict:
    r = _Reader(path, FORECAST_HEADER)

    def key(ln, row):
        s = r.int(ln, row, "snapshot")
        if s not in (1, 2, 3, 4):
            raise r.error(ln, f"snapshot {s} not in 1-4")
        return r.int(ln, row, "day"), s

    def value(ln, row):
        q = tuple(r.float(ln, row, c) for c in ("p25", "p50", "p75"))
        if q[0] < 0:
            raise r.error(ln, "negative wind forecast")
        if not q[0] <= q[1] <= q[2]:
            raise r.error(ln, f"percentiles out of order (p25={q[0]}, p50={q[1]}, p75={q[2]})")
        return q

    raw = _collect(r, key, value)
    _complete(r, raw, "(day, snapshot) ")
    days = {d for d, _ in raw}
    _contiguous(r, days)
    out = {}
    for d in sorted(days):
        snaps = []
        for s in (1, 2, 3, 4):
            if (d, s) not in raw:
                raise CsvFormatError(f"{r.path.name}: day {d} lacks snapshot {s}")
            q = np.array([raw[d, s][h][1] for h in range(T)])
            snaps.append(ForecastSnapshot(s, q[:, 0], q[:, 1], q[:, 2]))
        out[d] = tuple(snaps)
    return out


@dataclass(frozen=True)
class DataPaths:
    prices: Path
    wind_forecasts: Path
    wind_actual: Path
    regulation: Path


def ingest(paths: DataPaths) -> Dataset:
    """Evaluation days are those with realized wind; earlier days form the history."""
    prices = read_prices(paths.prices)
    regulation = read_regulation(paths.regulation)
    actual = read_wind_actual(paths.wind_actual)
    forecasts = read_wind_forecasts(paths.wind_forecasts)
    if not actual:
        raise CsvFormatError(f"{Path(paths.wind_actual).name}: no days")
    first = min(actual)
    days = []
    for d in sorted(actual):
        for name, table in (("prices", prices), ("regulation", regulation), ("wind forecasts", forecasts)):
            if d not in table:
                raise CsvFormatError(f"day {d} has realized wind but no {name}")
        days.append(MarketDay(d, forecasts[d], RealizedDay(actual[d], prices[d], regulation[d])))
    hist = [d for d in sorted(prices) if d < first]
    reg_hist = [d for d in sorted(regulation) if d < first]
    ph = np.array([prices[d].flatten() for d in hist]).reshape(len(hist), -1)
    rh = np.array([[regulation[d].pi_up, regulation[d].pi_dw] for d in reg_hist]).reshape(len(reg_hist), 2)
    if ph.shape[1] == 0:
        ph = np.zeros((0, T * len(PRICE_COLUMNS)))
    return Dataset(ph, rh, tuple(days))


def emit_dataset(dataset: Dataset, directory, first_history_day: Optional[int] = None) -> DataPaths:
    """Write a Dataset as the four input CSVs; history days precede the evaluation days."""
    directory = Path(directory)
    if not dataset.days:
        raise ValidationError("dataset has no evaluation days")
    start = dataset.days[0].day
    n_hist = len(dataset.price_history)
    if first_history_day is None:
        first_history_day = start - n_hist
    if first_history_day + n_hist != start:
        raise ValidationError("history must end the day before the first evaluation day")
    prices = {first_history_day + i: DayPrices.from_flat(v) for i, v in enumerate(dataset.price_history)}
    reg = {first_history_day + i: RegulationPair(*v) for i, v in enumerate(dataset.regulation_history)}
    for md in dataset.days:
        prices[md.day] = md.realized.prices
        reg[md.day] = md.realized.regulation
    paths = DataPaths(directory / "prices.csv", directory / "wind_forecasts.csv",
                      directory / "wind_actual.csv", directory / "regulation.csv")
    write_prices(paths.prices, prices)
    write_regulation(paths.regulation, reg)
    write_wind_actual(paths.wind_actual, {md.day: md.realized.wind for md in dataset.days})
    write_wind_forecasts(paths.wind_forecasts, {md.day: md.snapshots for md in dataset.days})
    return paths


# --- model inputs and outputs ------------------------------------------------

def write_commitments(path, c: CommitmentSchedule):
    if not c.is_complete:
        raise ValidationError("only complete commitment schedules can be written")
    _write(path, COMMITMENT_HEADER, ([h, c.p_dam[h], c.p_idm[h], c.p_rm_up[h], c.p_rm_dw[h]] for h in range(T)))


def read_commitments(path) -> CommitmentSchedule:
    r = _Reader(path, COMMITMENT_HEADER)
    raw = _collect(r, lambda ln, row: 0, lambda ln, row: [r.float(ln, row, c) for c in COMMITMENT_HEADER[1:]])
    if not raw:
        raise r.error(1, "no rows")
    _complete(r, raw, "")
    v = np.array([raw[0][h][1] for h in range(T)])
    return CommitmentSchedule(v[:, 0], v[:, 1], v[:, 2], v[:, 3])


def write_scenarios(path, scenarios: ScenarioSet):
    rows = ([i, s.probability, h, s.wind[h], s.regulation.pi_up, s.regulation.pi_dw] + list(s.prices.values[h])
            for i, s in enumerate(scenarios) for h in range(T))
    _write(path, SCENARIO_HEADER, rows)


def read_scenarios(path) -> ScenarioSet:
    r = _Reader(path, SCENARIO_HEADER)
    meta = {}

    def key(ln, row):
        i = r.int(ln, row, "scenario")
        m = tuple(r.float(ln, row, c) for c in ("probability", "pi_up", "pi_dw"))
        if meta.setdefault(i, m) != m:
            raise r.error(ln, f"scenario {i}: probability/regulation differ between hours")
        return i

    raw = _collect(r, key, lambda ln, row: [r.float(ln, row, c) for c in ("wind",) + PRICE_COLUMNS])
    _complete(r, raw, "scenario ")
    total = math.fsum(meta[i][0] for i in raw)
    if abs(total - 1.0) > PROBABILITY_SLACK:
        raise CsvFormatError(f"{r.path.name}: probabilities sum to {total!r}")
    # 9-digit probabilities of many scenarios can drift past the 1e-9 sum check
    scale = 1.0 if abs(total - 1.0) <= 1e-9 else 1.0 / total
    out = []
    for i in sorted(raw):
        v = np.array([raw[i][h][1] for h in range(T)])
        p, up, dw = meta[i]
        out.append(Scenario(v[:, 0], DayPrices(v[:, 1:]), RegulationPair(up, dw), p * scale))
    return ScenarioSet(out)


@dataclass(frozen=True)
class ReportRow:
    day: int
    framework: str
    i_dam: float
    i_idm: float
    i_bm: float
    i_rm: float
    total_expected: float
    total_realized: float
    durations_ms: tuple  # four entries, None where a phase does not exist


def report_row(result) -> ReportRow:
    """Flatten a DayResult; Framework A's single solve lands in the phase-1 slot."""
    ms = [d * 1000.0 for d in result.durations] + [None] * (4 - len(result.durations))
    r = result.realized
    return ReportRow(result.day, result.framework, r.i_dam, r.i_idm, r.i_bm, r.i_rm,
                     result.expected.total, r.total, tuple(ms))


def write_report(path, rows: Iterable[ReportRow]):
    _write(path, REPORT_HEADER, ([r.day, r.framework, r.i_dam, r.i_idm, r.i_bm, r.i_rm,
                                  r.total_expected, r.total_realized, *r.durations_ms] for r in rows))


def read_report(path) -> list:
    r = _Reader(path, REPORT_HEADER)
    out = []
    for ln, row in r.rows():
        fw = row["framework"]
        if fw not in ("A", "B"):
            raise r.error(ln, f"framework {fw!r} not A or B")
        vals = [r.float(ln, row, c) for c in REPORT_HEADER[2:8]]
        ms = tuple(r.float(ln, row, c, optional=True) for c in REPORT_HEADER[8:])
        out.append(ReportRow(r.int(ln, row, "day"), fw, *vals, ms))
    return out


def write_summary(path, report):
    rows = [["n_days", report.n_days], ["win_rate_b_over_a", report.win_rate_b_over_a],
            ["mean_daily_delta", report.mean_daily_delta],
            ["mean_relative_improvement", report.mean_relative_improvement]]
    for tag, means in (("a", report.mean_income_a), ("b", report.mean_income_b)):
        rows += [[f"mean_{tag}_{k}", v] for k, v in means.items()]
    _write(path, SUMMARY_HEADER, rows, preamble=SUMMARY_NOTE)


def read_summary(path):
    from .evaluation import ComparisonReport

    r = _Reader(path, SUMMARY_HEADER)
    vals = {row["metric"]: r.float(ln, row, "value") for ln, row in r.rows()}
    try:
        means = {tag: {k[len(f"mean_{tag}_"):]: v for k, v in vals.items() if k.startswith(f"mean_{tag}_")}
                 for tag in ("a", "b")}
        return ComparisonReport(int(vals["n_days"]), vals["win_rate_b_over_a"], vals["mean_daily_delta"],
                                vals["mean_relative_improvement"], means["a"], means["b"])
    except KeyError as exc:
        raise CsvFormatError(f"{r.path.name}: missing metric {exc.args[0]}") from None
