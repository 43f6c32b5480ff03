"""Time-series containers, break/recovery results, and their CSV formats."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path

import numpy as np


class DegenerateInputError(ValueError):
    """Statistic undefined for this input (zero variance, all-tied pairs)."""


class InsufficientDataError(ValueError):
    """Too few usable points for the requested fit."""


@dataclass
class CellCounts:
    """Airplane counts and viability flags on the 7x7 grid of one image."""

    image_id: str
    timestamp: datetime
    counts: np.ndarray  # (7, 7) int
    viable: np.ndarray  # (7, 7) bool

    @property
    def day(self) -> date:
        return self.timestamp.date()

    def total(self) -> int:
        return int(self.counts.sum())


@dataclass
class TimeSeries:
    aoi_id: str
    dates: list[date]
    values: np.ndarray
    window_days: int = 30
    step_days: int = 1

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if len(self.dates) != len(self.values):
            raise ValueError("dates and values must have equal length")
        for a, b in zip(self.dates, self.dates[1:]):
            if b <= a:
                raise ValueError("dates must be strictly increasing")

    def __len__(self) -> int:
        return len(self.dates)

    def value_on(self, day: date) -> float:
        return float(self.values[self.dates.index(day)])


@dataclass(frozen=True)
class BreakResult:
    method: str  # sma-crossover | edm
    break_date: date
    params: dict
    diagnostic: float


@dataclass(frozen=True)
class RecoveryFit:
    rate: float  # per-day recovery rate (regression slope)
    baseline: float
    r_squared: float
    n_points: int
    break_date: date


@dataclass
class EpiSeries:
    """Daily new cases/deaths with trailing 14-day moving averages."""

    dates: list[date]
    new_cases: np.ndarray
    new_deaths: np.ndarray
    smooth_window: int = 14
    smoothed_cases: np.ndarray = field(init=False)
    smoothed_deaths: np.ndarray = field(init=False)

    def __post_init__(self):
        self.new_cases = np.asarray(self.new_cases, dtype=np.float64)
        self.new_deaths = np.asarray(self.new_deaths, dtype=np.float64)
        if len(self.dates) != len(self.new_cases) or len(self.dates) != len(self.new_deaths):
            raise ValueError("dates and series must have equal length")
        if (self.new_cases < 0).any() or (self.new_deaths < 0).any():
            raise ValueError("case/death counts must be non-negative")
        self.smoothed_cases = _trailing_mean(self.new_cases, self.smooth_window)
        self.smoothed_deaths = _trailing_mean(self.new_deaths, self.smooth_window)

    def smoothed(self, channel: str) -> np.ndarray:
        if channel == "cases":
            return self.smoothed_cases
        if channel == "deaths":
            return self.smoothed_deaths
        raise ValueError(f"unknown channel {channel!r}, expected 'cases' or 'deaths'")


def _trailing_mean(values: np.ndarray, window: int) -> np.ndarray:
    """Mean over the trailing window, truncated at the series start."""
    if window < 1:
        raise ValueError("window must be >= 1")
    csum = np.concatenate([[0.0], np.cumsum(values, dtype=np.float64)])
    n = len(values)
    out = np.empty(n, dtype=np.float64)
    for t in range(n):
        lo = max(0, t - window + 1)
        out[t] = (csum[t + 1] - csum[lo]) / (t + 1 - lo)
    return out


# -- CSV / JSON formats -------------------------------------------------------


def save_timeseries(series: TimeSeries, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "value"])
        for d, v in zip(series.dates, series.values):
            writer.writerow([d.isoformat(), repr(float(v))])
    return path


def load_timeseries(path: str | Path, aoi_id: str = "") -> TimeSeries:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"series file {path} does not exist")
    dates, values = [], []
    with path.open() as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "date" not in reader.fieldnames or "value" not in reader.fieldnames:
            raise ValueError(f"{path}: expected 'date,value' header")
        for row in reader:
            dates.append(date.fromisoformat(row["date"]))
            values.append(float(row["value"]))
    return TimeSeries(aoi_id=aoi_id or path.stem, dates=dates, values=np.array(values))


def load_episeries(path: str | Path) -> EpiSeries:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"epi series file {path} does not exist")
    dates, cases, deaths = [], [], []
    with path.open() as fh:
        reader = csv.DictReader(fh)
        needed = {"date", "new_cases", "new_deaths"}
        if reader.fieldnames is None or not needed.issubset(reader.fieldnames):
            raise ValueError(f"{path}: expected 'date,new_cases,new_deaths' header")
        for row in reader:
            dates.append(date.fromisoformat(row["date"]))
            cases.append(float(row["new_cases"]))
            deaths.append(float(row["new_deaths"]))
    return EpiSeries(dates=dates, new_cases=np.array(cases), new_deaths=np.array(deaths))


def load_monthly(path: str | Path) -> dict[str, float]:
    """Reference monthly series: `month,value` rows with YYYY-MM months."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"monthly series file {path} does not exist")
    out: dict[str, float] = {}
    with path.open() as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "month" not in reader.fieldnames or "value" not in reader.fieldnames:
            raise ValueError(f"{path}: expected 'month,value' header")
        for row in reader:
            out[row["month"]] = float(row["value"])
    return out


def save_monthly(monthly: dict[str, float], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["month", "value"])
        for month in sorted(monthly):
            writer.writerow([month, repr(float(monthly[month]))])
    return path


def save_break_report(
    aoi_id: str, brk: BreakResult | None, fit, path: str | Path
) -> Path:
    """JSON break/recovery report: break metadata plus the fitted rate."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload: dict = {"aoi_id": aoi_id}
    if brk is None:
        payload.update({"method": None, "break_date": None})
    else:
        payload.update(
            {
                "method": brk.method,
                "params": brk.params,
                "break_date": brk.break_date.isoformat(),
                "diagnostic": brk.diagnostic,
            }
        )
    if fit is not None:
        payload.update(
            {
                "lambda": fit.rate,
                "baseline": fit.baseline,
                "r_squared": fit.r_squared,
                "n_points": fit.n_points,
            }
        )
    path.write_text(json.dumps(payload, indent=1))
    return path
