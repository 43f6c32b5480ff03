"""Windowed airplane-count aggregation over the 7x7 viability grid.

Each day's value averages counts per cell over the images inside the
trailing window (cell sum divided by the number of viable sightings,
floored at one), then sums the 49 cell averages.
"""
from __future__ import annotations

from datetime import date, timedelta

import numpy as np

from ..detect import Detection
from ..imagery import GRID_COLS, GRID_ROWS, SceneImage, assess_viability
from .types import CellCounts, TimeSeries

NOISY_CELL_MAX = 5  # cells reporting more airplanes than this are artifacts

WINDOW_DAYS = 30
STEP_DAYS = 1


def counts_from_detections(scene: SceneImage, detections: list[Detection]) -> CellCounts:
    """Bin a scene's detections into its grid; viability from cell stats."""
    counts = np.zeros((GRID_ROWS, GRID_COLS), dtype=np.int64)
    for det in detections:
        if det.image_id != scene.image_id:
            raise ValueError(f"detection for {det.image_id!r} paired with scene {scene.image_id!r}")
        row, col = scene.cell_of(det.x, det.y)
        counts[row, col] += 1
    return CellCounts(
        image_id=scene.image_id,
        timestamp=scene.timestamp,
        counts=counts,
        viable=assess_viability(scene).viable.copy(),
    )


def suppress_noisy(cell: CellCounts) -> CellCounts:
    """Zero out and invalidate cells with implausibly many detections."""
    counts = cell.counts.copy()
    viable = cell.viable.copy()
    noisy = counts > NOISY_CELL_MAX
    counts[noisy] = 0
    viable[noisy] = False
    return CellCounts(cell.image_id, cell.timestamp, counts, viable)


def window_count(cells_in_window: list[CellCounts]) -> float:
    """Average count over a window: per-cell ratio of summed counts to
    summed viable sightings (floored at 1), summed across the grid."""
    count_sum = np.zeros((GRID_ROWS, GRID_COLS), dtype=np.float64)
    viable_sum = np.zeros((GRID_ROWS, GRID_COLS), dtype=np.float64)
    for cell in cells_in_window:
        count_sum += cell.counts
        viable_sum += cell.viable
    return float((count_sum / np.maximum(1.0, viable_sum)).sum())


def build_series(
    cell_counts: list[CellCounts],
    aoi_id: str,
    window_days: int = WINDOW_DAYS,
    step_days: int = STEP_DAYS,
) -> TimeSeries:
    """Daily windowed counts from the first to the last image date.

    Noisy-cell suppression is applied before aggregation (idempotent, so
    pre-suppressed input is fine).
    """
    if not cell_counts:
        raise ValueError("cannot build a series from zero images")
    suppressed = [suppress_noisy(c) for c in cell_counts]
    first = min(c.day for c in suppressed)
    last = max(c.day for c in suppressed)
    if (last - first).days + 1 < window_days:
        raise ValueError(
            f"corpus spans {(last - first).days + 1} days, shorter than the {window_days}-day window"
        )

    by_day: dict[date, list[CellCounts]] = {}
    for c in suppressed:
        by_day.setdefault(c.day, []).append(c)

    dates: list[date] = []
    values: list[float] = []
    day = first
    while day <= last:
        window = []
        for back in range(window_days):
            window.extend(by_day.get(day - timedelta(days=back), ()))
        dates.append(day)
        values.append(window_count(window))
        day += timedelta(days=step_days)
    return TimeSeries(aoi_id=aoi_id, dates=dates, values=np.array(values), window_days=window_days, step_days=step_days)


def monthly_mean_counts(cell_counts: list[CellCounts]) -> dict[str, float]:
    """Mean per-image total count for each calendar month (after noisy-cell
    suppression); the monthly estimate compared against reference flight
    records."""
    totals: dict[str, list[int]] = {}
    for c in cell_counts:
        month = f"{c.day.year:04d}-{c.day.month:02d}"
        totals.setdefault(month, []).append(suppress_noisy(c).total())
    return {m: float(np.mean(v)) for m, v in sorted(totals.items())}
