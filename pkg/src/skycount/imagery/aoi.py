"""Area-of-interest geometry and per-cell viability rules.

An AOI is a fixed-size lat/lon rectangle centered on an airport, tiled
into a 7x7 grid of cells. A cell is usable for counting only when it is
mostly cloud-free and mostly covered by actual data.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

AOI_WIDTH_LON = 1.05
AOI_HEIGHT_LAT = 0.7
GRID_ROWS = 7
GRID_COLS = 7

MAX_CLOUD_FRACTION = 0.30
MAX_MISSING_FRACTION = 0.10

# |center_lat| such that the AOI still fits inside [-90, 90]
_MAX_CENTER_LAT = 90.0 - AOI_HEIGHT_LAT / 2.0


@dataclass(frozen=True)
class Aoi:
    """A monitored rectangle, 1.05 deg (lon) x 0.7 deg (lat), 7x7 grid."""

    id: str
    center_lat: float
    center_lon: float
    width_lon: float = AOI_WIDTH_LON
    height_lat: float = AOI_HEIGHT_LAT
    grid_rows: int = GRID_ROWS
    grid_cols: int = GRID_COLS

    @property
    def lon_min(self) -> float:
        return self.center_lon - self.width_lon / 2.0

    @property
    def lon_max(self) -> float:
        return self.center_lon + self.width_lon / 2.0

    @property
    def lat_min(self) -> float:
        return self.center_lat - self.height_lat / 2.0

    @property
    def lat_max(self) -> float:
        return self.center_lat + self.height_lat / 2.0

    @property
    def cell_width_lon(self) -> float:
        return self.width_lon / self.grid_cols

    @property
    def cell_height_lat(self) -> float:
        return self.height_lat / self.grid_rows

    def cell_bounds(self, row: int, col: int) -> tuple[float, float, float, float]:
        """(lon_min, lat_min, lon_max, lat_max) of cell (row, col).

        Row 0 is the northernmost band so that cell indexing matches raster
        row order (y grows downward, latitude decreases).
        """
        if not (0 <= row < self.grid_rows and 0 <= col < self.grid_cols):
            raise IndexError(f"cell ({row}, {col}) outside {self.grid_rows}x{self.grid_cols} grid")
        lon0 = self.lon_min + col * self.cell_width_lon
        lat1 = self.lat_max - row * self.cell_height_lat
        return (lon0, lat1 - self.cell_height_lat, lon0 + self.cell_width_lon, lat1)


def define_aoi(center_lat: float, center_lon: float, id: str) -> Aoi:
    """Build the fixed-size AOI centered at the given coordinates."""
    if abs(center_lat) > _MAX_CENTER_LAT:
        raise ValueError(
            f"center_lat {center_lat} out of range: |lat| must be <= {_MAX_CENTER_LAT}"
        )
    return Aoi(id=id, center_lat=center_lat, center_lon=center_lon)


@dataclass
class CellViability:
    """Boolean usability per grid cell."""

    viable: np.ndarray  # (7, 7) bool

    def count(self) -> int:
        return int(self.viable.sum())


def assess_viability(scene) -> CellViability:
    """Flag cells with tolerable cloud cover and missing data.

    A cell is viable iff cloud_fraction <= 0.30 and missing_fraction <= 0.10;
    both boundaries are inclusive.
    """
    cloud = scene.cell_stats[..., 0]
    missing = scene.cell_stats[..., 1]
    viable = (cloud <= MAX_CLOUD_FRACTION) & (missing <= MAX_MISSING_FRACTION)
    return CellViability(viable=viable)
