"""Scene raster type and on-disk store.

Store layout: ``scenes/<aoi_id>/<ISO8601 timestamp>.png`` (8-bit RGB,
values = round(255 * reflectance)) plus a same-stem ``.json`` sidecar
holding image_id, aoi_id, timestamp, gsd_m and the 7x7 cell stats.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from PIL import Image

from .aoi import GRID_COLS, GRID_ROWS


class SceneFormatError(ValueError):
    """Raised when a scene file or its sidecar violates the store format."""


DEFAULT_GSD_M = 10.0

# filesystem-safe ISO8601 basic format, always UTC
_STAMP_FMT = "%Y%m%dT%H%M%SZ"


def format_timestamp(ts: datetime) -> str:
    if ts.tzinfo is not None:
        ts = ts.astimezone(timezone.utc).replace(tzinfo=None)
    return ts.strftime(_STAMP_FMT)


def parse_timestamp(text: str) -> datetime:
    for fmt in (_STAMP_FMT, "%Y-%m-%dT%H:%M:%S%z", "%Y-%m-%dT%H:%M:%S"):
        try:
            ts = datetime.strptime(text, fmt)
            break
        except ValueError:
            continue
    else:
        raise SceneFormatError(f"unparseable timestamp {text!r}")
    if ts.tzinfo is not None:
        ts = ts.astimezone(timezone.utc).replace(tzinfo=None)
    return ts


@dataclass
class SceneImage:
    """One tri-band raster of an AOI at a timestamp.

    pixels are float32 reflectance in [0, 1], shape (H, W, 3) with H and W
    divisible by the grid size. cell_stats is (7, 7, 2) float holding
    (cloud_fraction, missing_fraction) per cell.
    """

    image_id: str
    aoi_id: str
    timestamp: datetime
    pixels: np.ndarray
    gsd: float = DEFAULT_GSD_M
    cell_stats: np.ndarray = None

    def __post_init__(self):
        if self.cell_stats is None:
            self.cell_stats = np.zeros((GRID_ROWS, GRID_COLS, 2), dtype=np.float64)
        self.validate()

    def validate(self) -> None:
        h, w = self.pixels.shape[:2]
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise SceneFormatError(f"pixels must be HxWx3, got {self.pixels.shape}")
        if h % GRID_ROWS or w % GRID_COLS:
            raise SceneFormatError(f"raster {h}x{w} not divisible by {GRID_ROWS}x{GRID_COLS} grid")
        if self.pixels.min() < 0.0 or self.pixels.max() > 1.0:
            raise SceneFormatError("pixel values outside [0, 1]")
        if self.cell_stats.shape != (GRID_ROWS, GRID_COLS, 2):
            raise SceneFormatError(f"cell_stats must be {GRID_ROWS}x{GRID_COLS}x2")
        if self.cell_stats.min() < 0.0 or self.cell_stats.max() > 1.0:
            raise SceneFormatError("cell_stats fractions outside [0, 1]")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def cell_of(self, x: int, y: int) -> tuple[int, int]:
        """Grid cell (row, col) containing pixel (x, y)."""
        return (int(y // (self.height // GRID_ROWS)), int(x // (self.width // GRID_COLS)))


def pad_to_grid(pixels: np.ndarray, cell_stats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Zero-pad bottom/right to a multiple of the grid; fold padding into
    missing_fraction of the affected cells.

    The sidecar's missing fractions are assumed uniform over the unpadded
    raster; they are rescaled to the padded cell geometry before the padded
    area itself is added.
    """
    h, w = pixels.shape[:2]
    new_h = -(-h // GRID_ROWS) * GRID_ROWS
    new_w = -(-w // GRID_COLS) * GRID_COLS
    if new_h == h and new_w == w:
        return pixels, cell_stats
    padded = np.zeros((new_h, new_w, 3), dtype=pixels.dtype)
    padded[:h, :w] = pixels

    ch, cw = new_h // GRID_ROWS, new_w // GRID_COLS
    stats = np.array(cell_stats, dtype=np.float64, copy=True)
    for i in range(GRID_ROWS):
        for j in range(GRID_COLS):
            rows = min(max(h - i * ch, 0), ch)
            cols = min(max(w - j * cw, 0), cw)
            valid = rows * cols
            pad_area = ch * cw - valid
            if pad_area:
                stats[i, j, 1] = (stats[i, j, 1] * valid + pad_area) / (ch * cw)
    return padded, stats


def store_scene(scene: SceneImage, root: str | Path) -> Path:
    """Write PNG + JSON sidecar under root/<aoi_id>/; returns the PNG path."""
    out_dir = Path(root) / scene.aoi_id
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = format_timestamp(scene.timestamp)
    png_path = out_dir / f"{stem}.png"
    raw = np.rint(scene.pixels * 255.0).astype(np.uint8)
    Image.fromarray(raw, mode="RGB").save(png_path)
    sidecar = {
        "image_id": scene.image_id,
        "aoi_id": scene.aoi_id,
        "timestamp": format_timestamp(scene.timestamp),
        "gsd_m": scene.gsd,
        "cell_stats": [
            [
                {"cloud": float(scene.cell_stats[i, j, 0]), "missing": float(scene.cell_stats[i, j, 1])}
                for j in range(GRID_COLS)
            ]
            for i in range(GRID_ROWS)
        ],
    }
    (out_dir / f"{stem}.json").write_text(json.dumps(sidecar, indent=1))
    return png_path


def load_scene(path: str | Path) -> SceneImage:
    """Load a stored scene; pads rasters whose side is not a grid multiple."""
    png_path = Path(path)
    if not png_path.exists():
        raise FileNotFoundError(f"scene raster {png_path} does not exist")
    sidecar_path = png_path.with_suffix(".json")
    if not sidecar_path.exists():
        raise FileNotFoundError(f"scene sidecar {sidecar_path} does not exist")
    try:
        meta = json.loads(sidecar_path.read_text())
    except json.JSONDecodeError as exc:
        raise SceneFormatError(f"corrupt sidecar {sidecar_path}: {exc}") from exc
    for key in ("image_id", "aoi_id", "timestamp", "gsd_m", "cell_stats"):
        if key not in meta:
            raise SceneFormatError(f"sidecar {sidecar_path} missing field {key!r}")

    try:
        raw = np.asarray(Image.open(png_path).convert("RGB"), dtype=np.uint8)
    except Exception as exc:
        raise SceneFormatError(f"unreadable raster {png_path}: {exc}") from exc
    pixels = raw.astype(np.float32) / 255.0

    stats_rows = meta["cell_stats"]
    if len(stats_rows) != GRID_ROWS or any(len(r) != GRID_COLS for r in stats_rows):
        raise SceneFormatError(f"sidecar {sidecar_path}: cell_stats is not {GRID_ROWS}x{GRID_COLS}")
    cell_stats = np.array(
        [[(c["cloud"], c["missing"]) for c in row] for row in stats_rows], dtype=np.float64
    )

    pixels, cell_stats = pad_to_grid(pixels, cell_stats)
    return SceneImage(
        image_id=meta["image_id"],
        aoi_id=meta["aoi_id"],
        timestamp=parse_timestamp(meta["timestamp"]),
        pixels=pixels,
        gsd=float(meta["gsd_m"]),
        cell_stats=cell_stats,
    )


def scan_scene_dir(root: str | Path, aoi_id: str | None = None) -> list[Path]:
    """All scene PNG paths under root (optionally one AOI), sorted by path."""
    root = Path(root)
    if aoi_id is not None:
        pattern = f"{aoi_id}/*.png"
    else:
        pattern = "*/*.png"
    return sorted(root.glob(pattern))
