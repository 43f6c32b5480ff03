from .annotations import Annotation, load_annotations, save_annotations
from .aoi import (
    AOI_HEIGHT_LAT,
    AOI_WIDTH_LON,
    GRID_COLS,
    GRID_ROWS,
    Aoi,
    CellViability,
    assess_viability,
    define_aoi,
)
from .scene import (
    SceneFormatError,
    SceneImage,
    format_timestamp,
    load_scene,
    pad_to_grid,
    parse_timestamp,
    scan_scene_dir,
    store_scene,
)
from .synth import SynthConfig, speed_to_px, synth_scene

__all__ = [
    "AOI_HEIGHT_LAT",
    "AOI_WIDTH_LON",
    "GRID_COLS",
    "GRID_ROWS",
    "Annotation",
    "Aoi",
    "CellViability",
    "SceneFormatError",
    "SceneImage",
    "SynthConfig",
    "assess_viability",
    "define_aoi",
    "format_timestamp",
    "load_annotations",
    "load_scene",
    "pad_to_grid",
    "parse_timestamp",
    "save_annotations",
    "scan_scene_dir",
    "speed_to_px",
    "store_scene",
    "synth_scene",
]
