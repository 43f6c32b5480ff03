from .bootstrap import InvalidVerdict, ReviewVerdict, bootstrap_annotations
from .detector import (
    DEFAULT_NMS_RADIUS,
    DEFAULT_THRESHOLD,
    PATCH_HALF,
    PATCH_SIZE,
    build_model,
    detect_scene,
    nms_points,
    probability_map,
)
from .matching import MATCH_RADIUS, match_detections
from .sampling import (
    PatchSample,
    SamplingError,
    augment,
    dihedral_variants,
    extract_patch,
    patch_fits,
    sample_initial,
)
from .training import TrainConfig, TrainResult, train
from .types import Detection, EvalReport, load_detections, save_detections, save_history

__all__ = [
    "DEFAULT_NMS_RADIUS",
    "DEFAULT_THRESHOLD",
    "Detection",
    "EvalReport",
    "InvalidVerdict",
    "MATCH_RADIUS",
    "PATCH_HALF",
    "PATCH_SIZE",
    "PatchSample",
    "ReviewVerdict",
    "SamplingError",
    "TrainConfig",
    "TrainResult",
    "augment",
    "bootstrap_annotations",
    "build_model",
    "detect_scene",
    "dihedral_variants",
    "extract_patch",
    "load_detections",
    "match_detections",
    "nms_points",
    "patch_fits",
    "probability_map",
    "sample_initial",
    "save_detections",
    "save_history",
    "train",
]
