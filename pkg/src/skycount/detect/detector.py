"""Model assembly and full-scene detection with non-maximum suppression."""
from __future__ import annotations

import numpy as np
from scipy.ndimage import maximum_filter

from ..imagery import SceneImage
from ..net import FcnModel, forward
from .types import Detection

CHANNEL_PLAN = (16, 32, 64, 64, 64)
CONV_KERNEL = 5
POOL_KERNEL = 5
FINAL_KERNEL = 11

PATCH_SIZE = 51
PATCH_HALF = PATCH_SIZE // 2

DEFAULT_THRESHOLD = 0.5
DEFAULT_NMS_RADIUS = 12


def build_model(seed: int) -> FcnModel:
    """The production detector: five 5x5 conv blocks widening 16..64, an
    11x11 biased head, 51 px receptive field, 277,745 parameters."""
    return FcnModel.build(
        CHANNEL_PLAN,
        final_kernel=FINAL_KERNEL,
        seed=seed,
        conv_kernel=CONV_KERNEL,
        pool_kernel=POOL_KERNEL,
    )


def probability_map(model: FcnModel, scene: SceneImage) -> np.ndarray:
    """Per-pixel airplane-center probability, shape (H, W)."""
    img = np.ascontiguousarray(scene.pixels.transpose(2, 0, 1), dtype=np.float32)
    probs = forward(model, img, mode="eval", padding_mode="same-zero")[0]
    # sigmoid is strictly below 1; keep float32 rounding from ever
    # breaking the `score >= threshold` contract at threshold 1.0
    return np.minimum(probs, np.float32(1.0 - 1e-7))


def nms_points(probs: np.ndarray, threshold: float, nms_radius: int) -> list[tuple[int, int, float]]:
    """Local maxima >= threshold, thinned by greedy Chebyshev suppression.

    Candidates (3x3 local maxima, plateaus included) are visited by
    (score desc, y, x); a candidate within nms_radius of a survivor is
    dropped. Returns (x, y, score) tuples in visit order, which is the
    deterministic output order regardless of candidate enumeration.
    """
    peaks = probs >= maximum_filter(probs, size=3, mode="constant", cval=-np.inf)
    ys, xs = np.nonzero(peaks & (probs >= threshold))
    if len(ys) == 0:
        return []
    scores = probs[ys, xs]
    order = np.lexsort((xs, ys, -scores))
    kept: list[tuple[int, int, float]] = []
    kept_xy: list[tuple[int, int]] = []
    for idx in order:
        x, y, s = int(xs[idx]), int(ys[idx]), float(scores[idx])
        if any(max(abs(x - kx), abs(y - ky)) <= nms_radius for kx, ky in kept_xy):
            continue
        kept.append((x, y, s))
        kept_xy.append((x, y))
    return kept


def detect_scene(
    model: FcnModel,
    scene: SceneImage,
    threshold: float = DEFAULT_THRESHOLD,
    nms_radius: int = DEFAULT_NMS_RADIUS,
) -> list[Detection]:
    """Unique detections, sorted by (score desc, y, x)."""
    probs = probability_map(model, scene)
    return [Detection(scene.image_id, x, y, s) for x, y, s in nms_points(probs, threshold, nms_radius)]
