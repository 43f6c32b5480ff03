"""Patch sampling around annotations and the flip/rotation augmentations.

Positives are the annotation center plus the eight +-3 px offsets; ring
negatives sit +-25 px away in one or both axes; random negatives keep at
least 25 px from every annotation of their scene. All patches must lie
fully inside their source image.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..imagery import Annotation, SceneImage
from .detector import PATCH_HALF, PATCH_SIZE

log = logging.getLogger(__name__)

JITTER_PX = 3   # positive offset distance
RING_PX = 25    # negative ring distance, equals the match radius
BORDER_SKIP = 26  # annotations closer than this to a border are skipped

_JITTER_OFFSETS = [(0, 0)] + [
    (dx, dy)
    for dx in (-JITTER_PX, 0, JITTER_PX)
    for dy in (-JITTER_PX, 0, JITTER_PX)
    if (dx, dy) != (0, 0)
]
_RING_OFFSETS = [
    (dx, dy)
    for dx in (-RING_PX, 0, RING_PX)
    for dy in (-RING_PX, 0, RING_PX)
    if (dx, dy) != (0, 0)
]


class SamplingError(RuntimeError):
    """Could not place the required random negatives."""


@dataclass(frozen=True)
class PatchSample:
    image_id: str
    x: int
    y: int
    label: int  # 1 positive, 0 negative
    origin: str  # annotation-center | annotation-jitter | ring-negative | random-negative | hard-negative


def patch_fits(x: int, y: int, width: int, height: int) -> bool:
    return (
        x - PATCH_HALF >= 0
        and y - PATCH_HALF >= 0
        and x + PATCH_HALF <= width - 1
        and y + PATCH_HALF <= height - 1
    )


def extract_patch(scene: SceneImage, x: int, y: int) -> np.ndarray:
    """(51, 51, 3) crop centered on (x, y); caller guarantees fit."""
    return scene.pixels[y - PATCH_HALF : y + PATCH_HALF + 1, x - PATCH_HALF : x + PATCH_HALF + 1, :]


def sample_initial(
    annotations: list[Annotation],
    scenes: dict[str, SceneImage],
    neg_ratio: int = 2,
    rng: np.random.Generator | None = None,
    max_attempts: int = 1000,
) -> list[PatchSample]:
    """Initial training set at a 1:neg_ratio positive:negative balance."""
    rng = rng or np.random.default_rng(0)
    positives: list[PatchSample] = []
    negatives: list[PatchSample] = []
    per_image: dict[str, list[Annotation]] = {}
    skipped = 0

    for ann in annotations:
        scene = scenes.get(ann.image_id)
        if scene is None:
            raise KeyError(f"annotation references unknown image {ann.image_id!r}")
        per_image.setdefault(ann.image_id, []).append(ann)
        h, w = scene.height, scene.width
        if min(ann.x, ann.y, w - 1 - ann.x, h - 1 - ann.y) < BORDER_SKIP:
            skipped += 1
            continue
        for dx, dy in _JITTER_OFFSETS:
            px, py = ann.x + dx, ann.y + dy
            if patch_fits(px, py, w, h):
                origin = "annotation-center" if (dx, dy) == (0, 0) else "annotation-jitter"
                positives.append(PatchSample(ann.image_id, px, py, 1, origin))
        for dx, dy in _RING_OFFSETS:
            px, py = ann.x + dx, ann.y + dy
            if patch_fits(px, py, w, h):
                negatives.append(PatchSample(ann.image_id, px, py, 0, "ring-negative"))

    if skipped:
        log.warning("skipped %d annotations within %d px of a border", skipped, BORDER_SKIP)

    image_ids = sorted(scenes.keys())
    needed = neg_ratio * len(positives) - len(negatives)
    for _ in range(max(0, needed)):
        sample = _random_negative(scenes, per_image, image_ids, rng, max_attempts)
        negatives.append(sample)
    return positives + negatives


def _random_negative(scenes, per_image, image_ids, rng, max_attempts) -> PatchSample:
    for _ in range(max_attempts):
        image_id = image_ids[int(rng.integers(0, len(image_ids)))]
        scene = scenes[image_id]
        h, w = scene.height, scene.width
        if w < PATCH_SIZE or h < PATCH_SIZE:
            continue
        x = int(rng.integers(PATCH_HALF, w - PATCH_HALF))
        y = int(rng.integers(PATCH_HALF, h - PATCH_HALF))
        if any(
            math.hypot(x - a.x, y - a.y) < RING_PX for a in per_image.get(image_id, ())
        ):
            continue
        return PatchSample(image_id, x, y, 0, "random-negative")
    raise SamplingError(f"no valid random negative after {max_attempts} attempts")


def augment(patch: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One of the eight flip/90-degree-rotation variants, uniformly."""
    k = int(rng.integers(0, 4))
    out = np.rot90(patch, k, axes=(0, 1))
    if rng.integers(0, 2):
        out = out[:, ::-1, :]
    return np.ascontiguousarray(out)


def dihedral_variants(patch: np.ndarray) -> list[np.ndarray]:
    """All eight flip/rotation images of a patch."""
    out = []
    for k in range(4):
        rot = np.rot90(patch, k, axes=(0, 1))
        out.append(np.ascontiguousarray(rot))
        out.append(np.ascontiguousarray(rot[:, ::-1, :]))
    return out
