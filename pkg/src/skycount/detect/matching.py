"""Greedy detection-to-annotation matching and DR/FDR accounting."""
from __future__ import annotations

import math
from collections import defaultdict

from ..imagery import Annotation
from .types import Detection, EvalReport

MATCH_RADIUS = 25.0


def match_detections(
    detections: list[Detection],
    annotations: list[Annotation],
    radius: float = MATCH_RADIUS,
) -> tuple[EvalReport, list[bool]]:
    """Per-image greedy matching: annotations in input order each claim
    their closest unclaimed detection (Euclidean, ties by detection y, x)
    when it lies within the radius. Returns the report and a per-detection
    true-positive flag aligned with the input order.
    """
    by_image: dict[str, list[int]] = defaultdict(list)
    for idx, det in enumerate(detections):
        by_image[det.image_id].append(idx)

    is_tp = [False] * len(detections)
    fn = 0
    for ann in annotations:
        best = None
        for idx in by_image.get(ann.image_id, ()):
            if is_tp[idx]:
                continue
            det = detections[idx]
            d = math.hypot(det.x - ann.x, det.y - ann.y)
            key = (d, det.y, det.x)
            if best is None or key < best[0]:
                best = (key, idx)
        if best is not None and best[0][0] <= radius:
            is_tp[best[1]] = True
        else:
            fn += 1

    tp = sum(is_tp)
    return EvalReport(tp=tp, fa=len(detections) - tp, fn=fn), is_tp
