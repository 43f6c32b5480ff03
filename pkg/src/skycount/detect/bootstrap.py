"""Turning reviewed detections into the next round's annotation set."""
from __future__ import annotations

from dataclasses import dataclass

from ..imagery import Annotation
from .types import Detection

MAX_ADJUST_PX = 25


class InvalidVerdict(ValueError):
    pass


@dataclass(frozen=True)
class ReviewVerdict:
    detection_index: int
    decision: str  # accept | reject
    dx: int = 0
    dy: int = 0
    reviewer: str = ""


def bootstrap_annotations(
    detections: list[Detection],
    verdicts: list[ReviewVerdict],
    image_sizes: dict[str, tuple[int, int]] | None = None,
) -> list[Annotation]:
    """Accepted detections become annotations at their adjusted positions;
    rejected and unreviewed detections are dropped. Later verdicts on the
    same detection override earlier ones.
    """
    effective: dict[int, ReviewVerdict] = {}
    for v in verdicts:
        if not (0 <= v.detection_index < len(detections)):
            raise InvalidVerdict(f"verdict references detection {v.detection_index}, have {len(detections)}")
        if v.decision not in ("accept", "reject"):
            raise InvalidVerdict(f"unknown decision {v.decision!r}")
        if v.decision == "accept":
            if abs(v.dx) > MAX_ADJUST_PX or abs(v.dy) > MAX_ADJUST_PX:
                raise InvalidVerdict(f"adjustment ({v.dx}, {v.dy}) beyond +-{MAX_ADJUST_PX} px")
        effective[v.detection_index] = v

    out: list[Annotation] = []
    for idx in sorted(effective):
        v = effective[idx]
        if v.decision != "accept":
            continue
        det = detections[idx]
        x, y = det.x + v.dx, det.y + v.dy
        if x < 0 or y < 0:
            raise InvalidVerdict(f"adjusted point ({x}, {y}) outside the image")
        if image_sizes is not None:
            w, h = image_sizes[det.image_id]
            if x > w - 1 or y > h - 1:
                raise InvalidVerdict(f"adjusted point ({x}, {y}) outside {w}x{h} image")
        out.append(Annotation(image_id=det.image_id, x=x, y=y, source="review"))
    return out
