"""Point annotations of airplane pattern centers, JSON-lines on disk.

Coordinates are pixel indices: x right-positive, y down-positive, origin
at the top-left pixel center.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class Annotation:
    image_id: str
    x: int
    y: int
    source: str = "manual"


def save_annotations(annotations: list[Annotation], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for a in annotations:
            fh.write(json.dumps({"image_id": a.image_id, "x": a.x, "y": a.y, "source": a.source}) + "\n")
    return path


def load_annotations(path: str | Path) -> list[Annotation]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"annotations file {path} does not exist")
    out = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            out.append(
                Annotation(
                    image_id=rec["image_id"],
                    x=int(rec["x"]),
                    y=int(rec["y"]),
                    source=rec.get("source", "manual"),
                )
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{path}:{lineno}: bad annotation record: {exc}") from exc
    return out
