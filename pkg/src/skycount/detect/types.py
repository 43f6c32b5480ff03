"""Detection records, evaluation reports, and their file formats."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class Detection:
    image_id: str
    x: int
    y: int
    score: float


@dataclass(frozen=True)
class EvalReport:
    tp: int
    fa: int
    fn: int

    @property
    def dr(self) -> float:
        total = self.tp + self.fn
        return self.tp / total if total else 0.0

    @property
    def fdr(self) -> float:
        return self.fa / max(1, self.tp + self.fa)

    @property
    def score(self) -> float:
        return self.dr * (1.0 - self.fdr)


def save_detections(detections: list[Detection], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for d in detections:
            fh.write(
                json.dumps({"image_id": d.image_id, "x": d.x, "y": d.y, "score": round(float(d.score), 6)})
                + "\n"
            )
    return path


def load_detections(path: str | Path) -> list[Detection]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"detections file {path} does not exist")
    out = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            out.append(Detection(rec["image_id"], int(rec["x"]), int(rec["y"]), float(rec["score"])))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{path}:{lineno}: bad detection record: {exc}") from exc
    return out


HISTORY_FIELDS = ["epoch", "loss", "tp", "fa", "fn", "dr", "fdr", "score", "saved"]


def save_history(rows: list[dict], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=HISTORY_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in HISTORY_FIELDS})
    return path
