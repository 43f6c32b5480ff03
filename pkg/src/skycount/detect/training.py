"""Detector training driver with hard-negative mining.

Each epoch runs a fixed number of Adam steps on randomly drawn, randomly
flipped/rotated patches, then scores the current model by detecting over
every training scene and matching against the annotations. The model is
checkpointed on strict score improvement, and up to half of the negative
pool is replaced by patches centered on the epoch's false alarms.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..imagery import Annotation, SceneImage
from ..net import AdamState, FcnModel, NumericError, backward_and_step
from .detector import DEFAULT_NMS_RADIUS, DEFAULT_THRESHOLD, build_model, detect_scene
from .matching import match_detections
from .sampling import PatchSample, augment, extract_patch, patch_fits, sample_initial
from .types import EvalReport

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    batch_size: int = 256
    iterations_per_epoch: int = 3000
    lr: float = 1e-4
    patience: int = 10
    max_epochs: int = 50
    match_radius: float = 25.0
    detection_threshold: float = DEFAULT_THRESHOLD
    nms_radius: int = DEFAULT_NMS_RADIUS
    neg_ratio: int = 2
    d_p: int = 3
    d_n: int = 25
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("batch_size", "iterations_per_epoch", "patience", "max_epochs", "neg_ratio"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.lr < 0 or self.match_radius <= 0 or self.nms_radius <= 0:
            raise ValueError("lr, match_radius and nms_radius must be positive")


@dataclass
class TrainResult:
    model: FcnModel
    history: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    best_score: float = 0.0


def _assemble_batch(
    samples: list[PatchSample],
    scenes: dict[str, SceneImage],
    indices: np.ndarray,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    batch = np.empty((len(indices), 3, 51, 51), dtype=np.float32)
    labels = np.empty(len(indices), dtype=np.float32)
    for row, idx in enumerate(indices):
        s = samples[int(idx)]
        patch = augment(extract_patch(scenes[s.image_id], s.x, s.y), rng)
        batch[row] = patch.transpose(2, 0, 1)
        labels[row] = s.label
    return batch, labels


def train(
    scenes: dict[str, SceneImage],
    annotations: list[Annotation],
    cfg: TrainConfig,
    progress: bool = False,
) -> TrainResult:
    """Full training loop; returns the best-scoring model and the per-epoch
    history (epoch, loss, tp, fa, fn, dr, fdr, score, saved)."""
    if not annotations:
        raise ValueError("cannot train without annotations")
    rng = np.random.default_rng(cfg.rng_seed)
    model = build_model(cfg.rng_seed)
    adam = AdamState.for_params(model.parameters(), lr=cfg.lr)

    samples = sample_initial(annotations, scenes, neg_ratio=cfg.neg_ratio, rng=rng)
    positives = [s for s in samples if s.label == 1]
    negatives = [s for s in samples if s.label == 0]
    if not positives:
        raise ValueError("no usable positive samples; all annotations too close to borders?")

    scene_list = [scenes[k] for k in sorted(scenes.keys())]
    result = TrainResult(model=model.copy())
    strikes = 0

    for epoch in range(1, cfg.max_epochs + 1):
        pool = positives + negatives
        losses = np.empty(cfg.iterations_per_epoch, dtype=np.float64)
        aborted = False
        for it in range(cfg.iterations_per_epoch):
            indices = rng.integers(0, len(pool), size=cfg.batch_size)
            batch, labels = _assemble_batch(pool, scenes, indices, rng)
            try:
                losses[it] = backward_and_step(model, batch, labels, adam)
            except NumericError:
                log.error("epoch %d aborted at iteration %d: non-finite loss", epoch, it)
                aborted = True
                break
            if progress and (it + 1) % 50 == 0:
                log.info("epoch %d: %d/%d iterations, loss %.4f", epoch, it + 1, cfg.iterations_per_epoch, losses[it])
        if aborted:
            break

        detections = []
        flags_all: list[bool] = []
        per_scene: list[tuple[SceneImage, list]] = []
        for scene in scene_list:
            dets = detect_scene(model, scene, cfg.detection_threshold, cfg.nms_radius)
            per_scene.append((scene, dets))
            detections.extend(dets)
        report, is_tp = match_detections(detections, annotations, cfg.match_radius)

        saved = report.score > result.best_score
        if saved:
            result.model = model.copy()
            result.best_score = report.score
            result.best_epoch = epoch
            strikes = 0
        elif epoch == 1:
            # baseline snapshot: with no improvement ever recorded the
            # first trained model is still the one to return
            result.model = model.copy()
            result.best_epoch = 1
        else:
            strikes += 1

        result.history.append(
            {
                "epoch": epoch,
                "loss": round(float(np.mean(losses)), 6),
                "tp": report.tp,
                "fa": report.fa,
                "fn": report.fn,
                "dr": round(report.dr, 6),
                "fdr": round(report.fdr, 6),
                "score": round(report.score, 6),
                "saved": int(saved),
            }
        )
        log.info(
            "epoch %d: loss %.4f dr %.3f fdr %.3f score %.4f%s",
            epoch, float(np.mean(losses)), report.dr, report.fdr, report.score, " [saved]" if saved else "",
        )

        if strikes >= cfg.patience:
            break

        negatives = _mine_hard_negatives(negatives, detections, is_tp, scenes, rng)

    return result


def _mine_hard_negatives(
    negatives: list[PatchSample],
    detections: list,
    is_tp: list[bool],
    scenes: dict[str, SceneImage],
    rng: np.random.Generator,
) -> list[PatchSample]:
    """Replace up to half of the negatives with this epoch's false alarms."""
    false_alarms = [
        d
        for d, tp in zip(detections, is_tp)
        if not tp and patch_fits(d.x, d.y, scenes[d.image_id].width, scenes[d.image_id].height)
    ]
    if not false_alarms or not negatives:
        return negatives
    k = min(len(false_alarms), len(negatives) // 2)
    if k == 0:
        return negatives
    chosen = rng.permutation(len(false_alarms))[:k]
    slots = rng.permutation(len(negatives))[:k]
    out = list(negatives)
    for fa_idx, slot in zip(chosen, slots):
        d = false_alarms[int(fa_idx)]
        out[int(slot)] = PatchSample(d.image_id, d.x, d.y, 0, "hard-negative")
    return out
