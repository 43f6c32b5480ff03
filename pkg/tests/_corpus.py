"""Shared synthetic corpus + training recipe for the end-to-end acceptance run.

The trained checkpoint is cached under tests/.cache keyed by a fingerprint
of every input that determines it; a cache hit skips the multi-hour
training but never the held-out evaluation that the criterion asserts.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict
from pathlib import Path

from skycount.detect import TrainConfig, train
from skycount.imagery import SynthConfig, synth_scene
from skycount.net import load_checkpoint, save_checkpoint

CACHE_VERSION = 1

N_TRAIN_SCENES = 200
N_HELDOUT_SCENES = 50

CORPUS_CFG = SynthConfig(
    rng_seed=20_240_501,
    image_size=(140, 140),
    planes_per_image=3.0,
    cloud_density=0.04,
    artifact_rate=0.15,
)

TRAIN_CFG = TrainConfig(
    batch_size=256,
    iterations_per_epoch=300,  # desk-scale reduction of the 3,000 production value
    lr=1e-4,
    patience=10,
    max_epochs=50,
    rng_seed=7,
)


def build_corpus(cfg: SynthConfig, start: int, count: int):
    scenes, annotations = {}, []
    for idx in range(start, start + count):
        scene, anns = synth_scene(cfg, idx)
        scenes[scene.image_id] = scene
        annotations.extend(anns)
    return scenes, annotations


def corpus_fingerprint() -> str:
    payload = {
        "version": CACHE_VERSION,
        "synth": {k: str(v) for k, v in asdict(CORPUS_CFG).items()},
        "train": asdict(TRAIN_CFG),
        "scenes": [N_TRAIN_SCENES, N_HELDOUT_SCENES],
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def cached_training_run(cache_root: Path, progress: bool = False):
    """Returns (model, history_rows); trains and fills the cache on miss."""
    tag = corpus_fingerprint()
    cache = cache_root / f"a4-{tag}"
    ckpt = cache / "model.json"
    hist = cache / "history.json"
    if ckpt.exists() and hist.exists():
        return load_checkpoint(ckpt), json.loads(hist.read_text())

    scenes, annotations = build_corpus(CORPUS_CFG, 0, N_TRAIN_SCENES)
    result = train(scenes, annotations, TRAIN_CFG, progress=progress)
    cache.mkdir(parents=True, exist_ok=True)
    save_checkpoint(result.model, ckpt)
    hist.write_text(json.dumps(result.history))
    return result.model, result.history
