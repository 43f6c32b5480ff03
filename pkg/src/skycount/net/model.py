"""Model container, public NCHW entry points, and checkpoint I/O.

Checkpoint format: a JSON manifest (layer specs, rng seed, optimizer step)
next to a raw little-endian float32 blob holding, in layer order, conv
weights (out, in, ky, kx row-major), conv bias, then batchnorm running
mean and running variance.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .layers import BatchNorm, Conv2d, Layer, MaxPool, ReLU, Sigmoid
from .ops import conv2d_nhwc


class ShapeError(ValueError):
    """Tensor dims inconsistent with the layer plan."""


@dataclass(frozen=True)
class LayerSpec:
    kind: str  # conv | relu | batchnorm | maxpool | sigmoid
    kernel: int = 0
    in_channels: int = 0
    out_channels: int = 0
    padding_mode: str = "same-zero"
    has_bias: bool = False


def _to_nhwc(x: np.ndarray) -> tuple[np.ndarray, bool]:
    """Accept (C,H,W) or (B,C,H,W); return (B,H,W,C) plus batched flag."""
    if x.ndim == 3:
        x = x[None]
        batched = False
    elif x.ndim == 4:
        batched = True
    else:
        raise ShapeError(f"expected (C,H,W) or (B,C,H,W), got shape {x.shape}")
    return np.ascontiguousarray(np.transpose(x, (0, 2, 3, 1))), batched


def _from_nhwc(x: np.ndarray, batched: bool) -> np.ndarray:
    out = np.ascontiguousarray(np.transpose(x, (0, 3, 1, 2)))
    return out if batched else out[0]


class FcnModel:
    """A fixed stack of conv/relu/batchnorm/maxpool/sigmoid layers."""

    def __init__(self, specs: list[LayerSpec], layers: list[Layer], rng_seed: int = 0, adam_step: int = 0):
        self.specs = specs
        self.layers = layers
        self.rng_seed = rng_seed
        self.adam_step = adam_step

    # -- construction -----------------------------------------------------

    @classmethod
    def build(
        cls,
        channel_plan: tuple[int, ...],
        final_kernel: int,
        seed: int,
        in_channels: int = 3,
        conv_kernel: int = 5,
        pool_kernel: int = 5,
        dtype=np.float32,
    ) -> "FcnModel":
        """Blocks of conv(k)/relu/batchnorm/maxpool(k) per channel entry,
        then a biased final conv to one channel with sigmoid output.

        Hidden convs are bias-free; weights are Glorot-uniform, seeded.
        """
        rng = np.random.default_rng(seed)
        specs: list[LayerSpec] = []
        layers: list[Layer] = []
        c_in = in_channels
        for c_out in channel_plan:
            w = _glorot(rng, c_out, c_in, conv_kernel, dtype)
            specs.append(LayerSpec("conv", conv_kernel, c_in, c_out, has_bias=False))
            layers.append(Conv2d(w, None))
            specs.append(LayerSpec("relu"))
            layers.append(ReLU())
            specs.append(LayerSpec("batchnorm", in_channels=c_out, out_channels=c_out))
            layers.append(BatchNorm(c_out, dtype=dtype))
            specs.append(LayerSpec("maxpool", kernel=pool_kernel))
            layers.append(MaxPool(pool_kernel))
            c_in = c_out
        w = _glorot(rng, 1, c_in, final_kernel, dtype)
        b = np.zeros(1, dtype=dtype)
        specs.append(LayerSpec("conv", final_kernel, c_in, 1, has_bias=True))
        layers.append(Conv2d(w, b))
        specs.append(LayerSpec("sigmoid"))
        layers.append(Sigmoid())
        return cls(specs, layers, rng_seed=seed)

    # -- inference / training ---------------------------------------------

    def forward_nhwc(self, x: np.ndarray, train: bool, padding: str) -> np.ndarray:
        if x.shape[3] != self.in_channels:
            raise ShapeError(f"model expects {self.in_channels} input channels, got {x.shape[3]}")
        for layer in self.layers:
            x = layer.forward(x, train, padding)
        return x

    def backward_nhwc(self, grad: np.ndarray) -> None:
        for idx in range(len(self.layers) - 1, -1, -1):
            grad = self.layers[idx].backward(grad, need_input_grad=idx > 0)

    @property
    def in_channels(self) -> int:
        return self.specs[0].in_channels

    @property
    def receptive_field(self) -> int:
        rf = 1
        for spec in self.specs:
            if spec.kind in ("conv", "maxpool"):
                rf += spec.kernel - 1
        return rf

    def parameters(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.parameters()]

    def gradients(self) -> list[np.ndarray]:
        return [g for layer in self.layers for g in layer.gradients()]

    def copy(self) -> "FcnModel":
        clone = FcnModel(list(self.specs), [], rng_seed=self.rng_seed, adam_step=self.adam_step)
        for layer in self.layers:
            if isinstance(layer, Conv2d):
                clone.layers.append(
                    Conv2d(layer.weights.copy(), None if layer.bias is None else layer.bias.copy())
                )
            elif isinstance(layer, BatchNorm):
                bn = BatchNorm(layer.channels, dtype=layer.running_mean.dtype)
                bn.running_mean = layer.running_mean.copy()
                bn.running_var = layer.running_var.copy()
                clone.layers.append(bn)
            elif isinstance(layer, ReLU):
                clone.layers.append(ReLU())
            elif isinstance(layer, MaxPool):
                clone.layers.append(MaxPool(layer.kernel))
            elif isinstance(layer, Sigmoid):
                clone.layers.append(Sigmoid())
        return clone

    def astype(self, dtype) -> "FcnModel":
        clone = self.copy()
        for layer in clone.layers:
            if isinstance(layer, Conv2d):
                layer.weights = layer.weights.astype(dtype)
                if layer.bias is not None:
                    layer.bias = layer.bias.astype(dtype)
            elif isinstance(layer, BatchNorm):
                layer.running_mean = layer.running_mean.astype(dtype)
                layer.running_var = layer.running_var.astype(dtype)
        return clone


def _glorot(rng: np.random.Generator, c_out: int, c_in: int, k: int, dtype) -> np.ndarray:
    fan_in = c_in * k * k
    fan_out = c_out * k * k
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(c_out, c_in, k, k)).astype(dtype)


# -- public NCHW operations ------------------------------------------------


def conv2d(
    input: np.ndarray, weights: np.ndarray, bias: np.ndarray | None = None, padding_mode: str = "same-zero"
) -> np.ndarray:
    """Stride-1 2-D convolution on (C,H,W) or (B,C,H,W) tensors."""
    padding = _canon_padding(padding_mode)
    x, batched = _to_nhwc(np.asarray(input))
    if x.shape[3] != weights.shape[1]:
        raise ShapeError(
            f"channel mismatch: input has {x.shape[3]} channels, weights expect {weights.shape[1]}"
        )
    out, _ = conv2d_nhwc(x, weights, bias, padding)
    return _from_nhwc(out, batched)


def forward(model: FcnModel, image: np.ndarray, mode: str = "eval", padding_mode: str = "same-zero") -> np.ndarray:
    """Run the model over (C,H,W) or (B,C,H,W); probabilities out.

    Train mode normalizes with batch statistics and caches for backward;
    eval mode uses running statistics and is side-effect free.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    padding = _canon_padding(padding_mode)
    x, batched = _to_nhwc(np.asarray(image))
    out = model.forward_nhwc(x, train=(mode == "train"), padding=padding)
    return _from_nhwc(out, batched)


def param_count(model: FcnModel) -> int:
    """Learnable parameters: conv weights and biases only."""
    return sum(int(p.size) for p in model.parameters())


def _canon_padding(mode: str) -> str:
    if mode in ("same", "same-zero"):
        return "same"
    if mode == "valid":
        return "valid"
    raise ValueError(f"unknown padding mode {mode!r}")


# -- checkpoints -------------------------------------------------------------


def save_checkpoint(model: FcnModel, path: str | Path) -> Path:
    """Write `<stem>.json` manifest and `<stem>.bin` float32 blob."""
    path = Path(path)
    stem = path.with_suffix("")
    manifest = {
        "layers": [asdict(s) for s in model.specs],
        "rng_seed": model.rng_seed,
        "adam_step": model.adam_step,
    }
    blob_parts: list[np.ndarray] = []
    for layer in model.layers:
        if isinstance(layer, Conv2d):
            blob_parts.append(np.ascontiguousarray(layer.weights, dtype="<f4").ravel())
            if layer.bias is not None:
                blob_parts.append(np.ascontiguousarray(layer.bias, dtype="<f4").ravel())
        elif isinstance(layer, BatchNorm):
            blob_parts.append(np.ascontiguousarray(layer.running_mean, dtype="<f4").ravel())
            blob_parts.append(np.ascontiguousarray(layer.running_var, dtype="<f4").ravel())
    stem.parent.mkdir(parents=True, exist_ok=True)
    stem.with_suffix(".json").write_text(json.dumps(manifest, indent=1))
    np.concatenate(blob_parts).tofile(stem.with_suffix(".bin"))
    return stem.with_suffix(".json")


def load_checkpoint(path: str | Path) -> FcnModel:
    stem = Path(path).with_suffix("")
    manifest_path = stem.with_suffix(".json")
    blob_path = stem.with_suffix(".bin")
    if not manifest_path.exists() or not blob_path.exists():
        raise FileNotFoundError(f"checkpoint {stem} incomplete: needs .json and .bin")
    manifest = json.loads(manifest_path.read_text())
    specs = [LayerSpec(**s) for s in manifest["layers"]]

    expected = 0
    for s in specs:
        if s.kind == "conv":
            expected += s.out_channels * s.in_channels * s.kernel * s.kernel + (1 if s.has_bias else 0) * s.out_channels
        elif s.kind == "batchnorm":
            expected += 2 * s.out_channels
    blob = np.fromfile(blob_path, dtype="<f4")
    if blob.size != expected:
        raise ValueError(f"checkpoint blob has {blob.size} floats, manifest implies {expected}")

    layers: list[Layer] = []
    pos = 0
    for s in specs:
        if s.kind == "conv":
            n = s.out_channels * s.in_channels * s.kernel * s.kernel
            w = blob[pos : pos + n].reshape(s.out_channels, s.in_channels, s.kernel, s.kernel).copy()
            pos += n
            b = None
            if s.has_bias:
                b = blob[pos : pos + s.out_channels].copy()
                pos += s.out_channels
            layers.append(Conv2d(w, b))
        elif s.kind == "relu":
            layers.append(ReLU())
        elif s.kind == "batchnorm":
            bn = BatchNorm(s.out_channels)
            bn.running_mean = blob[pos : pos + s.out_channels].copy()
            pos += s.out_channels
            bn.running_var = blob[pos : pos + s.out_channels].copy()
            pos += s.out_channels
            layers.append(bn)
        elif s.kind == "maxpool":
            layers.append(MaxPool(s.kernel))
        elif s.kind == "sigmoid":
            layers.append(Sigmoid())
        else:
            raise ValueError(f"unknown layer kind {s.kind!r} in manifest")
    return FcnModel(specs, layers, rng_seed=manifest.get("rng_seed", 0), adam_step=manifest.get("adam_step", 0))
