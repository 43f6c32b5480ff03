"""Binary cross-entropy loss and the single training step."""
from __future__ import annotations

import numpy as np

from .model import FcnModel, ShapeError, _to_nhwc
from .optim import AdamState, adam_step

BCE_EPS = 1e-7


class NumericError(ArithmeticError):
    """Loss or gradients went non-finite; the epoch must be aborted."""


def bce_loss(predicted: np.ndarray, labels: np.ndarray) -> float:
    """Mean binary cross-entropy with predictions clamped to [eps, 1-eps]."""
    p = np.asarray(predicted, dtype=np.float64).ravel()
    y = np.asarray(labels, dtype=np.float64).ravel()
    if p.shape != y.shape:
        raise ShapeError(f"predictions ({p.shape}) and labels ({y.shape}) differ in length")
    pc = np.clip(p, BCE_EPS, 1.0 - BCE_EPS)
    return float(-(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc)).mean())


def bce_grad(predicted: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """d(mean BCE)/d(prediction); zero where the clamp is active."""
    p = np.asarray(predicted)
    y = np.asarray(labels, dtype=p.dtype).reshape(p.shape)
    pc = np.clip(p, BCE_EPS, 1.0 - BCE_EPS)
    grad = (pc - y) / (pc * (1.0 - pc)) / p.size
    grad[(p < BCE_EPS) | (p > 1.0 - BCE_EPS)] = 0.0
    return grad.astype(p.dtype)


def backward_and_step(
    model: FcnModel, batch: np.ndarray, labels: np.ndarray, adam: AdamState
) -> float:
    """One optimizer step on a patch batch; valid padding shrinks each
    patch to a single probability.

    Returns the batch loss; raises NumericError (leaving parameters
    untouched) if the forward pass produced non-finite values.
    """
    x, _ = _to_nhwc(np.asarray(batch))
    out = model.forward_nhwc(x, train=True, padding="valid")
    if out.shape[1] != 1 or out.shape[2] != 1:
        raise ShapeError(
            f"training patches must reduce to 1x1 through the network, got {out.shape[1]}x{out.shape[2]}"
        )
    probs = out.reshape(out.shape[0])
    loss = bce_loss(probs, labels)
    if not np.isfinite(loss):
        raise NumericError(f"non-finite training loss {loss}")
    grad = bce_grad(probs, np.asarray(labels)).reshape(out.shape)
    model.backward_nhwc(grad)
    adam_step(model.parameters(), model.gradients(), adam)
    model.adam_step = adam.step
    return loss
