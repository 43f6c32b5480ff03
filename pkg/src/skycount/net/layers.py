"""Layer objects with explicit forward/backward passes.

Training-mode forward caches whatever backward needs; eval-mode forward
mutates nothing, so a model can serve concurrent inference.
"""
from __future__ import annotations

import numpy as np
from scipy.special import expit

from .ops import (
    conv2d_backward_input,
    conv2d_backward_weights,
    conv2d_nhwc,
    maxpool_backward,
    maxpool_nhwc,
)

BN_EPS = 1e-5
BN_MOMENTUM = 0.99


class Layer:
    kind = "base"

    def forward(self, x: np.ndarray, train: bool, padding: str) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray, need_input_grad: bool = True) -> np.ndarray | None:
        raise NotImplementedError

    def parameters(self) -> list[np.ndarray]:
        return []

    def gradients(self) -> list[np.ndarray]:
        return []


class Conv2d(Layer):
    kind = "conv"

    def __init__(self, weights: np.ndarray, bias: np.ndarray | None):
        self.weights = weights  # (O, C, k, k)
        self.bias = bias
        self.grad_weights = None
        self.grad_bias = None
        self._cache = None

    @property
    def kernel(self) -> int:
        return self.weights.shape[2]

    def forward(self, x, train, padding):
        out, cols = conv2d_nhwc(x, self.weights, self.bias, padding, keep_cols=train)
        if train:
            self._cache = (x, padding, cols)
        return out

    def backward(self, grad, need_input_grad=True):
        x, padding, cols = self._cache
        gw, gb = conv2d_backward_weights(
            x, grad, self.kernel, padding, self.bias is not None, cols_cache=cols
        )
        self.grad_weights = gw
        self.grad_bias = gb
        self._cache = None
        if not need_input_grad:
            return None
        return conv2d_backward_input(grad, self.weights, padding, x.shape)

    def parameters(self):
        return [self.weights] if self.bias is None else [self.weights, self.bias]

    def gradients(self):
        return [self.grad_weights] if self.bias is None else [self.grad_weights, self.grad_bias]


class ReLU(Layer):
    kind = "relu"

    def __init__(self):
        self._out = None

    def forward(self, x, train, padding):
        out = np.maximum(x, 0)
        if train:
            self._out = out
        return out

    def backward(self, grad, need_input_grad=True):
        grad = grad * (self._out > 0)
        self._out = None
        return grad


class BatchNorm(Layer):
    """Non-affine batch normalization over batch and spatial dims."""

    kind = "batchnorm"

    def __init__(self, channels: int, dtype=np.float32):
        self.channels = channels
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)
        self._cache = None

    def forward(self, x, train, padding):
        if train:
            n = x.shape[0] * x.shape[1] * x.shape[2]
            flat = x.reshape(n, x.shape[3])
            mean = flat.sum(axis=0, dtype=np.float64) / n
            sq = np.einsum("nc,nc->c", flat, flat)  # accumulates in x.dtype
            var = np.maximum(sq.astype(np.float64) / n - mean * mean, 0.0)
            inv_std = (1.0 / np.sqrt(var + BN_EPS)).astype(x.dtype)
            xhat = x - mean.astype(x.dtype)
            xhat *= inv_std
            self._cache = (xhat, inv_std)
            self.running_mean = (
                BN_MOMENTUM * self.running_mean + (1.0 - BN_MOMENTUM) * mean
            ).astype(self.running_mean.dtype)
            self.running_var = (
                BN_MOMENTUM * self.running_var + (1.0 - BN_MOMENTUM) * var
            ).astype(self.running_var.dtype)
            return xhat
        inv_std = 1.0 / np.sqrt(self.running_var.astype(x.dtype) + BN_EPS)
        return (x - self.running_mean.astype(x.dtype)) * inv_std

    def backward(self, grad, need_input_grad=True):
        xhat, inv_std = self._cache
        self._cache = None
        n = grad.shape[0] * grad.shape[1] * grad.shape[2]
        c = grad.shape[3]
        gflat = grad.reshape(n, c)
        xflat = xhat.reshape(n, c)
        sum_g = gflat.sum(axis=0, dtype=np.float64).astype(grad.dtype)
        sum_gx = np.einsum("nc,nc->c", gflat, xflat).astype(grad.dtype)
        # d/dx of (x - mu) / sqrt(var + eps) through the batch statistics
        out = grad - sum_g / np.asarray(n, dtype=grad.dtype)
        xhat *= sum_gx / np.asarray(n, dtype=grad.dtype)
        out -= xhat
        out *= inv_std
        return out


class MaxPool(Layer):
    kind = "maxpool"

    def __init__(self, kernel: int = 5):
        self.kernel = kernel
        self._cache = None

    def forward(self, x, train, padding):
        out, argmax = maxpool_nhwc(x, self.kernel, padding, want_argmax=train)
        if train:
            self._cache = (argmax, padding, x.shape)
        return out

    def backward(self, grad, need_input_grad=True):
        argmax, padding, in_shape = self._cache
        self._cache = None
        return maxpool_backward(grad, argmax, self.kernel, padding, in_shape)


class Sigmoid(Layer):
    kind = "sigmoid"

    def __init__(self):
        self._out = None

    def forward(self, x, train, padding):
        out = expit(x)
        if train:
            self._out = out
        return out

    def backward(self, grad, need_input_grad=True):
        out = grad * self._out * (1.0 - self._out)
        self._out = None
        return out
