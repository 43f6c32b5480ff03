import ctypes as _ctypes


def _tune_malloc() -> None:
    # Training recycles multi-hundred-MB buffers every iteration; glibc
    # returns them via munmap by default, so each reuse re-faults every
    # page. Raising the mmap/trim thresholds keeps them on the heap.
    try:
        libc = _ctypes.CDLL("libc.so.6")
        libc.mallopt(-3, 1 << 30)  # M_MMAP_THRESHOLD
        libc.mallopt(-1, 1 << 30)  # M_TRIM_THRESHOLD
    except Exception:
        pass


_tune_malloc()

from .layers import BN_EPS, BN_MOMENTUM, BatchNorm, Conv2d, MaxPool, ReLU, Sigmoid
from .model import (
    FcnModel,
    LayerSpec,
    ShapeError,
    conv2d,
    forward,
    load_checkpoint,
    param_count,
    save_checkpoint,
)
from .optim import AdamState, adam_step
from .train import BCE_EPS, NumericError, backward_and_step, bce_grad, bce_loss

__all__ = [
    "AdamState",
    "BCE_EPS",
    "BN_EPS",
    "BN_MOMENTUM",
    "BatchNorm",
    "Conv2d",
    "FcnModel",
    "LayerSpec",
    "MaxPool",
    "NumericError",
    "ReLU",
    "ShapeError",
    "Sigmoid",
    "adam_step",
    "backward_and_step",
    "bce_grad",
    "bce_loss",
    "conv2d",
    "forward",
    "load_checkpoint",
    "param_count",
    "save_checkpoint",
]
