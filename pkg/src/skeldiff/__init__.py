"""skeldiff: graph-convolutional latent diffusion for skeleton-motion
transition inpainting, on a small self-contained autodiff core."""

from ._threads import apply_thread_policy

apply_thread_policy()

from .config import RunConfig
from .graph import (PartitionedAdjacency, SkeletonGraph, default_skeleton,
                    load_skeleton)
from .kernels import BACKEND as KERNEL_BACKEND
from .masking import MaskSpec, interp_fill, interval_mask, random_mask
from .rng import Rng
from .tensor import Tensor, no_grad

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND", "MaskSpec", "PartitionedAdjacency", "Rng", "RunConfig",
    "SkeletonGraph", "Tensor", "default_skeleton", "interp_fill",
    "interval_mask", "load_skeleton", "no_grad", "random_mask",
    "__version__",
]
