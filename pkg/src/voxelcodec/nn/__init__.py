"""Minimal deterministic neural-net stack for the occupancy model."""

from .masks import causal_taps, mask_array
from .layers import (
    PROB_FLOOR,
    PROB_CEIL,
    ConvParams,
    conv_backward,
    conv_forward,
    conv_forward_region,
    cross_entropy_bits,
    init_conv,
    relu,
    softmax2_p1,
    stack_probs,
)
from .optim import Adam
from .weights_io import (
    architecture_hash,
    check_shapes,
    load_weights,
    save_weights,
)

__all__ = [
    "PROB_FLOOR",
    "PROB_CEIL",
    "ConvParams",
    "Adam",
    "architecture_hash",
    "causal_taps",
    "check_shapes",
    "conv_backward",
    "conv_forward",
    "conv_forward_region",
    "cross_entropy_bits",
    "init_conv",
    "load_weights",
    "mask_array",
    "relu",
    "softmax2_p1",
    "stack_probs",
    "save_weights",
]
