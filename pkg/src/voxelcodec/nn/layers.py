"""Masked-convolution layers, activations, and the 2-channel softmax.

All tensors are float32 numpy arrays shaped (batch, channels, x, y, z).
Spatial padding is zero same-padding; see kernels.py for the pinned
accumulation recipe that makes forward passes bit-reproducible.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError, StateError
from .masks import causal_taps
from . import kernels

# Probability floor 2^-16: keeps arithmetic-coder intervals non-degenerate
# and bounds the loss; applied to softmax outputs before coding and loss.
PROB_FLOOR = np.float32(2.0 ** -16)
PROB_CEIL = np.float32(1.0 - 2.0 ** -16)


@dataclass
class ConvParams:
    """One masked conv layer: weights carry zeros at masked taps."""

    name: str
    kind: str           # 'A' or 'B'
    kernel: int
    w: np.ndarray       # (Cout, Cin, k, k, k) float32
    b: np.ndarray       # (Cout,) float32
    taps: np.ndarray    # (T, 3) int64, raster order

    @property
    def cin(self):
        return self.w.shape[1]

    @property
    def cout(self):
        return self.w.shape[0]


def init_conv(name, kind, kernel, cin, cout, rng):
    """Glorot-uniform init over unmasked taps only; masked taps stay 0."""
    taps = causal_taps(kernel, kind)
    t = taps.shape[0]
    w = np.zeros((cout, cin, kernel, kernel, kernel), dtype=np.float32)
    if t:
        limit = np.sqrt(6.0 / (cin * t + cout * t))
        vals = rng.uniform(-limit, limit, size=(cout, cin, t)).astype(np.float32)
        w[:, :, taps[:, 0], taps[:, 1], taps[:, 2]] = vals
    b = np.zeros(cout, dtype=np.float32)
    return ConvParams(name=name, kind=kind, kernel=kernel, w=w, b=b, taps=taps)


def _check_input(p, x):
    if x.ndim != 5:
        raise ShapeError(f"conv input must be 5-D, got {x.ndim}-D")
    if x.shape[1] != p.cin:
        raise ShapeError(f"layer {p.name}: expected {p.cin} input channels, "
                         f"got {x.shape[1]}")
    if x.dtype != np.float32:
        raise ShapeError("conv input must be float32")


def _pad_spatial(x, r):
    if r == 0:
        return np.ascontiguousarray(x)
    b, c, sx, sy, sz = x.shape
    xp = np.zeros((b, c, sx + 2 * r, sy + 2 * r, sz + 2 * r), dtype=np.float32)
    xp[:, :, r:r + sx, r:r + sy, r:r + sz] = x
    return xp


def conv_forward(p, x):
    """Same-padded masked convolution; returns (B, Cout, X, Y, Z) float32."""
    _check_input(p, x)
    r = p.kernel // 2
    xp = _pad_spatial(x, r)
    out = np.empty((x.shape[0], p.cout) + x.shape[2:], dtype=np.float32)
    kernels.conv3d_forward(xp, p.w, p.b, p.taps, out)
    return out


def conv_forward_region(p, x, out, region):
    """Recompute `out` only over `region` (half-open per-axis bounds).

    Runs a serial kernel directly on the unpadded buffers (batch size must
    be 1); every recomputed position gets the exact value a full
    conv_forward would produce, because positions never share
    accumulators and the per-position accumulation order is identical.
    """
    _check_input(p, x)
    if x.shape[0] != 1:
        raise ShapeError(f"layer {p.name}: region recompute needs batch size 1")
    (x0, x1), (y0, y1), (z0, z1) = region
    if x0 >= x1 or y0 >= y1 or z0 >= z1:
        return
    kernels.conv3d_region(x[0], p.w, p.b, p.taps, out[0],
                          x0, x1, y0, y1, z0, z1)


def conv_backward(p, x, grad_out):
    """Gradients (grad_input, grad_weights, grad_bias); masked taps get 0."""
    if x is None:
        raise StateError(f"layer {p.name}: no cached input for backward")
    _check_input(p, x)
    if grad_out.shape[1] != p.cout:
        raise ShapeError(f"layer {p.name}: grad_out channel mismatch")
    r = p.kernel // 2
    xp = _pad_spatial(x, r)
    gp = _pad_spatial(np.ascontiguousarray(grad_out), r)
    gi = np.empty_like(x)
    kernels.conv3d_backward_input(gp, p.w, p.taps, gi)
    gw = np.zeros_like(p.w)
    kernels.conv3d_backward_weight(xp, np.ascontiguousarray(grad_out), p.taps, gw)
    gb = grad_out.astype(np.float64).sum(axis=(0, 2, 3, 4)).astype(np.float32)
    return gi, gw, gb


def relu(x):
    return np.maximum(x, np.float32(0.0))


def softmax2_p1(logits):
    """Occupied-probability from 2-channel logits (channel 0 = empty).

    Computed as a numerically stable sigmoid of (l1 - l0) in float64 —
    algebraically identical to the 2-way softmax — then floored into
    [2^-16, 1 - 2^-16] in float32.
    """
    if logits.shape[1] != 2:
        raise ShapeError("softmax2 expects exactly 2 channels")
    d = logits[:, 1].astype(np.float64) - logits[:, 0].astype(np.float64)
    e = np.exp(-np.abs(d))
    p = np.where(d >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return np.clip(p.astype(np.float32), PROB_FLOOR, PROB_CEIL)


def stack_probs(p1):
    """(p0, p1) channel pair from the occupied probability; p0+p1 == 1.

    1 - p1 is exact in float32 for p1 >= 0.5 and rounds to a value whose
    float32 sum with p1 is exactly 1.0 otherwise.
    """
    axis = 1 if p1.ndim == 4 else 0
    return np.stack([np.float32(1.0) - p1, p1], axis=axis)


def cross_entropy_bits(probs, target):
    """Mean -log2 p_hat(v_i) over all voxels.

    probs is (B, 2, X, Y, Z) (or unbatched (2, X, Y, Z)); target is a
    matching uint8/bool occupancy array. Zero probabilities never raise:
    values are floored at 2^-16 first.
    """
    if probs.ndim == 4:
        probs = probs[None]
        target = np.asarray(target)[None]
    if probs.ndim != 5 or probs.shape[1] != 2:
        raise ShapeError("probs must be (B, 2, X, Y, Z)")
    tgt = np.asarray(target).astype(bool)
    if tgt.shape != probs.shape[:1] + probs.shape[2:]:
        raise ShapeError("target spatial shape must match probs")
    p_t = np.where(tgt, probs[:, 1], probs[:, 0]).astype(np.float64)
    p_t = np.maximum(p_t, np.float64(PROB_FLOOR))
    return float(-np.log(p_t).mean() / np.log(2.0))
