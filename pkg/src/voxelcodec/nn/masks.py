"""Causal kernel masks for autoregressive 3D convolutions.

Kernel positions are ordered by the same raster convention as voxels
(kx slowest, kz fastest). A type-A mask keeps only positions strictly
before the kernel center in that order; type B additionally keeps the
center. Type A appears only in a network's first layer, which makes the
whole stack's output at raster index i a function of inputs < i.
"""

import numpy as np

from ..errors import ParameterError


def causal_taps(kernel, kind):
    """Unmasked tap coordinates, shape (T, 3) int64, in raster order."""
    if kind not in ("A", "B"):
        raise ParameterError(f"mask kind must be 'A' or 'B', got {kind!r}")
    if kernel < 1 or kernel % 2 == 0:
        raise ParameterError(f"kernel must be odd and positive, got {kernel}")
    if kernel == 1 and kind == "A":
        raise ParameterError("a type-A mask over a 1-kernel has no taps")
    center = (kernel // 2) * (kernel * kernel + kernel + 1)
    limit = center + 1 if kind == "B" else center
    flat = np.arange(limit, dtype=np.int64)
    taps = np.stack([flat // (kernel * kernel),
                     (flat // kernel) % kernel,
                     flat % kernel], axis=1)
    return taps


def mask_array(kernel, kind):
    """Dense 0/1 float32 mask cube for inspection and tests."""
    mask = np.zeros((kernel, kernel, kernel), dtype=np.float32)
    taps = causal_taps(kernel, kind)
    mask[taps[:, 0], taps[:, 1], taps[:, 2]] = 1.0
    return mask
