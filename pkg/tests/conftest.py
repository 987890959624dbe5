"""Shared fixtures: deterministic RNGs and session-scoped trained models.

The trained fixtures are deliberately small (few filters, no or one
residual block, kernel 3) so the whole suite stays desk-scale; model
quality only matters for the rate-oriented tests, and those train to
saturation on narrow synthetic corpora.
"""

import numpy as np
import pytest
from hypothesis import settings

from voxelcodec.occupancy_model import ModelConfig, OccupancyModel, train_model
from voxelcodec.partitioner import ModelSet

settings.register_profile("suite", deadline=None, max_examples=25)
settings.load_profile("suite")


def light_config(block_size, **kw):
    """Small, fast architecture used throughout the tests."""
    base = dict(filters=4, first_kernel=5, residual_kernel=3,
                residual_blocks=1)
    base.update(kw)
    return ModelConfig(block_size=block_size, **base)


def flat_config(block_size, **kw):
    """Cheapest viable architecture: kernel-3 first layer, no residuals."""
    base = dict(filters=4, first_kernel=3, residual_kernel=3,
                residual_blocks=0)
    base.update(kw)
    return ModelConfig(block_size=block_size, **base)


def line_blocks(side, count, max_lines, seed):
    """Blocks containing 1..max_lines full-length axis-z lines."""
    out = []
    rng = np.random.default_rng(seed)
    for _ in range(count):
        k = int(rng.integers(1, max_lines + 1))
        dense = np.zeros((side, side, side), dtype=np.uint8)
        for _ in range(k):
            x, y = rng.integers(0, side, 2)
            dense[x, y, :] = 1
        out.append(dense)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def models_light():
    """Untrained {8, 16} models; enough for every losslessness test."""
    return ModelSet({
        8: OccupancyModel(light_config(8), seed=8),
        16: OccupancyModel(flat_config(16), seed=16),
    })


@pytest.fixture(scope="session")
def line_models():
    """{32, 64} models trained to saturation on full-length z-lines.

    Used by the context-extension and partitioning-audit tests: the
    64-model codes whole blocks and serves as the enlarged-context
    predictor for 32-leaves.
    """
    m32, h32 = train_model(flat_config(32), line_blocks(32, 80, 3, seed=32),
                           seed=1, epochs=40, lr=0.05, batch_size=4)
    m64, h64 = train_model(flat_config(64, filters=2),
                           line_blocks(64, 32, 3, seed=64),
                           seed=1, epochs=40, lr=0.05, batch_size=2)
    assert h32[-1] < 0.05, "32-model failed to saturate"
    assert h64[-1] < 0.05, "64-model failed to saturate"
    return ModelSet({32: m32, 64: m64})
