"""Lossless geometry codec for voxelized point clouds.

A masked 3-D convolutional model predicts voxel-occupancy probabilities
in raster order; a binary arithmetic coder turns them into a compact
bitstream; a rate-driven partitioner picks the block sizes to code.
"""

__version__ = "0.1.0"

from .codec import decode_cloud, encode_cloud, load_models, rate_report
from .config import CodecConfig, load_config
from .geometry import PointCloud, local_density, make_point_cloud, voxelize
from .occupancy_model import ModelConfig, OccupancyModel, train_model
from .partitioner import ModelSet
from .ply_io import read_ply, write_ply
from .errors import (
    ConfigError,
    CorruptStreamError,
    EmptyCloudError,
    IncompatibleWeightsError,
    MissingModelError,
    ParameterError,
    PlyParseError,
    ShapeError,
    StateError,
    UnsupportedDepthError,
    UnsupportedFormatError,
    VoxelCodecError,
)

__all__ = [
    "__version__",
    "CodecConfig",
    "ModelConfig",
    "ModelSet",
    "OccupancyModel",
    "PointCloud",
    "decode_cloud",
    "encode_cloud",
    "load_config",
    "load_models",
    "local_density",
    "make_point_cloud",
    "rate_report",
    "read_ply",
    "train_model",
    "voxelize",
    "write_ply",
    "ConfigError",
    "CorruptStreamError",
    "EmptyCloudError",
    "IncompatibleWeightsError",
    "MissingModelError",
    "ParameterError",
    "PlyParseError",
    "ShapeError",
    "StateError",
    "UnsupportedDepthError",
    "UnsupportedFormatError",
    "VoxelCodecError",
]
