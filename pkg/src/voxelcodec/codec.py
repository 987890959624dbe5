"""End-to-end encode/decode entry points.

The coded stream carries: the high-level octree down to 64-blocks
(raw bytes, one per internal node), the 2-bit partitioning flags, the
2-bit context-size selections (when extension is enabled), and one
arithmetic-coded payload per coded leaf. Model weights travel
out-of-band; the header pins the architecture of every model size the
stream needs via a 64-bit hash, checked again at decode time.
"""

import numpy as np

from . import container
from .errors import EmptyCloudError, IncompatibleWeightsError, MissingModelError
from .geometry import PointCloud, make_point_cloud, dense_to_points
from .occupancy_model import OccupancyModel
from .octree import (
    build_high_octree,
    deserialize_high_octree,
    octree_block_origins,
    serialize_high_octree,
)
from .partitioner import CloudDecoder, CloudEncoder, ModelSet, pack_side_info


def load_models(paths):
    """paths: dict block size -> weights file path. Returns a ModelSet."""
    models = {}
    for size, path in paths.items():
        model = OccupancyModel.load(path)
        models[int(size)] = model
    return ModelSet(models)


def encode_cloud(pc, models, max_level=5, use_extension=False,
                 single_model=False, probe=None):
    """Compress a voxelized cloud; returns (stream bytes, BlockResults)."""
    if pc.num_points == 0:
        raise EmptyCloudError("cannot encode an empty cloud")
    if not isinstance(models, ModelSet):
        models = ModelSet(models)
    tree, grid = build_high_octree(pc)
    encoder = CloudEncoder(models, max_level=max_level,
                           use_extension=use_extension,
                           single_model=single_model, probe=probe)
    blocks = [(tuple(int(c) for c in o), d)
              for o, d in zip(grid.origins, grid.blocks)]
    results = encoder.encode_blocks(blocks, pc.depth)
    flag_bytes, flag_bits, mode_bytes, mode_bits, payloads = \
        pack_side_info(results)
    hashes = {size: models.require(size).architecture_hash
              for size in sorted(encoder.used_model_sizes)}
    stream = container.assemble(
        depth=pc.depth, max_level=max_level, use_extension=use_extension,
        single_model=single_model, model_hashes=hashes,
        octree=serialize_high_octree(tree), flag_bytes=flag_bytes,
        flag_bits=flag_bits, mode_bytes=mode_bytes, mode_bits=mode_bits,
        payloads=payloads)
    return stream, results


def check_models(parsed, models):
    """Verify the provided models cover and hash-match the stream header."""
    for size, expected in sorted(parsed.model_hashes.items()):
        model = models.get(size)
        if model is None:
            raise MissingModelError(
                f"stream requires a model for block size {size}")
        got = model.architecture_hash
        if got != expected:
            raise IncompatibleWeightsError(
                f"architecture hash mismatch for block size {size}: "
                f"stream expects {expected:016x}, weights give {got:016x}")


def decode_cloud(data, models, probe=None):
    """Decompress a stream; returns the exact voxelized PointCloud."""
    if not isinstance(models, ModelSet):
        models = ModelSet(models)
    parsed = container.parse(data)
    check_models(parsed, models)
    tree = deserialize_high_octree(parsed.octree, parsed.depth)
    origins = [tuple(int(c) for c in o) for o in octree_block_origins(tree)]
    decoder = CloudDecoder(models, depth=parsed.depth,
                           max_level=parsed.max_level,
                           use_extension=parsed.use_extension,
                           single_model=parsed.single_model, probe=probe)
    decoded = decoder.decode_blocks(origins, parsed.flag_bytes,
                                    parsed.flag_bits, parsed.mode_bytes,
                                    parsed.mode_bits, parsed.payloads)
    chunks = []
    for origin in sorted(decoded):
        pts = dense_to_points(decoded[origin])
        if pts.shape[0]:
            chunks.append(pts + np.asarray(origin, dtype=np.int64))
    if not chunks:
        raise EmptyCloudError("decoded stream contains no voxels")
    return make_point_cloud(np.vstack(chunks), parsed.depth)


def rate_report(stream, pc):
    """Exact bit accounting of a stream against its source cloud."""
    return container.bpov_report(stream, pc.num_points)
