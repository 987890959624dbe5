"""End-to-end cloud compression: exact roundtrips through the full
stack (octree + partitioner + container), model registry checks, and
rate accounting on real streams."""

import numpy as np
import pytest

from voxelcodec import container
from voxelcodec.codec import (
    check_models,
    decode_cloud,
    encode_cloud,
    load_models,
    rate_report,
)
from voxelcodec.errors import (
    EmptyCloudError,
    IncompatibleWeightsError,
    MissingModelError,
)
from voxelcodec.geometry import make_point_cloud
from voxelcodec.occupancy_model import OccupancyModel
from voxelcodec.partitioner import ModelSet
from voxelcodec.synthetic import lines_cloud, noise_blocks_cloud

from conftest import flat_config


def _assert_same_cloud(a, b):
    assert a.depth == b.depth
    assert np.array_equal(a.coords, b.coords)


def test_roundtrip_noise_cloud(models_light):
    pc = noise_blocks_cloud(depth=7, density_percent=0.05, num_blocks=3,
                            seed=21)
    stream, results = encode_cloud(pc, models_light, max_level=5)
    out = decode_cloud(stream, models_light)
    _assert_same_cloud(pc, out)
    assert sum(len(r.leaves) for r in results) > 0


def test_roundtrip_lines_cloud_extension(line_models):
    pc = lines_cloud(depth=7, num_lines=5, axis=2, seed=22)
    stream, _ = encode_cloud(pc, line_models, max_level=2,
                             use_extension=True)
    out = decode_cloud(stream, line_models)
    _assert_same_cloud(pc, out)


def test_roundtrip_single_model(line_models):
    pc = lines_cloud(depth=7, num_lines=4, axis=2, seed=23)
    stream, _ = encode_cloud(pc, line_models, max_level=2,
                             single_model=True)
    parsed = container.parse(stream)
    assert parsed.single_model is True
    assert set(parsed.model_hashes) == {64}
    out = decode_cloud(stream, line_models)
    _assert_same_cloud(pc, out)


def test_header_carries_only_used_models(models_light):
    pc = noise_blocks_cloud(depth=7, density_percent=0.03, num_blocks=2,
                            seed=24)
    stream, _ = encode_cloud(pc, models_light, max_level=5)
    parsed = container.parse(stream)
    assert set(parsed.model_hashes) <= {8, 16}
    for size, h in parsed.model_hashes.items():
        assert h == models_light.require(size).architecture_hash


def test_encode_rejects_empty_cloud(models_light):
    pc = make_point_cloud(np.zeros((0, 3), dtype=np.int64), depth=8)
    with pytest.raises(EmptyCloudError):
        encode_cloud(pc, models_light)


def test_decode_requires_every_stream_model(models_light):
    pc = noise_blocks_cloud(depth=7, density_percent=0.03, num_blocks=1,
                            seed=25)
    stream, _ = encode_cloud(pc, models_light, max_level=5)
    used = set(container.parse(stream).model_hashes)
    partial = ModelSet({s: models_light.require(s)
                        for s in models_light.sizes() if s not in used})
    with pytest.raises(MissingModelError):
        decode_cloud(stream, partial)


def test_decode_rejects_wrong_architecture(models_light):
    pc = noise_blocks_cloud(depth=7, density_percent=0.03, num_blocks=1,
                            seed=26)
    stream, _ = encode_cloud(pc, models_light, max_level=5)
    used = sorted(container.parse(stream).model_hashes)
    swapped = {s: models_light.require(s) for s in models_light.sizes()}
    size = used[0]
    swapped[size] = OccupancyModel(flat_config(size, filters=2), seed=1)
    with pytest.raises(IncompatibleWeightsError, match="hash mismatch"):
        decode_cloud(stream, ModelSet(swapped))


def test_check_models_passes_on_match(models_light):
    pc = noise_blocks_cloud(depth=7, density_percent=0.03, num_blocks=1,
                            seed=27)
    stream, _ = encode_cloud(pc, models_light, max_level=5)
    check_models(container.parse(stream), models_light)


def test_load_models_roundtrip(tmp_path, models_light):
    paths = {}
    for size in models_light.sizes():
        p = str(tmp_path / f"m{size}.bin")
        models_light.require(size).save(p)
        paths[size] = p
    loaded = load_models(paths)
    for size in models_light.sizes():
        assert (loaded.require(size).architecture_hash
                == models_light.require(size).architecture_hash)


def test_rate_report_on_real_stream(models_light):
    pc = noise_blocks_cloud(depth=7, density_percent=0.05, num_blocks=2,
                            seed=28)
    stream, results = encode_cloud(pc, models_light, max_level=5)
    report = rate_report(stream, pc)
    assert report.identity_holds()
    assert report.total_bits == 8 * len(stream)
    assert report.occupied_voxels == pc.num_points
    assert report.bpov == pytest.approx(8 * len(stream) / pc.num_points)
    # the coded payload bits must match the partitioner's own ledger
    payload_bits = 8 * sum(len(p) for r in results for p in r.payloads)
    assert report.payload_bits == payload_bits


def test_deterministic_stream_bytes(models_light):
    pc = noise_blocks_cloud(depth=7, density_percent=0.04, num_blocks=2,
                            seed=29)
    s1, _ = encode_cloud(pc, models_light, max_level=5)
    s2, _ = encode_cloud(pc, models_light, max_level=5)
    assert s1 == s2
