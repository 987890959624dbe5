#!/usr/bin/env python3
"""End-to-end demo: synthesize, train, compress, decompress, verify.

Walks the whole pipeline in one run:

  1. synthesize a cloud of full-extent z-lines at depth 7 (lines cross
     the 64-block border, so cross-block context has something to win);
  2. train small 32- and 64-models on line blocks (or load weights from
     --models DIR, as written by train_desk_models.py);
  3. encode with the partitioning search, with and without the
     cross-block context extension, and print both rate breakdowns;
  4. decode and verify the voxel set is recovered exactly.

Writes input.ply, stream.bin, and decoded.ply into --workdir.
"""

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from voxelcodec.codec import decode_cloud, encode_cloud, load_models, rate_report
from voxelcodec.occupancy_model import ModelConfig, train_model
from voxelcodec.partitioner import ModelSet
from voxelcodec.ply_io import write_ply
from voxelcodec.synthetic import lines_cloud

log = logging.getLogger("demo_roundtrip")


def line_blocks(side, count, max_lines, seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        dense = np.zeros((side, side, side), dtype=np.uint8)
        for _ in range(int(rng.integers(1, max_lines + 1))):
            x, y = rng.integers(0, side, 2)
            dense[x, y, :] = 1
        out.append(dense)
    return out


def train_line_models():
    """Two small flat models trained to saturation on z-line blocks.

    Seeds are pinned: how much the context extension saves depends on
    the relative quality of the trained pair (the enlarged context only
    pays off when the bigger model prices the leaf's voxels at least as
    well as the leaf-sized model does), and this pair demonstrably
    does well."""
    flat = dict(first_kernel=3, residual_kernel=3, residual_blocks=0)
    log.info("training the 32-model on 80 line blocks ...")
    m32, h32 = train_model(ModelConfig(block_size=32, filters=4, **flat),
                           line_blocks(32, 80, 3, seed=32), seed=1,
                           epochs=40, lr=0.05, batch_size=4)
    log.info("  final loss %.4f bits/voxel", h32[-1])
    log.info("training the 64-model on 32 line blocks ...")
    m64, h64 = train_model(ModelConfig(block_size=64, filters=2, **flat),
                           line_blocks(64, 32, 3, seed=64), seed=1,
                           epochs=40, lr=0.05, batch_size=2)
    log.info("  final loss %.4f bits/voxel", h64[-1])
    return ModelSet({32: m32, 64: m64})


def describe(tag, stream, pc, seconds):
    report = rate_report(stream, pc)
    log.info("%s: %d bytes, %.4f bits/voxel (side info %.1f%%), %.1fs",
             tag, len(stream), report.bpov,
             100.0 * report.side_info_share, seconds)
    return report


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--workdir", default="demo_out")
    parser.add_argument("--models", default=None,
                        help="directory with m32.vxdw/m64.vxdw; "
                             "omit to train fresh ones (~2 min)")
    parser.add_argument("--lines", type=int, default=12)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")

    work = Path(args.workdir)
    work.mkdir(parents=True, exist_ok=True)

    pc = lines_cloud(7, args.lines, axis=2, seed=args.seed)
    write_ply(str(work / "input.ply"), pc.coords.astype(np.float64))
    log.info("input: %d voxels at depth %d (%d z-lines)",
             pc.num_points, pc.depth, args.lines)

    if args.models:
        base = Path(args.models)
        models = load_models({32: str(base / "m32.vxdw"),
                              64: str(base / "m64.vxdw")})
        log.info("loaded models from %s", base)
    else:
        models = train_line_models()

    t0 = time.perf_counter()
    plain, _ = encode_cloud(pc, models, max_level=2, use_extension=False)
    describe("without context extension", plain, pc,
             time.perf_counter() - t0)

    t0 = time.perf_counter()
    stream, _ = encode_cloud(pc, models, max_level=2, use_extension=True)
    report = describe("with context extension", stream, pc,
                      time.perf_counter() - t0)
    log.info("extension saves %.1f%% of the stream",
             100.0 * (1.0 - len(stream) / len(plain)))
    (work / "stream.bin").write_bytes(stream)

    t0 = time.perf_counter()
    decoded = decode_cloud(stream, models)
    log.info("decoded %d voxels in %.1fs", decoded.num_points,
             time.perf_counter() - t0)
    write_ply(str(work / "decoded.ply"), decoded.coords.astype(np.float64))

    if np.array_equal(decoded.coords, pc.coords):
        log.info("round-trip exact: decoded voxel set matches the input")
        print(f"OK {pc.num_points} voxels, {len(stream)} bytes, "
              f"{report.bpov:.4f} bits/voxel")
        return 0
    log.error("round-trip mismatch!")
    return 1


if __name__ == "__main__":
    sys.exit(main())
