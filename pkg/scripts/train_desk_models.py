#!/usr/bin/env python3
"""Train the four desk-scale occupancy models (block sizes 8..64).

Reads training blocks from DATADIR/blocks{8,16,32,64} (as written by
make_synthetic_dataset.py) and saves weights plus a training sidecar to
OUTDIR/m{8,16,32,64}.vxdw[.txt].

The configurations are deliberately small so a full run finishes in a
few minutes on a laptop; `--quick` halves the epoch counts.  Learning
rates are conservative: on mixed-structure corpora, aggressive rates
can settle into the constant-marginal-probability optimum.
"""

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from voxelcodec.geometry import points_to_dense
from voxelcodec.occupancy_model import (
    ModelConfig,
    dataset_digest,
    train_model,
    write_training_sidecar,
)
from voxelcodec.ply_io import read_ply

log = logging.getLogger("train_desk_models")

# block size -> (architecture, epochs, learning rate, batch size)
RECIPES = {
    8: (dict(filters=4, first_kernel=5, residual_kernel=3,
             residual_blocks=1), 60, 0.005, 16),
    16: (dict(filters=4, first_kernel=3, residual_kernel=3,
              residual_blocks=0), 100, 0.005, 16),
    32: (dict(filters=4, first_kernel=3, residual_kernel=3,
              residual_blocks=0), 60, 0.005, 4),
    64: (dict(filters=2, first_kernel=3, residual_kernel=3,
              residual_blocks=0), 40, 0.005, 2),
}


def load_blocks(blocks_dir, side):
    files = sorted(Path(blocks_dir).glob("*.ply"))
    if not files:
        raise SystemExit(f"no .ply training blocks in {blocks_dir}")
    return [points_to_dense(read_ply(str(f)).astype(np.int64), side)
            for f in files]


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("datadir")
    parser.add_argument("outdir")
    parser.add_argument("--sizes", type=int, nargs="+",
                        default=[8, 16, 32, 64])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--quick", action="store_true",
                        help="half the epochs, for smoke runs")
    args = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")

    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for side in args.sizes:
        if side not in RECIPES:
            raise SystemExit(f"no training recipe for block size {side}")
        arch, epochs, lr, batch = RECIPES[side]
        if args.quick:
            epochs = max(1, epochs // 2)
        blocks = load_blocks(Path(args.datadir) / f"blocks{side}", side)
        config = ModelConfig(block_size=side, **arch)
        log.info("training d=%d on %d blocks (epochs=%d, lr=%g, batch=%d)",
                 side, len(blocks), epochs, lr, batch)
        t0 = time.perf_counter()

        def progress(epoch, loss):
            if (epoch + 1) % 10 == 0 or epoch == 0:
                log.info("  d=%d epoch %d/%d: %.4f bits/voxel",
                         side, epoch + 1, epochs, loss)

        model, history = train_model(config, blocks, seed=args.seed,
                                     epochs=epochs, lr=lr, batch_size=batch,
                                     progress=progress)
        path = out / f"m{side}.vxdw"
        model.save(str(path))
        write_training_sidecar(str(path) + ".txt", config, args.seed,
                               epochs, lr, dataset_digest(blocks), history)
        log.info("saved %s (final loss %.4f bits/voxel, %.0fs)",
                 path, history[-1], time.perf_counter() - t0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
