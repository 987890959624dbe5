"""Command-line front end: dataset prep, training, coding, evaluation.

Logs go to stderr; command output (rate breakdowns, CSV tables) goes to
stdout. Every command is deterministic given its flags and seed, and
the process exits 0 exactly when no error occurred.
"""

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import codec
from .config import CodecConfig, config_from_values, load_config
from .errors import ConfigError, ParameterError, VoxelCodecError
from .geometry import (
    augment_block,
    make_point_cloud,
    points_to_dense,
    voxelize,
)
from .occupancy_model import (
    DEFAULT_EPOCHS,
    DEFAULT_LR,
    ModelConfig,
    dataset_digest,
    train_model,
    write_training_sidecar,
)
from .ply_io import read_ply, write_ply

log = logging.getLogger("voxelcodec")


def _read_voxelized(path, depth):
    """Load a PLY whose coordinates must already be grid integers."""
    pts = read_ply(path)
    if pts.shape[0] == 0:
        raise ParameterError(f"{path}: empty point cloud")
    rounded = np.floor(pts + 0.5)
    if not np.array_equal(rounded, pts):
        raise ParameterError(
            f"{path}: coordinates are not integers; run `voxelize` first")
    coords = rounded.astype(np.int64)
    if coords.min() < 0 or coords.max() >= (1 << depth):
        raise ParameterError(
            f"{path}: coordinates outside [0, 2^{depth}); voxelize to the "
            f"configured depth first")
    return make_point_cloud(coords, depth)


def _config_from_args(args):
    """File config (if any) overridden by explicit CLI flags."""
    cfg = load_config(args.config) if args.config else CodecConfig()
    if getattr(args, "depth", None) is not None:
        cfg.depth = args.depth
    if getattr(args, "max_level", None) is not None:
        cfg.max_level = args.max_level
    if getattr(args, "extension", None) is not None:
        cfg.use_extension = args.extension
    if getattr(args, "single_model", None) is not None:
        cfg.single_model = args.single_model
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    for spec in getattr(args, "model", None) or []:
        if "=" not in spec:
            raise ConfigError(f"--model expects SIZE=PATH, got {spec!r}")
        size_txt, path = spec.split("=", 1)
        try:
            size = int(size_txt)
        except ValueError:
            raise ConfigError(f"--model: bad block size {size_txt!r}")
        cfg.model_paths[size] = path
    return cfg.validate()


def _print_rate(report, stream_len):
    print(f"stream_bytes {stream_len}")
    print(f"occupied_voxels {report.occupied_voxels}")
    print(f"bpov {report.bpov:.6f}")
    print(f"bits.structural {report.structural_bits}")
    print(f"bits.octree {report.octree_bits}")
    print(f"bits.flags {report.flag_bits}")
    print(f"bits.modes {report.mode_bits}")
    print(f"bits.payloads {report.payload_bits}")
    print(f"side_info_share {report.side_info_share:.4f}")


def cmd_voxelize(args):
    pts = read_ply(args.input)
    pc = voxelize(pts, args.depth)
    write_ply(args.output, pc.coords.astype(np.float64))
    log.info("voxelized %s: %d points -> %d voxels at depth %d",
             args.input, pts.shape[0], pc.num_points, args.depth)
    return 0


def cmd_augment(args):
    in_dir = Path(args.input_dir)
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = sorted(in_dir.glob("*.ply"))
    if not files:
        raise ParameterError(f"no .ply files in {in_dir}")
    total = 0
    for f in files:
        pts = read_ply(str(f)).astype(np.int64)
        variants = augment_block(pts, args.side, seed=args.seed)
        for k, var in enumerate(variants):
            out = out_dir / f"{f.stem}_v{k:02d}.ply"
            write_ply(str(out), var.astype(np.float64))
            total += 1
    log.info("augmented %d blocks -> %d variants in %s",
             len(files), total, out_dir)
    return 0


def cmd_train(args):
    in_dir = Path(args.blocks_dir)
    files = sorted(in_dir.glob("*.ply"))
    if not files:
        raise ParameterError(f"no .ply files in {in_dir}")
    d = args.block_size
    blocks = []
    for f in files:
        pts = read_ply(str(f)).astype(np.int64)
        blocks.append(points_to_dense(pts, d))
    config = ModelConfig(block_size=d, filters=args.filters,
                         first_kernel=args.first_kernel,
                         residual_kernel=args.residual_kernel,
                         residual_blocks=args.residual_blocks)
    log.info("training d=%d on %d blocks (filters=%d, epochs=%d, lr=%g)",
             d, len(blocks), args.filters, args.epochs, args.lr)

    def progress(epoch, loss):
        log.info("epoch %d/%d: %.4f bits/voxel", epoch + 1, args.epochs, loss)

    model, history = train_model(config, blocks, seed=args.seed,
                                 epochs=args.epochs, lr=args.lr,
                                 batch_size=args.batch, progress=progress)
    model.save(args.output)
    write_training_sidecar(args.output + ".txt", config, args.seed,
                           args.epochs, args.lr, dataset_digest(blocks),
                           history)
    log.info("saved weights to %s", args.output)
    return 0


def cmd_encode(args):
    cfg = _config_from_args(args)
    if not cfg.model_paths:
        raise ConfigError("no models configured (use model.<size> keys "
                          "or --model SIZE=PATH)")
    pc = _read_voxelized(args.input, cfg.depth)
    models = codec.load_models(cfg.model_paths)
    stream, _ = codec.encode_cloud(pc, models, max_level=cfg.max_level,
                                   use_extension=cfg.use_extension,
                                   single_model=cfg.single_model)
    with open(args.output, "wb") as f:
        f.write(stream)
    report = codec.rate_report(stream, pc)
    _print_rate(report, len(stream))
    log.info("encoded %s (%d voxels) -> %s (%d bytes)",
             args.input, pc.num_points, args.output, len(stream))
    return 0


def cmd_decode(args):
    cfg = _config_from_args(args)
    if not cfg.model_paths:
        raise ConfigError("no models configured (use model.<size> keys "
                          "or --model SIZE=PATH)")
    with open(args.input, "rb") as f:
        stream = f.read()
    models = codec.load_models(cfg.model_paths)
    pc = codec.decode_cloud(stream, models)
    write_ply(args.output, pc.coords.astype(np.float64))
    log.info("decoded %s -> %s (%d voxels)",
             args.input, args.output, pc.num_points)
    return 0


def cmd_eval(args):
    cfg = _config_from_args(args)
    if not cfg.model_paths:
        raise ConfigError("no models configured")
    models = codec.load_models(cfg.model_paths)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["cloud", "voxels", "stream_bytes", "bpov",
                     "side_info_share"])
    rates = []
    for path in args.clouds:
        pc = _read_voxelized(path, cfg.depth)
        stream, _ = codec.encode_cloud(pc, models, max_level=cfg.max_level,
                                       use_extension=cfg.use_extension,
                                       single_model=cfg.single_model)
        if args.verify:
            back = codec.decode_cloud(stream, models)
            if not np.array_equal(back.coords, pc.coords):
                raise VoxelCodecError(f"{path}: decode mismatch")
        report = codec.rate_report(stream, pc)
        rates.append(report.bpov)
        writer.writerow([path, pc.num_points, len(stream),
                         f"{report.bpov:.6f}",
                         f"{report.side_info_share:.4f}"])
    if rates:
        writer.writerow(["average", "", "", f"{np.mean(rates):.6f}", ""])
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="voxelcodec",
        description="Lossless learned geometry codec for voxelized "
                    "point clouds")
    p.add_argument("--threads", type=int, default=None,
                   help="numba thread count")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("voxelize", help="quantize a PLY onto a 2^n grid")
    sp.add_argument("input")
    sp.add_argument("output")
    sp.add_argument("--depth", type=int, required=True)
    sp.set_defaults(func=cmd_voxelize)

    sp = sub.add_parser("augment", help="rotation/sampling block variants")
    sp.add_argument("input_dir")
    sp.add_argument("output_dir")
    sp.add_argument("--side", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_augment)

    sp = sub.add_parser("train", help="train an occupancy model")
    sp.add_argument("blocks_dir")
    sp.add_argument("output")
    sp.add_argument("--block-size", type=int, required=True)
    sp.add_argument("--filters", type=int, default=64)
    sp.add_argument("--first-kernel", dest="first_kernel", type=int,
                    default=7)
    sp.add_argument("--residual-kernel", dest="residual_kernel", type=int,
                    default=5)
    sp.add_argument("--residual-blocks", dest="residual_blocks", type=int,
                    default=2)
    sp.add_argument("--epochs", type=int, default=DEFAULT_EPOCHS)
    sp.add_argument("--lr", type=float, default=DEFAULT_LR)
    sp.add_argument("--batch", type=int, default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_train)

    def add_codec_flags(sp):
        sp.add_argument("--config", default=None)
        sp.add_argument("--depth", type=int, default=None)
        sp.add_argument("--max-level", dest="max_level", type=int,
                        default=None)
        sp.add_argument("--extension", dest="extension",
                        action="store_true", default=None)
        sp.add_argument("--single-model", dest="single_model",
                        action="store_true", default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--model", action="append", metavar="SIZE=PATH")

    sp = sub.add_parser("encode", help="compress a voxelized PLY")
    sp.add_argument("input")
    sp.add_argument("output")
    add_codec_flags(sp)
    sp.set_defaults(func=cmd_encode)

    sp = sub.add_parser("decode", help="decompress a coded stream")
    sp.add_argument("input")
    sp.add_argument("output")
    add_codec_flags(sp)
    sp.set_defaults(func=cmd_decode)

    sp = sub.add_parser("eval", help="rate table over several clouds")
    sp.add_argument("clouds", nargs="+")
    sp.add_argument("--verify", action="store_true",
                    help="decode and compare after encoding")
    add_codec_flags(sp)
    sp.set_defaults(func=cmd_eval)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    if args.threads is not None:
        import numba
        numba.set_num_threads(max(1, args.threads))
    try:
        return args.func(args)
    except (VoxelCodecError, OSError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
