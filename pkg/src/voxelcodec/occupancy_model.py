"""Autoregressive occupancy model over cubic voxel blocks.

One type-A masked 7-kernel conv (so a voxel never sees itself or later
voxels), residual pairs of type-B masked 5-kernel convs, and a two-layer
1-kernel head to 2 channels. ReLU follows every conv except the last;
the final probabilities come from a 2-way softmax. Output at raster
index i therefore depends only on voxels with raster index < i, which is
what lets the encoder predict a whole block in one batched pass while
the decoder reproduces identical probabilities voxel by voxel.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ParameterError, ShapeError
from . import nn
from .nn.weights_io import _fnv1a64

SUPPORTED_BLOCK_SIZES = (8, 16, 32, 64, 128)

# Per-block-size training defaults.
DEFAULT_BATCH_SIZES = {128: 1, 64: 8, 32: 64, 16: 128, 8: 128}
DEFAULT_EPOCHS = 80
DEFAULT_LR = 0.001


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters for one block size."""

    block_size: int
    filters: int = 64
    first_kernel: int = 7
    residual_kernel: int = 5
    residual_blocks: int = 2

    def __post_init__(self):
        if self.block_size not in SUPPORTED_BLOCK_SIZES:
            raise ConfigError(f"unsupported block size {self.block_size}; "
                              f"expected one of {SUPPORTED_BLOCK_SIZES}")
        if self.filters < 2:
            raise ConfigError("filters must be >= 2")
        if self.first_kernel < 3 or self.first_kernel % 2 == 0:
            raise ConfigError("first_kernel must be odd and >= 3 (a type-A "
                              f"1-kernel has no taps), got {self.first_kernel}")
        if self.residual_kernel < 1 or self.residual_kernel % 2 == 0:
            raise ConfigError("residual_kernel must be odd and >= 1, "
                              f"got {self.residual_kernel}")
        if self.residual_blocks < 0:
            raise ConfigError("residual_blocks must be >= 0")

    @property
    def head_channels(self):
        return max(2, self.filters // 2)


def _layer_plan(cfg):
    """Ordered (name, mask kind, kernel, cin, cout) tuples."""
    plan = [("in", "A", cfg.first_kernel, 1, cfg.filters)]
    for i in range(cfg.residual_blocks):
        plan.append((f"res{i + 1}a", "B", cfg.residual_kernel,
                     cfg.filters, cfg.filters))
        plan.append((f"res{i + 1}b", "B", cfg.residual_kernel,
                     cfg.filters, cfg.filters))
    plan.append(("head1", "B", 1, cfg.filters, cfg.head_channels))
    plan.append(("head2", "B", 1, cfg.head_channels, 2))
    return plan


class OccupancyModel:
    """Weights plus forward/backward passes for one block size."""

    def __init__(self, config, seed=0):
        self.config = config
        rng = np.random.default_rng(seed)
        self.layers = {}
        self._order = []
        for name, kind, kernel, cin, cout in _layer_plan(config):
            self.layers[name] = nn.init_conv(name, kind, kernel, cin, cout, rng)
            self._order.append(name)

    # ------------------------------------------------------------------
    # parameters and persistence

    def named_parameters(self):
        """Ordered (name, array) pairs; arrays are the live buffers."""
        out = []
        for name in self._order:
            layer = self.layers[name]
            out.append((f"{name}.w", layer.w))
            out.append((f"{name}.b", layer.b))
        return out

    def architecture_entries(self):
        return [(n, tuple(a.shape)) for n, a in self.named_parameters()]

    @property
    def architecture_hash(self):
        return nn.architecture_hash(self.architecture_entries())

    def save(self, path):
        log2 = int(math.log2(self.config.block_size))
        nn.save_weights(path, log2, self.named_parameters())

    @classmethod
    def load(cls, path):
        """Rebuild a model from a weights file, inferring the config."""
        bs_log2, entries = nn.load_weights(path)
        block_size = 1 << bs_log2
        by_name = dict(entries)
        try:
            in_w = by_name["in.w"]
        except KeyError:
            raise ShapeError("weights file lacks the first-layer entry 'in.w'")
        if in_w.ndim != 5:
            raise ShapeError("first-layer weights must be rank 5")
        filters = in_w.shape[0]
        first_kernel = in_w.shape[2]
        residual_blocks = sum(1 for n, _ in entries
                              if n.startswith("res") and n.endswith("a.w"))
        if residual_blocks:
            residual_kernel = by_name["res1a.w"].shape[2]
        else:
            residual_kernel = 5
        config = ModelConfig(block_size=block_size, filters=filters,
                             first_kernel=first_kernel,
                             residual_kernel=residual_kernel,
                             residual_blocks=residual_blocks)
        model = cls(config, seed=0)
        nn.check_shapes(model.architecture_entries(), entries)
        for (name, _), (_, arr) in zip(model.named_parameters(), entries):
            layer_name, field = name.rsplit(".", 1)
            layer = model.layers[layer_name]
            if field == "w":
                layer.w[...] = arr
            else:
                layer.b[...] = arr
        return model

    # ------------------------------------------------------------------
    # forward / backward

    def _forward(self, x, tape=None):
        """x: (B, 1, d, d, d) float32 -> logits (B, 2, d, d, d)."""
        cfg = self.config

        def conv(name, inp):
            if tape is not None:
                tape["in_" + name] = inp
            out = nn.conv_forward(self.layers[name], inp)
            if tape is not None:
                tape["out_" + name] = out
            return out

        cur = nn.relu(conv("in", x))
        for i in range(cfg.residual_blocks):
            skip = cur
            h = nn.relu(conv(f"res{i + 1}a", cur))
            s = conv(f"res{i + 1}b", h) + skip
            if tape is not None:
                tape[f"sum_res{i + 1}"] = s
            cur = nn.relu(s)
        h = nn.relu(conv("head1", cur))
        return conv("head2", h)

    def logits(self, x):
        if x.ndim != 5 or x.shape[1] != 1:
            raise ShapeError("model input must be (B, 1, d, d, d)")
        d = self.config.block_size
        if x.shape[2:] != (d, d, d):
            raise ShapeError(f"model expects {d}^3 blocks, got {x.shape[2:]}")
        return self._forward(np.ascontiguousarray(x, dtype=np.float32))

    def predict_occupancy(self, block):
        """(d, d, d) occupancy -> (d, d, d) float32 occupied-probabilities."""
        block = np.asarray(block)
        d = self.config.block_size
        if block.shape != (d, d, d):
            raise ShapeError(f"expected a {d}^3 block, got {block.shape}")
        x = block.astype(np.float32)[None, None]
        return nn.softmax2_p1(self._forward(x))[0]

    def predict_block(self, block):
        """(d, d, d) occupancy -> (2, d, d, d) stacked (p0, p1)."""
        return nn.stack_probs(self.predict_occupancy(block))

    def predict_embedded(self, block, side):
        """Probabilities for a small block placed at the origin corner
        of a zeroed full-size volume; returns p1 over the block only."""
        block = np.asarray(block)
        d = self.config.block_size
        if side >= d:
            raise ConfigError(f"embedded side {side} must be smaller than "
                              f"the model block size {d}")
        if block.shape != (side, side, side):
            raise ShapeError(f"expected a {side}^3 block, got {block.shape}")
        volume = np.zeros((d, d, d), dtype=np.float32)
        volume[:side, :side, :side] = block
        return self.predict_occupancy(volume)[:side, :side, :side]

    def loss_and_grads(self, x, target):
        """Mean cross-entropy in bits/voxel and gradients for every
        parameter. x: (B, 1, d, d, d) float32; target: (B, d, d, d)."""
        tape = {}
        logits = self._forward(np.ascontiguousarray(x, dtype=np.float32), tape)
        y = np.asarray(target).astype(bool)
        if y.shape != logits.shape[:1] + logits.shape[2:]:
            raise ShapeError("target shape must match input spatial shape")

        diff = logits[:, 1].astype(np.float64) - logits[:, 0].astype(np.float64)
        e = np.exp(-np.abs(diff))
        p1 = np.where(diff >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
        p_true = np.where(y, p1, 1.0 - p1)
        loss_bits = float(-np.log(np.maximum(p_true, float(nn.PROB_FLOOR)))
                          .mean() / np.log(2.0))

        # gradient of the bits-valued loss above: the nats-space term
        # (p1 - y)/n divided by ln 2
        n = y.size
        dl1 = ((p1 - y) / (n * np.log(2.0))).astype(np.float32)
        dlogits = np.stack([-dl1, dl1], axis=1)
        grads = {}

        def back(name, grad_out):
            gi, gw, gb = nn.conv_backward(self.layers[name],
                                          tape["in_" + name], grad_out)
            grads[f"{name}.w"] = gw
            grads[f"{name}.b"] = gb
            return gi

        g = back("head2", dlogits)
        g = g * (tape["out_head1"] > 0)
        g = back("head1", g)
        for i in range(self.config.residual_blocks, 0, -1):
            g = g * (tape[f"sum_res{i}"] > 0)
            g_skip = g
            g = back(f"res{i}b", g)
            g = g * (tape[f"out_res{i}a"] > 0)
            g = back(f"res{i}a", g)
            g = g + g_skip
        g = g * (tape["out_in"] > 0)
        back("in", g)
        return loss_bits, grads


class IncrementalPredictor:
    """Voxel-by-voxel prediction with cached layer activations.

    Used by the decoder: after priming with the known context volume,
    each newly decoded occupied voxel triggers a recomputation of just
    the activation regions it can influence. Because every output
    position has an independent accumulator, the refreshed values are
    bit-identical to a full forward pass on the updated volume, and
    decoded zeros (the common case in sparse blocks) cost nothing.
    """

    def __init__(self, model):
        self.model = model
        self.side = model.config.block_size
        self.x = np.zeros((1, 1, self.side, self.side, self.side),
                          dtype=np.float32)
        self._buffers = None

    def prime(self, volume=None):
        """Set the full context volume (default all-empty) and run one
        complete forward pass to fill the activation caches."""
        if volume is not None:
            volume = np.asarray(volume)
            if volume.shape != (self.side,) * 3:
                raise ShapeError(f"context volume must be {self.side}^3, "
                                 f"got {volume.shape}")
            self.x[0, 0] = volume.astype(np.float32)
        else:
            self.x[...] = 0.0
        model = self.model
        cfg = model.config
        buf = {}
        buf["a_in"] = nn.conv_forward(model.layers["in"], self.x)
        cur = nn.relu(buf["a_in"])
        buf["h_in"] = cur
        for i in range(1, cfg.residual_blocks + 1):
            a1 = nn.conv_forward(model.layers[f"res{i}a"], cur)
            h1 = nn.relu(a1)
            a2 = nn.conv_forward(model.layers[f"res{i}b"], h1)
            s = a2 + cur
            cur = nn.relu(s)
            buf[f"a_res{i}a"] = a1
            buf[f"h_res{i}a"] = h1
            buf[f"a_res{i}b"] = a2
            buf[f"s_res{i}"] = s
            buf[f"h_res{i}"] = cur
        buf["a_head1"] = nn.conv_forward(model.layers["head1"], cur)
        buf["h_head1"] = nn.relu(buf["a_head1"])
        buf["logits"] = nn.conv_forward(model.layers["head2"], buf["h_head1"])
        buf["p1"] = nn.softmax2_p1(buf["logits"])[0]
        self._buffers = buf

    def p1(self, x, y, z):
        return self._buffers["p1"][x, y, z]

    def _grow(self, box, r):
        """Output region a masked conv can change when inputs change in
        `box`: forward along x only (causal), both ways along y and z."""
        (x0, x1), (y0, y1), (z0, z1) = box
        return ((x0, min(x1 + r, self.side)),
                (max(y0 - r, 0), min(y1 + r, self.side)),
                (max(z0 - r, 0), min(z1 + r, self.side)))

    def set_voxel(self, x, y, z, value):
        """Write one voxel of the context and refresh affected caches."""
        value = np.float32(value)
        if self.x[0, 0, x, y, z] == value:
            return
        self.x[0, 0, x, y, z] = value
        model = self.model
        cfg = model.config
        buf = self._buffers

        def sl(box):
            (x0, x1), (y0, y1), (z0, z1) = box
            return np.s_[:, :, x0:x1, y0:y1, z0:z1]

        def conv_region(name, inp, out, box):
            nn.conv_forward_region(model.layers[name], inp, out, box)

        box = self._grow(((x, x + 1), (y, y + 1), (z, z + 1)),
                         cfg.first_kernel // 2)
        conv_region("in", self.x, buf["a_in"], box)
        buf["h_in"][sl(box)] = np.maximum(buf["a_in"][sl(box)], np.float32(0.0))
        cur_name = "h_in"
        r = cfg.residual_kernel // 2
        for i in range(1, cfg.residual_blocks + 1):
            box_a = self._grow(box, r)
            conv_region(f"res{i}a", buf[cur_name], buf[f"a_res{i}a"], box_a)
            buf[f"h_res{i}a"][sl(box_a)] = np.maximum(
                buf[f"a_res{i}a"][sl(box_a)], np.float32(0.0))
            box_b = self._grow(box_a, r)
            conv_region(f"res{i}b", buf[f"h_res{i}a"], buf[f"a_res{i}b"], box_b)
            region = sl(box_b)
            buf[f"s_res{i}"][region] = (buf[f"a_res{i}b"][region]
                                        + buf[cur_name][region])
            buf[f"h_res{i}"][region] = np.maximum(
                buf[f"s_res{i}"][region], np.float32(0.0))
            cur_name = f"h_res{i}"
            box = box_b
        conv_region("head1", buf[cur_name], buf["a_head1"], box)
        region = sl(box)
        buf["h_head1"][region] = np.maximum(buf["a_head1"][region],
                                            np.float32(0.0))
        conv_region("head2", buf["h_head1"], buf["logits"], box)
        buf["p1"][region[2:]] = nn.softmax2_p1(buf["logits"][sl(box)])[0]


# ----------------------------------------------------------------------
# training


def dataset_digest(blocks):
    """Order-sensitive 64-bit digest of a block dataset."""
    h = _fnv1a64(len(blocks).to_bytes(4, "little"))
    for b in blocks:
        arr = np.ascontiguousarray(np.asarray(b).astype(bool))
        h = _fnv1a64(bytes(arr.shape), h)
        h = _fnv1a64(np.packbits(arr).tobytes(), h)
    return h


def train_model(config, blocks, seed=0, epochs=DEFAULT_EPOCHS,
                lr=DEFAULT_LR, batch_size=None, progress=None):
    """Train a model on a list of (d, d, d) occupancy blocks.

    Returns (model, history) where history is the per-epoch mean
    training loss in bits per voxel. Deterministic for a fixed seed.
    """
    d = config.block_size
    data = [np.asarray(b) for b in blocks]
    if not data:
        raise ParameterError("training dataset is empty")
    for b in data:
        if b.shape != (d, d, d):
            raise ShapeError(f"training block shape {b.shape} does not "
                             f"match block size {d}")
    stack = np.stack([b.astype(np.float32) for b in data])[:, None]
    targets = np.stack([b.astype(bool) for b in data])
    n = len(data)
    if batch_size is None:
        batch_size = DEFAULT_BATCH_SIZES[d]
    batch_size = max(1, min(int(batch_size), n))

    model = OccupancyModel(config, seed=seed)
    params = dict(model.named_parameters())
    opt = nn.Adam(params, lr=lr)
    shuffle_rng = np.random.default_rng([seed, 0x5E9])

    history = []
    for epoch in range(epochs):
        order = shuffle_rng.permutation(n)
        nats_sum = 0.0
        vox_sum = 0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            loss_bits, grads = model.loss_and_grads(stack[idx], targets[idx])
            opt.step(grads)
            nvox = idx.size * d ** 3
            nats_sum += loss_bits * nvox
            vox_sum += nvox
        history.append(nats_sum / vox_sum)
        if progress is not None:
            progress(epoch, history[-1])
    return model, history


def write_training_sidecar(path, config, seed, epochs, lr, digest, history):
    """Plain-text record of a training run, next to the weights file."""
    lines = [
        f"block_size: {config.block_size}",
        f"filters: {config.filters}",
        f"first_kernel: {config.first_kernel}",
        f"residual_kernel: {config.residual_kernel}",
        f"residual_blocks: {config.residual_blocks}",
        f"seed: {seed}",
        f"epochs: {epochs}",
        f"lr: {lr}",
        f"dataset_digest: {digest:016x}",
        "loss_bits_per_voxel:",
    ]
    lines += [f"  epoch {i + 1}: {v:.6f}" for i, v in enumerate(history)]
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
