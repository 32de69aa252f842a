"""
Shallow quality CNN trained from scratch in NumPy.

Each conv stage is conv (stride 1, no padding) -> 2x2/2 max-pool -> ReLU.
Conv features are flattened into an optional hidden FC layer, dropout sits
immediately before the output layer, and the output layer is either a
softmax over M quality anchors (PQR head) or a single scalar (SQR head).

Provides:
- ArchConfig, TrainConfig, Network, SgdState, EpochTrace dataclasses
- build(): He-initialized network
- forward() / predict_patches(): inference
- loss_and_grad(): cross-entropy (pqr) or squared error (sqr) with backprop
- sgd_step(): momentum SGD with weight decay
- train(): seeded mini-batch training with a log-spaced learning rate
- gradient_check(): finite-difference verification of loss_and_grad
"""

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from tqdm import tqdm

from pqriqa.codec import EncoderConfig, PqrVector, encode_matrix, softmax
from pqriqa.errors import (
    InvalidArchitectureError,
    InvalidInputError,
    InvalidParameterError,
    NumericalFailureError,
)


PQR = "pqr"
SQR = "sqr"
HEADS = (PQR, SQR)

DROPOUT_RATE = 0.5
MOMENTUM = 0.9
WEIGHT_DECAY = 1e-4
LR_START = 1e-2
LR_END = 1e-3

# (kernel, out_channels) per conv stage
DESK_CONV_SPECS = ((3, 8), (3, 16), (3, 32), (2, 64))
FULL_CONV_SPECS = ((3, 32), (3, 64), (3, 128), (3, 256), (2, 512))
TINY_CONV_SPECS = ((3, 4), (2, 8))


# =============================================================================
# Configuration
# =============================================================================

@dataclass(frozen=True)
class ArchConfig:
    """Network shape: square input, conv stages, hidden FC width, head."""
    input_size: int = 32
    input_channels: int = 3
    conv_specs: tuple[tuple[int, int], ...] = DESK_CONV_SPECS
    fc_width: int = 64
    head: str = PQR
    m: int = 5
    dropout_rate: float = DROPOUT_RATE

    def __post_init__(self):
        object.__setattr__(self, "conv_specs",
                           tuple((int(k), int(c)) for k, c in self.conv_specs))
        if self.head not in HEADS:
            raise InvalidArchitectureError(f"unknown head {self.head!r}")
        if self.head == PQR and self.m < 2:
            raise InvalidArchitectureError(f"pqr head needs M >= 2, got {self.m}")
        if not 0 <= self.dropout_rate < 1:
            raise InvalidArchitectureError(f"dropout rate must be in [0, 1), got {self.dropout_rate}")
        if self.input_size < 1 or self.input_channels < 1 or self.fc_width < 0:
            raise InvalidArchitectureError("input size/channels must be positive, fc_width >= 0")
        if not self.conv_specs:
            raise InvalidArchitectureError("need at least one conv stage")
        if any(k < 1 or c < 1 for k, c in self.conv_specs):
            raise InvalidArchitectureError("conv kernels and channels must be positive")

    @property
    def output_dim(self) -> int:
        return self.m if self.head == PQR else 1

    def stage_sizes(self) -> list[int]:
        """
        Spatial size after each conv+pool stage.

        Pooling halves with floor; a 1x1 map from the last stage passes
        through pooling unchanged so a final 2x2 conv can end the chain.
        """
        sizes = []
        s = self.input_size
        last = len(self.conv_specs) - 1
        for i, (k, _) in enumerate(self.conv_specs):
            s = s - k + 1
            if s < 1:
                raise InvalidArchitectureError(
                    f"conv stage {i + 1} (kernel {k}) underflows the spatial size"
                )
            if not (s == 1 and i == last):
                s //= 2
            if s < 1:
                raise InvalidArchitectureError(
                    f"pooling after conv stage {i + 1} underflows the spatial size"
                )
            sizes.append(s)
        return sizes

    def feature_dim(self) -> int:
        s = self.stage_sizes()[-1]
        return s * s * self.conv_specs[-1][1]


ARCH_PRESETS = {
    "desk": dict(input_size=32, conv_specs=DESK_CONV_SPECS, fc_width=64),
    "full": dict(input_size=64, conv_specs=FULL_CONV_SPECS, fc_width=0),
    "tiny": dict(input_size=8, conv_specs=TINY_CONV_SPECS, fc_width=8),
}


def arch_preset(name: str, head: str = PQR, m: int = 5,
                dropout_rate: float = DROPOUT_RATE) -> ArchConfig:
    """Named architecture with the requested head."""
    if name not in ARCH_PRESETS:
        raise InvalidParameterError(
            f"unknown arch preset {name!r}; available: {', '.join(ARCH_PRESETS)}"
        )
    return ArchConfig(head=head, m=m, dropout_rate=dropout_rate, **ARCH_PRESETS[name])


@dataclass(frozen=True)
class TrainConfig:
    """Mini-batch SGD settings; learning rates are log-spaced per epoch."""
    epochs: int = 30
    batch_size: int = 64
    lr_start: float = LR_START
    lr_end: float = LR_END
    momentum: float = MOMENTUM
    weight_decay: float = WEIGHT_DECAY
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise InvalidParameterError("epochs and batch_size must be >= 1")
        if self.lr_start < 0 or self.lr_end < 0 or self.lr_start < self.lr_end:
            raise InvalidParameterError("learning rates need lr_start >= lr_end >= 0")
        if self.lr_end == 0 and self.lr_start != 0:
            raise InvalidParameterError("log-spaced schedule needs lr_end > 0 unless both are 0")
        if not 0 <= self.momentum < 1 or self.weight_decay < 0:
            raise InvalidParameterError("momentum must be in [0, 1) and weight_decay >= 0")

    def learning_rates(self) -> np.ndarray:
        if self.lr_start == self.lr_end:
            return np.full(self.epochs, float(self.lr_start))
        return np.geomspace(self.lr_start, self.lr_end, self.epochs)


# =============================================================================
# Network
# =============================================================================

@dataclass
class Network:
    """Parameters omega of the quality model, keyed by layer name."""
    arch: ArchConfig
    params: dict[str, np.ndarray]
    rng_seed: int = 0

    def clone(self) -> "Network":
        return Network(self.arch, {k: v.copy() for k, v in self.params.items()}, self.rng_seed)

    @property
    def num_params(self) -> int:
        return int(sum(v.size for v in self.params.values()))


def _layer_shapes(arch: ArchConfig) -> list[tuple[str, tuple[int, ...], int]]:
    """(name, shape, fan_in) for every weight tensor, in parameter order."""
    arch.stage_sizes()
    shapes = []
    c_in = arch.input_channels
    for i, (k, c_out) in enumerate(arch.conv_specs, start=1):
        shapes.append((f"conv{i}", (c_out, c_in, k, k), c_in * k * k))
        c_in = c_out
    n_in = arch.feature_dim()
    if arch.fc_width:
        shapes.append(("fc", (n_in, arch.fc_width), n_in))
        n_in = arch.fc_width
    shapes.append(("head", (n_in, arch.output_dim), n_in))
    return shapes


def build(arch: ArchConfig, seed: int = 0) -> Network:
    """He-initialized network: weights ~ N(0, 2 / fan_in), biases zero."""
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape, fan_in in _layer_shapes(arch):
        params[f"{name}.weight"] = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)
        n_out = shape[0] if name.startswith("conv") else shape[1]
        params[f"{name}.bias"] = np.zeros(n_out)
    return Network(arch=arch, params=params, rng_seed=seed)


# =============================================================================
# Layers
# =============================================================================

def _conv_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    k = w.shape[2]
    win = sliding_window_view(x, (k, k), axis=(2, 3))  # N, C, Ho, Wo, k, k
    out = np.tensordot(win, w, axes=([1, 4, 5], [1, 2, 3]))  # N, Ho, Wo, O
    return out.transpose(0, 3, 1, 2) + b[None, :, None, None]


def _conv_backward(dout: np.ndarray, x: np.ndarray, w: np.ndarray):
    k = w.shape[2]
    ho, wo = dout.shape[2], dout.shape[3]
    win = sliding_window_view(x, (k, k), axis=(2, 3))
    dw = np.tensordot(dout, win, axes=([0, 2, 3], [0, 2, 3]))  # O, C, k, k
    db = dout.sum(axis=(0, 2, 3))
    dx = np.zeros_like(x)
    for a in range(k):
        for c in range(k):
            contrib = np.tensordot(dout, w[:, :, a, c], axes=([1], [0]))  # N, Ho, Wo, C
            dx[:, :, a:a + ho, c:c + wo] += contrib.transpose(0, 3, 1, 2)
    return dx, dw, db


def _pool_forward(x: np.ndarray):
    n, c, h, w = x.shape
    if h == 1 and w == 1:
        return x, None
    ho, wo = h // 2, w // 2
    blocks = (x[:, :, :2 * ho, :2 * wo]
              .reshape(n, c, ho, 2, wo, 2)
              .transpose(0, 1, 2, 4, 3, 5)
              .reshape(n, c, ho, wo, 4))
    # argmax keeps the first (row-major) maximum
    idx = np.argmax(blocks, axis=-1)
    out = np.take_along_axis(blocks, idx[..., None], axis=-1)[..., 0]
    return out, idx


def _pool_backward(dout: np.ndarray, idx, x_shape) -> np.ndarray:
    if idx is None:
        return dout
    n, c, h, w = x_shape
    ho, wo = idx.shape[2], idx.shape[3]
    dblocks = np.zeros((n, c, ho, wo, 4))
    np.put_along_axis(dblocks, idx[..., None], dout[..., None], axis=-1)
    dx = np.zeros(x_shape)
    dx[:, :, :2 * ho, :2 * wo] = (dblocks
                                  .reshape(n, c, ho, wo, 2, 2)
                                  .transpose(0, 1, 2, 4, 3, 5)
                                  .reshape(n, c, 2 * ho, 2 * wo))
    return dx


def _check_finite(name: str, value: np.ndarray):
    if not np.all(np.isfinite(value)):
        raise NumericalFailureError(f"non-finite values in layer {name}", layer=name)


# =============================================================================
# Forward / Backward
# =============================================================================

def _to_nchw(net: Network, batch) -> np.ndarray:
    x = np.asarray(batch, dtype=np.float64)
    a = net.arch
    expected = (a.input_size, a.input_size, a.input_channels)
    if x.ndim != 4 or x.shape[1:] != expected:
        raise InvalidInputError(
            f"expected patches of shape (N, {expected[0]}, {expected[1]}, {expected[2]}), got {x.shape}"
        )
    return x.transpose(0, 3, 1, 2)


def _forward(net: Network, batch, dropout_rng: Optional[np.random.Generator]):
    """Return (logits, cache). Dropout is applied only when dropout_rng is given."""
    p = net.params
    arch = net.arch
    x = _to_nchw(net, batch)
    cache = {"stages": []}
    for i in range(1, len(arch.conv_specs) + 1):
        conv = _conv_forward(x, p[f"conv{i}.weight"], p[f"conv{i}.bias"])
        _check_finite(f"conv{i}", conv)
        pooled, idx = _pool_forward(conv)
        relu_mask = pooled > 0
        cache["stages"].append((x, conv.shape, idx, relu_mask))
        x = pooled * relu_mask
    feats = x.reshape(x.shape[0], -1)
    cache["conv_out_shape"] = x.shape

    if arch.fc_width:
        cache["fc_in"] = feats
        hidden = feats @ p["fc.weight"] + p["fc.bias"]
        _check_finite("fc", hidden)
        cache["fc_mask"] = hidden > 0
        feats = hidden * cache["fc_mask"]

    drop = None
    if dropout_rng is not None and arch.dropout_rate > 0:
        keep = 1.0 - arch.dropout_rate
        drop = (dropout_rng.random(feats.shape) < keep) / keep
        feats = feats * drop
    cache["drop"] = drop
    cache["head_in"] = feats

    logits = feats @ p["head.weight"] + p["head.bias"]
    _check_finite("head", logits)
    return logits, cache


def _outputs(arch: ArchConfig, logits: np.ndarray) -> np.ndarray:
    return softmax(logits) if arch.head == PQR else logits[:, 0]


def forward(net: Network, batch, mode: str = "eval",
            dropout_rng: Optional[np.random.Generator] = None):
    """
    Run the network on a batch of (N, S, S, C) patches.

    Args:
        net: Network to evaluate
        batch: Patches in height, width, channel layout
        mode: "train" (dropout active, needs dropout_rng) or "eval"
        dropout_rng: Randomness for the dropout mask in train mode

    Returns:
        Tuple of (predictions, cache). Predictions are (N, M) softmax rows
        for the PQR head or (N,) scores for the SQR head.
    """
    if mode not in ("train", "eval"):
        raise InvalidParameterError(f"mode must be 'train' or 'eval', got {mode!r}")
    if mode == "train" and dropout_rng is None:
        raise InvalidParameterError("train mode needs a dropout rng")
    logits, cache = _forward(net, batch, dropout_rng if mode == "train" else None)
    return _outputs(net.arch, logits), cache


def predict_patches(net: Network, patches, batch_size: int = 256) -> np.ndarray:
    """Eval-mode predictions in fixed-size chunks."""
    patches = np.asarray(patches, dtype=np.float64)
    chunks = [forward(net, patches[i:i + batch_size])[0]
              for i in range(0, patches.shape[0], batch_size)]
    if not chunks:
        shape = (0, net.arch.m) if net.arch.head == PQR else (0,)
        return np.zeros(shape)
    return np.concatenate(chunks, axis=0)


def _targets_array(arch: ArchConfig, targets) -> np.ndarray:
    if arch.head == PQR:
        if isinstance(targets, np.ndarray):
            t = np.atleast_2d(np.asarray(targets, dtype=np.float64))
        else:
            t = np.vstack([tt.as_array() if isinstance(tt, PqrVector) else np.asarray(tt, dtype=np.float64)
                           for tt in targets])
        if t.shape[1] != arch.m:
            raise InvalidParameterError(
                f"pqr head expects {arch.m}-dimensional targets, got {t.shape[1]}"
            )
        return t
    t = np.asarray(targets, dtype=np.float64)
    if t.ndim != 1:
        raise InvalidParameterError("sqr head expects scalar targets")
    return t


def output_gradient(arch: ArchConfig, logits: np.ndarray, targets: np.ndarray):
    """
    Batch-mean loss and its gradient with respect to the output pre-activations.

    PQR: cross-entropy against soft targets, gradient (softmax - q) / N.
    SQR: squared error, gradient 2 (y_hat - y) / N.
    """
    n = logits.shape[0]
    if arch.head == PQR:
        z = logits - np.max(logits, axis=1, keepdims=True)
        log_probs = z - np.log(np.sum(np.exp(z), axis=1, keepdims=True))
        loss = float(-np.sum(targets * log_probs) / n)
        grad = (np.exp(log_probs) - targets) / n
    else:
        err = logits[:, 0] - targets
        loss = float(np.mean(err ** 2))
        grad = (2.0 * err / n)[:, None]
    return loss, grad


def loss_and_grad(net: Network, batch, targets,
                  dropout_rng: Optional[np.random.Generator] = None):
    """
    Batch-mean loss and backpropagated gradients for every parameter.

    Args:
        net: Network
        batch: (N, S, S, C) patches
        targets: (N, M) PQR rows / PqrVectors for the pqr head, (N,) scores for sqr
        dropout_rng: When given, train-mode dropout is applied

    Returns:
        Tuple of (loss, gradient dict keyed like net.params)
    """
    arch = net.arch
    t = _targets_array(arch, targets)
    if t.shape[0] != np.shape(batch)[0]:
        raise InvalidParameterError(f"{np.shape(batch)[0]} patches but {t.shape[0]} targets")
    logits, cache = _forward(net, batch, dropout_rng)
    loss, dlogits = output_gradient(arch, logits, t)
    if not np.isfinite(loss):
        raise NumericalFailureError("non-finite loss", layer="head")

    p = net.params
    grads = {}
    grads["head.weight"] = cache["head_in"].T @ dlogits
    grads["head.bias"] = dlogits.sum(axis=0)
    d = dlogits @ p["head.weight"].T
    if cache["drop"] is not None:
        d = d * cache["drop"]
    if arch.fc_width:
        d = d * cache["fc_mask"]
        grads["fc.weight"] = cache["fc_in"].T @ d
        grads["fc.bias"] = d.sum(axis=0)
        d = d @ p["fc.weight"].T
    d = d.reshape(cache["conv_out_shape"])

    for i in range(len(arch.conv_specs), 0, -1):
        x_in, conv_shape, idx, relu_mask = cache["stages"][i - 1]
        d = d * relu_mask
        d = _pool_backward(d, idx, conv_shape)
        d, dw, db = _conv_backward(d, x_in, p[f"conv{i}.weight"])
        grads[f"conv{i}.weight"] = dw
        grads[f"conv{i}.bias"] = db
        _check_finite(f"conv{i} gradient", dw)

    return loss, {name: grads[name] for name in p}


# =============================================================================
# Optimizer
# =============================================================================

@dataclass
class SgdState:
    """Momentum buffers plus the optimizer's fixed hyperparameters."""
    momentum: float = MOMENTUM
    weight_decay: float = WEIGHT_DECAY
    velocity: dict[str, np.ndarray] = field(default_factory=dict)


def sgd_update(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
               state: SgdState, lr: float) -> dict[str, np.ndarray]:
    """v <- mu v - lr (g + wd w); w <- w + v. Returns new parameter arrays."""
    updated = {}
    for name, w in params.items():
        g = grads[name]
        if g.shape != w.shape:
            raise InvalidParameterError(f"gradient shape {g.shape} does not match {name} {w.shape}")
        if not np.all(np.isfinite(g)):
            raise NumericalFailureError(f"non-finite gradient for {name}", layer=name)
        v = state.velocity.get(name)
        if v is None:
            v = np.zeros_like(w)
        v = state.momentum * v - lr * (g + state.weight_decay * w)
        state.velocity[name] = v
        updated[name] = w + v
    return updated


def sgd_step(net: Network, grads: dict[str, np.ndarray], state: SgdState, lr: float) -> Network:
    """One optimizer step; returns the updated network."""
    return replace(net, params=sgd_update(net.params, grads, state, lr))


# =============================================================================
# Training
# =============================================================================

@dataclass(frozen=True)
class EpochTrace:
    epoch: int
    lr: float
    mean_loss: float


def train(net: Network, patches, labels, cfg: TrainConfig,
          encoder: Optional[EncoderConfig] = None, verbose: bool = False,
          epoch_callback: Optional[Callable[[int, Network], None]] = None
          ) -> tuple[Network, list[EpochTrace]]:
    """
    Train on a patch set with inherited scalar labels.

    For the PQR head the labels are encoded once with `encoder`; the SQR
    head regresses them directly. Mini-batches are reshuffled each epoch
    from a stream seeded by cfg.seed, so runs are reproducible.

    Args:
        net: Initial network (not modified)
        patches: (N, S, S, C) training patches
        labels: (N,) scores inherited from each patch's source image
        cfg: Training configuration
        encoder: Required for the pqr head, must be None for sqr
        verbose: Show a progress bar over epochs
        epoch_callback: Called as fn(epoch, net) after every epoch

    Returns:
        Tuple of (trained network, per-epoch loss trace)
    """
    x = np.asarray(patches, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64).ravel()
    if x.shape[0] == 0:
        raise InvalidParameterError("training set is empty")
    if x.shape[0] != y.size:
        raise InvalidParameterError(f"{x.shape[0]} patches but {y.size} labels")
    if (encoder is not None) != (net.arch.head == PQR):
        raise InvalidParameterError("an encoder is required for the pqr head and only for it")
    if encoder is not None:
        if encoder.m != net.arch.m:
            raise InvalidParameterError(f"encoder has {encoder.m} anchors, network head {net.arch.m}")
        targets = encode_matrix(y, encoder)
    else:
        targets = y

    shuffle_seq, dropout_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    shuffle_rng = np.random.default_rng(shuffle_seq)
    dropout_rng = np.random.default_rng(dropout_seq)
    state = SgdState(momentum=cfg.momentum, weight_decay=cfg.weight_decay)
    net = net.clone()
    trace = []
    n = x.shape[0]

    epochs = enumerate(cfg.learning_rates(), start=1)
    if verbose:
        epochs = tqdm(list(epochs), desc=f"train {net.arch.head}")
    for epoch, lr in epochs:
        order = shuffle_rng.permutation(n)
        total = 0.0
        for b, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            try:
                loss, grads = loss_and_grad(net, x[idx], targets[idx], dropout_rng)
                net = sgd_step(net, grads, state, float(lr))
            except NumericalFailureError as e:
                raise NumericalFailureError(
                    f"epoch {epoch}, batch {b}: {e}", layer=e.layer, epoch=epoch, batch=b
                ) from e
            total += loss * idx.size
        trace.append(EpochTrace(epoch=epoch, lr=float(lr), mean_loss=total / n))
        if epoch_callback is not None:
            epoch_callback(epoch, net)
    return net, trace


# =============================================================================
# Gradient Checking
# =============================================================================

def _switch_pattern(cache) -> list[np.ndarray]:
    """ReLU masks and pooling argmaxes; the loss is smooth while these are fixed."""
    pattern = []
    for _, _, idx, relu_mask in cache["stages"]:
        pattern.append(relu_mask)
        if idx is not None:
            pattern.append(idx)
    if "fc_mask" in cache:
        pattern.append(cache["fc_mask"])
    return pattern


def _same_pattern(a, b) -> bool:
    return all(np.array_equal(x, y) for x, y in zip(a, b))


def gradient_check(net: Network, batch, targets, n_params: int = 200, h: float = 1e-5,
                   seed: int = 0, dropout_seed: Optional[int] = None,
                   floor: float = 1e-4) -> float:
    """
    Max relative error between analytic and central-difference gradients.

    Relative error is |a - n| / max(|a|, |n|, floor). Parameters whose
    +-h stencil flips a ReLU or max-pool switch are skipped and resampled.
    With dropout_seed, every evaluation reuses the same dropout mask.

    At h=1e-5 the difference quotient carries about 1e-10 of rounding noise,
    so gradients below `floor` are held to an absolute 1e-5 * floor instead.

    Raises:
        NumericalFailureError: fewer than n_params parameters could be checked
    """
    if n_params < 1:
        raise InvalidParameterError(f"n_params must be >= 1, got {n_params}")
    if h <= 0 or floor <= 0:
        raise InvalidParameterError("h and floor must be positive")

    def rng():
        return None if dropout_seed is None else np.random.default_rng(dropout_seed)

    t = _targets_array(net.arch, targets)
    _, analytic = loss_and_grad(net, batch, t, rng())
    _, base_cache = _forward(net, batch, rng())
    base = _switch_pattern(base_cache)

    names = list(net.params)
    sizes = np.array([net.params[k].size for k in names])
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    picker = np.random.default_rng(seed)
    shifted = net.clone()

    worst = 0.0
    checked = 0
    attempts = 0
    while checked < n_params and attempts < 50 * n_params:
        attempts += 1
        flat = int(picker.integers(offsets[-1]))
        li = int(np.searchsorted(offsets, flat, side="right") - 1)
        name = names[li]
        pos = np.unravel_index(flat - offsets[li], net.params[name].shape)
        arr = shifted.params[name]
        orig = arr[pos]

        arr[pos] = orig + h
        lp, cache_p = _forward(shifted, batch, rng())
        plus = output_gradient(shifted.arch, lp, t)[0]
        arr[pos] = orig - h
        lm, cache_m = _forward(shifted, batch, rng())
        minus = output_gradient(shifted.arch, lm, t)[0]
        arr[pos] = orig

        if not (_same_pattern(base, _switch_pattern(cache_p))
                and _same_pattern(base, _switch_pattern(cache_m))):
            continue
        numeric = (plus - minus) / (2 * h)
        a = analytic[name][pos]
        err = abs(a - numeric) / max(abs(a), abs(numeric), floor)
        worst = max(worst, err)
        checked += 1
    if checked < n_params:
        raise NumericalFailureError(
            f"gradient check found only {checked} of {n_params} parameters away from "
            f"ReLU/max-pool switches after {attempts} draws"
        )
    return worst
