"""Minimal double-precision tensor layers and the noise-score network.

Architecture (fixed): conv 5x5 -> relu -> conv 3x3 -> relu -> 2x2 average
pool -> flatten -> dense -> relu -> dense -> relu -> dense(1).  Both convs are
stride 1 with same-padding, so every spatial op is a plain GEMM over im2col
patches; the data gradient of a same-padded stride-1 convolution is itself a
convolution with the kernel rotated 180 degrees and its channel axes swapped.

The network maps one circuit image to a scalar score; the predicted noise
difference of a pair is the difference of scores, which is antisymmetric by
construction.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

_MAGIC = b"DQNM"
_VERSION = 1
_KIND_CONV = 1
_KIND_DENSE = 2


def _he_uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


class Conv2D:
    """Same-padded stride-1 convolution over NHWC activations.

    Weights keep the (out, in, k, k) layout for serialization; the forward
    pass runs one GEMM of window patches (N*H*W, k*k*in) against the kernel
    reshaped to (k*k*in, out).  The data gradient is again a convolution,
    with the kernel rotated 180 degrees and its channel axes swapped.
    """

    def __init__(self, in_ch: int, out_ch: int, ksize: int, rng: np.random.Generator):
        if ksize % 2 != 1:
            raise ValueError("kernel size must be odd for same padding")
        self.in_ch = in_ch
        self.out_ch = out_ch
        self.ksize = ksize
        self.pad = (ksize - 1) // 2
        self.w = _he_uniform(rng, (out_ch, in_ch, ksize, ksize), in_ch * ksize * ksize)
        self.b = np.zeros(out_ch)
        self.needs_input_grad = True

    def params(self):
        return [self.w, self.b]

    def _cols(self, x: np.ndarray) -> np.ndarray:
        """(N*H*W, k*k*C) patch matrix of the same-padded NHWC input."""
        k = self.ksize
        p = self.pad
        xp = np.pad(x, ((0, 0), (p, p), (p, p), (0, 0)))
        win = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(1, 2))
        # win: (N, H, W, C, k, k) -> rows (N,H,W), columns (k,k,C)
        n, h, w, c = x.shape
        return win.transpose(0, 1, 2, 4, 5, 3).reshape(n * h * w, k * k * c)

    def forward(self, x: np.ndarray):
        n, h, w, _ = x.shape
        cols = self._cols(x)
        w_g = self.w.transpose(2, 3, 1, 0).reshape(-1, self.out_ch)
        y = cols @ w_g + self.b
        return y.reshape(n, h, w, self.out_ch), (x.shape, cols)

    def backward(self, cache, dy: np.ndarray):
        x_shape, cols = cache
        n, h, w, _ = x_shape
        k = self.ksize
        dy_mat = dy.reshape(-1, self.out_ch)
        db = dy_mat.sum(axis=0)
        dw = (cols.T @ dy_mat).reshape(k, k, self.in_ch, self.out_ch)
        dw = dw.transpose(3, 2, 0, 1)
        if not self.needs_input_grad:
            return None, [dw, db]
        w_flip = self.w[:, :, ::-1, ::-1].transpose(2, 3, 0, 1).reshape(-1, self.in_ch)
        dy_cols = self._cols(dy)
        dx = (dy_cols @ w_flip).reshape(x_shape)
        return dx, [dw, db]


class ReLU:
    def params(self):
        return []

    def forward(self, x):
        return np.maximum(x, 0.0), (x > 0.0)

    def backward(self, cache, dy):
        return dy * cache, []


class AvgPool2x2:
    """2x2 average pooling (stride 2) over NHWC; odd edge rows/cols drop."""

    def params(self):
        return []

    def forward(self, x):
        n, h, w, c = x.shape
        h2, w2 = h // 2, w // 2
        blocks = x[:, : h2 * 2, : w2 * 2, :].reshape(n, h2, 2, w2, 2, c)
        return blocks.mean(axis=(2, 4)), x.shape

    def backward(self, cache, dy):
        n, h, w, c = cache
        h2, w2 = h // 2, w // 2
        dx = np.zeros(cache)
        spread = np.repeat(np.repeat(dy, 2, axis=1), 2, axis=2) / 4.0
        dx[:, : h2 * 2, : w2 * 2, :] = spread
        return dx, []


class Flatten:
    def params(self):
        return []

    def forward(self, x):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, cache, dy):
        return dy.reshape(cache), []


class Dense:
    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator):
        self.w = _he_uniform(rng, (out_dim, in_dim), in_dim)
        self.b = np.zeros(out_dim)

    def params(self):
        return [self.w, self.b]

    def forward(self, x):
        return x @ self.w.T + self.b, x

    def backward(self, cache, dy):
        dw = dy.T @ cache
        db = dy.sum(axis=0)
        dx = dy @ self.w
        return dx, [dw, db]


@dataclass(frozen=True)
class NetConfig:
    channels: int = 8
    height: int = 5
    width: int = 64
    conv1_filters: int = 16
    conv2_filters: int = 32
    hidden1: int = 256
    hidden2: int = 64

    @property
    def flat_dim(self) -> int:
        return self.conv2_filters * (self.height // 2) * (self.width // 2)


class Network:
    """The fixed score network: two convolutions, three dense layers.

    Activations flow in NHWC layout internally; the public entry points take
    channel-first (C, H, W) images and relayout once at the boundary.
    """

    def __init__(self, cfg: NetConfig, seed: int = 0):
        self.cfg = cfg
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        self.layers = [
            Conv2D(cfg.channels, cfg.conv1_filters, 5, rng),
            ReLU(),
            Conv2D(cfg.conv1_filters, cfg.conv2_filters, 3, rng),
            ReLU(),
            AvgPool2x2(),
            Flatten(),
            Dense(cfg.flat_dim, cfg.hidden1, rng),
            ReLU(),
            Dense(cfg.hidden1, cfg.hidden2, rng),
            ReLU(),
            Dense(cfg.hidden2, 1, rng),
        ]
        self.layers[0].needs_input_grad = False  # first layer: skip dx

    def params(self):
        out = []
        for layer in self.layers:
            out.extend(layer.params())
        return out

    def param_layers(self):
        return [l for l in self.layers if l.params()]

    def forward_batch(self, x: np.ndarray, want_cache: bool = False):
        """Forward a batch already in internal (N, H, W, C) layout."""
        caches = []
        for layer in self.layers:
            x, cache = layer.forward(x)
            caches.append(cache)
        scores = x[:, 0]
        return (scores, caches) if want_cache else scores

    def backward_batch(self, caches, dscores: np.ndarray):
        """Gradients of sum_i dscores[i] * score_i w.r.t. every parameter."""
        dy = dscores[:, None]
        grads: list[np.ndarray] = []
        for layer, cache in zip(reversed(self.layers), reversed(caches)):
            dy, layer_grads = layer.backward(cache, dy)
            grads = layer_grads + grads
        return grads, dy

    def copy_weights(self):
        return [p.copy() for p in self.params()]

    def set_weights(self, weights) -> None:
        for p, w in zip(self.params(), weights, strict=True):
            if p.shape != w.shape:
                raise ValueError("weight shape mismatch")
            p[...] = w


def to_internal(img: np.ndarray) -> np.ndarray:
    """Relayout (C,H,W) or (N,C,H,W) channel-first images to internal NHWC."""
    img = np.asarray(img, dtype=float)
    if img.ndim == 3:
        return np.ascontiguousarray(img.transpose(1, 2, 0))
    if img.ndim == 4:
        return np.ascontiguousarray(img.transpose(0, 2, 3, 1))
    raise ValueError("expected (C,H,W) or (N,C,H,W)")


def forward(net: Network, img: np.ndarray):
    """Scalar noise score of one image, or a vector of scores for a batch."""
    img = np.asarray(img, dtype=float)
    single = img.ndim == 3
    batch = to_internal(img[None, ...] if single else img)
    cfg = net.cfg
    if batch.shape[1:] != (cfg.height, cfg.width, cfg.channels):
        raise ValueError(
            f"image shape {img.shape} does not match network input "
            f"(C,H,W)=({cfg.channels},{cfg.height},{cfg.width})"
        )
    scores = net.forward_batch(batch)
    return float(scores[0]) if single else scores


def predict_diff(net: Network, a: np.ndarray, b: np.ndarray) -> float:
    """Predicted noise(a) - noise(b); antisymmetric under swapping a and b."""
    return forward(net, a) - forward(net, b)


def pair_loss_and_grads(net: Network, img_a, img_b, label: float):
    """Squared error of predict_diff against the label, plus its gradients."""
    x = to_internal(np.stack([np.asarray(img_a), np.asarray(img_b)]))
    scores, caches = net.forward_batch(x, want_cache=True)
    diff = scores[0] - scores[1]
    err = diff - label
    loss = err * err
    grads, _ = net.backward_batch(caches, np.array([2.0 * err, -2.0 * err]))
    return float(loss), grads


def gradient_check(
    net: Network,
    img_a,
    img_b,
    label: float,
    rng: np.random.Generator,
    samples: int = 200,
    step: float = 1e-5,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Samples at least ``samples`` coordinates spread over every parameter
    tensor of every layer.
    """
    _, grads = pair_loss_and_grads(net, img_a, img_b, label)
    params = net.params()
    per_tensor = max(1, -(-samples // len(params)))
    worst = 0.0
    for p, g in zip(params, grads):
        flat = p.reshape(-1)
        count = min(per_tensor, flat.size)
        idx = rng.choice(flat.size, size=count, replace=False)
        for i in idx:
            orig = flat[i]
            flat[i] = orig + step
            up, _ = pair_loss_and_grads(net, img_a, img_b, label)
            flat[i] = orig - step
            down, _ = pair_loss_and_grads(net, img_a, img_b, label)
            flat[i] = orig
            numeric = (up - down) / (2.0 * step)
            analytic = g.reshape(-1)[i]
            denom = max(abs(analytic), abs(numeric), 1e-6)
            worst = max(worst, abs(analytic - numeric) / denom)
    return worst


# ---------------------------------------------------------------------------
# weight files: magic DQNM, u32 version, u32 x7 config, u32 layer count,
# per layer (u32 kind, u32 ndim, u32 dims...), then float64 LE payloads in
# declaration order (weight then bias per layer).
# ---------------------------------------------------------------------------


def save_weights(net: Network, path) -> None:
    cfg = net.cfg
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", _VERSION))
        fh.write(
            struct.pack(
                "<7I",
                cfg.channels,
                cfg.height,
                cfg.width,
                cfg.conv1_filters,
                cfg.conv2_filters,
                cfg.hidden1,
                cfg.hidden2,
            )
        )
        layers = net.param_layers()
        fh.write(struct.pack("<I", len(layers)))
        for layer in layers:
            kind = _KIND_CONV if isinstance(layer, Conv2D) else _KIND_DENSE
            shape = layer.w.shape
            fh.write(struct.pack("<II", kind, len(shape)))
            fh.write(struct.pack(f"<{len(shape)}I", *shape))
        for p in net.params():
            fh.write(p.astype("<f8").tobytes(order="C"))


def _read_exact(fh, count: int) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise ValueError("truncated weight file")
    return data


def load_weights(path) -> Network:
    with open(path, "rb") as fh:
        if _read_exact(fh, 4) != _MAGIC:
            raise ValueError("not a weight file (bad magic)")
        (version,) = struct.unpack("<I", _read_exact(fh, 4))
        if version != _VERSION:
            raise ValueError(f"unsupported weight file version {version}")
        cfg = NetConfig(*struct.unpack("<7I", _read_exact(fh, 28)))
        net = Network(cfg, seed=0)
        (n_layers,) = struct.unpack("<I", _read_exact(fh, 4))
        layers = net.param_layers()
        if n_layers != len(layers):
            raise ValueError("layer count mismatch")
        for layer in layers:
            kind, ndim = struct.unpack("<II", _read_exact(fh, 8))
            want_kind = _KIND_CONV if isinstance(layer, Conv2D) else _KIND_DENSE
            shape = struct.unpack(f"<{ndim}I", _read_exact(fh, 4 * ndim))
            if kind != want_kind or shape != layer.w.shape:
                raise ValueError("layer structure mismatch")
        weights = []
        for p in net.params():
            raw = _read_exact(fh, 8 * p.size)
            weights.append(np.frombuffer(raw, dtype="<f8").reshape(p.shape).copy())
        if fh.read(1):
            raise ValueError("trailing bytes in weight file")
        net.set_weights(weights)
        return net
