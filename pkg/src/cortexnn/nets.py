"""Base networks: an MLP regressor and a small CNN classifier.

Both are trained by hand-derived backpropagation with Adam. Parameters
live in one flat float64 vector per network; layers address it through
views, so the optimizer and serialization never need to know the layer
structure. Image tensors are channels-last (H, W, C), row-major.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import Shape, Tensor, from_array, make_tensor

PROB_FLOOR = 1e-12  # cross-entropy clamp: loss never exceeds -log(PROB_FLOOR)


class NetError(ValueError):
    pass


@dataclass(frozen=True)
class NetworkConfig:
    """Geometry of a base network.

    kind "mlp-regressor": input_shape (d,) -> hidden widths -> output_shape,
    relu between layers, linear output.
    kind "cnn-classifier": (H, W, C) -> conv k×k -> pool -> conv k×k -> pool
    -> fully connected -> class scores, relu throughout, softmax output.
    """

    kind: str
    input_shape: tuple[int, ...]
    output_shape: tuple[int, ...]
    hidden: tuple[int, ...] = (16,)
    conv_channels: tuple[int, int] = (8, 16)
    kernel_size: int = 5
    pool_size: int = 2
    fc_width: int = 64
    output: str = ""

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(int(d) for d in self.input_shape))
        object.__setattr__(self, "output_shape", tuple(int(d) for d in self.output_shape))
        object.__setattr__(self, "hidden", tuple(int(d) for d in self.hidden))
        object.__setattr__(self, "conv_channels", tuple(int(d) for d in self.conv_channels))
        if self.kind not in ("mlp-regressor", "cnn-classifier"):
            raise NetError(f"unknown network kind {self.kind!r}")
        if not self.output:
            object.__setattr__(
                self, "output", "softmax" if self.kind == "cnn-classifier" else "linear"
            )
        if self.output not in ("linear", "softmax"):
            raise NetError(f"unknown output {self.output!r}")


@dataclass
class AdamState:
    t: int
    m: np.ndarray
    v: np.ndarray
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def fresh(cls, n_params: int, learning_rate: float, **kw) -> "AdamState":
        return cls(t=0, m=np.zeros(n_params), v=np.zeros(n_params), learning_rate=learning_rate, **kw)


@dataclass
class TrainReport:
    losses: list[float]
    final_loss: float
    epochs: int
    seed: int


# ---------------------------------------------------------------------------
# layers
# ---------------------------------------------------------------------------


class _Dense:
    def __init__(self, din, dout, offset):
        self.din, self.dout = din, dout
        self.w = (offset, offset + din * dout, (din, dout))
        self.b = (self.w[1], self.w[1] + dout, (dout,))
        self.end = self.b[1]
        self.fan = (din, dout)

    def _wb(self, params):
        w = params[self.w[0]:self.w[1]].reshape(self.w[2])
        b = params[self.b[0]:self.b[1]]
        return w, b

    def forward(self, params, x):
        w, b = self._wb(params)
        return x @ w + b, x

    def backward(self, params, dout, cache, dparams):
        w, _ = self._wb(params)
        x = cache
        dw, db = self._wb(dparams)
        dw += x.T @ dout
        db += dout.sum(axis=0)
        return dout @ w.T


class _Relu:
    end = None
    fan = None

    def __init__(self, offset):
        self.end = offset

    def forward(self, params, x):
        return np.maximum(0.0, x), x

    def backward(self, params, dout, cache, dparams):
        return dout * (cache > 0.0)


class _Conv:
    """Valid (no padding) stride-1 convolution via patch extraction.

    Weights are stored as (Cin, K, K, F) to match the (…, C, K, K) patch
    layout that sliding windows produce.
    """

    def __init__(self, in_hw, cin, cout, k, offset):
        self.h, self.w_in = in_hw
        self.cin, self.cout, self.k = cin, cout, k
        self.oh, self.ow = self.h - k + 1, self.w_in - k + 1
        if self.oh < 1 or self.ow < 1:
            raise NetError(f"kernel {k} too large for {self.h}x{self.w_in} input")
        n_w = cin * k * k * cout
        self.w = (offset, offset + n_w, (cin * k * k, cout))
        self.b = (self.w[1], self.w[1] + cout, (cout,))
        self.end = self.b[1]
        self.fan = (k * k * cin, k * k * cout)

    def _wb(self, params):
        w = params[self.w[0]:self.w[1]].reshape(self.w[2])
        b = params[self.b[0]:self.b[1]]
        return w, b

    def forward(self, params, x):
        w, b = self._wb(params)
        n = x.shape[0]
        # (N, OH, OW, C, K, K) view over the image axes
        windows = sliding_window_view(x, (self.k, self.k), axis=(1, 2))
        cols = windows.reshape(n * self.oh * self.ow, self.cin * self.k * self.k)
        out = cols @ w + b
        return out.reshape(n, self.oh, self.ow, self.cout), cols

    def backward(self, params, dout, cache, dparams):
        w, _ = self._wb(params)
        cols = cache
        n = dout.shape[0]
        dout2 = dout.reshape(n * self.oh * self.ow, self.cout)
        dw, db = self._wb(dparams)
        dw += cols.T @ dout2
        db += dout2.sum(axis=0)
        dcols = (dout2 @ w.T).reshape(n, self.oh, self.ow, self.cin, self.k, self.k)
        dx = np.zeros((n, self.h, self.w_in, self.cin))
        for ki in range(self.k):
            for kj in range(self.k):
                dx[:, ki:ki + self.oh, kj:kj + self.ow, :] += dcols[:, :, :, :, ki, kj]
        return dx


class _MaxPool:
    def __init__(self, in_hw, channels, p, offset):
        self.h, self.w_in = in_hw
        self.c, self.p = channels, p
        if self.h % p or self.w_in % p:
            raise NetError(f"pool size {p} does not divide {self.h}x{self.w_in}")
        self.oh, self.ow = self.h // p, self.w_in // p
        self.end = offset
        self.fan = None

    def forward(self, params, x):
        n = x.shape[0]
        tiles = x.reshape(n, self.oh, self.p, self.ow, self.p, self.c)
        flat = tiles.transpose(0, 1, 3, 2, 4, 5).reshape(n, self.oh, self.ow, self.p * self.p, self.c)
        idx = np.argmax(flat, axis=3)  # first max wins ties, deterministic
        out = np.take_along_axis(flat, idx[:, :, :, None, :], axis=3)[:, :, :, 0, :]
        return out, idx

    def backward(self, params, dout, cache, dparams):
        idx = cache
        n = dout.shape[0]
        dflat = np.zeros((n, self.oh, self.ow, self.p * self.p, self.c))
        np.put_along_axis(dflat, idx[:, :, :, None, :], dout[:, :, :, None, :], axis=3)
        dtiles = dflat.reshape(n, self.oh, self.ow, self.p, self.p, self.c).transpose(0, 1, 3, 2, 4, 5)
        return dtiles.reshape(n, self.h, self.w_in, self.c)


class _Flatten:
    def __init__(self, in_shape, offset):
        self.in_shape = in_shape
        self.end = offset
        self.fan = None

    def forward(self, params, x):
        return x.reshape(x.shape[0], -1), None

    def backward(self, params, dout, cache, dparams):
        return dout.reshape(dout.shape[0], *self.in_shape)


def _build_layers(config: NetworkConfig):
    layers = []
    off = 0
    if config.kind == "mlp-regressor":
        if len(config.input_shape) != 1 or len(config.output_shape) != 1:
            raise NetError("mlp-regressor needs 1-D input and output shapes")
        if not config.hidden:
            raise NetError("mlp-regressor needs at least one hidden layer")
        widths = (config.input_shape[0], *config.hidden, config.output_shape[0])
        for i in range(len(widths) - 1):
            dense = _Dense(widths[i], widths[i + 1], off)
            off = dense.end
            layers.append(dense)
            if i < len(widths) - 2:
                layers.append(_Relu(off))
    else:
        if len(config.input_shape) != 3:
            raise NetError("cnn-classifier needs an (H, W, C) input shape")
        if len(config.output_shape) != 1:
            raise NetError("cnn-classifier needs a 1-D output shape (class count)")
        h, w, c = config.input_shape
        c1, c2 = config.conv_channels
        conv1 = _Conv((h, w), c, c1, config.kernel_size, off)
        off = conv1.end
        pool1 = _MaxPool((conv1.oh, conv1.ow), c1, config.pool_size, off)
        conv2 = _Conv((pool1.oh, pool1.ow), c1, c2, config.kernel_size, off)
        off = conv2.end
        pool2 = _MaxPool((conv2.oh, conv2.ow), c2, config.pool_size, off)
        flat_n = pool2.oh * pool2.ow * c2
        flatten = _Flatten((pool2.oh, pool2.ow, c2), off)
        fc = _Dense(flat_n, config.fc_width, off)
        off = fc.end
        out = _Dense(config.fc_width, config.output_shape[0], off)
        off = out.end
        layers = [conv1, _Relu(conv1.end), pool1, conv2, _Relu(conv2.end), pool2,
                  flatten, fc, _Relu(fc.end), out]
    return layers, off


class BaseNetwork:
    """A trainable network with an integer id within its task group."""

    def __init__(self, net_id: int, config: NetworkConfig, params: np.ndarray):
        self.id = net_id
        self.config = config
        self.layers, n = _build_layers(config)
        if params.size != n:
            raise NetError(f"expected {n} parameters, got {params.size}")
        self.params = params

    @property
    def n_params(self) -> int:
        return self.params.size

    def with_id(self, net_id: int) -> "BaseNetwork":
        return BaseNetwork(net_id, self.config, self.params)


def init_network(config: NetworkConfig, seed: int) -> BaseNetwork:
    """Seeded fan-balanced uniform init: every parameter of a layer is drawn
    from U(-a, a) with a = sqrt(6 / (fan_in + fan_out))."""
    layers, n = _build_layers(config)
    params = np.zeros(n)
    rng = np.random.default_rng(seed)
    for layer in layers:
        if layer.fan is None:
            continue
        a = np.sqrt(6.0 / sum(layer.fan))
        params[layer.w[0]:layer.b[1]] = rng.uniform(-a, a, layer.b[1] - layer.w[0])
    return BaseNetwork(0, config, params)


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def forward_batch(net: BaseNetwork, x: np.ndarray, caches=None) -> np.ndarray:
    """Run a (N, *input_shape) batch through the network."""
    out = x
    for layer in net.layers:
        out, cache = layer.forward(net.params, out)
        if caches is not None:
            caches.append(cache)
    if net.config.output == "softmax":
        if caches is not None:
            caches.append(out)  # logits, needed by the loss gradient
        out = _softmax(out)
    return out


def forward(net: BaseNetwork, x: Tensor) -> Tensor:
    """Single-sample inference; output tensor has the config's output shape."""
    if x.shape.dims != net.config.input_shape:
        raise NetError(
            f"input shape {x.shape} does not match network input {net.config.input_shape}"
        )
    out = forward_batch(net, x.to_array()[None, ...])
    return from_array(out[0].reshape(net.config.output_shape))


def loss_mse(pred: Tensor, target: Tensor) -> float:
    """Mean squared componentwise difference."""
    if pred.shape.dims != target.shape.dims:
        raise NetError(f"shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred.data - target.data
    return float(np.mean(diff * diff))


def loss_cross_entropy(pred: Tensor, target: Tensor) -> float:
    """-log predicted probability of the true class; target must be one-hot.

    The predicted probability is floored at 1e-12, so the loss is capped
    at -log(1e-12).
    """
    if pred.shape.dims != target.shape.dims:
        raise NetError(f"shape mismatch: {pred.shape} vs {target.shape}")
    t = target.data
    ones = np.nonzero(t == 1.0)[0]
    if ones.size != 1 or np.count_nonzero(t) != 1:
        raise NetError("target is not one-hot")
    p = max(float(pred.data[ones[0]]), PROB_FLOOR)
    return -float(np.log(p))


def _batch_loss_and_dlogits(net, logits_or_pred, y, loss_kind):
    n = y.shape[0]
    if loss_kind == "mse":
        pred = logits_or_pred
        diff = pred - y
        loss = float(np.mean(diff * diff))
        dlogits = 2.0 * diff / diff.size
    elif loss_kind == "cross-entropy":
        probs = logits_or_pred
        p_true = np.clip((probs * y).sum(axis=1), PROB_FLOOR, None)
        loss = float(np.mean(-np.log(p_true)))
        dlogits = (probs - y) / n
    else:
        raise NetError(f"unknown loss kind {loss_kind!r}")
    return loss, dlogits


def _check_loss_kind(net, loss_kind):
    if loss_kind == "mse" and net.config.output != "linear":
        raise NetError("mse loss expects a linear-output network")
    if loss_kind == "cross-entropy" and net.config.output != "softmax":
        raise NetError("cross-entropy loss expects a softmax-output network")


def backward_batch(net: BaseNetwork, x: np.ndarray, y: np.ndarray, loss_kind: str):
    """Batch loss and the flat parameter gradient of the batch-mean loss."""
    _check_loss_kind(net, loss_kind)
    caches = []
    out = forward_batch(net, x, caches)
    if net.config.output == "softmax":
        caches.pop()  # logits cache not needed: softmax+CE folds into dlogits
    loss, dout = _batch_loss_and_dlogits(net, out, y, loss_kind)
    dparams = np.zeros_like(net.params)
    for layer, cache in zip(reversed(net.layers), reversed(caches)):
        dout = layer.backward(net.params, dout, cache, dparams)
    return loss, dparams


def gradients(net: BaseNetwork, x: Tensor, y: Tensor, loss_kind: str) -> np.ndarray:
    """d(loss)/d(parameter) for one sample, flat, same length as params."""
    if x.shape.dims != net.config.input_shape:
        raise NetError(f"input shape {x.shape} does not match {net.config.input_shape}")
    if y.shape.dims != net.config.output_shape:
        raise NetError(f"target shape {y.shape} does not match {net.config.output_shape}")
    xb = x.to_array()[None, ...]
    yb = y.data.reshape(1, -1)
    _, dparams = backward_batch(net, xb, yb, loss_kind)
    return dparams


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState):
    """Standard bias-corrected Adam update, in place; returns (params, state)."""
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise NetError("params, grads and Adam state must have equal lengths")
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = state.m / (1.0 - state.beta1 ** state.t)
    v_hat = state.v / (1.0 - state.beta2 ** state.t)
    params -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)
    return params, state


def _stack(tensors, expect_shape):
    arrs = []
    for i, t in enumerate(tensors):
        if t.shape.dims != expect_shape:
            raise NetError(f"sample {i} has shape {t.shape}, expected {expect_shape}")
        arrs.append(t.to_array())
    return np.stack(arrs)


def train(
    net: BaseNetwork,
    X: list[Tensor],
    Y: list[Tensor],
    epochs: int,
    batch_size: int = 0,
    learning_rate: float = 1e-4,
    seed: int = 0,
) -> TrainReport:
    """Train in place with Adam; deterministic for a given seed.

    batch_size 0 means full batch. The recorded per-epoch loss is the mean
    pre-update loss across that epoch's batches.
    """
    if len(X) == 0 or len(X) != len(Y):
        raise NetError("training needs equally many inputs and targets, at least one each")
    xb = _stack(X, net.config.input_shape)
    yb = _stack(Y, net.config.output_shape).reshape(len(Y), -1)
    loss_kind = "cross-entropy" if net.config.output == "softmax" else "mse"
    n = xb.shape[0]
    bs = n if batch_size in (0, None) or batch_size >= n else batch_size
    rng = np.random.default_rng(seed)
    state = AdamState.fresh(net.n_params, learning_rate)
    losses = []
    for _ in range(epochs):
        order = rng.permutation(n) if bs < n else np.arange(n)
        total = 0.0
        for start in range(0, n, bs):
            sel = order[start:start + bs]
            loss, grads = backward_batch(net, xb[sel], yb[sel], loss_kind)
            adam_step(net.params, grads, state)
            total += loss * sel.size
        losses.append(total / n)
    return TrainReport(losses=losses, final_loss=losses[-1] if losses else float("nan"),
                       epochs=epochs, seed=seed)


def batch_outputs(net: BaseNetwork, X: list[Tensor]) -> np.ndarray:
    """(N, output_size) network outputs for a list of input tensors."""
    xb = _stack(X, net.config.input_shape)
    return forward_batch(net, xb).reshape(len(X), -1)
