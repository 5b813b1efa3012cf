"""MFCC-CNN: three conv/BN/ReLU/max-pool stages, a 256-unit dense layer, softmax.

Tensors are NHWC. Everything is plain numpy with hand-written backward passes;
training uses mini-batch Adam with a coupled L2 penalty on conv and dense kernels.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class CnnArchitecture:
    input_shape: tuple[int, int] = (20, 85)
    filters: tuple[int, ...] = (16, 16, 32)
    kernels: tuple[int, ...] = (2, 2, 3)
    dense_units: int = 256
    n_classes: int = 3
    dropout_conv3: float = 0.2
    dropout_flatten: float = 0.5
    dropout_dense: float = 0.2
    bn_momentum: float = 0.9
    bn_eps: float = 1e-5
    output_init_scale: float = 0.1

    def __post_init__(self) -> None:
        object.__setattr__(self, "input_shape", tuple(self.input_shape))
        object.__setattr__(self, "filters", tuple(self.filters))
        object.__setattr__(self, "kernels", tuple(self.kernels))
        if len(self.filters) != len(self.kernels):
            raise ValueError("filters and kernels must have the same length")

    def stage_shapes(self) -> list[tuple[int, int]]:
        """Spatial size entering each conv stage, then after the last pool."""
        h, w = self.input_shape
        shapes = [(h, w)]
        for _ in self.filters:
            h, w = h // 2, w // 2
            shapes.append((h, w))
        return shapes

    @property
    def flat_size(self) -> int:
        h, w = self.stage_shapes()[-1]
        return h * w * self.filters[-1]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    l2: float = 0.1
    batch_size: int = 32
    epochs: int = 60
    seed: int = 0
    dtype: str = "float32"

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


# ---------------------------------------------------------------- layers


def _same_pad(k: int) -> tuple[int, int]:
    before = (k - 1) // 2
    return before, k - 1 - before


def conv_forward(x, W, b):
    """Stride-1 'same' convolution; for even kernels the extra zero row/column goes after."""
    k = W.shape[0]
    p0, p1 = _same_pad(k)
    xp = np.pad(x, ((0, 0), (p0, p1), (p0, p1), (0, 0)))
    B, H, Wd, C = x.shape
    cols = sliding_window_view(xp, (k, k), axis=(1, 2))  # B,H,W,C,k,k
    cols = cols.transpose(0, 1, 2, 4, 5, 3).reshape(B * H * Wd, k * k * C)
    out = cols @ W.reshape(k * k * C, -1) + b
    return out.reshape(B, H, Wd, -1), (cols, x.shape, W)


def conv_backward(dout, cache):
    cols, xshape, W = cache
    B, H, Wd, C = xshape
    k = W.shape[0]
    p0, p1 = _same_pad(k)
    F = W.shape[3]
    dflat = dout.reshape(-1, F)
    dW = (cols.T @ dflat).reshape(W.shape)
    db = dflat.sum(axis=0)
    dcols = (dflat @ W.reshape(k * k * C, F).T).reshape(B, H, Wd, k, k, C)
    dxp = np.zeros((B, H + k - 1, Wd + k - 1, C), dtype=dout.dtype)
    for i in range(k):
        for j in range(k):
            dxp[:, i : i + H, j : j + Wd, :] += dcols[:, :, :, i, j, :]
    return dxp[:, p0 : p0 + H, p0 : p0 + Wd, :], dW, db


def _channel_sum(x2):
    # BLAS reduction over rows; much faster than ufunc.reduce on (N, small C)
    return np.ones(x2.shape[0], dtype=x2.dtype) @ x2


def batchnorm_forward(x, gamma, beta, state, training: bool, momentum: float, eps: float):
    """Per-channel batch norm over every axis but the last."""
    shape = x.shape
    x2 = x.reshape(-1, shape[-1])
    if training:
        m = x2.shape[0]
        mu = _channel_sum(x2) / m
        centred = x2 - mu
        var = _channel_sum(centred * centred) / m
        state["mean"] = momentum * state["mean"] + (1.0 - momentum) * mu
        state["var"] = momentum * state["var"] + (1.0 - momentum) * var
    else:
        mu, var = state["mean"], state["var"]
        centred = x2 - mu
    inv = (1.0 / np.sqrt(var + eps)).astype(x.dtype)
    xhat = centred * inv
    return (xhat * gamma + beta).reshape(shape), (xhat, inv, gamma)


def batchnorm_backward(dout, cache):
    xhat, inv, gamma = cache
    shape = dout.shape
    d2 = dout.reshape(-1, shape[-1])
    m = d2.shape[0]
    dgamma = _channel_sum(d2 * xhat)
    dbeta = _channel_sum(d2)
    dx = (inv * gamma / m) * (m * d2 - dbeta - xhat * dgamma)
    return dx.reshape(shape), dgamma, dbeta


def maxpool_forward(x):
    """2x2 stride-2 pooling; odd trailing rows/columns are dropped."""
    B, H, W, C = x.shape
    h, w = H // 2, W // 2
    win = x[:, : 2 * h, : 2 * w, :].reshape(B, h, 2, w, 2, C).transpose(0, 1, 3, 5, 2, 4).reshape(B, h, w, C, 4)
    arg = win.argmax(axis=-1)
    out = np.take_along_axis(win, arg[..., None], axis=-1)[..., 0]
    return out, (arg, x.shape)


def maxpool_backward(dout, cache):
    arg, (B, H, W, C) = cache
    h, w = H // 2, W // 2
    dwin = np.zeros((B, h, w, C, 4), dtype=dout.dtype)
    np.put_along_axis(dwin, arg[..., None], dout[..., None], axis=-1)
    dx = np.zeros((B, H, W, C), dtype=dout.dtype)
    dx[:, : 2 * h, : 2 * w, :] = dwin.reshape(B, h, w, C, 2, 2).transpose(0, 1, 4, 2, 5, 3).reshape(B, 2 * h, 2 * w, C)
    return dx


def dropout_mask(shape, rate: float, rng: np.random.Generator, dtype) -> np.ndarray | None:
    if rate <= 0:
        return None
    keep = 1.0 - rate
    return ((rng.random(shape) < keep) / keep).astype(dtype)


def softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(proba, y) -> float:
    p = proba[np.arange(y.shape[0]), y]
    return float(-np.mean(np.log(np.maximum(p, 1e-300))))


# ---------------------------------------------------------------- model


def _glorot(rng, shape, fan_in, fan_out, dtype):
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class CnnModel:
    kind = "cnn"

    def __init__(self, arch: CnnArchitecture = CnnArchitecture(), seed: int = 0, dtype="float32"):
        self.arch = arch
        self.dtype = np.dtype(dtype)
        self.params: dict[str, np.ndarray] = {}
        self.bn_state: dict[str, dict[str, np.ndarray]] = {}
        # per-coefficient input scaling fitted on training data
        self.input_mean = np.zeros(arch.input_shape[0], dtype=self.dtype)
        self.input_std = np.ones(arch.input_shape[0], dtype=self.dtype)
        self._init(np.random.default_rng(seed))

    def _init(self, rng: np.random.Generator) -> None:
        a, dt = self.arch, self.dtype
        c_in = 1
        for i, (f, k) in enumerate(zip(a.filters, a.kernels), start=1):
            self.params[f"conv{i}.W"] = _glorot(rng, (k, k, c_in, f), k * k * c_in, k * k * f, dt)
            self.params[f"conv{i}.b"] = np.zeros(f, dtype=dt)
            self.params[f"bn{i}.gamma"] = np.ones(f, dtype=dt)
            self.params[f"bn{i}.beta"] = np.zeros(f, dtype=dt)
            self.bn_state[f"bn{i}"] = {"mean": np.zeros(f, dtype=dt), "var": np.ones(f, dtype=dt)}
            c_in = f
        self.params["dense1.W"] = _glorot(rng, (a.flat_size, a.dense_units), a.flat_size, a.dense_units, dt)
        self.params["dense1.b"] = np.zeros(a.dense_units, dtype=dt)
        # shrunken output layer: initial predictions start close to uniform
        self.params["dense2.W"] = (
            _glorot(rng, (a.dense_units, a.n_classes), a.dense_units, a.n_classes, dt) * a.output_init_scale
        ).astype(dt)
        self.params["dense2.b"] = np.zeros(a.n_classes, dtype=dt)

    @property
    def n_stages(self) -> int:
        return len(self.arch.filters)

    def decay_keys(self) -> list[str]:
        """Parameters carrying the L2 penalty: conv and dense kernels only."""
        return [k for k in self.params if k.endswith(".W")]

    def set_input_scaling(self, mean: np.ndarray, std: np.ndarray) -> None:
        self.input_mean = np.asarray(mean, dtype=self.dtype)
        self.input_std = np.asarray(std, dtype=self.dtype)

    def _prepare(self, x) -> np.ndarray:
        x = np.asarray(x)
        if x.ndim == 2:
            x = x[None]
        if x.shape[1:] != self.arch.input_shape:
            raise ValueError(f"expected input shape {self.arch.input_shape}, got {x.shape[1:]}")
        x = (x.astype(self.dtype) - self.input_mean[:, None]) / self.input_std[:, None]
        return x[..., None]

    def forward(self, x, training: bool = False, rng: np.random.Generator | None = None):
        """Logits for a batch plus the cache needed by :meth:`backward`."""
        a, p = self.arch, self.params
        h = self._prepare(x)
        caches = []
        for i in range(1, self.n_stages + 1):
            h, c_conv = conv_forward(h, p[f"conv{i}.W"], p[f"conv{i}.b"])
            h, c_bn = batchnorm_forward(
                h, p[f"bn{i}.gamma"], p[f"bn{i}.beta"], self.bn_state[f"bn{i}"], training, a.bn_momentum, a.bn_eps
            )
            relu = h > 0
            h = h * relu
            h, c_pool = maxpool_forward(h)
            mask = None
            if training and i == self.n_stages:
                mask = dropout_mask(h.shape, a.dropout_conv3, rng, self.dtype)
                if mask is not None:
                    h = h * mask
            caches.append((c_conv, c_bn, relu, c_pool, mask))
        pooled_shape = h.shape
        h = h.reshape(h.shape[0], -1)
        m_flat = dropout_mask(h.shape, a.dropout_flatten, rng, self.dtype) if training else None
        if m_flat is not None:
            h = h * m_flat
        x_d1 = h
        z1 = x_d1 @ p["dense1.W"] + p["dense1.b"]
        relu1 = z1 > 0
        h1 = z1 * relu1
        m_dense = dropout_mask(h1.shape, a.dropout_dense, rng, self.dtype) if training else None
        if m_dense is not None:
            h1 = h1 * m_dense
        logits = h1 @ p["dense2.W"] + p["dense2.b"]
        cache = (caches, pooled_shape, m_flat, x_d1, relu1, m_dense, h1)
        return logits, cache

    def backward(self, dlogits, cache) -> dict[str, np.ndarray]:
        p = self.params
        caches, pooled_shape, m_flat, x_d1, relu1, m_dense, h1 = cache
        g: dict[str, np.ndarray] = {}
        g["dense2.W"] = h1.T @ dlogits
        g["dense2.b"] = dlogits.sum(axis=0)
        dh1 = dlogits @ p["dense2.W"].T
        if m_dense is not None:
            dh1 = dh1 * m_dense
        dz1 = dh1 * relu1
        g["dense1.W"] = x_d1.T @ dz1
        g["dense1.b"] = dz1.sum(axis=0)
        dh = dz1 @ p["dense1.W"].T
        if m_flat is not None:
            dh = dh * m_flat
        dh = dh.reshape(pooled_shape)
        for i in range(self.n_stages, 0, -1):
            c_conv, c_bn, relu, c_pool, mask = caches[i - 1]
            if mask is not None:
                dh = dh * mask
            dh = maxpool_backward(dh, c_pool)
            dh = dh * relu
            dh, g[f"bn{i}.gamma"], g[f"bn{i}.beta"] = batchnorm_backward(dh, c_bn)
            dh, g[f"conv{i}.W"], g[f"conv{i}.b"] = conv_backward(dh, c_conv)
        return g

    def loss_and_grads(self, x, y, l2: float, rng: np.random.Generator | None, training: bool = True):
        """Mean cross-entropy, the L2 term, and gradients of their sum."""
        logits, cache = self.forward(x, training=training, rng=rng)
        proba = softmax(logits.astype(np.float64))
        n = y.shape[0]
        data_loss = cross_entropy(proba, y)
        dlogits = proba.copy()
        dlogits[np.arange(n), y] -= 1.0
        grads = self.backward((dlogits / n).astype(self.dtype), cache)
        reg = 0.0
        if l2:
            for k in self.decay_keys():
                w = self.params[k]
                reg += float(np.sum(w.astype(np.float64) ** 2))
                grads[k] = grads[k] + (2.0 * l2) * w
        return data_loss, l2 * reg, grads, proba

    def predict_proba(self, x, batch_size: int = 256) -> np.ndarray:
        x = np.asarray(x)
        if x.ndim == 2:
            x = x[None]
        out = []
        for i in range(0, x.shape[0], batch_size):
            logits, _ = self.forward(x[i : i + batch_size], training=False)
            out.append(softmax(logits.astype(np.float64)))
        return np.concatenate(out, axis=0)

    def predict(self, x) -> np.ndarray:
        return self.predict_proba(x).argmax(axis=1)

    # serialisation hooks
    def get_params(self) -> dict:
        return {"architecture": asdict(self.arch), "dtype": self.dtype.name}

    def arrays(self) -> dict[str, np.ndarray]:
        out = dict(self.params)
        for name, st in self.bn_state.items():
            out[f"{name}.running_mean"] = st["mean"]
            out[f"{name}.running_var"] = st["var"]
        out["input.mean"] = self.input_mean
        out["input.std"] = self.input_std
        return out

    @classmethod
    def from_arrays(cls, params: dict, arrays: dict) -> "CnnModel":
        model = cls(CnnArchitecture(**params["architecture"]), dtype=params.get("dtype", "float32"))
        for k in model.params:
            model.params[k] = arrays[k].astype(model.dtype)
        for name, st in model.bn_state.items():
            st["mean"] = arrays[f"{name}.running_mean"].astype(model.dtype)
            st["var"] = arrays[f"{name}.running_var"].astype(model.dtype)
        model.input_mean = arrays["input.mean"].astype(model.dtype)
        model.input_std = arrays["input.std"].astype(model.dtype)
        return model


def cnn_forward(model: CnnModel, tensor: np.ndarray) -> np.ndarray:
    """Class probabilities for one input matrix, inference mode."""
    tensor = np.asarray(tensor)
    if tensor.shape != model.arch.input_shape:
        raise ValueError(f"expected shape {model.arch.input_shape}, got {tensor.shape}")
    return model.predict_proba(tensor[None])[0]


# ---------------------------------------------------------------- training


class Adam:
    def __init__(self, cfg: TrainConfig):
        self.cfg = cfg
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        c = self.cfg
        self.t += 1
        bc1 = 1.0 - c.beta1**self.t
        bc2 = 1.0 - c.beta2**self.t
        for k, g in grads.items():
            if k not in self.m:
                self.m[k] = np.zeros_like(g)
                self.v[k] = np.zeros_like(g)
            self.m[k] = c.beta1 * self.m[k] + (1.0 - c.beta1) * g
            self.v[k] = c.beta2 * self.v[k] + (1.0 - c.beta2) * g * g
            update = c.learning_rate * (self.m[k] / bc1) / (np.sqrt(self.v[k] / bc2) + c.adam_eps)
            params[k] = params[k] - update.astype(params[k].dtype)


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    train_acc: float
    test_loss: float | None = None
    test_acc: float | None = None


def _input_scaling(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # one mean/std per cepstral coefficient, pooled over frames and samples
    mean = X.mean(axis=(0, 2))
    std = np.maximum(X.std(axis=(0, 2)), 1e-12)
    return mean, std


def cnn_train(
    X_train: np.ndarray,
    y_train: np.ndarray,
    config: TrainConfig = TrainConfig(),
    arch: CnnArchitecture = CnnArchitecture(),
    X_test: np.ndarray | None = None,
    y_test: np.ndarray | None = None,
    callback=None,
) -> tuple[CnnModel, list[EpochLog]]:
    """Train from scratch; returns the model and one log row per epoch.

    Seeds derived from ``config.seed`` drive initialisation, shuffling and
    dropout, so a fixed seed reproduces the model bit for bit.
    """
    X_train = np.asarray(X_train, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.int64)
    if X_train.shape[0] == 0:
        raise ValueError("empty training set")
    init_seq, shuffle_seq, dropout_seq = np.random.SeedSequence(config.seed).spawn(3)
    model = CnnModel(arch, seed=int(init_seq.generate_state(1)[0]), dtype=config.dtype)
    model.set_input_scaling(*_input_scaling(X_train))
    shuffle_rng = np.random.default_rng(shuffle_seq)
    dropout_rng = np.random.default_rng(dropout_seq)
    opt = Adam(config)
    log: list[EpochLog] = []
    n = X_train.shape[0]
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(n)
        loss_sum, correct = 0.0, 0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            data_loss, _, grads, proba = model.loss_and_grads(X_train[idx], y_train[idx], config.l2, dropout_rng)
            if not np.isfinite(data_loss):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}, batch starting {start}")
            opt.step(model.params, grads)
            loss_sum += data_loss * idx.shape[0]
            correct += int(np.sum(proba.argmax(axis=1) == y_train[idx]))
        row = EpochLog(epoch, loss_sum / n, correct / n)
        if X_test is not None and y_test is not None and len(y_test):
            proba = model.predict_proba(X_test)
            row.test_loss = cross_entropy(proba, np.asarray(y_test))
            row.test_acc = float(np.mean(proba.argmax(axis=1) == y_test))
        log.append(row)
        if callback is not None:
            callback(row)
    return model, log
