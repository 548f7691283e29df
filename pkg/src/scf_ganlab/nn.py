"""Float64 network primitives with hand-written backward passes.

A ``Mlp`` owns one flat parameter vector and one flat gradient vector; every
layer works on views into those buffers, so the optimizer and the weight
clipper act on a single contiguous array.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import BatchTooSmallError, ConfigError, NumericError, ShapeError
from .rng import Prng

ACTIVATIONS = ("relu", "tanh", "sigmoid", "identity")


def _check_2d(x, cols, what):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != cols:
        raise ShapeError(f"{what}: expected (*, {cols}), got {x.shape}")
    return x


def sigmoid(x):
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def softplus(x):
    return np.logaddexp(0.0, x)


class Dense:
    kind = "dense"

    def __init__(self, in_dim: int, out_dim: int):
        self.in_dim, self.out_dim = int(in_dim), int(out_dim)
        self.W = np.zeros((self.in_dim, self.out_dim))
        self.b = np.zeros(self.out_dim)
        self.dW = np.zeros_like(self.W)
        self.db = np.zeros_like(self.b)
        self._x = None

    @property
    def n_params(self):
        return self.in_dim * self.out_dim + self.out_dim

    def bind(self, params, grads):
        k = self.in_dim * self.out_dim
        params[:k] = self.W.ravel()
        params[k:] = self.b
        self.W, self.b = params[:k].reshape(self.W.shape), params[k:]
        self.dW, self.db = grads[:k].reshape(self.W.shape), grads[k:]

    def init_glorot(self, rng: Prng):
        limit = np.sqrt(6.0 / (self.in_dim + self.out_dim))
        u = rng.uniform(self.W.size).reshape(self.W.shape)
        self.W[...] = limit * (2.0 * u - 1.0)
        self.b[...] = 0.0

    def forward(self, x, train=True):
        x = _check_2d(x, self.in_dim, "dense input")
        self._x = x
        return x @ self.W + self.b

    def backward(self, dy):
        dy = _check_2d(dy, self.out_dim, "dense upstream gradient")
        if dy.shape[0] != self._x.shape[0]:
            raise ShapeError(f"dense upstream gradient: expected {(self._x.shape[0], self.out_dim)}, got {dy.shape}")
        self.dW[...] = self._x.T @ dy
        self.db[...] = dy.sum(axis=0)
        return dy @ self.W.T

    def spec(self):
        return {"kind": "dense", "in_dim": self.in_dim, "out_dim": self.out_dim}


class BatchNorm1D:
    """Batch normalization over the batch axis, population variance in train mode.

    ``momentum`` weights the old running value:
    ``running = momentum * running + (1 - momentum) * batch``.
    """

    kind = "batchnorm"

    def __init__(self, dim: int, epsilon: float = 1e-5, momentum: float = 0.9):
        if epsilon < 0:
            raise ConfigError(f"batchnorm epsilon must be >= 0, got {epsilon}")
        if not 0.0 < momentum <= 1.0:
            raise ConfigError(f"batchnorm momentum must be in (0, 1], got {momentum}")
        self.dim = int(dim)
        self.epsilon = float(epsilon)
        self.momentum = float(momentum)
        self.gamma = np.ones(self.dim)
        self.beta = np.zeros(self.dim)
        self.dgamma = np.zeros(self.dim)
        self.dbeta = np.zeros(self.dim)
        self.running_mean = np.zeros(self.dim)
        self.running_var = np.ones(self.dim)
        self.mode = "train"
        self._cache = None

    @property
    def n_params(self):
        return 2 * self.dim

    def bind(self, params, grads):
        d = self.dim
        params[:d], params[d:] = self.gamma, self.beta
        self.gamma, self.beta = params[:d], params[d:]
        self.dgamma, self.dbeta = grads[:d], grads[d:]

    def init_glorot(self, rng):
        self.gamma[...] = 1.0
        self.beta[...] = 0.0

    def forward(self, x, train=None):
        x = _check_2d(x, self.dim, "batchnorm input")
        train = self.mode == "train" if train is None else train
        if train:
            if x.shape[0] < 2:
                raise BatchTooSmallError(f"batchnorm in train mode needs >= 2 rows, got {x.shape[0]}")
            mean = x.mean(axis=0)
            var = ((x - mean) ** 2).mean(axis=0)
            m = self.momentum
            self.running_mean = m * self.running_mean + (1 - m) * mean
            self.running_var = m * self.running_var + (1 - m) * var
        else:
            mean, var = self.running_mean, self.running_var
        std = np.sqrt(var + self.epsilon)
        xhat = (x - mean) / std
        self._cache = (xhat, std, train)
        return self.gamma * xhat + self.beta

    def backward(self, dy):
        xhat, std, train = self._cache
        dy = _check_2d(dy, self.dim, "batchnorm upstream gradient")
        self.dgamma[...] = (dy * xhat).sum(axis=0)
        self.dbeta[...] = dy.sum(axis=0)
        dxhat = dy * self.gamma
        if not train:
            return dxhat / std
        n = dy.shape[0]
        return (n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0)) / (n * std)

    def spec(self):
        return {"kind": "batchnorm", "dim": self.dim, "epsilon": self.epsilon, "momentum": self.momentum}


class Activation:
    kind = "activation"
    n_params = 0

    def __init__(self, name: str):
        if name not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {name!r}")
        self.name = name
        self._y = None

    def bind(self, params, grads):
        pass

    def init_glorot(self, rng):
        pass

    def forward(self, x, train=True):
        if self.name == "relu":
            y = np.maximum(x, 0.0)
        elif self.name == "tanh":
            y = np.tanh(x)
        elif self.name == "sigmoid":
            y = sigmoid(x)
        else:
            y = x
        self._x, self._y = x, y
        return y

    def backward(self, dy):
        if self.name == "relu":
            return dy * (self._x > 0)
        if self.name == "tanh":
            return dy * (1.0 - self._y**2)
        if self.name == "sigmoid":
            return dy * self._y * (1.0 - self._y)
        return dy

    def spec(self):
        return {"kind": "activation", "name": self.name}


def layer_from_spec(spec: dict):
    kind = spec["kind"]
    if kind == "dense":
        return Dense(spec["in_dim"], spec["out_dim"])
    if kind == "batchnorm":
        return BatchNorm1D(spec["dim"], spec["epsilon"], spec["momentum"])
    if kind == "activation":
        return Activation(spec["name"])
    raise ConfigError(f"unknown layer kind {kind!r}")


class Mlp:
    """Sequential stack of layers sharing one flat parameter buffer.

    ``output_scale`` multiplies the final activation's output; it is a fixed
    constant, not a trained parameter.
    """

    def __init__(self, layers: Sequence, output_scale: float = 1.0):
        self.layers = list(layers)
        self.output_scale = float(output_scale)
        total = sum(layer.n_params for layer in self.layers)
        self.params = np.zeros(total)
        self.grads = np.zeros(total)
        off = 0
        for layer in self.layers:
            k = layer.n_params
            layer.bind(self.params[off:off + k], self.grads[off:off + k])
            off += k
        self.logits = None

    @classmethod
    def build(cls, dims, hidden="relu", output="identity", batchnorm=False,
              output_scale=1.0, rng: Optional[Prng] = None):
        """Dense -> [BatchNorm] -> hidden activation for each hidden layer, then Dense -> output."""
        layers = []
        for i in range(len(dims) - 1):
            layers.append(Dense(dims[i], dims[i + 1]))
            last = i == len(dims) - 2
            if not last and batchnorm:
                layers.append(BatchNorm1D(dims[i + 1]))
            layers.append(Activation(output if last else hidden))
        net = cls(layers, output_scale)
        if rng is not None:
            net.init_glorot(rng)
        return net

    @property
    def in_dim(self):
        return next(l for l in self.layers if l.kind == "dense").in_dim

    @property
    def out_dim(self):
        return [l for l in self.layers if l.kind == "dense"][-1].out_dim

    @property
    def weight_mask(self):
        """True on entries belonging to dense weight matrices (the L2 targets)."""
        mask = np.zeros(self.params.size, dtype=bool)
        off = 0
        for layer in self.layers:
            if layer.kind == "dense":
                mask[off:off + layer.in_dim * layer.out_dim] = True
            off += layer.n_params
        return mask

    def init_glorot(self, rng: Prng):
        for layer in self.layers:
            layer.init_glorot(rng)

    def set_mode(self, mode: str):
        for layer in self.layers:
            if layer.kind == "batchnorm":
                layer.mode = mode

    def forward(self, x, train=None):
        """``train=None`` lets each batchnorm layer follow its own mode."""
        x = np.asarray(x, dtype=np.float64)
        for layer in self.layers[:-1]:
            x = layer.forward(x, train)
        self.logits = x
        return self.output_scale * self.layers[-1].forward(x, train)

    def backward(self, d_out, wrt_logits=False):
        """Fill ``self.grads`` and return the gradient w.r.t. the input.

        With ``wrt_logits`` the incoming gradient is taken w.r.t. the input of
        the final activation, which lets callers use stable logit-space losses.
        """
        g = np.asarray(d_out, dtype=np.float64)
        if not wrt_logits:
            g = self.layers[-1].backward(g * self.output_scale)
        for layer in reversed(self.layers[:-1]):
            g = layer.backward(g)
        return g

    def batchnorms(self):
        return [l for l in self.layers if l.kind == "batchnorm"]

    def spec(self):
        return [layer.spec() for layer in self.layers]

    def copy(self):
        twin = Mlp([layer_from_spec(s) for s in self.spec()], self.output_scale)
        twin.params[...] = self.params
        for a, b in zip(twin.batchnorms(), self.batchnorms()):
            a.running_mean = b.running_mean.copy()
            a.running_var = b.running_var.copy()
            a.mode = b.mode
        return twin


def dense_forward_backward(layer: Dense, x, upstream_grad=None):
    """Forward through ``layer``; with an upstream gradient also return its grads."""
    if np.asarray(x).ndim != 2 or np.asarray(x).shape[1] != layer.in_dim:
        raise ShapeError(f"dense input shape {np.shape(x)} does not match weights {(layer.in_dim, layer.out_dim)}")
    out = layer.forward(x)
    if upstream_grad is None:
        return out, None
    up = np.asarray(upstream_grad, dtype=np.float64)
    if up.shape != out.shape:
        raise ShapeError(f"upstream gradient shape {up.shape} does not match output shape {out.shape}")
    d_in = layer.backward(up)
    return out, {"d_input": d_in, "d_weights": layer.dW.copy(), "d_bias": layer.db.copy()}


def batchnorm_forward_backward(layer: BatchNorm1D, x, upstream_grad=None):
    out = layer.forward(x)
    if upstream_grad is None:
        return out, None
    d_in = layer.backward(upstream_grad)
    return out, {"d_input": d_in, "d_gamma": layer.dgamma.copy(), "d_beta": layer.dbeta.copy()}


@dataclass
class AdamState:
    size: int
    lr: float = 2e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps_hat: float = 1e-8
    t: int = 0
    m: np.ndarray = field(default=None, repr=False)
    v: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.lr <= 0:
            raise ConfigError(f"learning rate must be positive, got {self.lr}")
        if self.m is None:
            self.m = np.zeros(self.size)
        if self.v is None:
            self.v = np.zeros(self.size)


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState):
    """Bias-corrected Adam update, applied to ``params`` in place."""
    if params.shape != grads.shape:
        raise ShapeError(f"params {params.shape} and grads {grads.shape} differ")
    bad = ~np.isfinite(grads)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise NumericError(f"non-finite gradient at parameter index {i}: {grads[i]}")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    state.m *= b1
    state.m += (1 - b1) * grads
    state.v *= b2
    state.v += (1 - b2) * grads * grads
    m_hat = state.m / (1 - b1**state.t)
    v_hat = state.v / (1 - b2**state.t)
    params -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps_hat)
    return params, state


def clip_weights(params: np.ndarray, c: float) -> np.ndarray:
    """Project every entry of ``params`` into [-c, c], in place."""
    if not c > 0:
        raise ConfigError(f"clip constant must be positive, got {c}")
    np.clip(params, -c, c, out=params)
    return params


def finite_difference_check(model: Mlp, x, loss: Callable, step: float = 1e-5,
                            indices=None, perturb_analytic=None) -> float:
    """Max over parameters of ``|analytic - central| / max(1, |analytic|)``.

    ``loss(output)`` returns ``(value, d_value/d_output)``. ``indices`` restricts
    the check to a subset of flat parameter positions. ``perturb_analytic`` is
    applied to the analytic gradient before comparison (fault injection).
    """
    x = np.asarray(x, dtype=np.float64)
    _, d_out = loss(model.forward(x))
    model.backward(d_out)
    analytic = model.grads.copy()
    if perturb_analytic is not None:
        analytic = perturb_analytic(analytic)
    idx = range(model.params.size) if indices is None else indices
    worst = 0.0
    for i in idx:
        keep = model.params[i]
        model.params[i] = keep + step
        f_plus = loss(model.forward(x))[0]
        model.params[i] = keep - step
        f_minus = loss(model.forward(x))[0]
        model.params[i] = keep
        numeric = (f_plus - f_minus) / (2 * step)
        worst = max(worst, abs(analytic[i] - numeric) / max(1.0, abs(analytic[i])))
    return worst
