"""Seeded finite-difference sweep over every layer type and network composition."""

import numpy as np

from .classifiers import LINEAR_SVM, LOGREG, MLP_BP, _loss_and_grad, build_model
from .nn import (ACTIVATIONS, Activation, BatchNorm1D, Dense, Mlp, finite_difference_check)
from .rng import Prng

MAX_PARAMS_PER_CASE = 48
# ReLU inputs closer than this to 0 count as a kink; the point is redrawn
KINK_MARGIN = 1e-3


def _random_loss(rng, shape):
    """Smooth scalar loss ``sum(c * y) + 0.5 * sum(y**2)`` with random ``c``."""
    c = rng.normal(int(np.prod(shape))).reshape(shape)

    def loss(y):
        return float(np.sum(c * y) + 0.5 * np.sum(y * y)), c + y

    return loss


def _randomize(net, rng, scale=1.0):
    net.params[...] = scale * rng.normal(net.params.size)
    return net


class _GeneratorThroughCritic:
    """Generator parameters scored by a critic that sees ``[real; G(z)]`` jointly."""

    def __init__(self, gen, critic, real):
        self.gen, self.critic, self.real = gen, critic, real
        self.params, self.grads = gen.params, gen.grads

    def forward(self, z):
        fake = self.gen.forward(z, train=True)
        out = self.critic.forward(np.vstack([self.real, fake]), train=True)
        return out[len(self.real):]

    def backward(self, d):
        full = np.vstack([np.zeros((len(self.real), 1)), d])
        d_in = self.critic.backward(full)
        return self.gen.backward(d_in[len(self.real):])


def _indices(rng, n):
    if n <= MAX_PARAMS_PER_CASE:
        return range(n)
    return np.sort(rng.permutation(n)[:MAX_PARAMS_PER_CASE])


def _cases(rng):
    """Yield ``(name, model, input, loss)`` for one trial."""
    x = rng.normal(2 * 4).reshape(2, 4)
    yield "dense", _randomize(Mlp([Dense(4, 3)]), rng), x, _random_loss(rng, (2, 3))

    bn = Mlp([BatchNorm1D(4)])
    bn.params[...] = 1.0 + 0.5 * rng.normal(bn.params.size)
    x = rng.normal(8 * 4).reshape(8, 4) * 2.0 + 1.0
    yield "batchnorm", bn, x, _random_loss(rng, (8, 4))

    for name in ACTIVATIONS:
        net = _randomize(Mlp([Dense(3, 4), Activation(name)]), rng)
        x = rng.normal(5 * 3).reshape(5, 3)
        yield f"activation:{name}", net, x, _random_loss(rng, (5, 4))

    gen = Mlp.build([6, 8, 8, 5], "relu", "tanh", batchnorm=True, output_scale=3.0, rng=rng)
    z = rng.normal(6 * 6).reshape(6, 6)
    yield "generator", gen, z, _random_loss(rng, (6, 5))

    for out in ("identity", "sigmoid"):
        critic = Mlp.build([5, 8, 4, 1], "relu", out, batchnorm=True, rng=rng)
        x = rng.normal(8 * 5).reshape(8, 5)
        yield f"critic:{out}", critic, x, _random_loss(rng, (8, 1))

    gen = Mlp.build([6, 8, 5], "relu", "tanh", batchnorm=True, output_scale=3.0, rng=rng)
    critic = Mlp.build([5, 8, 1], "relu", "identity", batchnorm=True, rng=rng)
    real = rng.normal(4 * 5).reshape(4, 5)
    z = rng.normal(4 * 6).reshape(4, 6)
    yield "generator_through_critic", _GeneratorThroughCritic(gen, critic, real), z, \
        _random_loss(rng, (4, 1))

    for kind in (LOGREG, LINEAR_SVM, MLP_BP):
        net = build_model(kind, 5, (8, 4), rng)
        _randomize(net, rng, 0.7)
        x = rng.normal(6 * 5).reshape(6, 5)
        y = (rng.uniform(6) < 0.5).astype(float).reshape(6, 1)
        yield f"classifier:{kind}", _LogitLoss(net, kind), x, _classifier_loss(kind, y)

    # full-size defaults, sampled parameters
    gen = Mlp.build([32, 64, 64, 15], "relu", "tanh", batchnorm=True, output_scale=3.0, rng=rng)
    yield "generator:full", gen, rng.normal(16 * 32).reshape(16, 32), _random_loss(rng, (16, 15))
    critic = Mlp.build([15, 64, 32, 1], "relu", "identity", batchnorm=True, rng=rng)
    yield "critic:full", critic, rng.normal(16 * 15).reshape(16, 15), _random_loss(rng, (16, 1))


class _LogitLoss:
    """Expose a classifier's logits so training losses can be checked as written."""

    def __init__(self, net, kind):
        self.net, self.kind = net, kind
        self.params, self.grads = net.params, net.grads

    def forward(self, x):
        self.net.forward(x)
        return self.net.logits

    def backward(self, d):
        return self.net.backward(d, wrt_logits=True)


def _classifier_loss(kind, y):
    def loss(logits):
        return _loss_and_grad(kind, logits, y)

    return loss


def _nets(model):
    if isinstance(model, Mlp):
        return [model]
    if isinstance(model, _LogitLoss):
        return [model.net]
    return [model.gen, model.critic]


def _near_kink(model, x):
    model.forward(x)
    return any(layer.kind == "activation" and layer.name == "relu"
               and np.abs(layer._x).min() < KINK_MARGIN
               for net in _nets(model) for layer in net.layers)


def run_gradient_suite(trials=100, seed=0, step=1e-5):
    """Worst relative error per case name over ``trials`` seeded trials.

    Inputs that put a ReLU within ``KINK_MARGIN`` of its kink are redrawn, so
    every check runs at a point where the network is smooth.
    """
    worst = {}
    root = Prng(seed)
    for t in range(trials):
        rng = root.child(t)
        for name, model, x, loss in _cases(rng):
            for _ in range(50):
                if not _near_kink(model, x):
                    break
                x = rng.normal(x.size).reshape(x.shape)
            err = finite_difference_check(model, x, loss, step, _indices(rng, model.params.size))
            worst[name] = max(worst.get(name, 0.0), err)
    return worst
