"""Vanilla and Wasserstein GAN training over tabular feature matrices.

The critic always sees real and generated rows stacked into a single batch.
With batch normalization in the critic this keeps both halves under the same
batch statistics; normalizing them separately would erase any difference in
location between the two distributions.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.spatial.distance import cdist

from .bundle import mlp_from_dict, mlp_to_dict, read_bundle, write_bundle
from .data import INDUSTRIES, SCHEMA, FirmRecord, IndicatorSchema, NormStats
from .errors import (ConfigError, DataError, DimensionMismatchError, DomainError,
                     NumericError)
from .nn import AdamState, Mlp, adam_step, clip_weights, sigmoid, softplus
from .rng import Prng

VANILLA = "vanilla"
WASSERSTEIN = "wasserstein"
MINIMAX = "minimax"
NON_SATURATING = "nonsaturating"
# generated rows scored against the holdout each epoch
EVAL_FAKES = 256


@dataclass(frozen=True)
class NoiseSpec:
    dim: int = 32
    distribution: str = "normal"  # or "uniform" on [-1, 1)

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError("noise dim must be >= 1")
        if self.distribution not in ("normal", "uniform"):
            raise ConfigError(f"unknown noise distribution {self.distribution!r}")


@dataclass
class TrainConfig:
    epochs: int = 120
    batch_size: int = 64
    lr: float = 2e-4
    clip_c: float = 0.01
    n_critic: int = 5
    label_smooth: float = 0.9
    generator_loss_form: str = MINIMAX
    seed: int = 0
    stop_window: int = 10
    stop_band: tuple = (0.45, 0.55)
    plateau_tol: float = 0.01
    early_stop: bool = False
    holdout_fraction: float = 0.1

    def validate(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size < 2:
            raise ConfigError("batch_size must be >= 2")
        if not self.clip_c > 0:
            raise ConfigError("clip_c must be > 0")
        if self.lr <= 0:
            raise ConfigError("lr must be > 0")
        if self.n_critic < 1:
            raise ConfigError("n_critic must be >= 1")
        if not 0.5 < self.label_smooth <= 1.0:
            raise ConfigError("label_smooth must be in (0.5, 1]")
        if self.generator_loss_form not in (MINIMAX, NON_SATURATING):
            raise ConfigError(f"unknown generator_loss_form {self.generator_loss_form!r}")
        if not 0.0 <= self.holdout_fraction < 1.0:
            raise ConfigError("holdout_fraction must be in [0, 1)")
        return self

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["stop_band"] = tuple(d.get("stop_band", (0.45, 0.55)))
        return cls(**d)


@dataclass
class EpochRecord:
    epoch: int
    d_loss_train: float
    g_loss_train: float
    d_loss_holdout: float
    disc_acc_holdout: float
    wasserstein_estimate: Optional[float] = None


CSV_HEADER = "epoch,d_loss_train,g_loss_train,d_loss_holdout,disc_acc_holdout,wasserstein_estimate"


@dataclass
class LossHistory:
    mode: str
    records: list = field(default_factory=list)
    critic_updates: int = 0
    generator_updates: int = 0

    def __len__(self):
        return len(self.records)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def to_csv(self):
        lines = [CSV_HEADER]
        for r in self.records:
            w = "" if r.wasserstein_estimate is None else repr(r.wasserstein_estimate)
            lines.append(f"{r.epoch},{r.d_loss_train!r},{r.g_loss_train!r},"
                         f"{r.d_loss_holdout!r},{r.disc_acc_holdout!r},{w}")
        return "\n".join(lines) + "\n"


class GanModel:
    def __init__(self, generator: Mlp, critic: Mlp, mode=WASSERSTEIN, noise=NoiseSpec(),
                 config: Optional[TrainConfig] = None, norm_stats: Optional[NormStats] = None):
        if mode not in (VANILLA, WASSERSTEIN):
            raise ConfigError(f"unknown GAN mode {mode!r}")
        if generator.in_dim != noise.dim:
            raise DimensionMismatchError(f"generator input {generator.in_dim} != noise dim {noise.dim}")
        if generator.out_dim != critic.in_dim or critic.out_dim != 1:
            raise DimensionMismatchError("generator output must match critic input; critic emits one score")
        want = "sigmoid" if mode == VANILLA else "identity"
        if critic.layers[-1].name != want:
            raise ConfigError(f"{mode} critic must end in {want}")
        self.generator, self.critic = generator, critic
        self.mode, self.noise, self.config = mode, noise, config
        # statistics of the data the generator imitates, kept for de-standardizing
        self.norm_stats = norm_stats

    @classmethod
    def build(cls, n_features, mode=WASSERSTEIN, noise=NoiseSpec(), gen_hidden=(64, 64),
              critic_hidden=(64, 32), batchnorm_generator=True, batchnorm_critic=True,
              output_scale=3.0, seed=0):
        """Glorot-initialized generator (ReLU hidden, scaled Tanh out) and critic."""
        rng = Prng(seed)
        gen = Mlp.build([noise.dim, *gen_hidden, n_features], "relu", "tanh",
                        batchnorm_generator, output_scale, rng.child(1))
        out = "sigmoid" if mode == VANILLA else "identity"
        critic = Mlp.build([n_features, *critic_hidden, 1], "relu", out, batchnorm_critic,
                           1.0, rng.child(2))
        return cls(gen, critic, mode, noise)

    @property
    def n_features(self):
        return self.generator.out_dim

    def bind(self, n_features):
        if n_features != self.n_features:
            raise DimensionMismatchError(
                f"model produces {self.n_features} features, dataset has {n_features}")
        return self

    def sample(self, n, rng: Prng):
        """Generator output for ``n`` fresh noise rows, batchnorm in inference mode."""
        if n == 0:
            return np.zeros((0, self.n_features))
        return self.generator.forward(sample_noise(self.noise, n, rng), train=False)


def sample_noise(spec: NoiseSpec, n: int, rng: Prng):
    if n < 0:
        raise ConfigError("n must be >= 0")
    if spec.distribution == "normal":
        v = rng.normal(n * spec.dim)
    else:
        v = 2.0 * rng.uniform(n * spec.dim) - 1.0
    return v.reshape(n, spec.dim)


# ---------------------------------------------------------------- objectives

def _probs(v, lo_closed, hi_closed, what):
    v = np.asarray(v, dtype=np.float64).ravel()
    lo_ok = v >= 0 if lo_closed else v > 0
    hi_ok = v <= 1 if hi_closed else v < 1
    if not np.all(lo_ok & hi_ok):
        raise DomainError(f"{what} outside the valid probability interval")
    return v


def _mean(v):
    return float(v.mean()) if v.size else 0.0


def minimax_value(d_real, d_fake):
    """Minimax value ``mean(log D(x)) + mean(log(1 - D(G(z))))``."""
    r = _probs(d_real, False, True, "d_real")
    f = _probs(d_fake, True, False, "d_fake")
    return _mean(np.log(r)) + _mean(np.log1p(-f))


def vanilla_losses(d_real, d_fake, label_smooth=1.0, generator_loss_form=MINIMAX):
    """Discriminator loss with smoothed real targets, and the generator loss.

    An empty input vector contributes 0 to the corresponding term.
    """
    r = _probs(d_real, False, False, "d_real")
    f = _probs(d_fake, False, False, "d_fake")
    s = label_smooth
    d_loss = -_mean(s * np.log(r) + (1 - s) * np.log1p(-r)) - _mean(np.log1p(-f))
    if generator_loss_form == MINIMAX:
        g_loss = _mean(np.log1p(-f))
    elif generator_loss_form == NON_SATURATING:
        g_loss = -_mean(np.log(f))
    else:
        raise ConfigError(f"unknown generator_loss_form {generator_loss_form!r}")
    return {"d_loss": d_loss, "g_loss": g_loss}


def wgan_losses(real_scores, fake_scores):
    r = np.asarray(real_scores, dtype=np.float64).ravel()
    f = np.asarray(fake_scores, dtype=np.float64).ravel()
    if not (np.isfinite(r).all() and np.isfinite(f).all()):
        raise NumericError("non-finite critic score")
    critic_loss = _mean(f) - _mean(r)
    return {"critic_loss": critic_loss, "generator_loss": -_mean(f),
            "wasserstein_estimate": -critic_loss}


def _logit_d_loss(l_real, l_fake, s):
    """Discriminator loss and its gradient w.r.t. the stacked logits."""
    m_r, m_f = len(l_real), len(l_fake)
    loss = float(np.mean(s * softplus(-l_real) + (1 - s) * softplus(l_real)) + np.mean(softplus(l_fake)))
    grad = np.vstack([(sigmoid(l_real) - s) / m_r, sigmoid(l_fake) / m_f])
    return loss, grad


def _logit_g_loss(l_fake, form):
    m = len(l_fake)
    if form == MINIMAX:
        return float(-np.mean(softplus(l_fake))), -sigmoid(l_fake) / m
    return float(np.mean(softplus(-l_fake))), (sigmoid(l_fake) - 1.0) / m


def energy_distance(a, b):
    """Squared energy distance ``2 E|X-Y| - E|X-X'| - E|Y-Y'|`` (V-statistic)."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    return float(2 * cdist(a, b).mean() - cdist(a, a).mean() - cdist(b, b).mean())


# ---------------------------------------------------------------- training

def _critic_step(model, real, fake, opt, config):
    critic = model.critic
    m_r, m_f = len(real), len(fake)
    critic.forward(np.vstack([real, fake]), train=True)
    if model.mode == WASSERSTEIN:
        scores = critic.logits.ravel()
        loss = float(scores[m_r:].mean() - scores[:m_r].mean())
        grad = np.concatenate([np.full(m_r, -1.0 / m_r), np.full(m_f, 1.0 / m_f)])[:, None]
    else:
        l = critic.logits
        loss, grad = _logit_d_loss(l[:m_r], l[m_r:], config.label_smooth)
    critic.backward(grad, wrt_logits=True)
    adam_step(critic.params, critic.grads, opt)
    if model.mode == WASSERSTEIN:
        clip_weights(critic.params, config.clip_c)
    return loss


def _generator_step(model, real, noise, opt, config):
    gen, critic = model.generator, model.critic
    fake = gen.forward(noise, train=True)
    m_r, m_f = len(real), len(fake)
    critic.forward(np.vstack([real, fake]), train=True)
    l_fake = critic.logits[m_r:]
    if model.mode == WASSERSTEIN:
        loss = float(-l_fake.mean())
        g_fake = np.full((m_f, 1), -1.0 / m_f)
    else:
        loss, g_fake = _logit_g_loss(l_fake, config.generator_loss_form)
    grad = np.vstack([np.zeros((m_r, 1)), g_fake])
    d_input = critic.backward(grad, wrt_logits=True)
    gen.backward(d_input[m_r:])
    adam_step(gen.params, gen.grads, opt)
    return loss


def _evaluate(model, holdout, eval_noise, config):
    fake = model.generator.forward(eval_noise, train=False)
    model.critic.forward(np.vstack([holdout, fake]), train=False)
    l = model.critic.logits.ravel()
    lr, lf = l[: len(holdout)], l[len(holdout):]
    if model.mode == WASSERSTEIN:
        loss = float(lf.mean() - lr.mean())
        thr = 0.5 * (lr.mean() + lf.mean())
        acc = ((lr >= thr).sum() + (lf < thr).sum()) / (len(lr) + len(lf))
    else:
        loss, _ = _logit_d_loss(lr[:, None], lf[:, None], config.label_smooth)
        acc = ((lr >= 0).sum() + (lf < 0).sum()) / (len(lr) + len(lf))
    return loss, float(acc)


def train(features, config: TrainConfig, model: GanModel,
          on_critic_update: Optional[Callable] = None):
    """Train ``model`` in place on the rows of ``features``; returns ``(model, history)``.

    A ``holdout_fraction`` share of rows (fixed by the seed, but never so many
    that fewer than one batch remains) is held out for the per-epoch holdout
    loss and discriminator accuracy; when no row can be spared the training
    rows double as holdout. Each epoch visits ``rows // batch_size`` shuffled
    batches. Wasserstein mode runs ``n_critic`` clipped critic updates (real
    batches taken cyclically from the epoch's batch list) before every
    generator update; vanilla mode alternates one and one.
    ``on_critic_update(model)`` is called after every critic update.
    """
    config.validate()
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise DataError("features must be a 2-D matrix")
    model.bind(x.shape[1])
    if x.shape[0] < config.batch_size:
        raise DataError(f"{x.shape[0]} rows is smaller than one batch of {config.batch_size}")
    if not np.isfinite(x).all():
        raise DataError("features contain non-finite values")

    rng = Prng(config.seed)
    split_rng, shuffle_rng, noise_rng, eval_rng = (rng.child(k) for k in (1, 2, 3, 4))
    n_hold = min(int(math.floor(config.holdout_fraction * len(x))), len(x) - config.batch_size)
    perm = split_rng.permutation(len(x))
    fit = x[perm[n_hold:]]
    holdout = x[perm[:n_hold]] if n_hold > 0 else fit
    eval_noise = sample_noise(model.noise, max(len(holdout), EVAL_FAKES), eval_rng)

    bs = config.batch_size
    opt_g = AdamState(model.generator.params.size, lr=config.lr)
    opt_d = AdamState(model.critic.params.size, lr=config.lr)
    if model.mode == WASSERSTEIN:
        clip_weights(model.critic.params, config.clip_c)
    history = LossHistory(model.mode)
    n_batches = len(fit) // bs

    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(len(fit))
        batches = [fit[order[i * bs:(i + 1) * bs]] for i in range(n_batches)]
        d_losses, g_losses = [], []
        for it in range(n_batches):
            steps = config.n_critic if model.mode == WASSERSTEIN else 1
            for j in range(steps):
                real = batches[(it * steps + j) % n_batches]
                fake = model.generator.forward(sample_noise(model.noise, bs, noise_rng), train=True)
                d_losses.append(_critic_step(model, real, fake, opt_d, config))
                history.critic_updates += 1
                if on_critic_update is not None:
                    on_critic_update(model)
            noise = sample_noise(model.noise, bs, noise_rng)
            g_losses.append(_generator_step(model, batches[it], noise, opt_g, config))
            history.generator_updates += 1

        d_hold, acc = _evaluate(model, holdout, eval_noise, config)
        d_train = float(np.mean(d_losses))
        w_est = -d_train if model.mode == WASSERSTEIN else None
        history.records.append(EpochRecord(epoch, d_train, float(np.mean(g_losses)), d_hold, acc, w_est))
        if config.early_stop and should_stop(history, config):
            break
    model.config = config
    return model, history


def should_stop(history: LossHistory, config: TrainConfig) -> bool:
    """Stopping rule over the last ``stop_window`` epochs.

    Vanilla: every holdout discriminator accuracy lies inside ``stop_band``.
    Wasserstein: ``|wasserstein_estimate|`` shrank by less than ``plateau_tol``
    (relative) from the first to the last epoch of the window.
    """
    k = config.stop_window
    if len(history) < k:
        return False
    window = history.records[-k:]
    if history.mode == VANILLA:
        lo, hi = config.stop_band
        return all(lo <= r.disc_acc_holdout <= hi for r in window)
    first, last = abs(window[0].wasserstein_estimate), abs(window[-1].wasserstein_estimate)
    if first == 0:
        return True
    return (first - last) / first < config.plateau_tol


# ---------------------------------------------------------------- synthesis

def generate_records(model: GanModel, n: int, norm_stats: NormStats,
                     schema: IndicatorSchema = SCHEMA, rng: Optional[Prng] = None,
                     industry_weights=(1 / 3, 1 / 3, 1 / 3), id_prefix="SYN"):
    """Draw ``n`` synthetic default records in raw indicator units.

    Numeric columns are de-standardized with ``norm_stats``; contract_status
    is rounded to the nearest level. Industry tags are drawn from
    ``industry_weights`` after the generator noise.
    """
    if n < 0:
        raise ConfigError(f"n must be >= 0, got {n}")
    model.bind(schema.n_features)
    rng = rng if rng is not None else Prng(0)
    x = model.sample(n, rng)
    k = schema.n_numeric
    numeric = x[:, :k] * norm_stats.std + norm_stats.mean
    numeric[:, norm_stats.zero_variance] = norm_stats.mean[norm_stats.zero_variance]
    levels = np.array(schema.ordinal_levels, dtype=float)
    contract = levels[np.abs(x[:, k:k + 1] - levels[None, :]).argmin(axis=1)].astype(int)
    cum = np.cumsum(industry_weights)
    ind = np.minimum(np.searchsorted(cum, rng.uniform(n), side="right"), len(INDUSTRIES) - 1)
    return [FirmRecord(f"{id_prefix}{i:06d}", INDUSTRIES[ind[i]], tuple(numeric[i].tolist()),
                       int(contract[i]), 1, True) for i in range(n)]


# ---------------------------------------------------------------- persistence

def model_payload(model: GanModel):
    return {
        "mode": model.mode,
        "noise_spec": asdict(model.noise),
        "n_features": model.n_features,
        "generator": mlp_to_dict(model.generator),
        "critic": mlp_to_dict(model.critic),
        "train_config": None if model.config is None else asdict(model.config),
        "norm_stats": None if model.norm_stats is None else model.norm_stats.to_dict(),
    }


def save_model(model: GanModel, path):
    write_bundle(path, "gan", model_payload(model))


def load_model(path, n_features: Optional[int] = None) -> GanModel:
    doc = read_bundle(path, "gan")
    cfg, stats = doc.get("train_config"), doc.get("norm_stats")
    model = GanModel(mlp_from_dict(doc["generator"]), mlp_from_dict(doc["critic"]), doc["mode"],
                     NoiseSpec(**doc["noise_spec"]),
                     None if cfg is None else TrainConfig.from_dict(cfg),
                     None if stats is None else NormStats.from_dict(stats))
    if n_features is not None:
        model.bind(n_features)
    return model
