"""Baseline credit-risk classifiers trained with the in-house nn primitives."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .bundle import mlp_from_dict, mlp_to_dict, read_bundle, write_bundle
from .data import Dataset, NormStats
from .errors import BindError, ConfigError, DegenerateDataError, StateError
from .nn import Activation, AdamState, Dense, Mlp, adam_step, sigmoid, softplus
from .rng import Prng

LOGREG, LINEAR_SVM, MLP_BP = "logreg", "svm", "mlp"
KINDS = (LOGREG, LINEAR_SVM, MLP_BP)
DISPLAY_NAMES = {LOGREG: "LogReg", LINEAR_SVM: "LinearSvm", MLP_BP: "MlpBp"}


@dataclass
class ClassifierConfig:
    kind: str = MLP_BP
    epochs: int = 60
    batch_size: int = 64
    lr: float = 0.005
    hidden_dims: tuple = (32, 16)
    l2: float = 1e-4
    seed: int = 0
    threshold: float = 0.5

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown classifier kind {self.kind!r}; choose from {KINDS}")
        if self.epochs < 1:
            raise ConfigError("classifier epochs must be >= 1")
        if self.lr <= 0:
            raise ConfigError("classifier lr must be > 0")
        if self.l2 < 0:
            raise ConfigError("l2 must be >= 0")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError("threshold must be in (0, 1)")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        return self

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["hidden_dims"] = tuple(d.get("hidden_dims", (32, 16)))
        return cls(**d)


@dataclass
class TrainedClassifier:
    kind: str
    model: Mlp
    norm_stats: Optional[NormStats]
    config: ClassifierConfig
    epochs_run: int
    final_train_loss: float

    @property
    def name(self):
        return DISPLAY_NAMES[self.kind]


def build_model(kind, n_features, hidden_dims=(32, 16), rng: Optional[Prng] = None):
    """LogReg and LinearSvm start at zero weights; MlpBp is Glorot-initialized."""
    if kind == LOGREG:
        return Mlp([Dense(n_features, 1), Activation("sigmoid")])
    if kind == LINEAR_SVM:
        return Mlp([Dense(n_features, 1), Activation("identity")])
    return Mlp.build([n_features, *hidden_dims, 1], "relu", "sigmoid", rng=rng or Prng(0))


def _loss_and_grad(kind, logits, y):
    m = len(y)
    if kind == LINEAR_SVM:
        t = 2.0 * y - 1.0
        margin = t * logits
        active = margin < 1.0
        return float(np.mean(np.maximum(0.0, 1.0 - margin))), -(t * active) / m
    loss = float(np.mean(y * softplus(-logits) + (1 - y) * softplus(logits)))
    return loss, (sigmoid(logits) - y) / m


def fit_matrix(x, y, config: ClassifierConfig):
    """Train on a feature matrix and 0/1 labels; returns ``(model, final_epoch_loss)``."""
    config.validate()
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1, 1)
    rng = Prng(config.seed)
    model = build_model(config.kind, x.shape[1], config.hidden_dims, rng.child(1))
    shuffle = rng.child(2)
    opt = AdamState(model.params.size, lr=config.lr)
    mask = model.weight_mask
    bs = config.batch_size
    last = float("nan")
    for _ in range(config.epochs):
        order = shuffle.permutation(len(x))
        losses = []
        for start in range(0, len(x), bs):
            idx = order[start:start + bs]
            model.forward(x[idx])
            loss, grad = _loss_and_grad(config.kind, model.logits, y[idx])
            model.backward(grad, wrt_logits=True)
            if config.l2:
                w = model.params[mask]
                loss += 0.5 * config.l2 * float(w @ w)
                model.grads[mask] += config.l2 * w
            adam_step(model.params, model.grads, opt)
            losses.append(loss)
        last = float(np.mean(losses))
    return model, last


def train_classifier(train: Dataset, config: ClassifierConfig) -> TrainedClassifier:
    """LogReg (sigmoid, cross-entropy), LinearSvm (hinge on +-1 labels) or MlpBp
    (ReLU MLP, sigmoid, cross-entropy), all optimized with Adam minibatches."""
    config.validate()
    if not train.normalized:
        raise StateError("train_classifier expects a normalized dataset")
    counts = train.class_counts()
    if min(counts.values()) == 0:
        if config.kind != MLP_BP:
            raise DegenerateDataError(f"{DISPLAY_NAMES[config.kind]} needs both classes; got {counts}")
        warnings.warn(f"training MlpBp on a single class: {counts}", stacklevel=2)
    model, loss = fit_matrix(train.matrix(), train.labels, config)
    return TrainedClassifier(config.kind, model, train.norm_stats, config, config.epochs, loss)


def _same_stats(a, b):
    if a is None or b is None:
        return a is b
    return (np.array_equal(a.mean, b.mean) and np.array_equal(a.std, b.std)
            and np.array_equal(a.zero_variance, b.zero_variance))


def predict(clf: TrainedClassifier, records: Dataset):
    """Scores and 0/1 labels; label is 1 iff the score reaches the threshold.

    For LinearSvm the score is the raw margin, compared with
    ``logit(threshold)`` (0 at the default), and ``probabilities`` is
    ``sigmoid(margin)``, a ranking-preserving squash for ROC use.
    """
    if records.schema.n_features != clf.model.in_dim:
        raise BindError(f"classifier expects {clf.model.in_dim} features, records have "
                        f"{records.schema.n_features}")
    if not _same_stats(records.norm_stats, clf.norm_stats):
        raise BindError("records are not normalized with the classifier's statistics")
    if len(records) == 0:
        empty = np.zeros(0)
        return {"scores": empty, "probabilities": empty, "labels": np.zeros(0, dtype=np.int64)}
    out = clf.model.forward(records.matrix()).ravel()
    t = clf.config.threshold
    if clf.kind == LINEAR_SVM:
        probs = sigmoid(out)
        labels = out >= math.log(t / (1 - t))
    else:
        probs = out
        labels = out >= t
    return {"scores": out, "probabilities": probs, "labels": labels.astype(np.int64)}


def save_classifier(clf: TrainedClassifier, path):
    write_bundle(path, "classifier", {
        "classifier_kind": clf.kind,
        "threshold": clf.config.threshold,
        "config": asdict(clf.config),
        "model": mlp_to_dict(clf.model),
        "norm_stats": None if clf.norm_stats is None else clf.norm_stats.to_dict(),
        "epochs_run": clf.epochs_run,
        "final_train_loss": clf.final_train_loss,
    })


def load_classifier(path) -> TrainedClassifier:
    doc = read_bundle(path, "classifier")
    stats = doc["norm_stats"]
    return TrainedClassifier(doc["classifier_kind"], mlp_from_dict(doc["model"]),
                             None if stats is None else NormStats.from_dict(stats),
                             ClassifierConfig.from_dict(doc["config"]), doc["epochs_run"],
                             doc["final_train_loss"])
