import warnings

import numpy as np
import pytest

from scf_ganlab.classifiers import (KINDS, LINEAR_SVM, LOGREG, MLP_BP, ClassifierConfig,
                                    build_model, fit_matrix, load_classifier, predict,
                                    save_classifier, train_classifier)
from scf_ganlab.data import WorldConfig, make_reference_world, normalize, stratified_split
from scf_ganlab.errors import BindError, ConfigError, DegenerateDataError, StateError
from scf_ganlab.metrics import roc_and_auc

from conftest import make_dataset


def separable_1d():
    """x < 0 -> 0, x > 0 -> 1, with a gap of 1 around zero."""
    x = np.r_[np.linspace(-3, -0.5, 20), np.linspace(0.5, 3, 20)][:, None]
    y = np.r_[np.zeros(20), np.ones(20)]
    return x, y


@pytest.mark.parametrize("kind", KINDS)
def test_separable_data_fits_perfectly(kind):
    x, y = separable_1d()
    # the threshold rule x > 0 is an oracle that scores 1.0 on this data
    assert np.mean((x.ravel() > 0) == y) == 1.0
    model, _ = fit_matrix(x, y, ClassifierConfig(kind=kind, epochs=200, batch_size=8, lr=0.01))
    model.forward(x)
    assert np.mean((model.logits.ravel() >= 0) == y) == 1.0


def test_zero_initialized_logreg_predicts_half():
    net = build_model(LOGREG, 15)
    assert np.all(net.forward(np.random.default_rng(0).normal(size=(5, 15))) == 0.5)


def _fitted(kind=MLP_BP, **kw):
    world = make_reference_world(WorldConfig(n=400, base_default_rate=0.3, seed=1))
    train, test = stratified_split(world, 0.8, 0)
    train = normalize(train)
    clf = train_classifier(train, ClassifierConfig(kind=kind, epochs=5, **kw))
    return clf, normalize(test, train.norm_stats)


def test_threshold_rule():
    clf, test = _fitted()
    out = predict(clf, test)
    assert np.array_equal(out["labels"], (out["probabilities"] >= 0.5).astype(int))
    clf.model.params[...] = 0.0
    clf.model.layers[-2].b[...] = np.log(0.7 / 0.3)  # final bias -> every probability 0.7
    assert np.all(predict(clf, test)["labels"] == 1)


def test_empty_records():
    clf, test = _fitted()
    out = predict(clf, test.subset([]))
    assert out["scores"].size == 0 and out["labels"].size == 0


def test_svm_margin_tie_goes_positive():
    clf, test = _fitted(LINEAR_SVM)
    clf.model.params[...] = 0.0
    out = predict(clf, test)
    assert np.all(out["scores"] == 0.0) and np.all(out["labels"] == 1)


def test_predict_checks_binding():
    clf, test = _fitted()
    with pytest.raises(BindError):
        predict(clf, normalize(make_reference_world(WorldConfig(n=50, seed=9))))


def test_training_preconditions():
    world = make_reference_world(WorldConfig(n=200, base_default_rate=0.3))
    with pytest.raises(StateError):
        train_classifier(world, ClassifierConfig())
    one_class = normalize(make_dataset(np.arange(6.0), [0] * 6))
    with pytest.raises(DegenerateDataError):
        train_classifier(one_class, ClassifierConfig(kind=LOGREG))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        train_classifier(one_class, ClassifierConfig(kind=MLP_BP, epochs=1))
    assert caught
    with pytest.raises(ConfigError):
        ClassifierConfig(kind="forest").validate()


@pytest.mark.parametrize("kind", KINDS)
def test_round_trip(tmp_path, kind):
    clf, test = _fitted(kind)
    save_classifier(clf, tmp_path / "c.json")
    back = load_classifier(tmp_path / "c.json")
    assert back.model.params.tobytes() == clf.model.params.tobytes()
    assert np.array_equal(predict(back, test)["scores"], predict(clf, test)["scores"])


def test_l2_pulls_weights_toward_zero():
    x, y = separable_1d()
    loose, _ = fit_matrix(x, y, ClassifierConfig(kind=LOGREG, epochs=50, l2=0.0))
    tight, _ = fit_matrix(x, y, ClassifierConfig(kind=LOGREG, epochs=50, l2=1.0))
    assert abs(tight.params[0]) < abs(loose.params[0])


def test_no_signal_world_gives_chance_auc():
    aucs = []
    for seed in range(5):
        cfg = WorldConfig(n=2000, coef=np.zeros(14), base_default_rate=0.2,
                          breach_prob_default=0.1, breach_prob_clean=0.1, seed=seed)
        train, test = stratified_split(make_reference_world(cfg), 0.7, seed)
        train = normalize(train)
        clf = train_classifier(train, ClassifierConfig(kind=LOGREG, seed=seed))
        out = predict(clf, normalize(test, train.norm_stats))
        aucs.append(roc_and_auc(test.labels, out["probabilities"])[1])
    assert all(0.45 <= a <= 0.55 for a in aucs), aucs
