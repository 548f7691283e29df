import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scf_ganlab.errors import DataError, UndefinedRocError
from scf_ganlab.metrics import (MetricsRow, confusion_and_prf, f1_discrepancies, f1_from,
                                published_rows, render_report, roc_and_auc)


def brute_force_auc(labels, scores):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


def test_counting_example():
    labels = [1] * 8 + [0] * 2 + [1] * 0 + [0] * 10
    pred = [1] * 8 + [1] * 2 + [0] * 10
    cm, row = confusion_and_prf(labels, pred)
    assert (cm.tp, cm.fp, cm.fn, cm.tn) == (8, 2, 0, 10)
    assert row.accuracy == pytest.approx(0.9) and row.precision == pytest.approx(0.8)
    assert row.recall == 1.0 and row.f1 == pytest.approx(0.888889, abs=1e-6)


def test_perfect_predictions():
    _, row = confusion_and_prf([1, 0, 1], [1, 0, 1])
    assert (row.accuracy, row.precision, row.recall, row.f1) == (1.0, 1.0, 1.0, 1.0)


def test_zero_denominators_flagged():
    _, row = confusion_and_prf([0, 0], [0, 0])
    assert row.precision == 0.0 and row.recall == 0.0 and row.f1 == 0.0
    assert {"precision", "recall"} <= set(row.flags)


def test_f1_from_published_precision_recall():
    assert f1_from(0.97, 1.00) == pytest.approx(0.984772, abs=1e-6)


@settings(max_examples=200)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=40))
def test_confusion_matches_recount(pairs):
    y = [a for a, _ in pairs]
    p = [b for _, b in pairs]
    cm, row = confusion_and_prf(y, p)
    tp = sum(1 for a, b in pairs if a == 1 and b == 1)
    fp = sum(1 for a, b in pairs if a == 0 and b == 1)
    fn = sum(1 for a, b in pairs if a == 1 and b == 0)
    assert (cm.tp, cm.fp, cm.fn) == (tp, fp, fn) and cm.total == len(pairs)
    assert row.accuracy == (tp + len(pairs) - tp - fp - fn) / len(pairs)


def test_auc_examples():
    assert roc_and_auc([1, 0, 1, 0], [0.9, 0.8, 0.4, 0.3])[1] == 0.75
    assert roc_and_auc([0, 0, 1, 1], [0.1, 0.2, 0.3, 0.9])[1] == 1.0
    assert roc_and_auc([0, 1, 1, 0], [0.5] * 4)[1] == 0.5


@settings(max_examples=100)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 6)), min_size=2, max_size=50))
def test_auc_equals_mann_whitney(pairs):
    y = [a for a, _ in pairs]
    s = [float(b) for _, b in pairs]  # small integer scores force ties
    if len(set(y)) < 2:
        with pytest.raises(UndefinedRocError):
            roc_and_auc(y, s)
        return
    curve, auc = roc_and_auc(y, s)
    assert abs(auc - brute_force_auc(y, s)) < 1e-12
    assert curve.fpr[0] == 0 and curve.tpr[0] == 0 and curve.fpr[-1] == 1 and curve.tpr[-1] == 1
    assert np.all(np.diff(curve.fpr) >= 0) and np.all(np.diff(curve.tpr) >= 0)
    assert curve.thresholds[0] == np.inf


def test_roc_csv():
    curve, _ = roc_and_auc([1, 0], [0.7, 0.2])
    lines = curve.to_csv().splitlines()
    assert lines[0] == "threshold,fpr,tpr" and len(lines) == 4


# ---------------------------------------------------------------- report

def test_published_table_markdown():
    md = render_report(published_rows(), "md")
    gans = next(line for line in md.splitlines() if line.startswith("| GANs"))
    assert gans.startswith("| GANs | 0.96 | 1.00 | 0.97 | 0.97")
    assert md.splitlines()[0] == "| Model | Accuracy | Recall | Precision | F1 |"
    assert "0.985" in md and "GANs" in md.split("0.985")[0].splitlines()[-1]


def test_discrepancies_listed_for_published_rows():
    names = [name for name, _, _ in f1_discrepancies(published_rows())]
    assert "GANs" in names


def test_empty_and_single_row():
    assert render_report([], "md").strip().count("\n") == 1
    assert render_report([], "csv") == "Model,Accuracy,Recall,Precision,F1\n"
    one = render_report([MetricsRow("A", 0.5, 0.5, 0.5, 0.5)], "csv")
    assert len(one.splitlines()) == 2


def test_duplicate_names_rejected():
    row = MetricsRow("A", 1, 1, 1, 1)
    with pytest.raises(DataError):
        render_report([row, row])


def test_csv_keeps_full_precision():
    out = render_report([MetricsRow("A", 1 / 3, 0.5, 0.25, 1 / 3, auc=0.7)], "csv")
    assert "0.3333333333333333" in out and out.splitlines()[0].endswith(",AUC")
