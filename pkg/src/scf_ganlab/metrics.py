"""Confusion statistics, ROC/AUC and comparison tables.

The positive class is always ``default = 1``. Zero denominators yield 0 rather
than NaN and are flagged so the rendered report can footnote them.
"""

from __future__ import annotations

import io
import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DataError, UndefinedRocError


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self):
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class MetricsRow:
    model_name: str
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: Optional[float] = None
    # names of metrics that hit a zero denominator
    flags: tuple = ()

    def with_auc(self, auc):
        return MetricsRow(self.model_name, self.accuracy, self.precision, self.recall, self.f1,
                          auc, self.flags)


def f1_from(precision, recall):
    return 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)


def confusion_and_prf(labels, predicted, model_name=""):
    y = np.asarray(labels).astype(np.int64).ravel()
    p = np.asarray(predicted).astype(np.int64).ravel()
    if y.shape != p.shape:
        raise DataError(f"labels ({y.size}) and predictions ({p.size}) differ in length")
    if y.size == 0:
        raise DataError("need at least one prediction")
    cm = ConfusionMatrix(tp=int(((y == 1) & (p == 1)).sum()), fp=int(((y == 0) & (p == 1)).sum()),
                         fn=int(((y == 1) & (p == 0)).sum()), tn=int(((y == 0) & (p == 0)).sum()))
    flags = []
    precision = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp else 0.0
    if cm.tp + cm.fp == 0:
        flags.append("precision")
    recall = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn else 0.0
    if cm.tp + cm.fn == 0:
        flags.append("recall")
    if precision + recall == 0:
        flags.append("f1")
    row = MetricsRow(model_name, (cm.tp + cm.tn) / cm.total, precision, recall,
                     f1_from(precision, recall), flags=tuple(flags))
    return cm, row


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    def to_csv(self):
        lines = ["threshold,fpr,tpr"]
        lines += [f"{t!r},{f!r},{r!r}" for t, f, r in
                  zip(self.thresholds.tolist(), self.fpr.tolist(), self.tpr.tolist())]
        return "\n".join(lines) + "\n"


def roc_and_auc(labels, scores):
    """ROC swept over distinct score thresholds (descending) and trapezoid AUC.

    A sample is called positive when ``score >= threshold``; the first point
    (0, 0) has threshold +inf. Tied scores move along a diagonal, which is
    what makes the area equal the Mann-Whitney statistic with ties counted
    one half.
    """
    y = np.asarray(labels).astype(np.int64).ravel()
    s = np.asarray(scores, dtype=np.float64).ravel()
    if y.shape != s.shape:
        raise DataError("labels and scores differ in length")
    n_pos, n_neg = int((y == 1).sum()), int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise UndefinedRocError("ROC needs both classes present")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    last = np.r_[np.flatnonzero(np.diff(s) != 0), s.size - 1]
    tp = np.r_[0, np.cumsum(y)[last]]
    fp = np.r_[0, np.cumsum(1 - y)[last]]
    # integer trapezoid, divided once at the end
    area2 = int(np.sum((fp[1:] - fp[:-1]) * (tp[1:] + tp[:-1])))
    auc = area2 / (2.0 * n_pos * n_neg)
    curve = RocCurve(fp / n_neg, tp / n_pos, np.r_[np.inf, s[last]])
    return curve, auc


# Published comparison (accuracy, recall, precision, F1 as printed).
PUBLISHED_REFERENCE = (
    ("SVM", 0.83, 0.88, 0.84, 0.89),
    ("BP network", 0.88, 0.93, 0.88, 0.94),
    ("RNN", 0.90, 0.96, 0.90, 0.95),
    ("LSTM", 0.92, 0.97, 0.93, 0.96),
    ("GANs", 0.96, 1.00, 0.97, 0.97),
)


def published_rows():
    return [MetricsRow(name, acc, prec, rec, f1) for name, acc, rec, prec, f1 in PUBLISHED_REFERENCE]


def f1_discrepancies(rows: Sequence[MetricsRow], tol=0.005):
    """Rows whose F1 disagrees with the harmonic mean of their own precision/recall."""
    out = []
    for r in rows:
        recomputed = f1_from(r.precision, r.recall)
        if abs(recomputed - r.f1) > tol:
            out.append((r.model_name, r.f1, recomputed))
    return out


def render_report(rows: Sequence[MetricsRow], fmt="csv", title=None):
    """Comparison table with columns Model, Accuracy, Recall, Precision, F1 [, AUC].

    CSV keeps full precision and carries no footnotes. Markdown rounds to two
    decimals and footnotes zero-denominator values (``*``) and F1 values
    inconsistent with the row's own precision and recall (``+``).
    """
    names = [r.model_name for r in rows]
    if len(set(names)) != len(names):
        raise DataError("duplicate model names in report")
    with_auc = any(r.auc is not None for r in rows)
    header = ["Model", "Accuracy", "Recall", "Precision", "F1"] + (["AUC"] if with_auc else [])
    keys = ["accuracy", "recall", "precision", "f1"] + (["auc"] if with_auc else [])

    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([r.model_name] + ["" if getattr(r, k) is None else repr(float(getattr(r, k)))
                                         for k in keys])
        return buf.getvalue()
    if fmt not in ("md", "markdown"):
        raise DataError(f"unknown report format {fmt!r}")

    bad_f1 = {name: (printed, recomputed) for name, printed, recomputed in f1_discrepancies(rows)}
    lines = [f"### {title}", ""] if title else []
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "|".join(["---"] + ["---:"] * (len(header) - 1)) + "|")
    for r in rows:
        cells = [r.model_name]
        for k in keys:
            v = getattr(r, k)
            cell = "n/a" if v is None else f"{v:.2f}"
            if k in r.flags:
                cell += "*"
            if k == "f1" and r.model_name in bad_f1:
                cell += "+"
            cells.append(cell)
        lines.append("| " + " | ".join(cells) + " |")
    notes = []
    if any(r.flags for r in rows):
        notes.append("\\* zero denominator; value reported as 0.")
    for name, (printed, recomputed) in bad_f1.items():
        notes.append(f"\\+ {name}: F1 recomputed from its precision and recall is "
                     f"{recomputed:.3f}, but the table states {printed:.2f}.")
    if notes:
        lines.append("")
        lines += notes
    return "\n".join(lines) + "\n"
