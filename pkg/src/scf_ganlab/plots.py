"""Minimal standalone SVG line charts (no external assets, deterministic text)."""

from xml.sax.saxutils import escape

import numpy as np

W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 40, 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(v):
    return f"{v:.2f}"


def line_chart(series, title="", xlabel="", ylabel="", xlim=None, ylim=None, diagonal=False):
    """``series`` maps a legend label to ``(x, y)`` arrays."""
    xs = np.concatenate([np.asarray(x, float) for x, _ in series.values()]) if series else np.zeros(1)
    ys = np.concatenate([np.asarray(y, float) for _, y in series.values()]) if series else np.zeros(1)
    xs, ys = xs[np.isfinite(xs)], ys[np.isfinite(ys)]
    x0, x1 = xlim or (float(xs.min()), float(xs.max()))
    y0, y1 = ylim or (float(ys.min()), float(ys.max()))
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def px(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def py(y):
        return TOP + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2}" y="24" text-anchor="middle" font-size="16">{escape(title)}</text>',
           f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}" stroke="black"/>',
           f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}" stroke="black"/>']
    for i in range(5):
        fx = x0 + (x1 - x0) * i / 4
        fy = y0 + (y1 - y0) * i / 4
        out.append(f'<text x="{_fmt(px(fx))}" y="{TOP + ph + 18}" text-anchor="middle" '
                   f'font-size="11">{fx:.3g}</text>')
        out.append(f'<text x="{LEFT - 6}" y="{_fmt(py(fy) + 4)}" text-anchor="end" '
                   f'font-size="11">{fy:.3g}</text>')
    out.append(f'<text x="{LEFT + pw / 2}" y="{H - 18}" text-anchor="middle" font-size="13">'
               f'{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{TOP + ph / 2}" text-anchor="middle" font-size="13" '
               f'transform="rotate(-90 18 {TOP + ph / 2})">{escape(ylabel)}</text>')
    if diagonal:
        out.append(f'<line x1="{_fmt(px(x0))}" y1="{_fmt(py(y0))}" x2="{_fmt(px(x1))}" '
                   f'y2="{_fmt(py(y1))}" stroke="gray" stroke-dasharray="6,4"/>')
    for k, (label, (x, y)) in enumerate(series.items()):
        color = COLORS[k % len(COLORS)]
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, y)
                       if np.isfinite(a) and np.isfinite(b))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.8" points="{pts}"/>')
        ly = TOP + 16 + 16 * k
        out.append(f'<line x1="{LEFT + pw - 150}" y1="{ly}" x2="{LEFT + pw - 130}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{LEFT + pw - 125}" y="{ly + 4}" font-size="11">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def loss_curve_svg(history, title="GAN training loss"):
    epochs = history.column("epoch")
    return line_chart({"train (critic)": (epochs, history.column("d_loss_train")),
                       "holdout (critic)": (epochs, history.column("d_loss_holdout"))},
                      title, "epoch", "loss")


def roc_svg(curves, title="ROC"):
    """``curves`` maps a label (e.g. ``"MlpBp AUC=0.93"``) to a ``RocCurve``."""
    return line_chart({k: (c.fpr, c.tpr) for k, c in curves.items()}, title,
                      "false positive rate", "true positive rate", (0.0, 1.0), (0.0, 1.0),
                      diagonal=True)
