"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (verdict lines are
repeated in the terminal summary) or ``python3 tests/test_acceptance.py``.
"""

import math
import statistics
import time
import warnings
from pathlib import Path

import numpy as np
import pytest

from scf_ganlab.cli import main as cli_main
from scf_ganlab.data import WorldConfig, make_reference_world, normalize, stratified_split
from scf_ganlab.experiment import (ABLATION_REFERENCE, load_config, run_ablation,
                                   run_benchmark)
from scf_ganlab.gan import (WASSERSTEIN, GanModel, TrainConfig, energy_distance,
                            minimax_value, train)
from scf_ganlab.gradcheck import run_gradient_suite
from scf_ganlab.metrics import confusion_and_prf, roc_and_auc
from scf_ganlab.nn import AdamState, adam_step
from scf_ganlab.rng import Prng

VERDICTS = []


def verdict(n, title, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n:2d}: {title}" + (f" ({detail})" if detail else "")
    VERDICTS.append(line)
    print(line)
    assert ok, line


# ---------------------------------------------------------------- 1

def test_c01_gradient_suite():
    t = time.perf_counter()
    worst = run_gradient_suite(trials=100, seed=0)
    elapsed = time.perf_counter() - t
    top = max(worst.values())
    verdict(1, "finite-difference gradient suite", top < 1e-4 and elapsed < 30,
            f"max rel err {top:.2e} over {len(worst)} cases, {elapsed:.1f}s")


# ---------------------------------------------------------------- 2

def test_c02_adam_oracle():
    def scripted(p, g, lr=2e-4, b1=0.9, b2=0.999, eps=1e-8):
        m = v = 0.0
        for t in (1, 2):
            m = b1 * m + (1 - b1) * g
            v = b2 * v + (1 - b2) * g * g
            p -= lr * (m / (1 - b1**t)) / (math.sqrt(v / (1 - b2**t)) + eps)
        return p

    start = Prng(0).normal(50)
    grads = Prng(1).normal(50)
    p = start.copy()
    state = AdamState(50)
    adam_step(p, grads.copy(), state)
    adam_step(p, grads.copy(), state)
    err = max(abs(p[i] - scripted(start[i], grads[i])) for i in range(50))
    const = np.array([0.5])
    s = AdamState(1)
    adam_step(const, np.ones(1), s)
    adam_step(const, np.ones(1), s)
    err = max(err, abs(const[0] - scripted(0.5, 1.0)))
    verdict(2, "two Adam steps vs scripted reference", err <= 1e-12, f"max abs diff {err:.1e}")


# ---------------------------------------------------------------- 3

def test_c03_value_fixed_point():
    errs = [abs(minimax_value(np.full(m, 0.5), np.full(m, 0.5)) + 2 * math.log(2))
            for m in (1, 64, 1000)]
    verdict(3, "value function at D = 1/2 equals -2 ln 2", max(errs) <= 1e-12,
            f"max deviation {max(errs):.1e}")


# ---------------------------------------------------------------- 4

def test_c04_wgan_mechanics():
    violations, ratios_ok, n_checks = 0, True, 0
    world = normalize(make_reference_world(WorldConfig(n=800, base_default_rate=0.3, seed=1)))
    minority = world.matrix()[world.labels == 1]
    runs = [(minority, TrainConfig(epochs=6, seed=1)),
            (minority, TrainConfig(epochs=4, batch_size=16, n_critic=5, seed=2)),
            (Prng(3).normal(100 * 15).reshape(100, 15), TrainConfig(epochs=3, batch_size=32, seed=3))]
    for k, (x, cfg) in enumerate(runs):
        def check(model):
            nonlocal violations, n_checks
            n_checks += 1
            if np.abs(model.critic.params).max() > 0.01:
                violations += 1

        _, hist = train(x, cfg, GanModel.build(15, WASSERSTEIN, seed=k), on_critic_update=check)
        ratios_ok &= hist.critic_updates == 5 * hist.generator_updates
    verdict(4, "critic weights clipped after every update, 5 critic steps per generator step",
            violations == 0 and ratios_ok and n_checks > 0,
            f"{n_checks} critic updates checked, {violations} out of range")


# ---------------------------------------------------------------- 5

def _mixture(rng, n):
    comp = rng.uniform(n) < 0.5
    centers = np.where(comp[:, None], [1.0, 1.0], [-1.0, -1.0])
    return centers + 0.25 * rng.normal(2 * n).reshape(n, 2)


def test_c05_toy_convergence():
    rng = Prng(3)
    real, held = _mixture(rng.child(1), 512), _mixture(rng.child(2), 1000)
    model = GanModel.build(2, WASSERSTEIN, seed=3)
    before = energy_distance(model.sample(1000, Prng(99)), held)
    t = time.perf_counter()
    model, _ = train(real, TrainConfig(epochs=300, batch_size=64, lr=2e-4, seed=1), model)
    elapsed = time.perf_counter() - t
    after = energy_distance(model.sample(1000, Prng(99)), held)
    verdict(5, "WGAN on a 2-D Gaussian mixture halves the energy distance",
            after < 0.5 * before and elapsed < 60,
            f"{before:.3f} -> {after:.3f} (ratio {after / before:.3f}), {elapsed:.1f}s")


# ---------------------------------------------------------------- 6

def test_c06_metric_oracles():
    rng = np.random.default_rng(2024)
    mismatches = 0
    for _ in range(1000):
        n = int(rng.integers(1, 60))
        y, p = rng.integers(0, 2, n), rng.integers(0, 2, n)
        cm, row = confusion_and_prf(y, p)
        tp = sum(1 for a, b in zip(y, p) if a == 1 and b == 1)
        fp = sum(1 for a, b in zip(y, p) if a == 0 and b == 1)
        fn = sum(1 for a, b in zip(y, p) if a == 1 and b == 0)
        tn = n - tp - fp - fn
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        if ((cm.tp, cm.fp, cm.fn, cm.tn) != (tp, fp, fn, tn) or row.accuracy != (tp + tn) / n
                or row.precision != prec or row.recall != rec or row.f1 != f1):
            mismatches += 1

    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 80))
        y = rng.integers(0, 2, n)
        y[:2] = [0, 1]
        s = np.round(rng.random(n), 1)  # coarse grid produces ties
        pos, neg = s[y == 1], s[y == 0]
        mw = sum((a > b) + 0.5 * (a == b) for a in pos for b in neg) / (len(pos) * len(neg))
        worst = max(worst, abs(roc_and_auc(y, s)[1] - mw))
    hand = roc_and_auc([1, 0, 1, 0], [0.9, 0.8, 0.4, 0.3])[1]
    verdict(6, "confusion/PRF recounts, trapezoid AUC = Mann-Whitney, hand case",
            mismatches == 0 and worst <= 1e-12 and hand == 0.75,
            f"{mismatches} PRF mismatches, max AUC diff {worst:.1e}, hand AUC {hand}")


# ---------------------------------------------------------------- 7

def test_c07_loss_curve_shape():
    world = make_reference_world(WorldConfig())
    train_split, _ = stratified_split(world, 0.8, 0)
    train_split = normalize(train_split)
    minority = train_split.matrix()[train_split.labels == 1]
    model = GanModel.build(15, WASSERSTEIN, seed=0)
    _, hist = train(minority, TrainConfig(seed=0), model)
    ok = len(hist) == 120
    parts = []
    for col in ("d_loss_train", "d_loss_holdout"):
        v = hist.column(col)
        first, last = float(np.mean(v[:10])), float(np.mean(v[-10:]))
        ok &= last < first
        parts.append(f"{col} {first:.4f} -> {last:.4f}")
    verdict(7, "120-epoch loss history settles lower", ok, f"{len(hist)} records; " + "; ".join(parts))


# ---------------------------------------------------------------- 8, 11

@pytest.fixture(scope="module")
def default_bench(tmp_path_factory):
    return run_benchmark(load_config(seed=0), tmp_path_factory.mktemp("bench_default"))


def test_c08_table_shape(default_bench, tmp_path):
    header = default_bench.report_csv.splitlines()[0].split(",")
    names = [r.model_name for r in default_bench.rows]
    base = [n for n in names if not n.endswith("+GAN")]
    shape_ok = header[:5] == ["Model", "Accuracy", "Recall", "Precision", "F1"] and \
        all(f"{b}+GAN" in names for b in base) and len(names) == 2 * len(base)

    cfg = load_config(seed=0)
    cfg.world = WorldConfig.strong_signal()
    strong = run_benchmark(cfg, tmp_path / "strong")
    aucs = {r.model_name: r.auc for r in strong.rows}
    ok = shape_ok and all(a > 0.9 for a in aucs.values()) and strong.bayes_auc > 0.95
    verdict(8, "report columns and +GAN rows; strong-signal AUCs", ok,
            f"min classifier AUC {min(aucs.values()):.3f}, Bayes AUC {strong.bayes_auc:.3f}")


def test_c11_discrepancy_footnote(default_bench):
    md = default_bench.report_md
    line = next((l for l in md.splitlines() if l.startswith("\\+ GANs")), "")
    verdict(11, "report footnotes the inconsistent published F1",
            "0.985" in line and "0.97" in line, line.lstrip("\\+ "))


# ---------------------------------------------------------------- 9

def test_c09_ablation_direction(tmp_path):
    cfg = load_config()
    cfg.seeds = [0, 1, 2, 3, 4]
    t = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        result = run_ablation(cfg, tmp_path / "ablate")
    elapsed = time.perf_counter() - t
    with_r = statistics.median(r["with"].recall for r in result.per_seed)
    without_r = statistics.median(r["without"].recall for r in result.per_seed)
    ok = with_r >= without_r and ABLATION_REFERENCE in result.report and elapsed < 300
    verdict(9, "median minority recall with augmentation >= without (5 seeds)", ok,
            f"{with_r:.3f} vs {without_r:.3f}, {elapsed:.0f}s")


# ---------------------------------------------------------------- 10

def test_c10_determinism(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("world.n = 1500\nexperiment.seeds = 11\n")
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        assert cli_main(["benchmark", "--config", str(cfg), "--out", str(out), "--format", "csv"]) == 0
    capsys.readouterr()
    compared = ["report.csv", "report.md", "manifest.json"] + \
        [str(p.relative_to(outs[0])) for p in sorted((outs[0] / "models").glob("*.json"))]
    same = [(outs[0] / f).read_bytes() == (outs[1] / f).read_bytes() for f in compared]
    verdict(10, "identical config and seed give byte-identical reports and bundles", all(same),
            f"{sum(same)}/{len(same)} files identical")


if __name__ == "__main__":
    raise SystemExit(pytest.main([str(Path(__file__)), "-q", "-s"]))
