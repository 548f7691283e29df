"""Experiment configuration and the benchmark / ablation pipelines.

Config files are flat ``section.key = value`` lines; ``#`` starts a comment,
lists are comma separated, booleans are ``true``/``false``. Sections:
``world``, ``gan``, ``classifier``, ``experiment``. See ``KEYS`` for the
accepted keys.
"""

from __future__ import annotations

import hashlib
import json
import os
import platform
import statistics
import warnings
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .classifiers import (DISPLAY_NAMES, KINDS, MLP_BP, ClassifierConfig, predict,
                          save_classifier, train_classifier)
from .data import (Dataset, WorldConfig, augment, augmentation_deficit, make_reference_world,
                   normalize, stratified_split, write_csv)
from .errors import ConfigError, DataError, GanLabError
from .gan import GanModel, NoiseSpec, TrainConfig, generate_records, save_model, train
from .metrics import (MetricsRow, confusion_and_prf, published_rows, render_report,
                      roc_and_auc)
from .plots import loss_curve_svg, roc_svg
from .rng import Prng

SEED_ENV = "SCF_GANLAB_SEED"
ABLATION_REFERENCE = ("Reference claim: removing the GAN-generated records lowers model "
                      "performance by approximately 5%. Shown for context only; not asserted.")

KEYS = {
    "world.preset": str, "world.n": int, "world.default_rate": float, "world.signal_scale": float,
    "world.mix": "floats", "world.intercept": float, "world.seed": int,
    "gan.mode": str, "gan.epochs": int, "gan.batch_size": int, "gan.lr": float,
    "gan.clip_c": float, "gan.n_critic": int, "gan.label_smooth": float,
    "gan.generator_loss": str, "gan.early_stop": bool, "gan.stop_window": int,
    "gan.noise_dim": int, "gan.noise": str, "gan.batchnorm_generator": bool,
    "gan.batchnorm_critic": bool, "gan.generator_hidden": "ints", "gan.critic_hidden": "ints",
    "gan.output_scale": float,
    "classifier.kinds": "strs", "classifier.epochs": int, "classifier.batch_size": int,
    "classifier.lr": float, "classifier.hidden_dims": "ints", "classifier.l2": float,
    "classifier.threshold": float,
    "experiment.seeds": "ints", "experiment.train_fraction": float,
    "experiment.augment_target_ratio": float, "experiment.output_dir": str,
}


def _convert(key, raw):
    kind = KEYS[key]
    try:
        if kind == bool:
            if raw.lower() not in ("true", "false"):
                raise ValueError(raw)
            return raw.lower() == "true"
        if kind in ("floats", "ints", "strs"):
            items = [t.strip() for t in raw.split(",") if t.strip()]
            cast = {"floats": float, "ints": int, "strs": str}[kind]
            return [cast(t) for t in items]
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from None


def parse_config(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        key, value = (t.strip() for t in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = _convert(key, value)
    return out


# The minority class of a default world holds ~80 rows, so batch 64 gives a
# single generator update per epoch; the pipelines use smaller batches and
# more epochs than a standalone TrainConfig.
PIPELINE_GAN = {"epochs": 300, "batch_size": 32}


@dataclass
class GanArch:
    mode: str = "wasserstein"
    noise_dim: int = 32
    noise: str = "normal"
    generator_hidden: tuple = (64, 64)
    critic_hidden: tuple = (64, 32)
    batchnorm_generator: bool = True
    batchnorm_critic: bool = True
    output_scale: float = 3.0


@dataclass
class ExperimentConfig:
    world: WorldConfig = field(default_factory=WorldConfig)
    gan: TrainConfig = field(default_factory=lambda: TrainConfig(**PIPELINE_GAN))
    arch: GanArch = field(default_factory=GanArch)
    classifiers: list = field(default_factory=lambda: [ClassifierConfig(kind=k) for k in KINDS])
    augment_target_ratio: float = 1.0
    train_fraction: float = 0.8
    seeds: list = field(default_factory=lambda: [0])
    output_dir: str = "runs"

    def validate(self):
        if not self.classifiers:
            raise ConfigError("at least one classifier is required")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        self.world.validate()
        self.gan.validate()
        for c in self.classifiers:
            c.validate()
        if not 0 < self.augment_target_ratio <= 1:
            raise ConfigError("augment_target_ratio must be in (0, 1]")
        return self

    @classmethod
    def from_mapping(cls, m: dict):
        w = {}
        preset = m.get("world.preset", "default")
        if preset not in ("default", "strong"):
            raise ConfigError(f"world.preset must be 'default' or 'strong', got {preset!r}")
        for src, dst in (("world.n", "n"), ("world.default_rate", "base_default_rate"),
                         ("world.intercept", "intercept"), ("world.seed", "seed")):
            if src in m:
                w[dst] = m[src]
        if "world.mix" in m:
            w["mix"] = tuple(m["world.mix"])
        if preset == "strong":
            if "world.signal_scale" in m:
                w["signal_scale"] = m["world.signal_scale"]
            world = WorldConfig.strong_signal(**w)
        else:
            world = WorldConfig(**w)
            if "world.signal_scale" in m:
                world.coef = world.coef * m["world.signal_scale"]

        g = dict(PIPELINE_GAN)
        for k in ("epochs", "batch_size", "lr", "clip_c", "n_critic", "label_smooth",
                  "early_stop", "stop_window"):
            if f"gan.{k}" in m:
                g[k] = m[f"gan.{k}"]
        if "gan.generator_loss" in m:
            g["generator_loss_form"] = m["gan.generator_loss"]
        arch = GanArch()
        for k in ("mode", "noise_dim", "noise", "batchnorm_generator", "batchnorm_critic",
                  "output_scale"):
            if f"gan.{k}" in m:
                setattr(arch, k, m[f"gan.{k}"])
        for k in ("generator_hidden", "critic_hidden"):
            if f"gan.{k}" in m:
                setattr(arch, k, tuple(m[f"gan.{k}"]))
        if arch.mode not in ("vanilla", "wasserstein"):
            raise ConfigError(f"gan.mode must be vanilla or wasserstein, got {arch.mode!r}")

        c = {}
        for k in ("epochs", "batch_size", "lr", "l2", "threshold"):
            if f"classifier.{k}" in m:
                c[k] = m[f"classifier.{k}"]
        if "classifier.hidden_dims" in m:
            c["hidden_dims"] = tuple(m["classifier.hidden_dims"])
        kinds = m.get("classifier.kinds", list(KINDS))
        classifiers = [ClassifierConfig(kind=k, **c) for k in kinds]

        cfg = cls(world=world, gan=TrainConfig(**g), arch=arch, classifiers=classifiers)
        for k in ("augment_target_ratio", "train_fraction", "output_dir", "seeds"):
            if f"experiment.{k}" in m:
                setattr(cfg, k, m[f"experiment.{k}"])
        return cfg.validate()

    def echo(self):
        """JSON-safe snapshot of the resolved configuration."""
        w = asdict(self.world)
        w["coef"] = self.world.coef.tolist()
        w["means"] = {k: np.asarray(v).tolist() for k, v in self.world.means.items()}
        w["covs"] = {k: np.asarray(v).tolist() for k, v in self.world.covs.items()}
        return {"world": w, "gan": asdict(self.gan), "arch": asdict(self.arch),
                "classifiers": [asdict(c) for c in self.classifiers],
                "augment_target_ratio": self.augment_target_ratio,
                "train_fraction": self.train_fraction, "seeds": list(self.seeds)}


def load_config(path=None, seed: Optional[int] = None, mode: Optional[str] = None,
                out: Optional[str] = None) -> ExperimentConfig:
    """Seed precedence: explicit ``seed`` > config file > ``$SCF_GANLAB_SEED`` > 0."""
    m = {}
    if path is not None:
        try:
            m = parse_config(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    if seed is None and "experiment.seeds" not in m and os.environ.get(SEED_ENV):
        try:
            seed = int(os.environ[SEED_ENV])
        except ValueError:
            raise ConfigError(f"${SEED_ENV} is not an integer") from None
    if seed is not None:
        m["experiment.seeds"] = [seed]
    if mode is not None:
        m["gan.mode"] = {"wgan": "wasserstein"}.get(mode, mode)
    if out is not None:
        m["experiment.output_dir"] = out
    return ExperimentConfig.from_mapping(m)


# ---------------------------------------------------------------- artifacts

class Artifacts:
    """Writes files under one directory and records their hashes for the manifest."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files = []

    def path(self, rel):
        p = self.root / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        self.files.append(rel)
        return p

    def text(self, rel, content):
        self.path(rel).write_text(content, encoding="utf-8")

    def manifest(self, config_echo):
        files = [{"path": rel, "sha256": hashlib.sha256((self.root / rel).read_bytes()).hexdigest()}
                 for rel in sorted(set(self.files))]
        doc = {"files": files, "config_echo": config_echo,
               "versions": {"scf_ganlab": __version__, "numpy": np.__version__,
                            "python": platform.python_version()}}
        (self.root / "manifest.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n",
                                                 encoding="utf-8")
        return doc


class StageError(GanLabError):
    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.exit_code = getattr(cause, "exit_code", 1)


class _Stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, StageError):
            if isinstance(exc, OSError):
                exc.exit_code = 5
            raise StageError(self.name, exc) from exc
        return False


# ---------------------------------------------------------------- shared pipeline

@dataclass
class PreparedRun:
    seed: int
    train: Dataset
    test: Dataset
    augmented: Dataset
    synthetic: list
    gan: GanModel
    history: object


def prepare(config: ExperimentConfig, seed: int, arts: Optional[Artifacts] = None) -> PreparedRun:
    """world -> split -> normalize -> GAN on train-split defaults -> synthesize -> augment."""
    rng = Prng(seed)
    with _Stage("genworld"):
        world = make_reference_world(config.world)
    with _Stage("split"):
        train_raw, test_raw = stratified_split(world, config.train_fraction, int(rng.child(1).seed))
        train_n = normalize(train_raw)
        test_n = normalize(test_raw, train_n.norm_stats)
    with _Stage("train-gan"):
        minority = train_n.matrix()[train_n.labels == 1]
        a = config.arch
        model = GanModel.build(train_n.schema.n_features, a.mode, NoiseSpec(a.noise_dim, a.noise),
                               a.generator_hidden, a.critic_hidden, a.batchnorm_generator,
                               a.batchnorm_critic, a.output_scale, seed=int(rng.child(2).seed))
        model.norm_stats = train_n.norm_stats
        gan_cfg = replace(config.gan, seed=int(rng.child(3).seed))
        model, history = train(minority, gan_cfg, model)
    with _Stage("synth"):
        need = augmentation_deficit(train_n, config.augment_target_ratio)
        synthetic = generate_records(model, need, train_n.norm_stats, train_n.schema,
                                     rng.child(4))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            augmented = augment(train_n, synthetic, config.augment_target_ratio)
    _check_isolation(train_n, augmented, test_n)
    if arts is not None:
        with _Stage("write"):
            write_csv(world, arts.path("data/world.csv"), ground_truth=True)
            write_csv(train_n, arts.path("data/train.csv"), ground_truth=True)
            write_csv(test_n, arts.path("data/test.csv"), ground_truth=True)
            if synthetic:
                write_csv(Dataset.from_records(synthetic), arts.path("data/synthetic.csv"))
            save_model(model, arts.path("models/gan.json"))
            arts.text("gan/loss_history.csv", history.to_csv())
            arts.text("gan/loss_curve.svg", loss_curve_svg(history))
    return PreparedRun(seed, train_n, test_n, augmented, synthetic, model, history)


def _check_isolation(train, augmented, test):
    test_ids = set(test.firm_ids.tolist())
    if test_ids & set(augmented.firm_ids.tolist()) or test_ids & set(train.firm_ids.tolist()):
        raise DataError("test records leaked into a training arm")
    if test.synthetic.any():
        raise DataError("synthetic records found in the test split")


def evaluate(clf, test: Dataset, name: str):
    out = predict(clf, test)
    _, row = confusion_and_prf(test.labels, out["labels"], name)
    curve, auc = roc_and_auc(test.labels, out["probabilities"])
    return row.with_auc(auc), curve


@dataclass
class BenchmarkResult:
    rows: list
    bayes_auc: float
    report_csv: str
    report_md: str
    output_dir: Path
    manifest: dict


def run_benchmark(config: ExperimentConfig, output_dir=None) -> BenchmarkResult:
    """Baselines trained on the raw and on the GAN-augmented split, all scored
    on the untouched test split, with every artifact written under ``output_dir``."""
    config.validate()
    seed = int(config.seeds[0])
    arts = Artifacts(output_dir or config.output_dir)
    run = prepare(config, seed, arts)
    rows, curves = [], {}
    for k, ccfg in enumerate(config.classifiers):
        ccfg = replace(ccfg, seed=int(Prng(seed).child(100 + k).seed))
        name = DISPLAY_NAMES[ccfg.kind]
        for suffix, data in (("", run.train), ("+GAN", run.augmented)):
            with _Stage(f"train-clf {name}{suffix}"):
                clf = train_classifier(data, ccfg)
            with _Stage(f"eval {name}{suffix}"):
                row, curve = evaluate(clf, run.test, name + suffix)
                save_classifier(clf, arts.path(f"models/{ccfg.kind}{'_gan' if suffix else ''}.json"))
                arts.text(f"roc/{ccfg.kind}{'_gan' if suffix else ''}.csv", curve.to_csv())
            rows.append(row)
            curves[f"{row.model_name} AUC={row.auc:.3f}"] = curve
    _, bayes_auc = roc_and_auc(run.test.labels, run.test.ground_truth_p)
    report_csv = render_report(rows, "csv")
    report_md = (render_report(rows, "md", title="Credit-risk classifiers, raw vs GAN-augmented")
                 + f"\nBayes-optimal scorer (ground-truth default probability) AUC: {bayes_auc:.4f}\n\n"
                 + render_report(published_rows(), "md", title="Published reference results")
                 + "\nReference rows are printed as published, for comparison of shape only.\n")
    arts.text("report.csv", report_csv)
    arts.text("report.md", report_md)
    arts.text("roc/roc.svg", roc_svg(curves, "ROC on the test split"))
    manifest = arts.manifest(config.echo())
    return BenchmarkResult(rows, bayes_auc, report_csv, report_md, arts.root, manifest)


# ---------------------------------------------------------------- ablation

METRICS = ("accuracy", "precision", "recall", "f1", "auc")


@dataclass
class AblationResult:
    per_seed: list            # dicts: seed, with, without (MetricsRow)
    medians: dict             # metric -> {"with": x, "without": y, "delta": with - without}
    deltas: list              # per seed: metric -> with - without
    report: str = ""


def run_ablation(config: ExperimentConfig, output_dir=None, control="raw") -> AblationResult:
    """MlpBp with and without GAN augmentation on identical splits, per seed.

    ``control="same"`` trains the control arm on the augmented set as well,
    a sanity mode in which every delta must be exactly zero.
    """
    config.validate()
    if len(config.seeds) < 3:
        warnings.warn(f"ablation over {len(config.seeds)} seed(s); medians need at least 3 "
                      "to mean much", stacklevel=2)
    arts = Artifacts(output_dir or config.output_dir)
    ccfg = next((c for c in config.classifiers if c.kind == MLP_BP), ClassifierConfig(kind=MLP_BP))
    per_seed, deltas = [], []
    for seed in config.seeds:
        run = prepare(config, int(seed))
        c = replace(ccfg, seed=int(Prng(int(seed)).child(200).seed))
        with _Stage("ablate"):
            with_row, _ = evaluate(train_classifier(run.augmented, c), run.test, "MlpBp+GAN")
            control_data = run.augmented if control == "same" else run.train
            without_row, _ = evaluate(train_classifier(control_data, c), run.test, "MlpBp")
        per_seed.append({"seed": int(seed), "with": with_row, "without": without_row})
        deltas.append({m: getattr(with_row, m) - getattr(without_row, m) for m in METRICS})
    medians = {}
    for m in METRICS:
        w = statistics.median(getattr(r["with"], m) for r in per_seed)
        wo = statistics.median(getattr(r["without"], m) for r in per_seed)
        medians[m] = {"with": w, "without": wo, "delta": statistics.median(d[m] for d in deltas)}

    lines = ["seed,arm," + ",".join(METRICS)]
    for r in per_seed:
        for arm in ("with", "without"):
            lines.append(f"{r['seed']},{arm}," + ",".join(repr(float(getattr(r[arm], m)))
                                                          for m in METRICS))
    arts.text("ablation.csv", "\n".join(lines) + "\n")
    md = ["### MlpBp with vs without GAN augmentation (medians over seeds)", "",
          "| Metric | With | Without | Median delta |", "|---|---:|---:|---:|"]
    md += [f"| {m} | {v['with']:.3f} | {v['without']:.3f} | {v['delta']:+.3f} |"
           for m, v in medians.items()]
    md += ["", f"Seeds: {', '.join(str(s) for s in config.seeds)}", "", ABLATION_REFERENCE]
    report = "\n".join(md) + "\n"
    arts.text("ablation.md", report)
    arts.manifest(config.echo())
    return AblationResult(per_seed, medians, deltas, report)
