"""``scf-ganlab`` command line: one subcommand per pipeline stage plus the
``benchmark`` and ``ablate`` composites.

Exit codes: 0 success, 2 config error, 3 data error, 4 numeric error, 5 I/O error.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import replace
from pathlib import Path

from . import __version__
from .classifiers import DISPLAY_NAMES, KINDS, load_classifier, save_classifier, train_classifier
from .data import (SCHEMA, Dataset, augment, load_csv, make_reference_world, normalize,
                   stratified_split, write_csv)
from .errors import GanLabError
from .experiment import (Artifacts, _Stage, evaluate, load_config, run_ablation,
                         run_benchmark)
from .gan import GanModel, NoiseSpec, generate_records, load_model, save_model, train
from .gradcheck import run_gradient_suite
from .metrics import render_report
from .plots import loss_curve_svg, roc_svg
from .rng import Prng


def _config(args):
    return load_config(args.config, args.seed, getattr(args, "mode", None), args.out)


def _out(cfg):
    return Artifacts(cfg.output_dir)


def cmd_genworld(args):
    cfg = _config(args)
    arts = _out(cfg)
    seed = int(cfg.seeds[0])
    with _Stage("genworld"):
        world = make_reference_world(cfg.world)
        train_raw, test_raw = stratified_split(world, cfg.train_fraction, int(Prng(seed).child(1).seed))
        write_csv(world, arts.path("world.csv"), ground_truth=True)
        write_csv(train_raw, arts.path("train.csv"), ground_truth=True)
        write_csv(test_raw, arts.path("test.csv"), ground_truth=True)
    arts.manifest(cfg.echo())
    print(f"wrote {len(world)} firms ({world.class_counts()[1]} defaults) to {arts.root}")


def cmd_train_gan(args):
    cfg = _config(args)
    arts = _out(cfg)
    seed = int(cfg.seeds[0])
    with _Stage("train-gan"):
        data = normalize(load_csv(args.data))
        minority = data.matrix()[data.labels == 1]
        a = cfg.arch
        model = GanModel.build(data.schema.n_features, a.mode, NoiseSpec(a.noise_dim, a.noise),
                               a.generator_hidden, a.critic_hidden, a.batchnorm_generator,
                               a.batchnorm_critic, a.output_scale, seed=int(Prng(seed).child(2).seed))
        model.norm_stats = data.norm_stats
        model, history = train(minority, replace(cfg.gan, seed=int(Prng(seed).child(3).seed)), model)
        save_model(model, arts.path("gan.json"))
        arts.text("loss_history.csv", history.to_csv())
        arts.text("loss_curve.svg", loss_curve_svg(history))
    arts.manifest(cfg.echo())
    last = history.records[-1]
    print(f"{len(history)} epochs, final d_loss {last.d_loss_train:.4f}, "
          f"g_loss {last.g_loss_train:.4f}; bundle {arts.root / 'gan.json'}")


def cmd_synth(args):
    cfg = _config(args)
    arts = _out(cfg)
    with _Stage("synth"):
        model = load_model(args.model, SCHEMA.n_features)
        if model.norm_stats is None:
            raise GanLabError("GAN bundle carries no normalization statistics")
        records = generate_records(model, args.n, model.norm_stats,
                                   rng=Prng(int(cfg.seeds[0])).child(4))
        write_csv(Dataset.from_records(records), arts.path("synthetic.csv"))
    arts.manifest(cfg.echo())
    print(f"wrote {len(records)} synthetic default records to {arts.root / 'synthetic.csv'}")


def cmd_train_clf(args):
    cfg = _config(args)
    arts = _out(cfg)
    kinds = [args.kind] if args.kind else [c.kind for c in cfg.classifiers]
    with _Stage("train-clf"):
        data = normalize(load_csv(args.data))
        if args.synthetic:
            extra = load_csv(args.synthetic).records
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                data = augment(data, extra, cfg.augment_target_ratio)
        for kind in kinds:
            ccfg = next((c for c in cfg.classifiers if c.kind == kind), cfg.classifiers[0])
            clf = train_classifier(data, replace(ccfg, kind=kind))
            save_classifier(clf, arts.path(f"{kind}.json"))
            print(f"{DISPLAY_NAMES[kind]}: final train loss {clf.final_train_loss:.4f}")
    arts.manifest(cfg.echo())


def cmd_eval(args):
    cfg = _config(args)
    arts = _out(cfg)
    rows, curves = [], {}
    with _Stage("eval"):
        raw = load_csv(args.data)
        for path in args.model:
            clf = load_classifier(path)
            row, curve = evaluate(clf, normalize(raw, clf.norm_stats), Path(path).stem)
            rows.append(row)
            curves[f"{row.model_name} AUC={row.auc:.3f}"] = curve
            arts.text(f"roc_{Path(path).stem}.csv", curve.to_csv())
        arts.text(f"report.{args.format}", render_report(rows, args.format))
        arts.text("roc.svg", roc_svg(curves))
    arts.manifest(cfg.echo())
    print(render_report(rows, args.format), end="")


def cmd_benchmark(args):
    cfg = _config(args)
    result = run_benchmark(cfg)
    print(result.report_csv if args.format == "csv" else result.report_md, end="")


def cmd_ablate(args):
    cfg = _config(args)
    result = run_ablation(cfg)
    if args.format == "csv":
        print((Path(cfg.output_dir) / "ablation.csv").read_text(), end="")
    else:
        print(result.report, end="")


def cmd_gradcheck(args):
    worst = run_gradient_suite(args.trials, args.seed if args.seed is not None else 0)
    for name, err in worst.items():
        print(f"{name:28s} {err:.3e}")
    top = max(worst.values())
    print(f"max relative error {top:.3e}")
    return 0 if top < args.tol else 4


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat 'section.key = value' config file")
    common.add_argument("--seed", type=int, help="overrides the config; $SCF_GANLAB_SEED is the fallback")
    common.add_argument("--out", help="output directory (default: experiment.output_dir)")
    common.add_argument("--format", choices=("csv", "md"), default="md")

    p = argparse.ArgumentParser(prog="scf-ganlab", description=__doc__.split("\n\n")[0].replace("\n", " "))
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help, mode=False):
        sp = sub.add_parser(name, parents=[common], help=help)
        if mode:
            sp.add_argument("--mode", choices=("vanilla", "wgan"))
        sp.set_defaults(func=func)
        return sp

    add("genworld", cmd_genworld, "sample a reference world and its train/test split")
    sp = add("train-gan", cmd_train_gan, "train a GAN on the default rows of a CSV", mode=True)
    sp.add_argument("--data", required=True)
    sp = add("synth", cmd_synth, "generate synthetic default records from a GAN bundle")
    sp.add_argument("--model", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp = add("train-clf", cmd_train_clf, "train classifiers, optionally with synthetic records")
    sp.add_argument("--data", required=True)
    sp.add_argument("--synthetic")
    sp.add_argument("--kind", choices=KINDS)
    sp = add("eval", cmd_eval, "score classifier bundles on a CSV")
    sp.add_argument("--model", required=True, action="append")
    sp.add_argument("--data", required=True)
    add("benchmark", cmd_benchmark, "raw vs GAN-augmented comparison report", mode=True)
    add("ablate", cmd_ablate, "MlpBp with and without augmentation over seeds", mode=True)
    sp = add("gradcheck", cmd_gradcheck, "finite-difference gradient suite")
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--tol", type=float, default=1e-4)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        code = args.func(args)
    except GanLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5
    return code or 0


if __name__ == "__main__":
    sys.exit(main())
