"""Command-line interface.

    mdnre gen --preset bfs --seed 0 --out bfs.csv
    mdnre train --data bfs.csv --source-domain human --mode first --out model.json
    mdnre eval --model model.json --data bfs.csv --out report.json
    mdnre ablate transfer --config exp.toml --seed 3 --out report.md --format md
    mdnre report --in report.json --format md

Exit status is 0 on success and 2 on any input, configuration or I/O error.
"""

import argparse
import json
import logging
import sys

import numpy as np

from . import experiments, synthgen
from .exceptions import MDNREError
from .io import atomic_write_text, load_dataset, load_model, save_dataset, save_model
from .report import FORMATS, evaluate, load_report
from .training import train

log = logging.getLogger("mdnre")


def _add_config_flags(p, with_mode=True):
    p.add_argument("--config", help="TOML experiment config")
    p.add_argument("--seed", type=int)
    p.add_argument("--source-domain", help="domain supplying exemplars ('all' for any)")
    p.add_argument("--theta", type=float, help="neutral threshold")
    p.add_argument("--mask-k", type=int, help="number of occluded expressive landmarks")
    if with_mode:
        p.add_argument("--mode", choices=["first", "optimized"])
    p.add_argument("--preset", choices=experiments.PRESETS)
    p.add_argument("--data", help="dataset CSV")
    p.add_argument("--train-data", help="training pool CSV")
    p.add_argument("--noise-sigma", type=float)
    p.add_argument("--identity-sigma", type=float)
    p.add_argument("--n-seeds", type=int)


def _config(args):
    keys = ("seed", "source_domain", "theta", "mask_k", "mode", "preset", "data",
            "train_data", "noise_sigma", "identity_sigma", "n_seeds")
    overrides = {k: getattr(args, k, None) for k in keys}
    if overrides.get("data") and not overrides.get("preset"):
        overrides["preset"] = "csv"
    return experiments.load_config(args.config, **overrides)


def _emit(text, out):
    if out:
        atomic_write_text(out, text)
        log.info("wrote %s", out)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _fmt_for(args):
    if args.format:
        return args.format
    if args.out and args.out.endswith(".md"):
        return "md"
    if args.out and args.out.endswith(".csv"):
        return "csv"
    return "json"


def cmd_gen(args):
    cfg = _config(args)
    if cfg.preset == "csv":
        raise MDNREError("gen needs a synthetic preset")
    if cfg.preset == "corrupted":
        spec = synthgen.bfs_spec(cfg.seed, cfg.noise_sigma, cfg.identity_sigma, cfg.identities)
        dataset, _ = synthgen.corrupted_pool(spec, cfg.corruption_angle, cfg.source_domain)
    else:
        dataset = experiments.make_dataset(cfg)
    save_dataset(dataset, args.out)
    log.info("%d samples, %d landmarks", len(dataset), dataset.n_landmarks)
    return 0


def cmd_train(args):
    cfg = _config(args)
    pool = load_dataset(args.data)
    model, choice = train(pool, cfg.source_domain, cfg.mode, tuple(cfg.anchors),
                          cfg.theta, cfg.theta_scale)
    extra = {
        "config": cfg.to_dict(),
        "neutrals": {str(d): str(pool.sample_ids[i]) for d, i in choice.neutrals.items()},
        "exemplars": {str(c): str(pool.sample_ids[i]) for c, i in choice.exemplars.items()},
        "n_images": choice.n_images,
    }
    save_model(model, args.out, extra)
    return 0


def cmd_eval(args):
    cfg = _config(args)
    model = load_model(args.model)
    dataset = load_dataset(args.data)
    mask, extras = None, {}
    if cfg.mask_k:
        cand = experiments.expressive_landmarks(dataset.n_landmarks, cfg.anchors)
        if cfg.mask_k > len(cand):
            raise MDNREError(f"--mask-k {cfg.mask_k} exceeds {len(cand)} expressive landmarks")
        rng = np.random.default_rng(cfg.seed)
        mask = sorted(rng.choice(cand, size=cfg.mask_k, replace=False).tolist())
        extras["mask"] = mask
    report = evaluate(model, dataset, mask, config=cfg.to_dict(), seed=cfg.seed, extras=extras)
    _emit(report.render(_fmt_for(args)), args.out)
    return 0


def cmd_ablate(args):
    cfg = _config(args)
    report = experiments.EXPERIMENTS[args.experiment](cfg)
    _emit(report.render(_fmt_for(args)), args.out)
    return 0


def cmd_report(args):
    report = load_report(getattr(args, "in"))
    _emit(report.render(_fmt_for(args)), args.out)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="mdnre", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic dataset CSV")
    _add_config_flags(p, with_mode=False)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="fit a model from a dataset CSV")
    _add_config_flags(p)
    p.add_argument("--out", required=True, help="model JSON path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model on a dataset CSV")
    _add_config_flags(p)
    p.add_argument("--model", required=True)
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="run an experiment recipe")
    p.add_argument("experiment", choices=sorted(experiments.EXPERIMENTS))
    _add_config_flags(p)
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("report", help="re-render a JSON report")
    p.add_argument("--in", required=True, help="report JSON")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (MDNREError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"mdnre: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
