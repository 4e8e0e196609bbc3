"""Experiment recipes: transfer, strength linearity, occlusion sweep,
template optimisation. Each takes an :class:`ExperimentConfig` and returns an
:class:`~mdnre.report.EvalReport`."""

import dataclasses
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import baselines, synthgen
from .exceptions import ConfigurationError
from .io import load_dataset
from .report import evaluate
from .training import train

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

logger = logging.getLogger(__name__)

PRESETS = ("bfs", "bfsl", "fig3-collinear", "fig3-misaligned", "corrupted", "csv")
EXHAUSTIVE_MASK_LIMIT = 252

# train and test noise come from seeds this far apart
_STREAM_STRIDE = 1_000_003
_TRAIN_STREAM, _TEST_STREAM = 0, 1


@dataclass
class ExperimentConfig:
    preset: str = "bfs"
    data: str = None
    train_data: str = None
    seed: int = 0
    noise_sigma: float = 0.0
    identity_sigma: float = 0.0
    identities: int = 5
    source_domain: str = "human"
    theta: float = None
    theta_scale: float = 0.1
    mode: str = "first"
    mask_k: int = None
    phi: float = math.pi
    shift_scale: float = 1.0
    n_seeds: int = 1
    n_random_masks: int = 50
    corruption_angle: float = math.pi / 2
    anchors: list = field(default_factory=lambda: [0, 1, 2])
    ridge: float = 1e-6

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ConfigurationError(f"preset must be one of {PRESETS}, got {self.preset!r}")
        if self.mode not in ("first", "optimized"):
            raise ConfigurationError(f"mode must be 'first' or 'optimized', got {self.mode!r}")
        if self.preset == "csv" and not self.data:
            raise ConfigurationError("preset 'csv' needs a data path")
        if self.source_domain in ("", "*", "all"):
            self.source_domain = None
        if self.preset.startswith("fig3") and self.source_domain == "human":
            self.source_domain = "source"
        if self.n_seeds < 1:
            raise ConfigurationError("n_seeds must be >= 1")
        self.anchors = [int(a) for a in self.anchors]

    def to_dict(self):
        return dataclasses.asdict(self)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def load_config(path=None, **overrides):
    """Read a TOML config file and apply non-``None`` overrides."""
    values = {}
    if path is not None:
        with open(path, "rb") as fh:
            try:
                values = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigurationError(f"{path}: {exc}") from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigurationError(f"unknown config keys: {unknown}")
    return ExperimentConfig(**values)


def _spec(cfg, seed, strengths=(1.0,), identities=None):
    if cfg.preset == "bfsl":
        return synthgen.bfsl_spec(seed, cfg.noise_sigma, cfg.identity_sigma)
    return synthgen.bfs_spec(seed, cfg.noise_sigma, cfg.identity_sigma,
                             identities or cfg.identities, strengths)


def make_dataset(cfg, stream=_TRAIN_STREAM):
    """Dataset for the configured preset (the full sample set, train + test)."""
    seed = cfg.seed + stream * _STREAM_STRIDE
    if cfg.preset == "csv":
        return load_dataset(cfg.data)
    if cfg.preset.startswith("fig3"):
        mode = cfg.preset.split("-", 1)[1]
        return synthgen.fig3_instance(mode, cfg.phi, cfg.shift_scale)[0]
    return synthgen.generate(_spec(cfg, seed))[0]


def train_test_split(cfg):
    """Training pool and held-out test set.

    With ``train_data`` the pool is that file and the test set is the main
    dataset. Otherwise the pool is the few-shot split (one neutral per
    domain plus the first source-domain exemplar per class) and the test set
    is everything else.
    """
    data = make_dataset(cfg)
    if cfg.train_data:
        return load_dataset(cfg.train_data), data
    idx = synthgen.bfs_training_split(data, cfg.source_domain)
    rest = np.setdiff1d(np.arange(len(data)), idx)
    if rest.size == 0:
        rest = np.arange(len(data))
    return data.subset(idx), data.subset(rest)


def _fit(cfg, pool, mode=None, eval_subset=None):
    return train(pool, cfg.source_domain, mode or cfg.mode, tuple(cfg.anchors),
                 cfg.theta, cfg.theta_scale, eval_subset)


def _domain_accuracy(pred, dataset):
    correct = pred == dataset.labels
    out = {"overall": float(np.mean(correct))}
    for d in dataset.domain_labels:
        hit = dataset.domains == d
        if np.any(hit):
            out[str(d)] = float(np.mean(correct[hit]))
    return out


def baseline_table(cfg, pool, test, model):
    """Target-set accuracies of the comparison methods.

    The absolute-space baselines see only the source domain's training
    images.
    """
    source = cfg.source_domain or pool.domain_labels[0]
    src_pool = pool.subset(pool.domains == source)
    table = {"single_reference": _domain_accuracy(
        model.single_reference(source).predict(test.X), test)}
    try:
        linear = baselines.fit_linear(src_pool, cfg.ridge)
        table["linear"] = _domain_accuracy(baselines.predict_linear(linear, test.X), test)
    except ConfigurationError as exc:
        logger.warning("linear baseline skipped: %s", exc)
    table["centroid"] = _domain_accuracy(
        baselines.fit_predict_centroid(src_pool, test.X), test)
    return table


def run_transfer(cfg):
    """Fit on the few-shot pool, evaluate held-out samples of every domain."""
    pool, test = train_test_split(cfg)
    model, choice = _fit(cfg, pool)
    extras = {
        "n_training_images": choice.n_images,
        "baselines": baseline_table(cfg, pool, test, model),
    }
    return evaluate(model, test, config=cfg.to_dict(), seed=cfg.seed, extras=extras)


def _strength_once(cfg, seed):
    train_spec = synthgen.bfs_spec(seed, cfg.noise_sigma, cfg.identity_sigma, 1, (1.0,))
    test_spec = synthgen.bfsl_spec(seed + _STREAM_STRIDE, cfg.noise_sigma, cfg.identity_sigma)
    train_all, _ = synthgen.generate(train_spec)
    pool = train_all.subset(synthgen.bfs_training_split(train_all, cfg.source_domain))
    test, _ = synthgen.generate(test_spec)
    model, choice = _fit(cfg, pool, mode="first")
    return model, choice, test


def run_strength(cfg):
    """Blend-level test: accuracy per level and linearity of the readout.

    With ``n_seeds > 1`` the report adds per-level accuracy averaged over
    seeds ``seed .. seed + n_seeds - 1``.
    """
    if cfg.preset == "csv":
        pool, test = train_test_split(cfg)
        model, choice = _fit(cfg, pool)
    else:
        model, choice, test = _strength_once(cfg, cfg.seed)
    extras = {"n_training_images": choice.n_images}
    if cfg.n_seeds > 1 and cfg.preset != "csv":
        sums = {}
        for s in range(cfg.seed, cfg.seed + cfg.n_seeds):
            m, _, t = _strength_once(cfg, s)
            correct = m.predict(t.X) == t.labels
            for lam in sorted(set(t.strengths.tolist())):
                sums.setdefault(f"{lam:g}", []).append(float(np.mean(correct[t.strengths == lam])))
        extras["seed_sweep"] = {
            "n_seeds": cfg.n_seeds,
            "mean_accuracy": {k: float(np.mean(v)) for k, v in sums.items()},
        }
    return evaluate(model, test, config=cfg.to_dict(), seed=cfg.seed, extras=extras)


def expressive_landmarks(n_landmarks, anchors):
    return [i for i in range(n_landmarks) if i not in set(anchors)]


def masks_of_size(candidates, k, rng, n_random=50, limit=EXHAUSTIVE_MASK_LIMIT):
    """All size-``k`` masks when there are at most ``limit``, else ``n_random``
    distinct random ones. Returns ``(masks, exhaustive)``."""
    total = math.comb(len(candidates), k)
    if total <= limit:
        return [tuple(c) for c in itertools.combinations(candidates, k)], True
    seen = set()
    while len(seen) < min(n_random, total):
        seen.add(tuple(sorted(rng.choice(candidates, size=k, replace=False).tolist())))
    return sorted(seen), False


def occlusion_sweep(model, test, anchors, seed=0, n_random=50, sizes=None):
    """Accuracy against the number of occluded expressive landmarks."""
    cand = expressive_landmarks(test.n_landmarks, anchors)
    rng = np.random.default_rng(seed)
    sizes = range(len(cand) + 1) if sizes is None else sizes
    table = []
    for k in sizes:
        masks, exhaustive = masks_of_size(cand, k, rng, n_random)
        accs = [model.accuracy(test, m) for m in masks]
        table.append({"k": int(k), "n_masks": len(masks), "exhaustive": exhaustive,
                      "mean_accuracy": float(np.mean(accs)),
                      "min_accuracy": float(np.min(accs))})
    return table


def run_occlusion(cfg):
    pool, test = train_test_split(cfg)
    model, choice = _fit(cfg, pool)
    sizes = None if cfg.mask_k is None else [cfg.mask_k]
    extras = {"n_training_images": choice.n_images,
              "occlusion": occlusion_sweep(model, test, cfg.anchors, cfg.seed,
                                           cfg.n_random_masks, sizes)}
    return evaluate(model, test, config=cfg.to_dict(), seed=cfg.seed, extras=extras)


def optimize_pools(cfg):
    """``(pool, eval_subset, test)`` for the template comparison."""
    if cfg.preset == "corrupted":
        spec = _spec(cfg, cfg.seed)
        pool, eval_set = synthgen.corrupted_pool(spec, cfg.corruption_angle,
                                                 cfg.source_domain)
        return pool, eval_set, eval_set
    if cfg.preset == "csv" and cfg.train_data:
        pool = load_dataset(cfg.train_data)
        return pool, pool, load_dataset(cfg.data)
    if cfg.preset == "csv" or cfg.preset.startswith("fig3"):
        data = make_dataset(cfg)
        return data, data, data
    pool = make_dataset(cfg, _TRAIN_STREAM)
    return pool, pool, make_dataset(cfg, _TEST_STREAM)


def run_optimize(cfg):
    """First against Optimized templates, accuracy on eval subset and test."""
    pool, eval_set, test = optimize_pools(cfg)
    first, first_choice = _fit(cfg, pool, "first")
    opt, opt_choice = _fit(cfg, pool, "optimized", eval_set)

    def ids(choice):
        return {str(c): str(pool.sample_ids[i]) for c, i in choice.exemplars.items()}

    extras = {"templates": {
        "first": {"train_accuracy": first.accuracy(eval_set),
                  "test_accuracy": first.accuracy(test), "exemplars": ids(first_choice)},
        "optimized": {"train_accuracy": opt.accuracy(eval_set),
                      "test_accuracy": opt.accuracy(test), "exemplars": ids(opt_choice)},
    }}
    model = opt if cfg.mode == "optimized" else first
    return evaluate(model, test, config=cfg.to_dict(), seed=cfg.seed, extras=extras)


EXPERIMENTS = {
    "transfer": run_transfer,
    "strength": run_strength,
    "occlusion": run_occlusion,
    "optimize": run_optimize,
}
