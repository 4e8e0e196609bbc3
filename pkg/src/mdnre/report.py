"""Evaluation reports: accuracy tables, confusion matrix, strength linearity."""

import csv
import hashlib
import io
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import numpy as np

from .exceptions import ConfigurationError
from .io import atomic_write_text

FORMATS = ("json", "csv", "md")


def _key(lam):
    return f"{float(lam):g}"


def config_hash(config):
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def linear_fit(x, y):
    """Ordinary least squares ``y ~ slope * x + intercept`` with R^2.

    R^2 is ``None`` when ``y`` is constant; slope and intercept are ``None``
    with fewer than two distinct ``x``.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < 2 or np.ptp(x) == 0:
        return {"slope": None, "intercept": None, "r2": None, "n": int(x.size)}
    xm, ym = x.mean(), y.mean()
    slope = float(np.sum((x - xm) * (y - ym)) / np.sum((x - xm) ** 2))
    intercept = float(ym - slope * xm)
    ss_tot = float(np.sum((y - ym) ** 2))
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    r2 = None if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return {"slope": slope, "intercept": intercept, "r2": r2, "n": int(x.size)}


@dataclass
class EvalReport:
    """Accuracy and readout summary of one evaluation run.

    ``confusion[i][j]`` counts samples of true class ``class_labels[i]``
    predicted as ``class_labels[j]``. ``extras`` holds experiment-specific
    tables (baselines, occlusion sweep, template comparison).
    """

    overall_accuracy: float
    class_labels: list
    confusion: list
    per_domain: dict
    per_strength: dict
    linearity: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.check()

    def check(self):
        cm = np.asarray(self.confusion, dtype=np.int64)
        M = len(self.class_labels)
        if cm.shape != (M, M):
            raise ConfigurationError("confusion matrix does not match the class list")
        total = int(cm.sum())
        if total == 0:
            raise ConfigurationError("report over an empty evaluation set")
        if not np.isclose(self.overall_accuracy, np.trace(cm) / total, rtol=0, atol=1e-12):
            raise ConfigurationError("overall accuracy disagrees with the confusion matrix")

    @property
    def n_samples(self):
        return int(np.sum(self.confusion))

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=str) + "\n"

    @classmethod
    def from_dict(cls, data):
        return cls(**data)

    def rows(self):
        """Flat ``(section, key, value)`` rows used by the CSV renderer."""
        out = [("overall", "accuracy", self.overall_accuracy),
               ("overall", "n_samples", self.n_samples)]
        out += [("domain", k, v) for k, v in self.per_domain.items()]
        out += [("strength", k, v) for k, v in self.per_strength.items()]
        for i, true in enumerate(self.class_labels):
            for j, pred in enumerate(self.class_labels):
                out.append(("confusion", f"{true}->{pred}", self.confusion[i][j]))
        for cls_, stats in self.linearity.items():
            for k, v in stats.items():
                out.append(("linearity", f"{cls_}.{k}", v))
        for name, value in _flatten(self.extras):
            out.append(("extra", name, value))
        for name, value in _flatten(self.metadata):
            out.append(("meta", name, value))
        return out

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["section", "key", "value"])
        writer.writerows(self.rows())
        return buf.getvalue()

    def to_markdown(self):
        lines = ["# Evaluation report", "",
                 f"Overall accuracy: **{self.overall_accuracy:.4f}** "
                 f"({self.n_samples} samples)", ""]
        lines += _md_table(["domain", "accuracy"],
                           [[k, f"{v:.4f}"] for k, v in self.per_domain.items()])
        lines += _md_table(["strength", "accuracy"],
                           [[k, f"{v:.4f}"] for k, v in self.per_strength.items()])
        if self.linearity:
            lines += _md_table(
                ["class", "slope", "intercept", "R2", "n"],
                [[c, _num(s["slope"]), _num(s["intercept"]), _num(s["r2"]), s["n"]]
                 for c, s in self.linearity.items()])
        lines += _md_table(["true \\ pred"] + list(map(str, self.class_labels)),
                           [[str(c)] + [str(v) for v in row]
                            for c, row in zip(self.class_labels, self.confusion)])
        flat = list(_flatten(self.extras))
        if flat:
            lines += _md_table(["extra", "value"], [[k, _num(v)] for k, v in flat])
        meta = {k: v for k, v in self.metadata.items() if k != "config"}
        lines += _md_table(["meta", "value"], [[k, str(v)] for k, v in meta.items()])
        return "\n".join(lines)

    def render(self, fmt):
        if fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        if fmt in ("md", "markdown"):
            return self.to_markdown()
        raise ConfigurationError(f"unknown report format {fmt!r}; use one of {FORMATS}")


def _num(v):
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def _md_table(header, rows):
    if not rows:
        return []
    out = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    out += ["| " + " | ".join(str(c) for c in r) + " |" for r in rows]
    return out + [""]


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}{k}.")
    elif isinstance(obj, list) and obj and all(isinstance(v, dict) for v in obj):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}{i}.")
    else:
        yield prefix.rstrip("."), obj


def save_report(report, path, fmt="json"):
    atomic_write_text(path, report.render(fmt))


def load_report(path):
    with open(path, encoding="utf-8") as fh:
        return EvalReport.from_dict(json.load(fh))


def evaluate(model, dataset, mask=None, config=None, seed=None, extras=None):
    """Run ``model`` on ``dataset`` and assemble a report."""
    labels = tuple(model.class_labels)
    pred_idx = model.predict_index(dataset.X, mask)
    lookup = {c: i for i, c in enumerate(labels)}
    try:
        true_idx = np.array([lookup[c] for c in dataset.labels], dtype=np.intp)
    except KeyError as exc:
        raise ConfigurationError(f"dataset class {exc.args[0]!r} unknown to the model") from None
    return build_report(labels, true_idx, pred_idx, dataset,
                        readout=_readout(model, dataset, true_idx, mask),
                        config=config, seed=seed, extras=extras)


def _readout(model, dataset, true_idx, mask):
    neutral = model.bank.neutral
    keep = true_idx != neutral
    if not np.any(keep):
        return None
    lam_hat = model.readout_strength(dataset.X[keep], true_idx[keep], mask)
    return keep, lam_hat


def build_report(class_labels, true_idx, pred_idx, dataset, readout=None,
                 config=None, seed=None, extras=None):
    M = len(class_labels)
    cm = np.zeros((M, M), dtype=np.int64)
    np.add.at(cm, (true_idx, pred_idx), 1)
    correct = true_idx == pred_idx
    per_domain = {str(d): float(np.mean(correct[dataset.domains == d]))
                  for d in dataset.domain_labels if np.any(dataset.domains == d)}
    per_strength = {}
    for lam in sorted(set(dataset.strengths.tolist())):
        hit = dataset.strengths == lam
        per_strength[_key(lam)] = float(np.mean(correct[hit]))

    linearity = {}
    if readout is not None:
        keep, lam_hat = readout
        lam_true = dataset.strengths[keep]
        cls_true = true_idx[keep]
        for m in sorted(set(cls_true.tolist())):
            sel = cls_true == m
            if len(set(lam_true[sel].tolist())) > 1:
                linearity[str(class_labels[m])] = linear_fit(lam_true[sel], lam_hat[sel])

    config = dict(config or {})
    metadata = {
        "seed": seed,
        "config": config,
        "config_hash": config_hash(config),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    return EvalReport(
        overall_accuracy=float(np.trace(cm) / cm.sum()),
        class_labels=[str(c) for c in class_labels],
        confusion=cm.tolist(),
        per_domain=per_domain,
        per_strength=per_strength,
        linearity=linearity,
        extras=extras or {},
        metadata=metadata,
    )
