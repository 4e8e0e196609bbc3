"""Few-shot fitting of references and tuning directions.

One neutral face per domain becomes that domain's reference. One exemplar per
expression class, expressed as a displacement from its own domain's aligned
reference, gives the tuning directions. Template choice is either the first
candidate per class or a one-pass greedy search over candidates.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ZERO_DIRECTION_TOL,
    TuningBank,
    classify,
    expression_activity,
)
from .data import NEUTRAL
from .exceptions import CalibrationError, ConfigurationError, DimensionError
from .frames import (
    DEFAULT_ANCHORS,
    ReferenceFrame,
    align_reference,
    estimate_pose,
    infer_domain,
    infer_domains,
)
from .validation import check_face, check_landmarks

logger = logging.getLogger(__name__)

DEFAULT_THETA_SCALE = 0.1


@dataclass(eq=False)
class FittedModel:
    """Reference frames, tuning bank and neutral threshold.

    Prediction runs the full pipeline per sample: pick and align the best
    reference, take the difference field, read out class activities and
    decide with the neutral threshold.
    """

    frames: list
    bank: TuningBank
    neutral_threshold: float

    def __post_init__(self):
        self.frames = list(self.frames)
        if not self.frames:
            raise ConfigurationError("a model needs at least one reference frame")
        if any(f.n_landmarks != self.bank.n_landmarks for f in self.frames):
            raise DimensionError("frames and tuning bank disagree on the landmark count")
        if self.neutral_threshold < 0:
            raise ConfigurationError("neutral threshold must be >= 0")

    @property
    def class_labels(self):
        return self.bank.class_labels

    @property
    def domains(self):
        return tuple(f.domain for f in self.frames)

    def difference_fields(self, X):
        """Difference fields and selected frame indices for a batch."""
        X, _ = check_landmarks(X, self.bank.n_landmarks)
        idx, aligned, _ = infer_domains(X, self.frames)
        return X - aligned, idx

    def activities(self, X, mask=None):
        diffs, _ = self.difference_fields(X)
        return expression_activity(diffs, self.bank, mask)

    def predict_index(self, X, mask=None):
        act = self.activities(X, mask)
        return np.atleast_1d(classify(act, self.neutral_threshold, self.bank.neutral))

    def predict(self, X, mask=None):
        labels = np.asarray(self.bank.class_labels, dtype=object)
        return labels[self.predict_index(X, mask)]

    def predict_domain(self, X):
        _, idx = self.difference_fields(X)
        return np.asarray(self.domains, dtype=object)[idx]

    def readout_strength(self, X, classes=None, mask=None):
        """``v_m / calib_m`` per sample, for the predicted class by default.

        Neutral predictions read out as 0.
        """
        act = self.activities(X, mask)
        if classes is None:
            classes = classify(act, self.neutral_threshold, self.bank.neutral)
        classes = np.broadcast_to(np.asarray(classes, dtype=np.intp), act.shape[:-1])
        calib = self.bank.calib[classes]
        picked = np.take_along_axis(act, classes[..., np.newaxis], axis=-1)[..., 0]
        safe = np.where(calib > 0, calib, 1.0)
        return np.where(calib > 0, picked / safe, 0.0)

    def accuracy(self, dataset, mask=None):
        pred = self.predict(dataset.X, mask)
        return float(np.mean(pred == dataset.labels))

    def single_reference(self, domain):
        """Same bank and threshold, but only ``domain``'s reference frame."""
        frames = [f for f in self.frames if f.domain == domain]
        if not frames:
            raise ConfigurationError(f"no reference frame for domain {domain!r}")
        return FittedModel(frames, self.bank, self.neutral_threshold)

    def to_dict(self):
        return {
            "frames": [f.to_dict() for f in self.frames],
            "bank": {
                "directions": self.bank.directions.tolist(),
                "calib": self.bank.calib.tolist(),
                "class_labels": list(self.bank.class_labels),
                "neutral": self.bank.neutral,
            },
            "neutral_threshold": self.neutral_threshold,
        }

    @classmethod
    def from_dict(cls, data):
        b = data["bank"]
        bank = TuningBank(np.asarray(b["directions"], dtype=np.float64),
                          np.asarray(b["calib"], dtype=np.float64),
                          tuple(b["class_labels"]), int(b["neutral"]))
        frames = [ReferenceFrame.from_dict(f) for f in data["frames"]]
        return cls(frames, bank, float(data["neutral_threshold"]))


@dataclass
class TemplateChoice:
    """Pool indices used to fit a model."""

    neutrals: dict
    exemplars: dict
    history: list = field(default_factory=list)

    @property
    def n_images(self):
        return len(set(self.neutrals.values()) | set(self.exemplars.values()))


def fit_references(neutrals, anchor_indices=DEFAULT_ANCHORS, domains=None):
    """One reference frame per ``(face, domain)`` pair, kept verbatim.

    If ``domains`` is given, every listed domain must have a neutral.
    """
    frames = []
    seen = set()
    for face, domain in neutrals:
        if domain in seen:
            raise ConfigurationError(f"more than one neutral for domain {domain!r}")
        seen.add(domain)
        frames.append(ReferenceFrame(domain, check_face(face), tuple(anchor_indices)))
    if not frames:
        raise ConfigurationError("no neutral faces given")
    if domains is not None:
        missing = [d for d in domains if d not in seen]
        if missing:
            raise ConfigurationError(f"no neutral face for domains {missing}")
    L = frames[0].n_landmarks
    if any(f.n_landmarks != L for f in frames):
        raise DimensionError("neutral faces disagree on the landmark count")
    return frames


def _frame_for(frames, face, domain):
    if isinstance(frames, ReferenceFrame):
        return frames
    frames = list(frames)
    if domain is not None:
        for f in frames:
            if f.domain == domain:
                return f
        raise ConfigurationError(f"no reference frame for domain {domain!r}")
    if len(frames) == 1:
        return frames[0]
    return frames[infer_domain(face, frames).index]


def exemplar_difference(face, frame):
    """Displacement of ``face`` from ``frame`` aligned to the face's pose."""
    face = check_face(face, frame.n_landmarks)
    pose = estimate_pose(face, frame.anchor_indices)
    return face - align_reference(frame, pose)


def fit_tuning(exemplars, frames, class_labels, neutral_label=NEUTRAL):
    """Build a tuning bank from one exemplar per non-neutral class.

    Parameters
    ----------
    exemplars : iterable of (face, label) or (face, label, domain)
        Exemplars of the neutral class are ignored.
    frames : ReferenceFrame or list of ReferenceFrame
        With a list, each exemplar uses its own domain's frame (or the
        inferred one when no domain is given).
    class_labels : sequence
        Full class order including the neutral label.
    """
    class_labels = tuple(class_labels)
    if neutral_label not in class_labels:
        raise ConfigurationError(f"neutral label {neutral_label!r} not among classes")
    neutral = class_labels.index(neutral_label)
    diffs = {}
    for item in exemplars:
        face, label = item[0], item[1]
        domain = item[2] if len(item) > 2 else None
        if label == neutral_label:
            continue
        if label not in class_labels:
            raise ConfigurationError(f"unknown class label {label!r}")
        if label in diffs:
            raise ConfigurationError(f"more than one exemplar for class {label!r}")
        frame = _frame_for(frames, face, domain)
        diffs[label] = exemplar_difference(face, frame)

    missing = [c for c in class_labels if c != neutral_label and c not in diffs]
    if missing:
        raise ConfigurationError(f"no exemplar for classes {missing}")

    L = next(iter(diffs.values())).shape[0]
    directions = np.zeros((L, len(class_labels), 2))
    exemplar_d = np.zeros((len(class_labels), L, 2))
    for m, label in enumerate(class_labels):
        if m == neutral:
            continue
        d = diffs[label]
        norms = np.linalg.norm(d, axis=1)
        moving = norms >= ZERO_DIRECTION_TOL
        if not np.any(moving):
            raise CalibrationError(f"exemplar for class {label!r} has zero displacement")
        directions[moving, m] = d[moving] / norms[moving, np.newaxis]
        exemplar_d[m] = d

    # calibrate through the same readout used at inference time
    zero_calib = np.zeros(len(class_labels))
    provisional = TuningBank(directions, zero_calib, class_labels, neutral)
    act = expression_activity(exemplar_d, provisional)
    calib = np.diagonal(act).copy()
    calib[neutral] = 0.0
    return TuningBank(directions, calib, class_labels, neutral)


def select_neutrals(pool):
    """Index of the first neutral sample of each domain, in domain order."""
    chosen = {}
    for i, (lab, dom) in enumerate(zip(pool.labels, pool.domains)):
        if lab == pool.neutral_label and dom not in chosen:
            chosen[dom] = i
    missing = [d for d in pool.domain_labels if d not in chosen]
    if missing:
        raise ConfigurationError(f"no neutral sample for domains {missing}")
    return {d: chosen[d] for d in pool.domain_labels}


def candidate_indices(pool, source_domain=None):
    """Pool indices of each non-neutral class's candidates, in pool order."""
    out = {}
    for label in pool.class_labels:
        if label == pool.neutral_label:
            continue
        hit = pool.labels == label
        if source_domain is not None:
            hit &= pool.domains == source_domain
        idx = np.flatnonzero(hit).tolist()
        if not idx:
            where = f" in domain {source_domain!r}" if source_domain is not None else ""
            raise ConfigurationError(f"no candidate for class {label!r}{where}")
        out[label] = idx
    return out


def first_templates(pool, source_domain=None):
    return {c: idx[0] for c, idx in candidate_indices(pool, source_domain).items()}


def fit_with_templates(pool, frames, exemplars, theta=None, theta_scale=DEFAULT_THETA_SCALE):
    """Fit the tuning bank from pool indices ``exemplars`` (class -> index)."""
    items = [(pool.X[i], label, pool.domains[i]) for label, i in exemplars.items()]
    bank = fit_tuning(items, frames, pool.class_labels, pool.neutral_label)
    if theta is None:
        theta = bank.default_threshold(theta_scale)
    return FittedModel(frames, bank, float(theta))


def optimize_templates(pool, frames, eval_subset=None, source_domain=None,
                       theta=None, theta_scale=DEFAULT_THETA_SCALE):
    """Greedy one-pass template search.

    Classes are visited in label order. For each, every candidate is swapped
    in, the bank refit and accuracy measured on ``eval_subset`` (the pool by
    default); the best candidate stays, ties going to the earlier candidate.

    Returns
    -------
    chosen : dict
        Class label to pool index.
    model : FittedModel
    history : list of (label, pool index, accuracy)
    """
    if eval_subset is None:
        eval_subset = pool
    candidates = candidate_indices(pool, source_domain)
    chosen = {c: idx[0] for c, idx in candidates.items()}
    model = fit_with_templates(pool, frames, chosen, theta, theta_scale)
    best_acc = model.accuracy(eval_subset)
    history = [(None, None, best_acc)]
    for label, idx in candidates.items():
        best_idx = chosen[label]
        for i in idx:
            if i == best_idx:
                continue
            trial = dict(chosen)
            trial[label] = i
            try:
                trial_model = fit_with_templates(pool, frames, trial, theta, theta_scale)
            except CalibrationError:
                continue
            acc = trial_model.accuracy(eval_subset)
            history.append((label, i, acc))
            if acc > best_acc:
                best_acc, best_idx, model = acc, i, trial_model
        chosen[label] = best_idx
        logger.debug("class %r -> candidate %d (acc %.4f)", label, best_idx, best_acc)
    return chosen, model, history


def train(pool, source_domain=None, mode="first", anchor_indices=DEFAULT_ANCHORS,
          theta=None, theta_scale=DEFAULT_THETA_SCALE, eval_subset=None):
    """Fit references and tuning from a labelled pool.

    References come from the first neutral of every domain. Exemplars are
    restricted to ``source_domain`` when given, otherwise any domain may
    supply them.
    """
    if mode not in ("first", "optimized"):
        raise ConfigurationError(f"mode must be 'first' or 'optimized', got {mode!r}")
    neutrals = select_neutrals(pool)
    frames = fit_references([(pool.X[i], d) for d, i in neutrals.items()], anchor_indices)
    if mode == "first":
        exemplars = first_templates(pool, source_domain)
        model = fit_with_templates(pool, frames, exemplars, theta, theta_scale)
        return model, TemplateChoice(neutrals, exemplars)
    exemplars, model, history = optimize_templates(
        pool, frames, eval_subset, source_domain, theta, theta_scale
    )
    return model, TemplateChoice(neutrals, exemplars, history)
