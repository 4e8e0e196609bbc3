"""Labelled landmark samples as used for both training pools and test sets."""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .exceptions import ConfigurationError, DimensionError
from .validation import check_landmarks

NEUTRAL = "neutral"


def _ordered_unique(values):
    return tuple(dict.fromkeys(values))


class GroundTruth(NamedTuple):
    domain: np.ndarray
    label: np.ndarray
    strength: np.ndarray
    identity: np.ndarray


@dataclass(eq=False)
class Dataset:
    """A batch of faces with domain, class, strength and identity columns.

    ``class_labels`` fixes the class order (and so the arg-max tie-break);
    when omitted it is the order of first appearance with the neutral label
    moved to the front.
    """

    X: np.ndarray
    domains: np.ndarray
    labels: np.ndarray
    strengths: np.ndarray = None
    identities: np.ndarray = None
    sample_ids: np.ndarray = None
    class_labels: tuple = None
    domain_labels: tuple = None
    neutral_label: object = NEUTRAL
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        X, _ = check_landmarks(self.X, allow_single=False)
        n = X.shape[0]
        self.X = X
        self.domains = np.asarray(self.domains, dtype=object)
        self.labels = np.asarray(self.labels, dtype=object)
        if self.strengths is None:
            self.strengths = np.array(
                [0.0 if lab == self.neutral_label else 1.0 for lab in self.labels]
            )
        self.strengths = np.asarray(self.strengths, dtype=np.float64)
        if self.identities is None:
            self.identities = np.zeros(n, dtype=np.int64)
        self.identities = np.asarray(self.identities, dtype=np.int64)
        if self.sample_ids is None:
            self.sample_ids = np.array([f"s{i:05d}" for i in range(n)], dtype=object)
        self.sample_ids = np.asarray(self.sample_ids, dtype=object)
        for name in ("domains", "labels", "strengths", "identities", "sample_ids"):
            if getattr(self, name).shape != (n,):
                raise DimensionError(f"column {name!r} must have {n} entries")
        if np.any((self.strengths < 0) | (self.strengths > 1)) or not np.all(
            np.isfinite(self.strengths)
        ):
            raise ConfigurationError("strengths must lie in [0, 1]")

        if self.class_labels is None:
            seen = _ordered_unique(self.labels.tolist())
            rest = tuple(c for c in seen if c != self.neutral_label)
            self.class_labels = (self.neutral_label,) + rest
        self.class_labels = tuple(self.class_labels)
        if self.neutral_label not in self.class_labels:
            raise ConfigurationError(
                f"neutral label {self.neutral_label!r} missing from class labels"
            )
        unknown = set(self.labels.tolist()) - set(self.class_labels)
        if unknown:
            raise ConfigurationError(f"unknown class labels: {sorted(map(str, unknown))}")
        if self.domain_labels is None:
            self.domain_labels = _ordered_unique(self.domains.tolist())
        self.domain_labels = tuple(self.domain_labels)
        unknown = set(self.domains.tolist()) - set(self.domain_labels)
        if unknown:
            raise ConfigurationError(f"unknown domains: {sorted(map(str, unknown))}")

    def __len__(self):
        return self.X.shape[0]

    @property
    def n_landmarks(self):
        return self.X.shape[1]

    @property
    def neutral_index(self):
        return self.class_labels.index(self.neutral_label)

    @property
    def y(self):
        """Class indices into ``class_labels``."""
        lookup = {c: i for i, c in enumerate(self.class_labels)}
        return np.array([lookup[c] for c in self.labels], dtype=np.intp)

    @property
    def ground_truth(self):
        return GroundTruth(self.domains, self.labels, self.strengths, self.identities)

    def subset(self, index):
        index = np.asarray(index)
        if index.dtype == bool:
            index = np.flatnonzero(index)
        return Dataset(
            self.X[index], self.domains[index], self.labels[index],
            self.strengths[index], self.identities[index], self.sample_ids[index],
            class_labels=self.class_labels, domain_labels=self.domain_labels,
            neutral_label=self.neutral_label, meta=dict(self.meta),
        )

    def concat(self, other):
        if other.class_labels != self.class_labels:
            raise ConfigurationError("cannot concatenate datasets with different classes")
        domains = _ordered_unique(self.domain_labels + other.domain_labels)
        return Dataset(
            np.concatenate([self.X, other.X]),
            np.concatenate([self.domains, other.domains]),
            np.concatenate([self.labels, other.labels]),
            np.concatenate([self.strengths, other.strengths]),
            np.concatenate([self.identities, other.identities]),
            np.concatenate([self.sample_ids, other.sample_ids]),
            class_labels=self.class_labels, domain_labels=domains,
            neutral_label=self.neutral_label, meta=dict(self.meta),
        )

    def equals(self, other):
        return (
            np.array_equal(self.X, other.X)
            and np.array_equal(self.domains, other.domains)
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.strengths, other.strengths)
            and np.array_equal(self.identities, other.identities)
            and np.array_equal(self.sample_ids, other.sample_ids)
            and self.class_labels == other.class_labels
            and self.domain_labels == other.domain_labels
        )
