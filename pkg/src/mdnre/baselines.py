"""Comparison classifiers in absolute landmark space, plus the single-reference
ablation of the multi-domain model."""

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, NumericalError
from .training import train as _train_mdnre
from .validation import check_landmarks


@dataclass(eq=False)
class LinearModel:
    """Affine one-vs-rest scores; row ``m`` of ``weights`` is ``[w_m, b_m]``."""

    weights: np.ndarray
    class_labels: tuple

    def scores(self, X):
        X, _ = check_landmarks(X, (self.weights.shape[1] - 1) // 2)
        flat = X.reshape(X.shape[0], -1)
        return flat @ self.weights[:, :-1].T + self.weights[:, -1]


def _present_classes(train):
    present = set(train.labels.tolist())
    return tuple(c for c in train.class_labels if c in present)


def fit_linear(train, ridge=1e-6, class_labels=None):
    """One-vs-rest ridge regression onto +/-1 targets, intercept unpenalised.

    Classes absent from ``train`` are dropped unless ``class_labels`` forces
    them, in which case they get an all-(-1) target.
    """
    if ridge < 0:
        raise ConfigurationError(f"ridge must be >= 0, got {ridge}")
    labels = tuple(class_labels) if class_labels is not None else _present_classes(train)
    if not labels:
        raise ConfigurationError("empty training set")
    flat = train.X.reshape(len(train), -1)
    targets = np.where(train.labels[:, None] == np.array(labels, dtype=object)[None, :],
                       1.0, -1.0)
    x_mean = flat.mean(axis=0)
    t_mean = targets.mean(axis=0)
    Xc = flat - x_mean
    gram = Xc.T @ Xc + ridge * np.eye(Xc.shape[1])
    if np.linalg.matrix_rank(gram) < gram.shape[0]:
        raise NumericalError("singular least-squares system; increase the ridge")
    W = np.linalg.solve(gram, Xc.T @ (targets - t_mean))
    bias = t_mean - x_mean @ W
    return LinearModel(np.column_stack([W.T, bias]), labels)


def predict_linear(model, X):
    """Arg-max of the affine scores, ties to the lowest class index."""
    labels = np.asarray(model.class_labels, dtype=object)
    return labels[np.argmax(model.scores(X), axis=1)]


def class_centroids(train):
    labels = _present_classes(train)
    flat = train.X.reshape(len(train), -1)
    return labels, np.stack([flat[train.labels == c].mean(axis=0) for c in labels])


def fit_predict_centroid(train, X):
    """Nearest class centroid in flattened absolute coordinates."""
    labels, centroids = class_centroids(train)
    X, _ = check_landmarks(X, train.n_landmarks)
    flat = X.reshape(X.shape[0], -1)
    dist = ((flat[:, None, :] - centroids[None]) ** 2).sum(axis=-1)
    return np.asarray(labels, dtype=object)[np.argmin(dist, axis=1)]


def single_reference_nre(train, X, source_domain, **fit_params):
    """Predictions of the norm-referenced model restricted to the source
    domain's reference, whatever the true domain of each test face."""
    model, _ = _train_mdnre(train, source_domain=source_domain, **fit_params)
    return model.single_reference(source_domain).predict(X)
