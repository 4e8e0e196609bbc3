"""scikit-learn compatible wrappers.

``X`` is either ``(n_samples, 2 * n_landmarks)`` with columns
``x0, y0, x1, y1, ...`` or ``(n_samples, n_landmarks, 2)``. Domain labels are
passed to ``fit`` as a keyword argument; at prediction time the domain is
inferred from the pose anchors.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from . import baselines
from .data import NEUTRAL, Dataset
from .exceptions import ConfigurationError
from .frames import DEFAULT_ANCHORS
from .training import DEFAULT_THETA_SCALE, train
from .validation import check_landmarks


def _as_dataset(X, y, domains, neutral_label, class_order=None):
    X, _ = check_landmarks(X, allow_single=False)
    y = np.asarray(y, dtype=object)
    if y.shape != (X.shape[0],):
        raise ConfigurationError(f"y must have {X.shape[0]} labels, got shape {y.shape}")
    if domains is None:
        domains = np.full(X.shape[0], "default", dtype=object)
    return Dataset(X, domains, y, class_labels=class_order, neutral_label=neutral_label)


class MDNREClassifier(ClassifierMixin, BaseEstimator):
    """Multi-domain norm-referenced expression classifier.

    ``fit`` treats its input as the few-shot pool: the first neutral sample
    of each domain becomes that domain's reference; each expression class is
    represented by a single exemplar, either the first candidate in the pool
    (``templates="first"``) or the one picked by a greedy pass that maximises
    accuracy on the pool (``templates="optimized"``).

    Parameters
    ----------
    anchor_indices : tuple of int, default=(0, 1, 2)
        Expression-invariant landmarks used for pose and domain inference.
    neutral_label : str, default="neutral"
    source_domain : str or None, default=None
        Restrict exemplars to one domain; ``None`` lets any domain supply them.
    templates : {"first", "optimized"}, default="first"
    theta : float or None, default=None
        Neutral threshold on the largest expression activity. ``None`` uses
        ``theta_scale`` times the smallest calibration activity.
    theta_scale : float, default=0.1
    multi_domain : bool, default=True
        With ``False`` only the source domain's reference is kept (the
        classical single-norm model).

    Attributes
    ----------
    classes_ : ndarray
        Class labels, neutral first.
    model_ : FittedModel
    templates_ : TemplateChoice
        Pool indices of the neutrals and exemplars used.
    """

    def __init__(self, anchor_indices=DEFAULT_ANCHORS, neutral_label=NEUTRAL,
                 source_domain=None, templates="first", theta=None,
                 theta_scale=DEFAULT_THETA_SCALE, multi_domain=True):
        self.anchor_indices = anchor_indices
        self.neutral_label = neutral_label
        self.source_domain = source_domain
        self.templates = templates
        self.theta = theta
        self.theta_scale = theta_scale
        self.multi_domain = multi_domain

    def fit(self, X, y, domains=None):
        pool = _as_dataset(X, y, domains, self.neutral_label)
        model, choice = train(pool, self.source_domain, self.templates,
                              tuple(self.anchor_indices), self.theta, self.theta_scale)
        if not self.multi_domain:
            keep = self.source_domain
            if keep is None:
                keep = pool.domains[next(iter(choice.exemplars.values()))]
            model = model.single_reference(keep)
        self.model_ = model
        self.templates_ = choice
        self.classes_ = np.asarray(model.class_labels, dtype=object)
        self.n_features_in_ = 2 * pool.n_landmarks
        self.theta_ = model.neutral_threshold
        return self

    def decision_function(self, X):
        """Class activities, shape ``(n_samples, n_classes)``."""
        check_is_fitted(self, "model_")
        X, _ = check_landmarks(X, self.model_.bank.n_landmarks, allow_single=False)
        return self.model_.activities(X)

    def predict(self, X):
        check_is_fitted(self, "model_")
        X, _ = check_landmarks(X, self.model_.bank.n_landmarks, allow_single=False)
        return self.model_.predict(X)

    def predict_domain(self, X):
        check_is_fitted(self, "model_")
        X, _ = check_landmarks(X, self.model_.bank.n_landmarks, allow_single=False)
        return self.model_.predict_domain(X)

    def predict_strength(self, X):
        """Expression strength of the predicted class (0 for neutral)."""
        check_is_fitted(self, "model_")
        X, _ = check_landmarks(X, self.model_.bank.n_landmarks, allow_single=False)
        return self.model_.readout_strength(X)


class LinearBaseline(ClassifierMixin, BaseEstimator):
    """One-vs-rest ridge classifier on absolute landmark coordinates."""

    def __init__(self, ridge=1e-6):
        self.ridge = ridge

    def fit(self, X, y, domains=None):
        pool = _as_dataset(X, y, domains, NEUTRAL if NEUTRAL in set(y) else y[0])
        self.model_ = baselines.fit_linear(pool, self.ridge)
        self.classes_ = np.asarray(self.model_.class_labels, dtype=object)
        self.n_features_in_ = 2 * pool.n_landmarks
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        return self.model_.scores(check_landmarks(X, allow_single=False)[0])

    def predict(self, X):
        check_is_fitted(self, "model_")
        return baselines.predict_linear(self.model_, check_landmarks(X, allow_single=False)[0])


class CentroidBaseline(ClassifierMixin, BaseEstimator):
    """Nearest class centroid in absolute landmark coordinates."""

    def fit(self, X, y, domains=None):
        pool = _as_dataset(X, y, domains, NEUTRAL if NEUTRAL in set(y) else y[0])
        self.pool_ = pool
        self.classes_, self.centroids_ = baselines.class_centroids(pool)
        self.classes_ = np.asarray(self.classes_, dtype=object)
        self.n_features_in_ = 2 * pool.n_landmarks
        return self

    def predict(self, X):
        check_is_fitted(self, "pool_")
        return baselines.fit_predict_centroid(self.pool_, check_landmarks(X, allow_single=False)[0])
