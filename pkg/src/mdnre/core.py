"""Norm-referenced readout over 2-D landmarks.

A face is an ``(L, 2)`` array. Its difference field relative to a reference
face is the per-landmark displacement ``d_l = s_l - r_l``. A class ``m`` owns
one unit direction ``n_{l,m}`` per landmark; its activity is the rectified
sum of projections

    v_m = sum_l max(0, d_l . n_{l,m})

which grows linearly with the length of the displacement. All functions here
are pure and broadcast over leading batch axes.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import CalibrationError, ConfigurationError, DimensionError
from .validation import check_mask

#: Training displacements shorter than this yield a zero tuning direction.
ZERO_DIRECTION_TOL = 1e-9
_UNIT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class TuningBank:
    """Per-landmark, per-class tuning directions plus calibration activity.

    Attributes
    ----------
    directions : ndarray of shape (L, M, 2)
        Unit vectors, or exact zeros where the training exemplar did not move.
    calib : ndarray of shape (M,)
        Activity of each class's own training exemplar. Zero for neutral.
    class_labels : tuple
        Class identifiers, in tie-break order.
    neutral : int
        Index of the neutral class in ``class_labels``.
    """

    directions: np.ndarray
    calib: np.ndarray
    class_labels: tuple
    neutral: int = 0

    def __post_init__(self):
        directions = np.array(self.directions, dtype=np.float64)
        calib = np.array(self.calib, dtype=np.float64)
        labels = tuple(self.class_labels)
        if directions.ndim != 3 or directions.shape[2] != 2:
            raise DimensionError(
                f"directions must be shaped (L, M, 2), got {directions.shape}"
            )
        n_classes = directions.shape[1]
        if n_classes < 2:
            raise ConfigurationError("a tuning bank needs at least 2 classes")
        if len(labels) != n_classes or calib.shape != (n_classes,):
            raise DimensionError("class_labels, calib and directions disagree on M")
        if len(set(labels)) != n_classes:
            raise ConfigurationError(f"duplicate class labels: {labels}")
        if not 0 <= self.neutral < n_classes:
            raise ConfigurationError(f"neutral index {self.neutral} out of range")
        if not (np.all(np.isfinite(directions)) and np.all(np.isfinite(calib))):
            raise DimensionError("tuning bank entries must be finite")
        norms = np.linalg.norm(directions, axis=-1)
        bad = (norms != 0.0) & (np.abs(norms - 1.0) > _UNIT_TOL)
        if np.any(bad):
            raise ConfigurationError("tuning directions must be unit length or zero")
        if np.any(calib < 0):
            raise CalibrationError("calibration activities must be non-negative")
        if calib[self.neutral] != 0.0:
            raise CalibrationError("neutral class must have zero calibration")
        directions.setflags(write=False)
        calib.setflags(write=False)
        object.__setattr__(self, "directions", directions)
        object.__setattr__(self, "calib", calib)
        object.__setattr__(self, "class_labels", labels)

    @property
    def n_landmarks(self):
        return self.directions.shape[0]

    @property
    def n_classes(self):
        return self.directions.shape[1]

    @property
    def neutral_label(self):
        return self.class_labels[self.neutral]

    def default_threshold(self, scale=0.1):
        """``scale`` times the smallest non-neutral calibration activity."""
        others = np.delete(self.calib, self.neutral)
        return float(scale * others.min())


def difference(s, r):
    """Displacement of stimulus ``s`` from reference ``r`` (same shape)."""
    s = np.asarray(s, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if s.shape[-2:] != r.shape[-2:]:
        raise DimensionError(
            f"stimulus has {s.shape[-2]} landmarks, reference has {r.shape[-2]}"
        )
    return s - r


def unit_activity(d, n):
    """Unrectified readout ``d . n`` of one landmark unit."""
    return float(np.dot(np.asarray(d, dtype=np.float64), np.asarray(n, dtype=np.float64)))


def expression_activity(diffs, bank, mask=None):
    """Rectified multi-landmark activity of every class.

    Parameters
    ----------
    diffs : array_like of shape (..., L, 2)
        Difference fields.
    bank : TuningBank
    mask : iterable of int, optional
        Occluded landmark indices; they contribute exactly zero.

    Returns
    -------
    ndarray of shape (..., M)
    """
    diffs = np.asarray(diffs, dtype=np.float64)
    if diffs.ndim < 2 or diffs.shape[-1] != 2:
        raise DimensionError(f"difference field must end in (L, 2), got {diffs.shape}")
    if diffs.shape[-2] != bank.n_landmarks:
        raise DimensionError(
            f"difference field has {diffs.shape[-2]} landmarks, "
            f"bank expects {bank.n_landmarks}"
        )
    keep = check_mask(mask, bank.n_landmarks)
    proj = np.einsum("...lk,lmk->...lm", diffs, bank.directions)
    proj = np.maximum(proj, 0.0)
    proj = np.where(keep[:, np.newaxis], proj, 0.0)
    return proj.sum(axis=-2)


def classify(activity, theta, neutral=0):
    """Decide a class index from activities.

    Returns ``neutral`` when the largest non-neutral activity is below
    ``theta``; otherwise the arg-max over non-neutral classes, ties going to
    the lowest index. Broadcasts over leading axes.
    """
    activity = np.asarray(activity, dtype=np.float64)
    if activity.ndim == 0 or activity.shape[-1] == 0:
        raise ConfigurationError("empty activity vector")
    if theta < 0:
        raise ConfigurationError(f"neutral threshold must be >= 0, got {theta}")
    n_classes = activity.shape[-1]
    if not 0 <= neutral < n_classes:
        raise ConfigurationError(f"neutral index {neutral} out of range")
    if n_classes == 1:
        return np.full(activity.shape[:-1], neutral, dtype=np.intp)[()]
    masked = activity.copy()
    masked[..., neutral] = -np.inf
    # np.argmax returns the first maximum, which is the tie-break rule
    best = np.argmax(masked, axis=-1)
    top = np.take_along_axis(masked, best[..., np.newaxis], axis=-1)[..., 0]
    return np.where(top < theta, neutral, best)[()]


def strength_readout(activity, bank, m):
    """Expression strength estimate ``v_m / calib_m`` for class index ``m``."""
    if m == bank.neutral:
        raise CalibrationError("strength is undefined for the neutral class")
    cal = bank.calib[m]
    if cal <= 0.0:
        raise CalibrationError(
            f"class {bank.class_labels[m]!r} was calibrated with zero displacement"
        )
    activity = np.asarray(activity, dtype=np.float64)
    return activity[..., m] / cal
