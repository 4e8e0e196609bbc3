"""Input checking helpers shared by the functional API and the estimators."""

import numpy as np

from .exceptions import ConfigurationError, DimensionError


def check_landmarks(X, n_landmarks=None, allow_single=True):
    """Coerce ``X`` to a float64 array of shape ``(n, L, 2)``.

    Accepts a single face ``(L, 2)``, a batch ``(n, L, 2)`` or flattened rows
    ``(n, 2L)`` laid out as ``x0, y0, x1, y1, ...``. Returns the array and a
    flag telling whether the input was a single face.
    """
    X = np.asarray(X, dtype=np.float64)
    single = False
    if X.ndim == 2 and X.shape[1] == 2 and allow_single and (
        n_landmarks is None or X.shape[0] == n_landmarks
    ):
        X = X[np.newaxis]
        single = True
    elif X.ndim == 2:
        if X.shape[1] % 2:
            raise DimensionError(
                f"flattened landmark rows need an even width, got {X.shape[1]}"
            )
        X = X.reshape(X.shape[0], -1, 2)
    elif X.ndim != 3 or X.shape[2] != 2:
        raise DimensionError(f"expected landmarks shaped (n, L, 2), got {X.shape}")

    if n_landmarks is not None and X.shape[1] != n_landmarks:
        raise DimensionError(f"expected {n_landmarks} landmarks, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise DimensionError("landmark coordinates must be finite")
    return X, single


def check_face(s, n_landmarks=None):
    """Single face as a ``(L, 2)`` float64 array."""
    s = np.asarray(s, dtype=np.float64)
    if s.ndim == 1 and s.size % 2 == 0:
        s = s.reshape(-1, 2)
    if s.ndim != 2 or s.shape[1] != 2:
        raise DimensionError(f"expected a face shaped (L, 2), got {s.shape}")
    if n_landmarks is not None and s.shape[0] != n_landmarks:
        raise DimensionError(f"expected {n_landmarks} landmarks, got {s.shape[0]}")
    if not np.all(np.isfinite(s)):
        raise DimensionError("landmark coordinates must be finite")
    return s


def check_mask(mask, n_landmarks):
    """Return a boolean keep-vector of length ``n_landmarks``.

    ``mask`` is an iterable of occluded landmark indices (or ``None``).
    """
    keep = np.ones(n_landmarks, dtype=bool)
    if mask is None:
        return keep
    idx = [int(i) for i in mask]
    if len(set(idx)) != len(idx):
        raise ConfigurationError(f"occlusion mask has duplicate indices: {idx}")
    for i in idx:
        if not 0 <= i < n_landmarks:
            raise ConfigurationError(
                f"occlusion index {i} out of range for {n_landmarks} landmarks"
            )
    keep[idx] = False
    return keep


def check_anchor_indices(anchors, n_landmarks):
    anchors = tuple(int(a) for a in anchors)
    if len(anchors) < 2:
        raise ConfigurationError("need at least 2 pose anchors")
    if len(set(anchors)) != len(anchors):
        raise ConfigurationError(f"duplicate anchor indices: {anchors}")
    if any(not 0 <= a < n_landmarks for a in anchors):
        raise ConfigurationError(
            f"anchor indices {anchors} out of range for {n_landmarks} landmarks"
        )
    return anchors
