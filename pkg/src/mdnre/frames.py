"""Per-domain reference faces and their alignment to a stimulus.

Pose is estimated from a few expression-invariant anchor landmarks as the
anchor centroid plus the RMS anchor distance to it. A reference is moved onto
a stimulus by translation and isotropic scaling only. The domain of a
stimulus is the reference whose aligned anchors land closest to the
stimulus anchors (sum of squared distances).
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import ConfigurationError, DimensionError, PoseError
from .validation import check_anchor_indices, check_face, check_landmarks

DEFAULT_ANCHORS = (0, 1, 2)
_DEGENERATE_SCALE = 1e-9


class Pose(NamedTuple):
    center: np.ndarray
    scale: float


class DomainMatch(NamedTuple):
    domain: object
    aligned: np.ndarray
    residual: float
    index: int


@dataclass(frozen=True, eq=False)
class ReferenceFrame:
    """Neutral face of one domain with the indices of its pose anchors."""

    domain: object
    landmarks: np.ndarray
    anchor_indices: tuple = DEFAULT_ANCHORS

    def __post_init__(self):
        landmarks = check_face(self.landmarks).copy()
        anchors = check_anchor_indices(self.anchor_indices, landmarks.shape[0])
        landmarks.setflags(write=False)
        object.__setattr__(self, "landmarks", landmarks)
        object.__setattr__(self, "anchor_indices", anchors)
        # raises PoseError on degenerate anchors
        object.__setattr__(self, "pose", estimate_pose(landmarks, anchors))

    @property
    def n_landmarks(self):
        return self.landmarks.shape[0]

    def to_dict(self):
        return {
            "domain": self.domain,
            "landmarks": self.landmarks.tolist(),
            "anchor_indices": list(self.anchor_indices),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(data["domain"], np.asarray(data["landmarks"], dtype=np.float64),
                   tuple(data["anchor_indices"]))


def _pose_arrays(X, anchors):
    pts = X[..., list(anchors), :]
    center = pts.mean(axis=-2)
    scale = np.sqrt(np.mean(np.sum((pts - center[..., np.newaxis, :]) ** 2, axis=-1), axis=-1))
    return center, scale


def estimate_pose(s, anchor_indices=DEFAULT_ANCHORS):
    """Anchor centroid and RMS anchor spread of a single face."""
    s = check_face(s)
    anchors = check_anchor_indices(anchor_indices, s.shape[0])
    center, scale = _pose_arrays(s, anchors)
    if not scale > _DEGENERATE_SCALE:
        raise PoseError(f"degenerate pose anchors (RMS spread {scale:.3g})")
    return Pose(center, float(scale))


def align_reference(frame, target):
    """Move ``frame``'s landmarks so that its anchors take the ``target`` pose."""
    c_r, s_r = frame.pose
    return (target.scale / s_r) * (frame.landmarks - c_r) + np.asarray(target.center)


def _align_batch(frame, centers, scales):
    c_r, s_r = frame.pose
    return (scales / s_r)[:, None, None] * (frame.landmarks - c_r) + centers[:, None, :]


def _check_frames(frames):
    frames = list(frames)
    if not frames:
        raise ConfigurationError("no reference frames given")
    L = frames[0].n_landmarks
    A = len(frames[0].anchor_indices)
    for f in frames[1:]:
        if f.n_landmarks != L:
            raise DimensionError("reference frames disagree on the landmark count")
        if len(f.anchor_indices) != A:
            raise ConfigurationError("reference frames disagree on the anchor count")
    return frames


def infer_domains(X, frames):
    """Batch domain inference.

    Returns ``(indices, aligned, residuals)`` where ``indices[i]`` is the
    position in ``frames`` of the selected frame, ``aligned[i]`` that frame
    aligned to sample ``i`` and ``residuals`` the ``(n, n_frames)`` matrix of
    anchor residuals. Ties go to the earliest frame.
    """
    frames = _check_frames(frames)
    X, _ = check_landmarks(X, frames[0].n_landmarks)
    n = X.shape[0]
    residuals = np.empty((n, len(frames)))
    aligned_all = np.empty((len(frames),) + X.shape)
    for k, frame in enumerate(frames):
        anchors = list(frame.anchor_indices)
        centers, scales = _pose_arrays(X, anchors)
        if np.any(~(scales > _DEGENERATE_SCALE)):
            raise PoseError("stimulus with degenerate pose anchors")
        aligned = _align_batch(frame, centers, scales)
        aligned_all[k] = aligned
        residuals[:, k] = np.sum((X[:, anchors] - aligned[:, anchors]) ** 2, axis=(1, 2))
    idx = np.argmin(residuals, axis=1)
    return idx, aligned_all[idx, np.arange(n)], residuals


def infer_domain(s, frames):
    """Select the reference frame that best explains the anchors of ``s``."""
    frames = _check_frames(frames)
    s = check_face(s, frames[0].n_landmarks)
    idx, aligned, residuals = infer_domains(s[np.newaxis], frames)
    k = int(idx[0])
    return DomainMatch(frames[k].domain, aligned[0], float(residuals[0, k]), k)
