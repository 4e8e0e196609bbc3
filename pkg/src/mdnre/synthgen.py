"""Seeded synthetic face-space datasets with known ground truth.

A sample for domain ``N``, identity ``j``, class ``m`` and blend level ``lam``
is

    B + t_N + g_N + eta_{N,j} + lam * R(phi_N) e_m + noise

with ``B`` a canonical face, ``t_N`` a rigid offset, ``g_N`` a per-landmark
head-shape offset, ``eta`` an identity perturbation that leaves the pose
anchors untouched, ``R(phi)`` a rotation applied to every displacement vector
and isotropic Gaussian noise.

Random streams: every draw comes from a PCG64 generator seeded with
``SeedSequence(seed, spawn_key=key)``. Identity perturbations use key
``(0, domain_index, identity)``; measurement noise uses ``(1, sample_index)``.
Streams are therefore independent of how many samples are generated and of
iteration order.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .data import NEUTRAL, Dataset
from .exceptions import ConfigurationError, DimensionError
from .frames import DEFAULT_ANCHORS

# 3 pose anchors (outer eye corners, nose tip) then 7 expressive points.
CANONICAL_FACE = np.array([
    [-1.00, 0.40],   # 0 left eye outer corner
    [1.00, 0.40],    # 1 right eye outer corner
    [0.00, -0.30],   # 2 nose tip
    [-0.60, 0.90],   # 3 left brow
    [0.60, 0.90],    # 4 right brow
    [-0.55, 0.50],   # 5 left upper lid
    [0.55, 0.50],    # 6 right upper lid
    [-0.45, -0.80],  # 7 left mouth corner
    [0.45, -0.80],   # 8 right mouth corner
    [0.00, -1.05],   # 9 lower lip
])
CANONICAL_FACE.setflags(write=False)

_EXPRESSIONS = {
    "happy": {5: (0, -0.06), 6: (0, -0.06), 7: (-0.22, 0.15), 8: (0.22, 0.15),
              9: (0, -0.08)},
    "sad": {3: (0.05, 0.1), 4: (-0.05, 0.1), 5: (0, -0.08), 6: (0, -0.08),
            7: (0.05, -0.15), 8: (-0.05, -0.15)},
    "surprise": {3: (0, 0.25), 4: (0, 0.25), 5: (0, 0.12), 6: (0, 0.12),
                 7: (0.08, -0.1), 8: (-0.08, -0.1), 9: (0, -0.35)},
    "fear": {3: (0.1, 0.15), 4: (-0.1, 0.15), 5: (0, 0.1), 6: (0, 0.1),
             7: (-0.15, -0.05), 8: (0.15, -0.05), 9: (0, -0.12)},
    "anger": {3: (0.15, -0.18), 4: (-0.15, -0.18), 5: (0, 0.04), 6: (0, 0.04),
              7: (0.1, 0), 8: (-0.1, 0), 9: (0, 0.05)},
    "disgust": {3: (0, -0.12), 4: (0, -0.12), 5: (0, -0.12), 6: (0, -0.12),
                7: (0.02, 0.1), 8: (-0.02, 0.1), 9: (0, 0.12)},
}

# head shapes: anchor triangles differ in aspect so the domain is recoverable
_HEAD_SHAPES = {
    "human": ((0.0, 0.0), {}),
    "monkey": ((4.0, 0.5), {0: (-0.3, 0), 1: (0.3, 0), 2: (0, -0.6), 3: (0.2, -0.15),
                            4: (-0.2, -0.15), 5: (0.1, -0.1), 6: (-0.1, -0.1),
                            7: (-0.1, -0.45), 8: (0.1, -0.45), 9: (0, -0.7)}),
    "cartoon": ((-3.0, 2.0), {0: (-0.2, 0.2), 1: (0.2, 0.2), 2: (0, 0.4), 3: (0, 0.4),
                              4: (0, 0.4), 5: (-0.1, 0.25), 6: (0.1, 0.25),
                              7: (0.15, 0.15), 8: (-0.15, 0.15), 9: (0, 0.25)}),
}

BFS_STRENGTHS = (0.25, 0.5, 0.75, 1.0)


def _field(entries, n_landmarks):
    out = np.zeros((n_landmarks, 2))
    for idx, vec in entries.items():
        out[idx] = vec
    return out


def rotate(vectors, angle):
    """Rotate every 2-D vector (last axis) by ``angle`` radians."""
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    return np.asarray(vectors, dtype=np.float64) @ rot.T


@dataclass(frozen=True, eq=False)
class DomainSpec:
    name: str
    translation: tuple = (0.0, 0.0)
    shape: np.ndarray = None
    rotation: float = 0.0


@dataclass(frozen=True, eq=False)
class ClassSpec:
    name: str
    displacement: np.ndarray


@dataclass(frozen=True, eq=False)
class SynthSpec:
    """Generative parameters; see the module docstring for the sample model."""

    template: np.ndarray
    domains: tuple
    classes: tuple
    strengths: tuple = (1.0,)
    noise_sigma: float = 0.0
    identity_sigma: float = 0.0
    identities_per_domain: int = 1
    seed: int = 0
    anchor_indices: tuple = DEFAULT_ANCHORS
    neutral_label: str = NEUTRAL
    meta: dict = field(default_factory=dict)

    @property
    def n_landmarks(self):
        return np.asarray(self.template).shape[0]

    def validate(self):
        B = np.asarray(self.template, dtype=np.float64)
        if B.ndim != 2 or B.shape[1] != 2 or not np.all(np.isfinite(B)):
            raise ConfigurationError("template must be a finite (L, 2) array")
        L = B.shape[0]
        anchors = list(self.anchor_indices)
        if any(not 0 <= a < L for a in anchors) or len(set(anchors)) != len(anchors):
            raise ConfigurationError(f"bad anchor indices {self.anchor_indices}")
        if not self.domains:
            raise ConfigurationError("at least one domain is required")
        names = [d.name for d in self.domains]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"duplicate domain names: {names}")
        for d in self.domains:
            if np.asarray(d.translation).shape != (2,):
                raise DimensionError(f"domain {d.name!r}: translation must be 2-D")
            if d.shape is not None and np.asarray(d.shape).shape != (L, 2):
                raise DimensionError(f"domain {d.name!r}: shape offset must be ({L}, 2)")
        labels = [c.name for c in self.classes]
        if len(set(labels)) != len(labels):
            raise ConfigurationError(f"duplicate class names: {labels}")
        if labels.count(self.neutral_label) != 1 or len(labels) < 2:
            raise ConfigurationError("need exactly one neutral class and at least one other")
        for c in self.classes:
            e = np.asarray(c.displacement, dtype=np.float64)
            if e.shape != (L, 2) or not np.all(np.isfinite(e)):
                raise DimensionError(f"class {c.name!r}: displacement must be finite ({L}, 2)")
            if c.name == self.neutral_label and np.any(e != 0):
                raise ConfigurationError("neutral class must have zero displacement")
            if np.any(e[anchors] != 0):
                raise ConfigurationError(f"class {c.name!r} moves a pose anchor")
        lam = np.asarray(self.strengths, dtype=np.float64)
        if lam.size == 0 or np.any((lam < 0) | (lam > 1)):
            raise ConfigurationError("strengths must be a non-empty list within [0, 1]")
        if self.noise_sigma < 0 or self.identity_sigma < 0:
            raise ConfigurationError("noise and identity sigmas must be >= 0")
        if int(self.identities_per_domain) < 1:
            raise ConfigurationError("identities_per_domain must be >= 1")
        return self


def _rng(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


def identity_offset(spec, domain_index, identity):
    """Per-identity perturbation, zero on the pose anchors."""
    eta = np.zeros((spec.n_landmarks, 2))
    if spec.identity_sigma > 0:
        eta = spec.identity_sigma * _rng(spec.seed, 0, domain_index, identity).standard_normal(eta.shape)
        eta[list(spec.anchor_indices)] = 0.0
    return eta


def neutral_face(spec, domain_index, identity=0):
    """Noise-free neutral face of one (domain, identity)."""
    d = spec.domains[domain_index]
    B = np.asarray(spec.template, dtype=np.float64)
    shape = np.zeros_like(B) if d.shape is None else np.asarray(d.shape, dtype=np.float64)
    return B + np.asarray(d.translation, dtype=np.float64) + shape + identity_offset(
        spec, domain_index, identity)


def _sample_plan(spec):
    plan = []
    for k, d in enumerate(spec.domains):
        for j in range(int(spec.identities_per_domain)):
            for c in spec.classes:
                if c.name == spec.neutral_label:
                    plan.append((k, j, c, 0.0))
                else:
                    plan.extend((k, j, c, float(lam)) for lam in spec.strengths)
    return plan


def generate(spec):
    """Render every (domain, identity, class, strength) combination.

    Neutral faces are rendered once per identity and carry strength 0.

    Returns
    -------
    dataset : Dataset
    truth : GroundTruth
    """
    spec.validate()
    neutral_cache = {}
    rows, domains, labels, strengths, identities, ids = [], [], [], [], [], []
    for i, (k, j, c, lam) in enumerate(_sample_plan(spec)):
        if (k, j) not in neutral_cache:
            neutral_cache[k, j] = neutral_face(spec, k, j)
        d = spec.domains[k]
        face = neutral_cache[k, j] + lam * rotate(c.displacement, d.rotation)
        if spec.noise_sigma > 0:
            face = face + spec.noise_sigma * _rng(spec.seed, 1, i).standard_normal(face.shape)
        rows.append(face)
        domains.append(d.name)
        labels.append(c.name)
        strengths.append(lam)
        identities.append(j)
        ids.append(f"{d.name}-i{j}-{c.name}-{lam:g}")
    ds = Dataset(
        np.stack(rows), domains, labels, strengths, identities, ids,
        class_labels=tuple(c.name for c in spec.classes),
        domain_labels=tuple(d.name for d in spec.domains),
        neutral_label=spec.neutral_label,
        meta={"seed": int(spec.seed)},
    )
    return ds, ds.ground_truth


def bfs_spec(seed=0, noise_sigma=0.0, identity_sigma=0.0, identities_per_domain=5,
             strengths=(1.0,), rotations=None):
    """Three head shapes by seven classes, modelled on the basic-face-shape set.

    With the defaults this yields 3 x 5 x 7 = 105 samples.
    """
    L = CANONICAL_FACE.shape[0]
    rotations = rotations or {}
    domains = tuple(
        DomainSpec(name, tuple(t), _field(g, L), float(rotations.get(name, 0.0)))
        for name, (t, g) in _HEAD_SHAPES.items()
    )
    classes = (ClassSpec(NEUTRAL, np.zeros((L, 2))),) + tuple(
        ClassSpec(name, _field(e, L)) for name, e in _EXPRESSIONS.items()
    )
    return SynthSpec(
        CANONICAL_FACE.copy(), domains, classes, tuple(strengths), float(noise_sigma),
        float(identity_sigma), int(identities_per_domain), int(seed),
    ).validate()


def bfsl_spec(seed=0, noise_sigma=0.0, identity_sigma=0.0, rotations=None):
    """Strength-level variant: one identity per domain, four blend levels.

    3 domains x (1 neutral + 6 classes x 4 levels) = 75 samples.
    """
    return bfs_spec(seed, noise_sigma, identity_sigma, 1, BFS_STRENGTHS, rotations)


def bfs_training_split(dataset, source_domain="human"):
    """Indices of the nine-image regime: every domain's first neutral plus the
    first exemplar of each class in the source domain."""
    from .training import first_templates, select_neutrals

    idx = list(select_neutrals(dataset).values())
    idx += list(first_templates(dataset, source_domain).values())
    return np.array(sorted(set(idx)))


# A minimal two-domain, two-expression face space. Landmarks 0-2 are anchors,
# 3 and 4 carry the expressions. expr2 mirrors expr1 along x so that a
# half-turn of the displacement field swaps the two classes.
FIG3_FACE = np.array([[-1.0, 0.5], [1.0, 0.5], [0.0, -0.5], [-0.5, -1.0], [0.5, -1.0]])
FIG3_FACE.setflags(write=False)
_FIG3_EXPR = {"expr1": {3: (1.0, 0.0), 4: (0.0, 1.0)},
              "expr2": {3: (-1.0, 0.0), 4: (0.0, 1.0)}}
_FIG3_TARGET_TRANSLATION = (3.0, 1.0)
_FIG3_TARGET_SHAPE = {2: (0.0, -0.4), 3: (-2.0, 0.0), 4: (0.0, -4.0)}


def fig3_spec(mode="collinear", phi=np.pi, shift_scale=1.0):
    """Two head shapes whose expression displacements are either identical
    (``collinear``) or rotated by ``phi`` on the target shape (``misaligned``).

    ``shift_scale`` scales the target head-shape offset on the expressive
    landmarks.
    """
    if mode not in ("collinear", "misaligned"):
        raise ConfigurationError(f"mode must be 'collinear' or 'misaligned', got {mode!r}")
    L = FIG3_FACE.shape[0]
    shape = _field(_FIG3_TARGET_SHAPE, L)
    shape[3:] *= shift_scale
    rotation = float(phi) if mode == "misaligned" else 0.0
    domains = (
        DomainSpec("source", (0.0, 0.0), np.zeros((L, 2)), 0.0),
        DomainSpec("target", _FIG3_TARGET_TRANSLATION, shape, rotation),
    )
    classes = (ClassSpec(NEUTRAL, np.zeros((L, 2))),) + tuple(
        ClassSpec(name, _field(e, L)) for name, e in _FIG3_EXPR.items()
    )
    return SynthSpec(FIG3_FACE.copy(), domains, classes, meta={"mode": mode}).validate()


def fig3_instance(mode="collinear", phi=np.pi, shift_scale=1.0):
    """Six samples: neutral, expr1, expr2 on a source and a target shape."""
    return generate(fig3_spec(mode, phi, shift_scale))


def corrupted_pool(spec, angle=np.pi / 2, source_domain=None):
    """Template pool in which each class's first candidate is corrupted.

    For every non-neutral class the pool holds, in this order, an exemplar
    whose displacement field is rotated by ``angle`` and a clean exemplar,
    both from ``source_domain`` identity 0. The pool also holds identity 0's
    neutral for every domain. Returns ``(pool, eval_set)`` where the eval set
    is the clean dataset generated by ``spec``.
    """
    spec.validate()
    names = [d.name for d in spec.domains]
    source_domain = names[0] if source_domain is None else source_domain
    k = names.index(source_domain)
    rows, domains, labels, strengths, ids = [], [], [], [], []
    for kk, d in enumerate(spec.domains):
        rows.append(neutral_face(spec, kk, 0))
        domains.append(d.name)
        labels.append(spec.neutral_label)
        strengths.append(0.0)
        ids.append(f"{d.name}-neutral")
    base = neutral_face(spec, k, 0)
    rot = spec.domains[k].rotation
    for c in spec.classes:
        if c.name == spec.neutral_label:
            continue
        for tag, extra in (("corrupt", angle), ("clean", 0.0)):
            rows.append(base + rotate(c.displacement, rot + extra))
            domains.append(source_domain)
            labels.append(c.name)
            strengths.append(1.0)
            ids.append(f"{source_domain}-{c.name}-{tag}")
    pool = Dataset(np.stack(rows), domains, labels, strengths, None, ids,
                   class_labels=tuple(c.name for c in spec.classes),
                   domain_labels=tuple(names), neutral_label=spec.neutral_label)
    eval_set, _ = generate(spec)
    return pool, eval_set


def with_seed(spec, seed):
    return replace(spec, seed=int(seed))
