"""User-side steps of a data-collaboration round and synthetic scenarios.

A scenario is fully determined by a :class:`ScenarioSpec`. Users draw
private data as Gaussian class blobs around shared class means, choose a
secret basis ``F_i = V E_i`` from a truncated SVD, and release only
``X_i F_i`` and ``A F_i``.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import logging
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, RankError, ValidationError
from .numkernels import RANK_RTOL, as_matrix, haar_orthogonal, pinv, thin_svd

logger = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
BLOB_RADIUS = 5.0
ANCHOR_RANK_RTOL = 1e-10
# Stream index 0 seeds shared material (anchor, class means); users are 1..c.
SHARED_STREAM = 0


class Condition(str, enum.Enum):
    SAME_SPAN_ORTH = "SameSpanOrth"
    SAME_SPAN = "SameSpan"
    DIFF_SPAN_ORTH = "DiffSpanOrth"
    DIFF_SPAN = "DiffSpan"

    @property
    def same_span(self) -> bool:
        return self in (Condition.SAME_SPAN_ORTH, Condition.SAME_SPAN)

    @property
    def orthonormal(self) -> bool:
        return self in (Condition.SAME_SPAN_ORTH, Condition.DIFF_SPAN_ORTH)


def splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, stream: int) -> int:
    """Per-stream seed ``seed XOR splitmix64(stream)``; streams never perturb each other."""
    return (int(seed) & MASK64) ^ splitmix64(stream)


@dataclass(frozen=True)
class ScenarioSpec:
    users: int
    feature_dim: int
    latent_dim: int
    samples_per_user: int
    anchor_rows: int
    condition: Condition = Condition.SAME_SPAN_ORTH
    seed: int = 0

    def __post_init__(self):
        try:
            object.__setattr__(self, "condition", Condition(self.condition))
        except ValueError:
            raise ValidationError(
                f"condition must be one of {[c.value for c in Condition]}, got {self.condition!r}"
            ) from None
        for name in ("users", "feature_dim", "latent_dim", "samples_per_user", "anchor_rows"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValidationError(f"{name} must be a positive integer, got {value!r}")
        if not self.latent_dim <= self.feature_dim < self.anchor_rows:
            raise ValidationError(
                "need latent_dim <= feature_dim < anchor_rows, got "
                f"{self.latent_dim}, {self.feature_dim}, {self.anchor_rows}"
            )
        if self.samples_per_user < self.latent_dim:
            raise ValidationError("samples_per_user must be >= latent_dim for a rank-l basis")
        if not 0 <= int(self.seed) <= MASK64:
            raise ValidationError(f"seed must fit in uint64, got {self.seed}")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["condition"] = self.condition.value
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        fields = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - fields
        if unknown:
            raise ValidationError(f"unknown ScenarioSpec fields: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ValidationError(str(exc)) from exc

    @classmethod
    def from_json(cls, text: str) -> "ScenarioSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class UserPrivate:
    x: np.ndarray
    labels: np.ndarray
    f: np.ndarray
    e: np.ndarray


@dataclass(frozen=True)
class IntermediateBundle:
    x_tilde: np.ndarray
    a_i: np.ndarray
    labels: np.ndarray


def generate_anchor(a: int, m: int, seed: int) -> np.ndarray:
    """Uniform ``[0, 1)`` anchor of shape ``(a, m)``, verified to have rank ``m``."""
    if not a > m >= 1:
        raise DimensionError(f"anchor needs a > m >= 1, got a={a}, m={m}")
    anchor = np.random.default_rng(seed).random((a, m))
    s = np.linalg.svd(anchor, compute_uv=False)
    if s[-1] <= ANCHOR_RANK_RTOL * s[0]:
        raise RankError(f"anchor with seed {seed} is numerically rank deficient")
    return anchor


def class_means(spec: ScenarioSpec) -> np.ndarray:
    """Shared class means on the sphere of radius 5, one row per class (k = latent_dim)."""
    rng = np.random.default_rng([derive_seed(spec.seed, SHARED_STREAM), 1])
    g = rng.standard_normal((spec.latent_dim, spec.feature_dim))
    return BLOB_RADIUS * g / np.linalg.norm(g, axis=1, keepdims=True)


def sample_blobs(means: np.ndarray, n: int, rng: np.random.Generator):
    """Balanced labels ``0..k-1`` and unit-covariance samples around ``means``."""
    labels = np.arange(n) % means.shape[0]
    x = means[labels] + rng.standard_normal((n, means.shape[1]))
    return x, labels


def top_right_singular(x: np.ndarray, k: int) -> np.ndarray:
    return thin_svd(x).vt[:k].T


def _mixing_factor(condition: Condition, dim: int, rng: np.random.Generator) -> np.ndarray:
    if condition.orthonormal:
        return haar_orthogonal(dim, int(rng.integers(0, 2**63)))
    while True:
        e = rng.random((dim, dim))
        s = np.linalg.svd(e, compute_uv=False)
        if s[-1] > RANK_RTOL * s[0]:
            return e
        logger.info("redrawing near-singular uniform mixing factor")


def make_scenario(spec: ScenarioSpec) -> tuple[np.ndarray, list[UserPrivate]]:
    """Anchor and per-user private state for ``spec``.

    User ``i`` (1-based) draws from its own stream ``derive_seed(seed, i)``:
    data first, then the mixing factor, so the condition never changes
    ``X_i``. SameSpan* conditions share ``V_1`` from user 1's data.
    """
    anchor = generate_anchor(spec.anchor_rows, spec.feature_dim, derive_seed(spec.seed, SHARED_STREAM))
    means = class_means(spec)
    ell = spec.latent_dim

    drawn = []
    for i in range(1, spec.users + 1):
        rng = np.random.default_rng(derive_seed(spec.seed, i))
        x, labels = sample_blobs(means, spec.samples_per_user, rng)
        e = _mixing_factor(spec.condition, ell, rng)
        drawn.append((x, labels, e))

    shared_v = top_right_singular(drawn[0][0], ell) if spec.condition.same_span else None
    users = []
    for x, labels, e in drawn:
        v = shared_v if shared_v is not None else top_right_singular(x, ell)
        users.append(UserPrivate(x=x, labels=labels, f=v @ e, e=e))
    return anchor, users


def make_holdout(spec: ScenarioSpec, n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Held-out ``(Y_i, labels)`` per user from the same class means, on a separate stream."""
    means = class_means(spec)
    out = []
    for i in range(1, spec.users + 1):
        rng = np.random.default_rng([derive_seed(spec.seed, i), 1])
        out.append(sample_blobs(means, n, rng))
    return out


def encode_user(user: UserPrivate, anchor) -> IntermediateBundle:
    anchor = as_matrix(anchor, "anchor")
    x, f = user.x, user.f
    if x.shape[1] != f.shape[0] or anchor.shape[1] != f.shape[0]:
        raise DimensionError(
            f"cannot encode: x {x.shape}, anchor {anchor.shape}, basis {f.shape}"
        )
    if len(user.labels) != x.shape[0]:
        raise DimensionError("labels length does not match rows of x")
    return IntermediateBundle(x_tilde=x @ f, a_i=anchor @ f, labels=np.asarray(user.labels))


def collude_reconstruct(anchor, a_j) -> np.ndarray:
    """Recover a secret basis as ``pinv(A) @ A_j``, the collusion attack on a known anchor."""
    anchor = as_matrix(anchor, "anchor")
    a_j = np.asarray(a_j, dtype=np.float64)
    if a_j.ndim != 2 or a_j.shape[0] != anchor.shape[0]:
        raise DimensionError(f"a_j shape {a_j.shape} does not match anchor {anchor.shape}")
    s = np.linalg.svd(anchor, compute_uv=False)
    if anchor.shape[0] < anchor.shape[1] or s[-1] <= RANK_RTOL * s[0]:
        raise RankError("anchor must have full column rank")
    return pinv(anchor) @ a_j
