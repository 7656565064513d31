"""Geometric primitives of the radial embedding framework.

All functions operate on Euclidean vectors given as array-likes whose last
axis is the embedding dimension; leading axes broadcast, so a single call
can evaluate one triple of points or a whole batch.  Everything is computed
in float64 and is pure and stateless.

The central quantities:

* ``root_distance(r, e)``: Euclidean distance of ``e`` from the root ``r``,
  used as a genericness measure (smaller = more generic).
* ``exterior_angle(r, e, e2)``: the angle between the ray ``r -> e`` extended
  beyond ``e`` and the segment ``e -> e2``.  Near zero when ``e2`` lies
  radially outward from ``e``, i.e. when the item at ``e2`` entails the item
  at ``e``.
* ``half_aperture(r, e, eps)``: opening angle of the entailment cone rooted
  at ``e``, shrinking with distance from the root.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateAngle, DimensionMismatch, ZeroVector

# Points closer than this are treated as coincident; below meaningful
# float64 resolution for unit-scale vectors.
DEGENERACY_TOL = 1e-12

DEFAULT_EPSILON = 0.05


def _as_f64(v) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim == 0:
        raise ValueError("expected a vector, got a scalar")
    return arr


@dataclass(frozen=True)
class Embedding:
    """A keyed embedding vector; the atom of every computation.

    Values are widened to float64 on construction and must be finite.
    """

    id: str
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = _as_f64(self.values)
        if arr.ndim != 1 or arr.shape[0] < 2:
            raise DimensionMismatch("embedding must be a vector with dimension >= 2")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"embedding {self.id!r} has non-finite components")
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return self.values.shape[0]


def _check_same_dim(*arrays: np.ndarray) -> None:
    dims = {a.shape[-1] for a in arrays}
    if len(dims) > 1:
        raise DimensionMismatch(f"embedding dimensions differ: {sorted(dims)}")


def _norm(v: np.ndarray) -> np.ndarray:
    return np.linalg.norm(v, axis=-1)


def normalize(v) -> np.ndarray:
    """Scale ``v`` to unit Euclidean norm.

    Raises ZeroVector if any input vector has norm <= 1e-12.
    """
    arr = _as_f64(v)
    n = _norm(arr)
    if np.any(n <= DEGENERACY_TOL):
        raise ZeroVector("cannot normalize a zero vector")
    return arr / n[..., np.newaxis]


def cosine_sim(v, w) -> np.ndarray | float:
    """Cosine similarity of ``v`` and ``w``, clamped to [-1, 1].

    Raises ZeroVector on degenerate input.
    """
    a, b = _as_f64(v), _as_f64(w)
    _check_same_dim(a, b)
    na, nb = _norm(a), _norm(b)
    if np.any(na <= DEGENERACY_TOL) or np.any(nb <= DEGENERACY_TOL):
        raise ZeroVector("cosine similarity undefined for zero vectors")
    sim = np.sum(a * b, axis=-1) / (na * nb)
    return np.clip(sim, -1.0, 1.0)[()]


def root_distance(r, e) -> np.ndarray | float:
    """Euclidean distance of ``e`` from the root ``r``."""
    root, emb = _as_f64(r), _as_f64(e)
    _check_same_dim(root, emb)
    return _norm(emb - root)[()]


def exterior_angle(r, e, e2) -> np.ndarray | float:
    """Exterior angle at ``e``: arccos of sim(e - r, e2 - e), in [0, pi].

    Requires ``e`` distinct from ``r`` and ``e2`` distinct from ``e``
    (distance > 1e-12); raises DegenerateAngle otherwise.
    """
    root, emb, other = _as_f64(r), _as_f64(e), _as_f64(e2)
    _check_same_dim(root, emb, other)
    u = emb - root
    w = other - emb
    nu, nw = _norm(u), _norm(w)
    if np.any(nu <= DEGENERACY_TOL):
        raise DegenerateAngle("anchor coincides with the root")
    if np.any(nw <= DEGENERACY_TOL):
        raise DegenerateAngle("second point coincides with the anchor")
    c = np.clip(np.sum(u * w, axis=-1) / (nu * nw), -1.0, 1.0)
    return np.arccos(c)[()]


def half_aperture(r, e, eps: float = DEFAULT_EPSILON) -> np.ndarray | float:
    """Cone half-aperture at ``e``: arcsin(min(1, eps / root_distance(e))).

    ``eps`` must be positive.  Raises DegenerateAngle when ``e`` coincides
    with the root.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    d = np.asarray(root_distance(r, e))
    if np.any(d <= DEGENERACY_TOL):
        raise DegenerateAngle("half-aperture undefined at the root")
    return np.arcsin(np.minimum(1.0, eps / d))[()]


def cone_contains(r, e, e2, eps: float = DEFAULT_EPSILON) -> np.ndarray | bool:
    """True where ``e2`` lies in the entailment cone rooted at ``e``.

    Membership is exterior_angle(r, e, e2) <= half_aperture(r, e, eps).
    """
    xi = np.asarray(exterior_angle(r, e, e2))
    theta = np.asarray(half_aperture(r, e, eps))
    return (xi <= theta)[()]
