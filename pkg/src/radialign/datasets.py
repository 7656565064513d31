"""Synthetic hierarchy fixtures.

Generates a four-tier caption hierarchy planted on the unit sphere: tier-t
concepts sit at a fixed exterior angle from a common root, children drift
directionally from their parents, and every stored vector is perturbed by
angular noise so alignment has something to recover.  Tier-1..3 concepts
are drawn from shared pools (the same generic caption serves many records,
as dataset-builder LLM prompts tend to produce); tier-4 captions and their
negatives are unique per record.

Keys double as caption texts.  Images live near their record's tier-4
caption, pre-noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .store import Caption, EmbeddingStore, HierarchyRecord

DEFAULT_TIER_ANGLES = (0.35, 0.65, 0.95, 1.25)


@dataclass
class HierarchySpec:
    """Shape of the planted hierarchy.

    ``branching`` gives the number of tier-1 concepts, then children per
    node at tiers 2 and 3; tier 4 is one unique leaf per record.  ``noise``
    is the angular scale (radians) of the perturbation applied to every
    stored caption vector (``leaf_noise`` overrides it for tier-4 keys).
    ``drift`` sets how far child directions wander from their parents per
    tier.  ``record_paths`` caps how many distinct root-to-leaf pool paths
    the records cycle through; 1 yields maximally homogeneous records,
    which keeps minibatch losses comparable across a training run.
    """

    n_records: int = 256
    dim: int = 16
    branching: tuple[int, int, int] = (8, 2, 2)
    tier_angles: tuple[float, float, float, float] = DEFAULT_TIER_ANGLES
    drift: tuple[float, float, float] = (0.6, 0.35, 0.2)
    noise: float = 0.08
    leaf_noise: float | None = None
    image_noise: float = 0.02
    record_paths: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n_records < 1:
            raise ValueError("n_records must be >= 1")
        if self.dim < 3:
            raise ValueError("dim must be >= 3 so directions can vary")
        if any(b < 2 for b in self.branching):
            raise ValueError("each branching factor must be >= 2 so siblings exist")
        angles = self.tier_angles
        if not all(0 < a < np.pi / 2 for a in angles):
            raise ValueError("tier angles must lie in (0, pi/2)")
        if not all(a < b for a, b in zip(angles, angles[1:])):
            raise ValueError("tier angles must strictly increase")
        if self.leaf_noise is None:
            self.leaf_noise = self.noise
        total_paths = self.branching[0] * self.branching[1] * self.branching[2]
        if self.record_paths is None:
            self.record_paths = total_paths
        if not 1 <= self.record_paths <= total_paths:
            raise ValueError(f"record_paths must be in [1, {total_paths}]")


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _perp_unit(rng: np.random.Generator, root: np.ndarray) -> np.ndarray:
    """Random unit direction orthogonal to the root."""
    g = rng.standard_normal(root.shape[0])
    g -= np.dot(g, root) * root
    return _unit(g)


def _place(root: np.ndarray, direction: np.ndarray, angle: float) -> np.ndarray:
    """Unit vector at the given exterior angle from the root along a
    root-orthogonal direction."""
    return np.cos(angle) * root + np.sin(angle) * direction


def _jitter(rng: np.random.Generator, vec: np.ndarray, scale: float) -> np.ndarray:
    if scale <= 0:
        return vec.copy()
    return _unit(vec + scale * rng.standard_normal(vec.shape[0]))


@dataclass
class _Node:
    key: str
    direction: np.ndarray
    clean: np.ndarray
    children: list = field(default_factory=list)


def make_hierarchy_dataset(
    spec: HierarchySpec | None = None,
) -> tuple[list[HierarchyRecord], EmbeddingStore]:
    """Build (records, store) for a planted hierarchy.

    The store holds the root under key "", every caption vector (noisy),
    and one image per record (near the clean tier-4 position).  Records
    carry four positives walking a root-to-leaf path and four tier-matched
    sibling negatives, so every record is trainable.
    """
    spec = spec or HierarchySpec()
    rng = np.random.default_rng(spec.seed)

    root = np.zeros(spec.dim)
    root[0] = 1.0

    b1, b2, b3 = spec.branching
    a1, a2, a3, a4 = spec.tier_angles
    d2, d3, d4 = spec.drift
    tier1 = [
        _Node(f"n1.{i}", d := _perp_unit(rng, root), _place(root, d, a1))
        for i in range(b1)
    ]
    for p1 in tier1:
        for j in range(b2):
            d = _unit_perp_drift(rng, root, p1.direction, d2)
            p1.children.append(_Node(f"{p1.key}.{j}", d, _place(root, d, a2)))
    for p1 in tier1:
        for p2 in p1.children:
            for j in range(b3):
                d = _unit_perp_drift(rng, root, p2.direction, d3)
                p2.children.append(_Node(f"{p2.key}.{j}", d, _place(root, d, a3)))

    table: dict[str, np.ndarray] = {"": root.copy()}
    texts: dict[str, str] = {}

    def register(key: str, clean: np.ndarray, noise: float) -> None:
        if key not in table:
            table[key] = _jitter(rng, clean, noise)
            texts[key] = key

    for p1 in tier1:
        register(p1.key, p1.clean, spec.noise)
        for p2 in p1.children:
            register(p2.key, p2.clean, spec.noise)
            for p3 in p2.children:
                register(p3.key, p3.clean, spec.noise)

    records = []
    for idx in range(spec.n_records):
        path = idx % spec.record_paths
        p1 = tier1[path % b1]
        p2 = p1.children[(path // b1) % b2]
        p3 = p2.children[(path // (b1 * b2)) % b3]

        leaf_dir = _unit_perp_drift(rng, root, p3.direction, d4)
        leaf_clean = _place(root, leaf_dir, a4)
        leaf_key = f"n4.r{idx}"
        register(leaf_key, leaf_clean, spec.leaf_noise)

        neg_leaf_dir = _unit_perp_drift(rng, root, p3.direction, d4 + 0.7)
        neg_leaf_key = f"n4x.r{idx}"
        register(neg_leaf_key, _place(root, neg_leaf_dir, a4), spec.leaf_noise)

        def sibling(pool, node):
            others = [n for n in pool if n.key != node.key]
            return others[int(rng.integers(len(others)))]

        n1 = sibling(tier1, p1)
        n2 = sibling(p1.children, p2)
        n3 = sibling(p2.children, p3)

        image_key = f"img.r{idx}"
        table[image_key] = _jitter(rng, leaf_clean, spec.image_noise)
        records.append(
            HierarchyRecord(
                image_id=image_key,
                image_key=image_key,
                positives=(
                    Caption(text=texts[p1.key], key=p1.key),
                    Caption(text=texts[p2.key], key=p2.key),
                    Caption(text=texts[p3.key], key=p3.key),
                    Caption(text=texts[leaf_key], key=leaf_key),
                ),
                negatives=(
                    Caption(text=texts[n1.key], key=n1.key),
                    Caption(text=texts[n2.key], key=n2.key),
                    Caption(text=texts[n3.key], key=n3.key),
                    Caption(text=texts[neg_leaf_key], key=neg_leaf_key),
                ),
            )
        )

    return records, EmbeddingStore.from_table(table)


def _unit_perp_drift(
    rng: np.random.Generator, root: np.ndarray, parent_dir: np.ndarray, spread: float
) -> np.ndarray:
    """Child direction: parent direction plus root-orthogonal drift."""
    g = rng.standard_normal(root.shape[0])
    g -= np.dot(g, root) * root
    return _unit(parent_dir + spread * _unit(g))
