"""Hierarchical retrieval by radial interpolation.

Given an image embedding, the sweep walks from the root toward the nearest
text embedding in ``steps`` equal increments (the point at the root itself
is omitted).  At each interior point only texts at most that far from the
root are candidates, so early steps can only surface generic captions; the
best candidate by image similarity is recorded and consecutive repeats are
collapsed into the final root-to-specific hierarchy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import BadK, EmptyCandidates
from .geometry import cosine_sim, root_distance


@dataclass(frozen=True)
class SweepStep:
    """One interior point of the sweep: its index (1-based), its distance
    from the root, and the caption chosen there."""

    step: int
    radius: float
    key: str


@dataclass(frozen=True)
class SweepResult:
    """Full sweep trace plus the deduplicated hierarchy.

    ``steps`` skips interior points whose candidate shell was empty, so its
    length is at most the configured step count; ``hierarchy`` collapses
    consecutive repeats and therefore never holds adjacent duplicates.
    """

    target_key: str
    steps: tuple[SweepStep, ...]
    hierarchy: tuple[str, ...]


def _as_matrix(candidates: Mapping[str, np.ndarray]) -> tuple[list[str], np.ndarray]:
    if not candidates:
        raise EmptyCandidates("candidate set is empty")
    keys = list(candidates)
    matrix = np.stack([np.asarray(candidates[k], dtype=np.float64) for k in keys])
    return keys, matrix


def _best_key(keys: Sequence[str], sims: np.ndarray) -> str:
    """Highest-similarity key; exact similarity ties go to the
    lexicographically smallest key so results are order-independent."""
    best = sims.max()
    tied = np.flatnonzero(sims == best)
    if tied.size == 1:
        return keys[int(tied[0])]
    return min(keys[int(i)] for i in tied)


def nearest_text(
    image: np.ndarray, candidates: Mapping[str, np.ndarray]
) -> str:
    """Key of the candidate with the highest cosine similarity to the
    image (ties: lexicographically smallest key)."""
    keys, matrix = _as_matrix(candidates)
    sims = cosine_sim(matrix, np.asarray(image, dtype=np.float64))
    return _best_key(keys, sims)


def hierarchical_retrieve(
    image: np.ndarray,
    root: np.ndarray,
    candidates: Mapping[str, np.ndarray],
    steps: int = 50,
) -> SweepResult:
    """Sweep from the root toward the nearest text and collect the best
    caption inside each growing root-centered shell.

    Interior points are p_k = root + (k/steps)(target - root) for
    k = 1..steps; the shell at p_k admits captions whose root distance is
    at most that of p_k.  Empty shells are skipped.
    """
    if steps < 1:
        raise BadK(f"steps must be >= 1, got {steps}")
    image = np.asarray(image, dtype=np.float64)
    root = np.asarray(root, dtype=np.float64)
    keys, matrix = _as_matrix(candidates)

    target_key = nearest_text(image, candidates)
    target = np.asarray(candidates[target_key], dtype=np.float64)

    radii = root_distance(root, matrix)
    sims = cosine_sim(matrix, image)

    trace: list[SweepStep] = []
    hierarchy: list[str] = []
    span = target - root
    for k in range(1, steps + 1):
        point = root + (k / steps) * span
        radius = float(np.linalg.norm(point - root))
        inside = np.flatnonzero(radii <= radius)
        if inside.size == 0:
            continue
        shell_keys = [keys[int(i)] for i in inside]
        key = _best_key(shell_keys, sims[inside])
        trace.append(SweepStep(step=k, radius=radius, key=key))
        if not hierarchy or hierarchy[-1] != key:
            hierarchy.append(key)
    return SweepResult(
        target_key=target_key, steps=tuple(trace), hierarchy=tuple(hierarchy)
    )


def knn_retrieve(
    query: np.ndarray, corpus: Mapping[str, np.ndarray], k: int
) -> list[str]:
    """Top-k corpus keys by cosine similarity, most similar first; exact
    ties are ordered by key so the result is stable."""
    keys, matrix = _as_matrix(corpus)
    if not 1 <= k <= len(keys):
        raise BadK(f"k must be in [1, {len(keys)}], got {k}")
    sims = cosine_sim(matrix, np.asarray(query, dtype=np.float64))
    order = np.lexsort((np.asarray(keys), -sims))
    return [keys[int(i)] for i in order[:k]]
