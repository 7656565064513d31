"""Evaluation metrics over radial geometry.

Hierarchy metrics compare a retrieved caption chain against a record's four
ground-truth positives (precision/recall) and check that root distance
orders the positives by tier (Kendall tau-b).  Lexical entailment is scored
by the exterior angle directly; label-pair retrieval scores a directed
generic-to-specific pair by image similarities plus an angle term whose
weight is picked by two-fold cross-validation over a fixed grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    BadGroundTruth,
    CountMismatch,
    DegenerateInput,
    GridMisconfigured,
    OrderViolation,
)
from .geometry import exterior_angle, root_distance
from .retrieve import knn_retrieve
from .store import LabelTask

ORDER_TOL = 1e-12
PAIR_GRID = tuple(np.linspace(0.0, 0.2, 20))


@dataclass(frozen=True)
class EvalReport:
    """Per-item metric values plus their arithmetic mean."""

    metric: str
    items: tuple[tuple[str, float], ...]

    @property
    def mean(self) -> float:
        if not self.items:
            raise DegenerateInput(f"report {self.metric!r} has no items")
        return float(np.mean([v for _, v in self.items]))

    def to_lines(self) -> list[str]:
        lines = [f"{self.metric}\t{item}\t{value:.6f}" for item, value in self.items]
        lines.append(f"{self.metric}\tmean\t{self.mean:.6f}")
        return lines

    def to_obj(self) -> dict:
        return {
            "metric": self.metric,
            "items": {item: value for item, value in self.items},
            "mean": self.mean,
        }


def precision_recall(
    retrieved: Sequence[str], ground_truth: Sequence[str]
) -> tuple[float, float]:
    """Precision and recall of a retrieved caption chain against the four
    ground-truth positives.  Duplicate retrieved keys count once."""
    truth = list(ground_truth)
    if len(truth) != 4 or len(set(truth)) != 4:
        raise BadGroundTruth(f"expected 4 distinct ground-truth keys, got {truth!r}")
    unique = list(dict.fromkeys(retrieved))
    if not unique:
        raise BadGroundTruth("retrieved chain is empty")
    hits = sum(1 for key in unique if key in set(truth))
    return hits / len(unique), hits / 4.0


def _tie_adjust(values: np.ndarray) -> float:
    """Sum of t*(t-1)/2 over tie groups."""
    _, counts = np.unique(values, return_counts=True)
    return float(np.sum(counts * (counts - 1) // 2))


def kendall_tau(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Kendall rank correlation with tie correction (tau-b).

    Concordant minus discordant pairs over the geometric mean of the
    tie-adjusted pair counts.  Raises DegenerateInput when either series is
    constant (the denominator vanishes).
    """
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise CountMismatch(f"series shapes differ: {x.shape} vs {y.shape}")
    n = x.shape[0]
    if n < 2:
        raise DegenerateInput("need at least 2 observations")
    sx = np.sign(x[:, None] - x[None, :])
    sy = np.sign(y[:, None] - y[None, :])
    concordant_minus_discordant = float(np.sum(np.triu(sx * sy, k=1)))
    n0 = n * (n - 1) / 2.0
    tx = _tie_adjust(x)
    ty = _tie_adjust(y)
    if n0 - tx <= 0 or n0 - ty <= 0:
        raise DegenerateInput("constant series has no rank order")
    return concordant_minus_discordant / np.sqrt((n0 - tx) * (n0 - ty))


def tau_d(root: np.ndarray, tier_embeddings: Sequence[np.ndarray]) -> float:
    """Kendall tau-b between root distances of the four tier captions and
    the tier order 1..4; 1.0 means distance grows strictly with tier."""
    if len(tier_embeddings) != 4:
        raise CountMismatch(f"expected 4 tier embeddings, got {len(tier_embeddings)}")
    root = np.asarray(root, dtype=np.float64)
    distances = [float(root_distance(root, np.asarray(e, dtype=np.float64)))
                 for e in tier_embeddings]
    return kendall_tau(distances, [1.0, 2.0, 3.0, 4.0])


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    a = np.asarray(values, dtype=np.float64)
    n = a.shape[0]
    order = np.argsort(a, kind="stable")
    inverse = np.empty(n, dtype=np.intp)
    inverse[order] = np.arange(n)
    sorted_a = a[order]
    boundary = np.r_[True, sorted_a[1:] != sorted_a[:-1]]
    group = np.cumsum(boundary)[inverse]
    edges = np.r_[np.flatnonzero(boundary), n]
    return 0.5 * (edges[group] + edges[group - 1] + 1)


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman rank correlation: Pearson correlation of average ranks."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise CountMismatch(f"series shapes differ: {x.shape} vs {y.shape}")
    if x.shape[0] < 2:
        raise DegenerateInput("need at least 2 observations")
    rx = average_ranks(x)
    ry = average_ranks(y)
    cx = rx - rx.mean()
    cy = ry - ry.mean()
    denom = np.sqrt(np.sum(cx * cx) * np.sum(cy * cy))
    if denom <= 0:
        raise DegenerateInput("constant series has no rank order")
    return float(np.sum(cx * cy) / denom)


def lexical_entailment_score(
    root: np.ndarray, general: np.ndarray, specific: np.ndarray
) -> float:
    """Graded entailment strength of (general, specific): the exterior
    angle at the general term, small when the specific term lies inside
    the general term's cone."""
    return float(exterior_angle(root, general, specific))


def pair_score(
    sim_x: float,
    sim_y: float,
    root: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    constant: float,
) -> float:
    """Directed label-pair score: image similarities of both labels plus a
    weighted exterior-angle term.  The pair must be strictly radial
    (d_r(x) < d_r(y) beyond tolerance) or OrderViolation is raised."""
    root = np.asarray(root, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    dx = float(root_distance(root, x))
    dy = float(root_distance(root, y))
    if dy - dx <= ORDER_TOL:
        raise OrderViolation(
            f"pair is not strictly generic-to-specific: d_r(x)={dx!r}, d_r(y)={dy!r}"
        )
    return sim_x + sim_y + constant * float(exterior_angle(root, x, y))


@dataclass(frozen=True)
class BreedsResult:
    """Cross-validated label-pair retrieval outcome for one k."""

    k: int
    recall: float
    fold_constants: tuple[float, float]
    fold_recalls: tuple[float, float]


def _check_grid(constants: Sequence[float]) -> np.ndarray:
    grid = np.asarray(constants, dtype=np.float64)
    expected = np.linspace(0.0, 0.2, 20)
    if grid.shape != expected.shape or not np.allclose(grid, expected, atol=1e-12):
        raise GridMisconfigured(
            "constant grid must be the 20 evenly spaced values on [0, 0.2]"
        )
    return grid


def breeds_eval(
    task: LabelTask,
    label_vectors: Mapping[str, np.ndarray],
    image_sims: Mapping[str, Mapping[str, float]],
    root: np.ndarray,
    k: int = 1,
    constants: Sequence[float] = PAIR_GRID,
) -> BreedsResult:
    """Recall@k for directed (coarse, fine) label pairs with the angle
    weight chosen by two-fold cross-validation.

    Candidate pairs are all ordered label pairs that satisfy the strict
    radial precondition; a prediction is correct when the image's
    ground-truth pair appears among its top-k scored pairs.  Images are
    split into folds by sorting ids and alternating; each fold picks the
    grid constant maximizing recall on itself (ties to the smaller
    constant) and is scored with the other fold's pick.
    """
    grid = _check_grid(constants)
    root = np.asarray(root, dtype=np.float64)

    texts: list[str] = []
    for label in task.all_labels():
        if label.text not in texts:
            texts.append(label.text)
    vectors = {}
    for text in texts:
        if text not in label_vectors:
            raise BadGroundTruth(f"label {text!r} has no embedding")
        vectors[text] = np.asarray(label_vectors[text], dtype=np.float64)

    depth = {text: float(root_distance(root, vec)) for text, vec in vectors.items()}
    pairs = []
    for cx in texts:
        for cy in texts:
            if cx == cy or depth[cy] - depth[cx] <= ORDER_TOL:
                continue
            angle = float(exterior_angle(root, vectors[cx], vectors[cy]))
            pairs.append((cx, cy, angle))
    if not pairs:
        raise DegenerateInput("no label pair satisfies the radial precondition")
    if not 1 <= k <= len(pairs):
        raise BadGroundTruth(f"k must be in [1, {len(pairs)}], got {k}")

    pair_keys = [(cx, cy) for cx, cy, _ in pairs]
    angles = np.asarray([a for _, _, a in pairs])
    order_keys = (
        np.asarray([cy for _, cy in pair_keys]),
        np.asarray([cx for cx, _ in pair_keys]),
    )

    images = sorted(task.images, key=lambda im: im.image_id)
    if len(images) < 2:
        raise DegenerateInput("need at least 2 images for two folds")
    folds = (images[0::2], images[1::2])

    base = {}
    truth = {}
    for image in images:
        sims = image_sims.get(image.image_id)
        if sims is None:
            raise BadGroundTruth(f"image {image.image_id!r} has no similarity row")
        try:
            base[image.image_id] = np.asarray(
                [sims[cx] + sims[cy] for cx, cy in pair_keys]
            )
        except KeyError as exc:
            raise BadGroundTruth(
                f"image {image.image_id!r} lacks similarity for label {exc.args[0]!r}"
            ) from None
        truth[image.image_id] = (image.coarse, image.fine)

    def recall(fold, constant: float) -> float:
        hits = 0
        for image in fold:
            scores = base[image.image_id] + constant * angles
            top = np.lexsort(order_keys + (-scores,))[:k]
            if any(pair_keys[int(i)] == truth[image.image_id] for i in top):
                hits += 1
        return hits / len(fold)

    picks = []
    for fold in folds:
        by_constant = [recall(fold, float(c)) for c in grid]
        picks.append(float(grid[int(np.argmax(by_constant))]))
    held_out = (recall(folds[1], picks[0]), recall(folds[0], picks[1]))
    return BreedsResult(
        k=k,
        recall=float(np.mean(held_out)),
        fold_constants=(picks[0], picks[1]),
        fold_recalls=held_out,
    )


def recall_at_k(
    queries: Sequence[tuple[np.ndarray, str]],
    corpus: Mapping[str, np.ndarray],
    k: int,
) -> float:
    """Fraction of queries whose ground-truth key appears in the top-k
    nearest corpus entries by cosine similarity."""
    if not queries:
        raise DegenerateInput("no queries")
    hits = 0
    for vector, gt_key in queries:
        if gt_key in knn_retrieve(vector, corpus, k):
            hits += 1
    return hits / len(queries)
