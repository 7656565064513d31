"""Estimator-style facade over the functional core.

RadialAligner wraps the alignment loop behind the familiar
fit/transform/get_params surface; HierarchicalRetriever wraps the radial
sweep behind fit/predict.  Both validate array inputs up front and raise
NotFittedError before fit, so they compose with standard tooling (cloning,
grid search over get_params) without the core modules importing any of it.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .align import AlignConfig, TrainState, align
from .errors import DimensionMismatch, KeyNotFound
from .losses import LossConfig
from .retrieve import SweepResult, hierarchical_retrieve
from .store import EmbeddingStore, HierarchyRecord


def _as_matrix(X, dim: int | None = None) -> np.ndarray:
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D array of vectors, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("input contains non-finite values")
    if dim is not None and arr.shape[1] != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {arr.shape[1]}")
    return arr


class RadialAligner(BaseEstimator):
    """Fits caption embeddings (and the root) to the hierarchy objective.

    Parameters mirror the alignment configuration; after ``fit`` the
    trained table is available as ``embeddings_``, the root as ``root_``
    and the per-step loss history as ``history_``.
    """

    def __init__(
        self,
        epochs: int = 1,
        batch_size: int = 8,
        learning_rate: float = 1e-3,
        lambda_re: float = 1.0,
        lambda_reg: float = 10.0,
        epsilon: float = 0.05,
        margin: float = float("inf"),
        seed: int = 0,
        root_key: str = "",
    ):
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.lambda_re = lambda_re
        self.lambda_reg = lambda_reg
        self.epsilon = epsilon
        self.margin = margin
        self.seed = seed
        self.root_key = root_key

    def _config(self) -> AlignConfig:
        return AlignConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            seed=self.seed,
            root_key=self.root_key,
            loss=LossConfig(
                lambda_re=self.lambda_re,
                lambda_reg=self.lambda_reg,
                epsilon=self.epsilon,
                margin=self.margin,
            ),
        )

    def fit(
        self,
        records: Sequence[HierarchyRecord],
        store: EmbeddingStore | Mapping[str, np.ndarray],
        root_init: np.ndarray | None = None,
    ) -> "RadialAligner":
        state = align(list(records), store, self._config(), root_init=root_init)
        self.state_: TrainState = state
        self.embeddings_ = dict(state.table)
        self.root_ = state.root
        self.history_ = list(state.history)
        return self

    def _check_fitted(self):
        if not hasattr(self, "state_"):
            raise NotFittedError("RadialAligner is not fitted; call fit first")

    def transform(self, keys: Sequence[str]) -> np.ndarray:
        """Trained vectors for the given caption keys, one row per key."""
        self._check_fitted()
        rows = []
        for key in keys:
            if key not in self.embeddings_:
                raise KeyNotFound(key, "trained table")
            rows.append(self.embeddings_[key])
        return np.stack(rows)

    def fit_transform(self, records, store, keys: Sequence[str]) -> np.ndarray:
        return self.fit(records, store).transform(keys)

    def to_store(self, base: EmbeddingStore) -> EmbeddingStore:
        """Copy of ``base`` with trained captions and root substituted;
        every other entry (images included) is carried over unchanged."""
        self._check_fitted()
        table = {}
        for key in base.keys():
            if key == self.root_key:
                table[key] = self.root_
            elif key in self.embeddings_:
                table[key] = self.embeddings_[key]
            else:
                table[key] = base[key]
        return EmbeddingStore.from_table(table)


class HierarchicalRetriever(BaseEstimator):
    """Radial-sweep retriever over a fixed candidate set.

    ``fit`` indexes candidate caption vectors and the root; ``predict``
    returns one deduplicated root-to-specific key chain per query image.
    """

    def __init__(self, steps: int = 50):
        self.steps = steps

    def fit(
        self,
        X,
        keys: Sequence[str],
        root: np.ndarray,
    ) -> "HierarchicalRetriever":
        matrix = _as_matrix(X)
        keys = list(keys)
        if len(keys) != matrix.shape[0]:
            raise DimensionMismatch(
                f"{len(keys)} keys for {matrix.shape[0]} candidate vectors"
            )
        root = np.asarray(root, dtype=np.float64)
        if root.shape != (matrix.shape[1],):
            raise DimensionMismatch(
                f"root shape {root.shape} does not match candidate dimension"
            )
        self.candidates_ = {k: matrix[i] for i, k in enumerate(keys)}
        self.root_ = root
        return self

    def _check_fitted(self):
        if not hasattr(self, "candidates_"):
            raise NotFittedError("HierarchicalRetriever is not fitted; call fit first")

    def sweep(self, image: np.ndarray) -> SweepResult:
        """Full sweep trace for a single image vector."""
        self._check_fitted()
        return hierarchical_retrieve(
            np.asarray(image, dtype=np.float64), self.root_, self.candidates_, self.steps
        )

    def predict(self, X) -> list[tuple[str, ...]]:
        """Deduplicated hierarchy per query row."""
        self._check_fitted()
        matrix = _as_matrix(X, dim=self.root_.shape[0])
        return [self.sweep(row).hierarchy for row in matrix]
