"""Desk-scale alignment engine.

Optimizes a table of text embeddings together with a learnable root under
the weighted contrastive-plus-regularization loss, standing in for encoder
fine-tuning: the losses only ever see embeddings, so optimizing the table
directly preserves every formula while keeping runs small.  Image
embeddings are never parameters.

Each optimizer step processes a minibatch of hierarchy records (three
caption triplets per record), applies an AdamW update to every embedding
that received gradient, and re-projects all trainable vectors including the
root onto the unit sphere.  Input vectors are expected unit-norm (stores
written by the exporter are); projection leaves vectors already within
1e-12 of unit norm untouched so a zero-learning-rate run is a bitwise
no-op.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    EmptyBatch,
    KeyNotFound,
    MissingNegatives,
    NonFiniteLoss,
    ZeroVector,
)
from .geometry import DEGENERACY_TOL, Embedding
from .losses import GradientBundle, LossConfig, Triplet, loss_total_grad
from .store import EmbeddingStore, HierarchyRecord


@dataclass
class AlignConfig:
    """Run configuration for the alignment engine.

    The default learning rate targets direct embedding optimization; it is
    far larger than what encoder fine-tuning would use because the
    parameters here are the raw unit vectors themselves.
    """

    epochs: int = 1
    batch_size: int = 8
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    weight_decay: float = 0.0
    seed: int = 0
    root_key: str = ""
    loss: LossConfig = field(default_factory=LossConfig)

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")


class _AdamW:
    """AdamW with decoupled weight decay and per-parameter step counts;
    parameters absent from a step's gradient keep their moments untouched."""

    def __init__(self, lr: float, beta1: float, beta2: float, eps: float, weight_decay: float):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}
        self._t: dict[str, int] = {}

    def update(self, name: str, value: np.ndarray, grad: np.ndarray) -> np.ndarray:
        m = self._m.get(name)
        v = self._v.get(name)
        if m is None:
            m = np.zeros_like(value)
            v = np.zeros_like(value)
        t = self._t.get(name, 0) + 1
        m = self.beta1 * m + (1.0 - self.beta1) * grad
        v = self.beta2 * v + (1.0 - self.beta2) * grad * grad
        self._m[name], self._v[name], self._t[name] = m, v, t
        m_hat = m / (1.0 - self.beta1**t)
        v_hat = v / (1.0 - self.beta2**t)
        new = value - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        if self.weight_decay:
            new = new - self.lr * self.weight_decay * value
        return new


@dataclass
class TrainState:
    """Mutable training state: the trainable table, the root, frozen
    originals for the regularizer, and the per-step loss history."""

    table: dict[str, np.ndarray]
    root: np.ndarray
    originals: dict[str, np.ndarray]
    step: int = 0
    history: list[float] = field(default_factory=list)


def build_triplets(record: HierarchyRecord, source) -> list[Triplet]:
    """The three caption triplets of a record: for tier i in {1,2,3}, anchor
    at tier i, positive at tier i+1, negative at tier i.

    ``source`` maps keys to vectors (a live table or a store).  Raises
    MissingNegatives for records without negative captions.
    """
    if not record.has_negatives:
        raise MissingNegatives(f"record {record.image_id!r} has no negative captions")

    def emb(key: str) -> Embedding:
        try:
            return Embedding(id=key, values=source[key])
        except KeyError:
            raise KeyNotFound(key, f"record {record.image_id!r}") from None

    triplets = []
    for i in range(3):
        triplets.append(
            Triplet(
                anchor=emb(record.positives[i].key),
                positive=emb(record.positives[i + 1].key),
                negative=emb(record.negatives[i].key),
                tier=i + 1,
                record_id=record.image_id,
            )
        )
    return triplets


def _project(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm <= DEGENERACY_TOL:
        raise ZeroVector("optimizer update annihilated a vector")
    if abs(norm - 1.0) <= 1e-12:
        return vec
    return vec / norm


def project_to_sphere(state: TrainState) -> TrainState:
    """Re-project every trainable vector and the root to unit norm (in
    place); vectors already unit within 1e-12 are left bit-identical."""
    for key, value in state.table.items():
        state.table[key] = _project(value)
    state.root = _project(state.root)
    return state


def align(
    dataset: Sequence[HierarchyRecord],
    store: EmbeddingStore | Mapping[str, np.ndarray],
    config: AlignConfig | None = None,
    root_init: np.ndarray | None = None,
) -> TrainState:
    """Run the alignment loop and return the final state with its history.

    The trainable set is every caption embedding referenced by the dataset
    plus the root (initialized from ``root_init`` or the store entry under
    ``config.root_key``).  Image embeddings are never touched.
    """
    config = config or AlignConfig()
    if not dataset:
        raise EmptyBatch("alignment dataset is empty")

    def lookup(key: str) -> np.ndarray:
        try:
            return np.asarray(store[key], dtype=np.float64)
        except KeyError:
            raise KeyNotFound(key, "alignment store") from None

    table: dict[str, np.ndarray] = {}
    for record in dataset:
        if not record.has_negatives:
            raise MissingNegatives(
                f"record {record.image_id!r} has no negative captions; cannot train"
            )
        for key in record.caption_keys():
            if key not in table:
                table[key] = lookup(key).copy()

    root = (
        np.asarray(root_init, dtype=np.float64).copy()
        if root_init is not None
        else lookup(config.root_key).copy()
    )
    state = TrainState(
        table=table,
        root=root,
        originals={k: v.copy() for k, v in table.items()},
        )
    optimizer = _AdamW(
        lr=config.learning_rate,
        beta1=config.beta1,
        beta2=config.beta2,
        eps=config.adam_eps,
        weight_decay=config.weight_decay,
    )

    rng = np.random.default_rng(config.seed)
    order = np.arange(len(dataset))
    for _ in range(config.epochs):
        rng.shuffle(order)
        for start in range(0, len(dataset), config.batch_size):
            batch = [dataset[i] for i in order[start : start + config.batch_size]]
            _step(state, batch, optimizer, config)
    return state


def _step(
    state: TrainState,
    batch: Sequence[HierarchyRecord],
    optimizer: _AdamW,
    config: AlignConfig,
) -> None:
    triplets: list[Triplet] = []
    reg_pairs = []
    for record in batch:
        triplets.extend(build_triplets(record, state.table))
        keys = record.caption_keys()
        reg_pairs.append(
            (
                [Embedding(id=k, values=state.table[k]) for k in keys],
                [state.originals[k] for k in keys],
            )
        )

    loss, bundle = loss_total_grad(triplets, reg_pairs, state.root, config.loss)
    if not math.isfinite(loss):
        raise NonFiniteLoss(
            f"non-finite loss {loss!r} at step {state.step} "
            f"(batch of {len(batch)} records, first {batch[0].image_id!r})"
        )

    for key, grad in bundle.by_key.items():
        state.table[key] = optimizer.update(key, state.table[key], grad)
    state.root = optimizer.update("\x00root", state.root, bundle.root)
    project_to_sphere(state)
    state.step += 1
    state.history.append(loss)
