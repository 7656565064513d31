"""Radial hierarchy probing, alignment, and evaluation for joint
image-text embedding stores.

The geometry module defines the primitives (exterior angle, root distance,
entailment cones); losses builds the training objective and its closed-form
gradients; align optimizes caption embeddings directly; retrieve and
metrics cover the evaluation procedures; store reads and writes the binary
embedding-store format shared with external exporters.
"""

from .align import AlignConfig, TrainState, align, build_triplets, project_to_sphere
from .datasets import HierarchySpec, make_hierarchy_dataset
from .errors import (
    BadGroundTruth,
    BadK,
    CorruptHeader,
    CountMismatch,
    DegenerateAngle,
    DegenerateInput,
    DimensionMismatch,
    DuplicateKey,
    EmptyBatch,
    EmptyCandidates,
    GridMisconfigured,
    KeyNotFound,
    MissingNegatives,
    NonFiniteLoss,
    OrderViolation,
    RadialignError,
    SchemaError,
    StoreError,
    TruncatedFile,
    ZeroVector,
)
from .estimators import HierarchicalRetriever, RadialAligner
from .geometry import (
    DEFAULT_EPSILON,
    Embedding,
    cone_contains,
    cosine_sim,
    exterior_angle,
    half_aperture,
    normalize,
    root_distance,
)
from .losses import (
    GradientBundle,
    LossConfig,
    Triplet,
    loss_ec_margin,
    loss_ec_margin_grad,
    loss_re,
    loss_re_aggregate,
    loss_re_aggregate_grad,
    loss_re_grad,
    loss_reg,
    loss_reg_grad,
    loss_total,
    loss_total_grad,
)
from .metrics import (
    PAIR_GRID,
    BreedsResult,
    EvalReport,
    average_ranks,
    breeds_eval,
    kendall_tau,
    lexical_entailment_score,
    pair_score,
    precision_recall,
    recall_at_k,
    spearman,
    tau_d,
)
from .retrieve import (
    SweepResult,
    SweepStep,
    hierarchical_retrieve,
    knn_retrieve,
    nearest_text,
)
from .store import (
    Caption,
    EmbeddingStore,
    HierarchyRecord,
    KnnTask,
    Label,
    LabelTask,
    LabelTaskImage,
    LexicalPair,
    load_hierarchies,
    load_knn_task,
    load_label_task,
    load_pairs,
    read_metadata,
    read_store,
    write_metadata,
    write_store,
)

__version__ = "0.1.0"

__all__ = [
    "AlignConfig",
    "BadGroundTruth",
    "BadK",
    "BreedsResult",
    "Caption",
    "CorruptHeader",
    "CountMismatch",
    "DEFAULT_EPSILON",
    "DegenerateAngle",
    "DegenerateInput",
    "DimensionMismatch",
    "DuplicateKey",
    "Embedding",
    "EmbeddingStore",
    "EmptyBatch",
    "EmptyCandidates",
    "EvalReport",
    "GradientBundle",
    "GridMisconfigured",
    "HierarchicalRetriever",
    "HierarchyRecord",
    "HierarchySpec",
    "KeyNotFound",
    "KnnTask",
    "Label",
    "LabelTask",
    "LabelTaskImage",
    "LexicalPair",
    "LossConfig",
    "MissingNegatives",
    "NonFiniteLoss",
    "OrderViolation",
    "PAIR_GRID",
    "RadialAligner",
    "RadialignError",
    "SchemaError",
    "StoreError",
    "SweepResult",
    "SweepStep",
    "TrainState",
    "Triplet",
    "TruncatedFile",
    "ZeroVector",
    "align",
    "average_ranks",
    "breeds_eval",
    "build_triplets",
    "cone_contains",
    "cosine_sim",
    "exterior_angle",
    "half_aperture",
    "hierarchical_retrieve",
    "kendall_tau",
    "knn_retrieve",
    "lexical_entailment_score",
    "load_hierarchies",
    "load_knn_task",
    "load_label_task",
    "load_pairs",
    "loss_ec_margin",
    "loss_ec_margin_grad",
    "loss_re",
    "loss_re_aggregate",
    "loss_re_aggregate_grad",
    "loss_re_grad",
    "loss_reg",
    "loss_reg_grad",
    "loss_total",
    "loss_total_grad",
    "make_hierarchy_dataset",
    "nearest_text",
    "normalize",
    "pair_score",
    "precision_recall",
    "project_to_sphere",
    "read_metadata",
    "read_store",
    "recall_at_k",
    "root_distance",
    "spearman",
    "tau_d",
    "write_metadata",
    "write_store",
]
