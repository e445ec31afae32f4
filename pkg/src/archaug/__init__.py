"""Architecture-performance prediction with permutation-based augmentation.

A cell architecture is a small labeled DAG. Relabelling its interior
layers (with the adjacency rows and columns permuted in step) yields a
different matrix encoding of the same network, so one annotated
architecture becomes a whole training batch sharing its label. The
package expands datasets that way, fits a random-forest predictor on
encoded architectures, and drives an evolutionary search with it.

Typical flow: records in, :func:`build_training_set` (augmentation and
encoding happen inside), :func:`fit_forest`, then :func:`evaluate` on a
held-out set or :func:`evolve` to search. The ``archaug`` command wraps
the same steps for shell use.
"""

from .arch_core import (
    Architecture,
    InvalidArchitectureError,
    SamplingError,
    Space,
    ValidationReport,
    canonical_key,
    isomorphic,
    pad,
    random_architecture,
    require_valid,
    space_nb101,
    space_synthetic,
    strip_nulls,
    validate,
)
from .augment import AugmentationBatch, InteriorPermutation, augment_all, label_propagate, permute
from .data_io import (
    BenchRecord,
    SchemaError,
    SplitSpec,
    build_training_set,
    from_architecture,
    gen_synthetic,
    load_jsonl,
    load_model,
    save_model,
    split,
    synthetic_score,
    to_architecture,
    write_jsonl,
)
from .encode import (
    EncodedVector,
    encode_hard,
    encode_onehot,
    feature_matrix,
    hard_length,
    onehot_length,
    reconstruct,
    reduce,
)
from .metrics import EvalReport, evaluate, kendall_tau, mse, rank_table, write_rank_csv
from .nb201 import DegenerateCellError, EdgeCell, op_vocab_201, to_standard_dag
from .regress import (
    ForestConfig,
    ForestModel,
    TrainingSet,
    fit_baseline,
    fit_forest,
    predict,
)
from .search import (
    GroundTruth,
    SearchConfig,
    SearchResult,
    evolve,
    model_fitness,
    query_ground_truth,
)
from .seeding import derive_seed

__version__ = "0.1.0"

__all__ = [
    "Architecture",
    "AugmentationBatch",
    "BenchRecord",
    "DegenerateCellError",
    "EdgeCell",
    "EncodedVector",
    "EvalReport",
    "ForestConfig",
    "ForestModel",
    "GroundTruth",
    "InteriorPermutation",
    "InvalidArchitectureError",
    "SamplingError",
    "SchemaError",
    "SearchConfig",
    "SearchResult",
    "Space",
    "SplitSpec",
    "TrainingSet",
    "ValidationReport",
    "augment_all",
    "build_training_set",
    "canonical_key",
    "derive_seed",
    "encode_hard",
    "encode_onehot",
    "evaluate",
    "evolve",
    "feature_matrix",
    "fit_baseline",
    "fit_forest",
    "from_architecture",
    "gen_synthetic",
    "hard_length",
    "isomorphic",
    "kendall_tau",
    "label_propagate",
    "load_jsonl",
    "load_model",
    "model_fitness",
    "mse",
    "onehot_length",
    "op_vocab_201",
    "pad",
    "permute",
    "predict",
    "query_ground_truth",
    "random_architecture",
    "rank_table",
    "reconstruct",
    "reduce",
    "require_valid",
    "save_model",
    "space_nb101",
    "space_synthetic",
    "split",
    "strip_nulls",
    "synthetic_score",
    "to_architecture",
    "to_standard_dag",
    "validate",
    "write_jsonl",
    "write_rank_csv",
]
