"""Python bindings for the w2c word-context space library."""

from ._w2cspace import (
    AssocNetwork,
    ReversalReport,
    Vocab,
    build_vocab,
    cosine_similarity,
    evaluate_classification,
    evaluate_correction,
    f1_score,
    kmeans,
    reversal_metrics,
    run_cli,
    sample_assoc_matrix,
    tokenize,
)

__all__ = [
    "AssocNetwork",
    "ReversalReport",
    "Vocab",
    "build_vocab",
    "cosine_similarity",
    "evaluate_classification",
    "evaluate_correction",
    "f1_score",
    "kmeans",
    "reversal_metrics",
    "run_cli",
    "sample_assoc_matrix",
    "tokenize",
]
