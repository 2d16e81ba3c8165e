"""Lexical semantic change discovery toolkit.

Ranks and classifies every shared vocabulary word of a diachronic corpus
pair by semantic change, using either static embeddings (skip-gram with
negative sampling, aligned by orthogonal Procrustes, compared by cosine
distance) or externally produced per-usage contextual vectors (average
pairwise distance / centroid cosine distance).  Predictions are validated
through an annotation service whose judgments aggregate into clustered
word usage graphs with binary and graded change labels.
"""

__version__ = "0.1.0"

from .corpus import (
    Corpus,
    FilterVerdict,
    Period,
    Sentence,
    UsageSample,
    VocabEntry,
    build_vocabulary,
    extract_usages,
    filter_candidate,
    intersection_only,
    load_corpus,
)
from .static_embed import SgnsConfig, VectorSpace, load_space, save_space, train_sgns
from .align import (
    AlignedPair,
    cosine_distance,
    identity_pair,
    normalize_and_center,
    orthogonal_procrustes,
)
from .token_embed import UsageVectorSet, apd, com_distance, load_usage_vectors, save_usage_vectors
from .metrics import (
    EvalResult,
    fbeta_score,
    krippendorff_alpha,
    pairwise_spearman_mean,
    precision_recall_fbeta,
    spearman_rho,
)
from .discovery import (
    BinaryPrediction,
    DiscoveryReport,
    GradedRanking,
    Population,
    TokenBackend,
    TypeBackend,
    binarize,
    discover,
    full_population,
    grade_population,
    sample_population,
    subsample_predictions,
    threshold_grid,
    tune_threshold,
)
from .wug import (
    WUG,
    ChangeResult,
    Judgment,
    SolverConfig,
    aggregate_edges,
    change_labels,
    cluster_wug,
    kn_thresholds,
    layout_wug,
    normalized_loss,
    split_by_period,
)
from .annotation import AnnotationProject, CompletionStatus, create_project, load_project

__all__ = [
    "aggregate_edges",
    "AlignedPair",
    "AnnotationProject",
    "apd",
    "binarize",
    "BinaryPrediction",
    "build_vocabulary",
    "change_labels",
    "ChangeResult",
    "cluster_wug",
    "com_distance",
    "CompletionStatus",
    "Corpus",
    "cosine_distance",
    "create_project",
    "discover",
    "DiscoveryReport",
    "EvalResult",
    "extract_usages",
    "fbeta_score",
    "filter_candidate",
    "FilterVerdict",
    "full_population",
    "grade_population",
    "GradedRanking",
    "identity_pair",
    "intersection_only",
    "Judgment",
    "kn_thresholds",
    "krippendorff_alpha",
    "layout_wug",
    "load_corpus",
    "load_project",
    "load_space",
    "load_usage_vectors",
    "normalize_and_center",
    "normalized_loss",
    "orthogonal_procrustes",
    "pairwise_spearman_mean",
    "Period",
    "Population",
    "precision_recall_fbeta",
    "sample_population",
    "save_space",
    "save_usage_vectors",
    "Sentence",
    "SgnsConfig",
    "SolverConfig",
    "spearman_rho",
    "split_by_period",
    "subsample_predictions",
    "threshold_grid",
    "TokenBackend",
    "train_sgns",
    "tune_threshold",
    "TypeBackend",
    "UsageSample",
    "UsageVectorSet",
    "VectorSpace",
    "VocabEntry",
    "WUG",
]
