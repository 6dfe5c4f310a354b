"""Joke-reader segmentation: binarize ratings, impute with an RBM, cluster with k-Modes."""

__version__ = "0.1.0"

from .analysis import OverlapReport, PreferencePattern, emit_pattern_chart, overlap_test, preference_patterns
from .clusterability import HopkinsResult, hopkins
from .clustering import (
    ClusterModel,
    ElbowCurve,
    assign,
    cao_init,
    detect_elbow,
    elbow_curve,
    kmeans_fit,
    kmodes_fit,
    matching_dissimilarity,
    squared_euclidean,
    wcss,
)
from .rbm import (
    ImputedDatasets,
    RbmParams,
    TrainConfig,
    TrainHistory,
    build_d1_d2,
    cd_update,
    evaluate_mae,
    hidden_probs,
    init_rbm,
    predict,
    train,
    visible_probs,
)
from .ratings_io import BinaryRatingMatrix, RawRatingMatrix, UserSplit, binarize, load_ratings, split_users
