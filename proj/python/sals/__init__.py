"""Structure-aware label smoothing for transductive node classification.

Thin re-export of the compiled extension: graph/dataset construction, soft
target builders, full-batch GCN training, and calibration/loss-distribution
analysis. See the package README for the file formats and the CLI.
"""

from ._sals import (
    Dataset,
    GcnModel,
    Graph,
    LabelSet,
    SplitMask,
    TrainHistory,
    TrainResult,
    build_graph,
    compute_ratios,
    evaluate,
    generate_sbm,
    gini_coefficient,
    hard_targets,
    load_dataset,
    load_model,
    ls_targets,
    make_splits,
    optimum_logit_gap,
    predict_proba,
    reliability,
    sals_targets,
    save_model,
    train,
    verify_ce_decomposition,
)

__all__ = [
    "Dataset",
    "GcnModel",
    "Graph",
    "LabelSet",
    "SplitMask",
    "TrainHistory",
    "TrainResult",
    "build_graph",
    "compute_ratios",
    "evaluate",
    "generate_sbm",
    "gini_coefficient",
    "hard_targets",
    "load_dataset",
    "load_model",
    "ls_targets",
    "make_splits",
    "optimum_logit_gap",
    "predict_proba",
    "reliability",
    "sals_targets",
    "save_model",
    "train",
    "verify_ce_decomposition",
]
