"""Facet-set coherency: weak labeling, features, training, and evaluation."""

from .features import FEATURE_SCHEMA_VERSION, FeatureVector, extract_features, feature_names
from .scorer import (
    CoherencyClassifier,
    CoherencyModel,
    EvalReport,
    ExternalScorerClient,
    Prediction,
    TrainConfig,
    evaluate,
    load_model,
    loss_and_gradient,
    predict,
    prevalence,
    save_model,
    train,
)
from .splitting import DEFAULT_RATIOS, Split, SplitAssignment, stratified_split
from .weak_labels import (
    CoherencyLabel,
    Label,
    LabeledRecord,
    PROPAGATION_THRESHOLD,
    question_coherent_fractions,
    read_labeled_jsonl,
    weak_label,
    write_labeled_jsonl,
)

__all__ = [
    "FEATURE_SCHEMA_VERSION",
    "FeatureVector",
    "extract_features",
    "feature_names",
    "CoherencyClassifier",
    "CoherencyModel",
    "EvalReport",
    "ExternalScorerClient",
    "Prediction",
    "TrainConfig",
    "evaluate",
    "load_model",
    "loss_and_gradient",
    "predict",
    "prevalence",
    "save_model",
    "train",
    "DEFAULT_RATIOS",
    "Split",
    "SplitAssignment",
    "stratified_split",
    "CoherencyLabel",
    "Label",
    "LabeledRecord",
    "PROPAGATION_THRESHOLD",
    "question_coherent_fractions",
    "read_labeled_jsonl",
    "weak_label",
    "write_labeled_jsonl",
]
