"""YoYo attack detection from cluster telemetry."""
from .features import ATTACK, FEATURE_NAMES, REGULAR, FeatureVector, extract_features
from .gbt import BoostedTreeModel, GbtHyperParams, feature_importance, train
from .metrics import EvalMetrics, evaluate

__all__ = ["ATTACK", "FEATURE_NAMES", "REGULAR", "FeatureVector", "extract_features",
           "BoostedTreeModel", "GbtHyperParams", "feature_importance", "train",
           "EvalMetrics", "evaluate"]
