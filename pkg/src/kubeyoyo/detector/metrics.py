"""Confusion counts and the derived classification scores."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class EvalMetrics:
    tp: int
    tn: int
    fp: int
    fn: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    # set when a score's denominator was zero and it was reported as 0
    precision_undefined: bool = False
    recall_undefined: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def from_counts(tp: int, tn: int, fp: int, fn: int) -> EvalMetrics:
    total = tp + tn + fp + fn
    if total == 0:
        raise ValueError("no samples")
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return EvalMetrics(tp, tn, fp, fn, (tp + tn) / total, precision, recall,
                       f1_score(precision, recall),
                       precision_undefined=tp + fp == 0,
                       recall_undefined=tp + fn == 0)


def evaluate(predictions, labels) -> EvalMetrics:
    pred = np.asarray(predictions).astype(int)
    true = np.asarray(labels).astype(int)
    if pred.shape != true.shape:
        raise ValueError("predictions and labels differ in length")
    if pred.size == 0:
        raise ValueError("nothing to evaluate")
    tp = int(np.sum((pred == 1) & (true == 1)))
    tn = int(np.sum((pred == 0) & (true == 0)))
    fp = int(np.sum((pred == 1) & (true == 0)))
    fn = int(np.sum((pred == 0) & (true == 1)))
    return from_counts(tp, tn, fp, fn)
