"""Evaluation metrics: log-loss, ROC-AUC, expected calibration error.

The naive baseline (constant 0.5 predictions, log-loss ln 2 ~ 0.693,
AUC 0.50) is emitted alongside every report for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict, field

import numpy as np
from scipy.stats import rankdata

from .errors import DataError
from .graphs import GraphDataset, GraphSample
from .model import ModelParams, predict_many

NAIVE_LOG_LOSS = math.log(2.0)
NAIVE_AUC = 0.5
EPS = 1e-7


@dataclass(frozen=True)
class CalibrationBin:
    lower: float
    upper: float
    count: int
    mean_confidence: float | None
    accuracy: float | None


@dataclass
class MetricsReport:
    log_loss: float
    roc_auc: float
    ece: float
    n_samples: int
    bins: list[CalibrationBin]
    naive_log_loss: float = NAIVE_LOG_LOSS
    naive_roc_auc: float = NAIVE_AUC

    def to_dict(self) -> dict:
        return asdict(self)


def _as_arrays(preds, labels) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(preds, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if p.shape != y.shape:
        raise DataError(f"length mismatch: {p.shape} predictions vs {y.shape} labels")
    if p.size == 0:
        raise DataError("need at least one prediction")
    return p, y


def log_loss(preds, labels) -> float:
    """Mean binary cross-entropy; predictions clamped away from {0, 1}."""
    p, y = _as_arrays(preds, labels)
    pc = np.clip(p, EPS, 1.0 - EPS)
    return float(np.mean(-(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc))))


def roc_auc(preds, labels) -> float:
    """Probability a random positive outranks a random negative; ties 1/2.

    Rank-based (Mann-Whitney) formulation.
    """
    p, y = _as_arrays(preds, labels)
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    if n_pos == 0 or n_neg == 0:
        raise DataError("roc_auc requires both classes present")
    ranks = rankdata(p)  # average ranks handle ties at half credit
    pos_rank_sum = float(np.sum(ranks[y == 1]))
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def _bin_index(p: float, n_bins: int) -> int:
    """Right-closed equal-width bins over [0,1]; bin 0 is [0, 1/n]."""
    if p <= 0.0:
        return 0
    return min(int(math.ceil(p * n_bins)) - 1, n_bins - 1)


def calibration_curve(preds, labels, n_bins: int = 10) -> list[CalibrationBin]:
    p, y = _as_arrays(preds, labels)
    if n_bins < 1:
        raise DataError("n_bins must be at least 1")
    sums = np.zeros(n_bins)
    hits = np.zeros(n_bins)
    counts = np.zeros(n_bins, dtype=np.int64)
    for pi, yi in zip(p, y):
        b = _bin_index(float(pi), n_bins)
        sums[b] += pi
        hits[b] += yi
        counts[b] += 1
    bins = []
    for b in range(n_bins):
        c = int(counts[b])
        bins.append(
            CalibrationBin(
                lower=b / n_bins,
                upper=(b + 1) / n_bins,
                count=c,
                mean_confidence=(sums[b] / c) if c else None,
                accuracy=(hits[b] / c) if c else None,
            )
        )
    return bins


def ece(preds, labels, n_bins: int = 10) -> float:
    """Bin-weighted mean absolute gap between confidence and accuracy."""
    bins = calibration_curve(preds, labels, n_bins)
    n = sum(b.count for b in bins)
    total = 0.0
    for b in bins:
        if b.count:
            total += b.count * abs(b.accuracy - b.mean_confidence)
    return total / n


def compute_report(preds, labels, n_bins: int = 10) -> MetricsReport:
    p, y = _as_arrays(preds, labels)
    return MetricsReport(
        log_loss=log_loss(p, y),
        roc_auc=roc_auc(p, y),
        ece=ece(p, y, n_bins),
        n_samples=int(p.size),
        bins=calibration_curve(p, y, n_bins),
    )


def evaluate(
    params: ModelParams,
    test_set: GraphDataset | list[GraphSample],
    n_bins: int = 10,
) -> MetricsReport:
    """Predict over the test set and compute all metrics."""
    samples = test_set.samples if isinstance(test_set, GraphDataset) else list(test_set)
    if not samples:
        raise DataError("test set is empty")
    preds = predict_many(params, samples)
    labels = np.array([s.label for s in samples], dtype=np.float64)
    return compute_report(preds, labels, n_bins)
