"""
Correlation metrics and patch pooling for quality predictions.

SRCC is Pearson's correlation of average ranks, so ties share their mean
rank. PLCC is computed on raw predictions (no logistic remapping).
"""

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from pqriqa.errors import InvalidParameterError, UndefinedCorrelationError


@dataclass(frozen=True)
class MetricPair:
    srcc: float
    plcc: float

    def __post_init__(self):
        for name in ("srcc", "plcc"):
            v = getattr(self, name)
            if not np.isfinite(v) or abs(v) > 1.0:
                raise InvalidParameterError(f"{name} must be finite and in [-1, 1], got {v}")

    def __str__(self):
        return f"SRCC={self.srcc:.4f} PLCC={self.plcc:.4f}"


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size != b.size:
        raise InvalidParameterError(f"length mismatch: {a.size} vs {b.size}")
    if a.size < 2:
        raise InvalidParameterError("correlation needs at least two values")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise InvalidParameterError("correlation inputs must be finite")
    return a, b


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    da = a - a.mean()
    db = b - b.mean()
    va = float(np.dot(da, da))
    vb = float(np.dot(db, db))
    if va == 0.0 or vb == 0.0:
        raise UndefinedCorrelationError("correlation is undefined for constant input")
    r = float(np.dot(da, db)) / np.sqrt(va * vb)
    return float(np.clip(r, -1.0, 1.0))


def plcc(a, b) -> float:
    """Pearson linear correlation coefficient."""
    return _pearson(*_pair(a, b))


def srcc(a, b) -> float:
    """Spearman rank correlation coefficient with average ranks for ties."""
    a, b = _pair(a, b)
    return _pearson(rankdata(a, method="average"), rankdata(b, method="average"))


def metric_pair(pred, truth) -> MetricPair:
    return MetricPair(srcc=srcc(pred, truth), plcc=plcc(pred, truth))


def pool_average(patch_scores) -> float:
    """Whole-image score as the mean of its patch scores."""
    scores = np.asarray(patch_scores, dtype=np.float64).ravel()
    if scores.size == 0:
        raise InvalidParameterError("cannot pool an empty set of patch scores")
    return float(scores.mean())
