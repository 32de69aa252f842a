"""
PQR codec - scalar scores to probability vectors over quality anchors and back.

Provides:
- EncoderConfig, PqrVector, ReverseMapper dataclasses
- encode() / encode_batch() / encode_matrix(): soft assignment
  q^m = exp(-beta d(y, c^m)) / sum_i exp(-beta d(y, c^i))
- fit_reverse_map() / apply_reverse_map(): linear map h(q) back to a score
- kl_divergence(), cross_entropy(), entropy(): the probabilistic losses
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from pqriqa.anchors import AnchorSet, ScoreRange, uniform_anchors
from pqriqa.errors import (
    DivergentLossError,
    InvalidParameterError,
    OutOfRangeError,
    SingularFitError,
)


# Defaults selected by the beta/M parameter study
DEFAULT_BETA = 64.0
DEFAULT_M = 5
DEFAULT_RIDGE = 1e-8

SQUARED_EUCLIDEAN = "squared_euclidean"
L1 = "l1"
DISTANCES = (SQUARED_EUCLIDEAN, L1)

SUM_ATOL = 1e-9


# =============================================================================
# Data Classes
# =============================================================================

@dataclass(frozen=True)
class EncoderConfig:
    """Soft-mapping parameters: scaling constant beta, anchors, distance."""
    beta: float = DEFAULT_BETA
    anchors: AnchorSet = field(default_factory=lambda: uniform_anchors(ScoreRange(), DEFAULT_M))
    distance: str = SQUARED_EUCLIDEAN

    def __post_init__(self):
        if not np.isfinite(self.beta) or self.beta <= 0:
            raise InvalidParameterError(f"beta must be positive, got {self.beta}")
        if self.distance not in DISTANCES:
            raise InvalidParameterError(f"unknown distance {self.distance!r}")

    @property
    def m(self) -> int:
        return self.anchors.m


@dataclass(frozen=True)
class PqrVector:
    """Probability vector over M quality anchors."""
    probs: tuple[float, ...]

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1 or p.size == 0:
            raise InvalidParameterError("PQR vector must be a non-empty 1-D sequence")
        if np.any(p < 0) or np.any(p > 1) or abs(p.sum() - 1.0) > SUM_ATOL:
            raise InvalidParameterError(f"not a probability vector: {self.probs}")
        object.__setattr__(self, "probs", tuple(float(v) for v in p))

    @property
    def m(self) -> int:
        return len(self.probs)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=np.float64)


@dataclass(frozen=True)
class ReverseMapper:
    """Linear map h(q) = weights . q + bias, clamped to the score range."""
    weights: tuple[float, ...]
    bias: float
    fit_mae: float = 0.0
    range: ScoreRange = field(default_factory=ScoreRange)

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if self.fit_mae < 0:
            raise InvalidParameterError("fit_mae must be non-negative")

    @property
    def m(self) -> int:
        return len(self.weights)

    def to_record(self) -> str:
        return ";".join([
            "weights=" + ",".join(repr(w) for w in self.weights),
            f"bias={self.bias!r}",
            f"fit_mae={self.fit_mae!r}",
            f"lo={self.range.lo!r}",
            f"hi={self.range.hi!r}",
        ])

    @classmethod
    def from_record(cls, record: str) -> "ReverseMapper":
        try:
            fields = dict(part.split("=", 1) for part in record.strip().split(";"))
            return cls(
                weights=tuple(float(v) for v in fields["weights"].split(",")),
                bias=float(fields["bias"]),
                fit_mae=float(fields["fit_mae"]),
                range=ScoreRange(float(fields["lo"]), float(fields["hi"])),
            )
        except (KeyError, ValueError) as e:
            raise InvalidParameterError(f"malformed mapper record {record!r}: {e}") from e


# =============================================================================
# Encoding
# =============================================================================

def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def _distances(ys: np.ndarray, centers: np.ndarray, distance: str) -> np.ndarray:
    diff = ys[:, None] - centers[None, :]
    if distance == L1:
        return np.abs(diff)
    return diff ** 2


def encode_matrix(ys, cfg: EncoderConfig) -> np.ndarray:
    """Encode many scores at once into an (N, M) array of PQR rows."""
    ys = np.asarray(ys, dtype=np.float64).ravel()
    rng = cfg.anchors.range
    bad = np.flatnonzero(~((ys >= rng.lo) & (ys <= rng.hi)))
    if bad.size:
        i = int(bad[0])
        raise OutOfRangeError(f"score {ys[i]} at index {i} outside [{rng.lo}, {rng.hi}]", index=i)
    d = _distances(ys, np.asarray(cfg.anchors.centers), cfg.distance)
    return softmax(-cfg.beta * d)


def encode(y: float, cfg: EncoderConfig) -> PqrVector:
    """Soft-map one score onto the anchors."""
    try:
        row = encode_matrix([y], cfg)[0]
    except OutOfRangeError as e:
        raise OutOfRangeError(str(e).replace(" at index 0", "")) from None
    return PqrVector(tuple(row))


def encode_batch(ys, cfg: EncoderConfig) -> list[PqrVector]:
    """Elementwise encode; errors name the offending index."""
    return [PqrVector(tuple(row)) for row in encode_matrix(ys, cfg)] if len(ys) else []


# =============================================================================
# Reverse Mapping
# =============================================================================

def _as_matrix(pqrs) -> np.ndarray:
    if isinstance(pqrs, np.ndarray):
        return np.atleast_2d(np.asarray(pqrs, dtype=np.float64))
    rows = [p.as_array() if isinstance(p, PqrVector) else np.asarray(p, dtype=np.float64)
            for p in pqrs]
    if not rows:
        return np.zeros((0, 0))
    if len({r.size for r in rows}) != 1:
        raise InvalidParameterError("PQR vectors have inconsistent dimensions")
    return np.vstack(rows)


def fit_reverse_map(pqrs, ys, ridge: float = DEFAULT_RIDGE,
                    range_: ScoreRange | None = None) -> ReverseMapper:
    """
    Least-squares fit of h(q) = w . q + b to (PQR, score) pairs.

    Minimizes mean (h(q_n) - y_n)^2 + ridge * |w|^2 (bias unpenalized).
    PQR rows sum to one, so the unregularized system is always rank
    deficient together with the bias column; ridge must then be > 0.

    Args:
        pqrs: PqrVectors or an (N, M) array
        ys: Target scores
        ridge: Non-negative penalty on the weights
        range_: Score range predictions are clamped to (default [0, 1])

    Returns:
        ReverseMapper with its training mean absolute error
    """
    q = _as_matrix(pqrs)
    y = np.asarray(ys, dtype=np.float64).ravel()
    if q.shape[0] == 0 or q.shape[0] != y.size:
        raise InvalidParameterError(
            f"need equal, non-zero numbers of PQR vectors and scores ({q.shape[0]} vs {y.size})"
        )
    if ridge < 0:
        raise InvalidParameterError(f"ridge must be non-negative, got {ridge}")
    range_ = range_ or ScoreRange()

    n, m = q.shape
    x = np.hstack([q, np.ones((n, 1))])
    if ridge == 0 and np.linalg.matrix_rank(x) < m + 1:
        raise SingularFitError(
            "reverse-map normal equations are rank deficient; use ridge > 0"
        )
    penalty = np.full(m + 1, ridge)
    penalty[-1] = 0.0
    a = x.T @ x / n + np.diag(penalty)
    rhs = x.T @ y / n
    try:
        theta = linalg.solve(a, rhs, assume_a="sym")
    except linalg.LinAlgError as e:
        raise SingularFitError(f"reverse-map fit failed: {e}; use ridge > 0") from e
    if not np.all(np.isfinite(theta)):
        raise SingularFitError("reverse-map fit produced non-finite weights; use ridge > 0")

    mapper = ReverseMapper(weights=tuple(theta[:-1]), bias=float(theta[-1]), range=range_)
    mae = float(np.mean(np.abs(apply_reverse_map_matrix(mapper, q) - y)))
    return ReverseMapper(weights=mapper.weights, bias=mapper.bias, fit_mae=mae, range=range_)


def apply_reverse_map_matrix(mapper: ReverseMapper, q: np.ndarray) -> np.ndarray:
    """Vectorized h(.) over (N, M) rows."""
    q = np.atleast_2d(np.asarray(q, dtype=np.float64))
    if q.shape[1] != mapper.m:
        raise InvalidParameterError(
            f"PQR dimension {q.shape[1]} does not match mapper dimension {mapper.m}"
        )
    raw = q @ np.asarray(mapper.weights) + mapper.bias
    return np.clip(raw, mapper.range.lo, mapper.range.hi)


def apply_reverse_map(mapper: ReverseMapper, q: PqrVector) -> float:
    """Map a PQR vector to a scalar score."""
    arr = q.as_array() if isinstance(q, PqrVector) else np.asarray(q, dtype=np.float64)
    return float(apply_reverse_map_matrix(mapper, arr[None, :])[0])


# =============================================================================
# Losses
# =============================================================================

def _pair(target, pred) -> tuple[np.ndarray, np.ndarray]:
    t = target.as_array() if isinstance(target, PqrVector) else np.asarray(target, dtype=np.float64)
    p = pred.as_array() if isinstance(pred, PqrVector) else np.asarray(pred, dtype=np.float64)
    if t.shape != p.shape:
        raise InvalidParameterError(f"dimension mismatch: {t.shape} vs {p.shape}")
    if np.any((p <= 0) & (t > 0)):
        raise DivergentLossError("prediction assigns zero probability where the target has mass")
    return t, p


def entropy(target) -> float:
    """Shannon entropy with 0 log 0 = 0."""
    t = target.as_array() if isinstance(target, PqrVector) else np.asarray(target, dtype=np.float64)
    mask = t > 0
    return float(-np.sum(t[mask] * np.log(t[mask])))


def kl_divergence(target, pred) -> float:
    """D_KL(target || pred)."""
    t, p = _pair(target, pred)
    mask = t > 0
    return max(0.0, float(np.sum(t[mask] * (np.log(t[mask]) - np.log(p[mask])))))


def cross_entropy(target, pred) -> float:
    """-sum target log pred; equals kl_divergence + entropy(target)."""
    t, p = _pair(target, pred)
    mask = t > 0
    return float(-np.sum(t[mask] * np.log(p[mask])))
