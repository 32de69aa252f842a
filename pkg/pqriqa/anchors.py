"""
Quality anchors - the M representative scores a PQR vector is spread over.

Provides:
- ScoreRange, AnchorSet, QuantizerReport dataclasses
- uniform_anchors(): midpoints of M equal-width bins
- lloyd_max(): Lloyd-Max mean-square quantizer fitted to training scores
- assign_bin(): half-open cell lookup (top edge inclusive)
- Text record round trip used inside checkpoints and manifests
"""

from dataclasses import dataclass, field

import numpy as np

from pqriqa.errors import DegenerateQuantizerError, InvalidParameterError, OutOfRangeError


UNIFORM = "uniform"
LLOYD_MAX = "lloyd_max"
ANCHOR_METHODS = (UNIFORM, LLOYD_MAX)

# Stopping rule for Lloyd iterations (absolute MSE change)
LLOYD_TOL = 1e-10
LLOYD_MAX_ITER = 1000
INIT_UNIFORM = "uniform"
INIT_OPTIMAL = "optimal_partition"

MIDPOINT_ATOL = 1e-9


# =============================================================================
# Data Classes
# =============================================================================

@dataclass(frozen=True)
class ScoreRange:
    """Closed score interval [lo, hi] all anchors live in."""
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)) or not self.lo < self.hi:
            raise InvalidParameterError(f"score range needs lo < hi, got [{self.lo}, {self.hi}]")

    def contains(self, y: float) -> bool:
        return self.lo <= y <= self.hi

    def normalize(self, y):
        """Map scores from this range onto [0, 1]."""
        return (np.asarray(y, dtype=np.float64) - self.lo) / (self.hi - self.lo)


@dataclass(frozen=True)
class AnchorSet:
    """Anchor centers c^m and interleaved decision boundaries b^m."""
    centers: tuple[float, ...]
    boundaries: tuple[float, ...]
    method: str
    range: ScoreRange = field(default_factory=ScoreRange)

    def __post_init__(self):
        object.__setattr__(self, "centers", tuple(float(c) for c in self.centers))
        object.__setattr__(self, "boundaries", tuple(float(b) for b in self.boundaries))
        self.validate()

    @property
    def m(self) -> int:
        return len(self.centers)

    def validate(self):
        """Check ordering, interleaving and (for lloyd_max) midpoint boundaries."""
        c = np.asarray(self.centers)
        b = np.asarray(self.boundaries)
        if self.method not in ANCHOR_METHODS:
            raise InvalidParameterError(f"unknown anchor method {self.method!r}")
        if c.size == 0:
            raise InvalidParameterError("anchor set needs at least one center")
        if b.size != c.size - 1:
            raise InvalidParameterError(
                f"{c.size} centers need {c.size - 1} boundaries, got {b.size}"
            )
        if np.any(np.diff(c) <= 0):
            raise InvalidParameterError("anchor centers must be strictly increasing")
        if c[0] < self.range.lo or c[-1] > self.range.hi:
            raise InvalidParameterError("anchor centers must lie within the score range")
        if b.size and not (np.all(c[:-1] < b) and np.all(b < c[1:])):
            raise InvalidParameterError("boundaries must interleave the centers")
        if self.method == LLOYD_MAX and b.size:
            if not np.allclose(b, (c[:-1] + c[1:]) / 2, rtol=0, atol=MIDPOINT_ATOL):
                raise InvalidParameterError("lloyd_max boundaries must be center midpoints")

    def to_record(self) -> str:
        """Serialize to a one-line text record (round-trips floats exactly)."""
        return ";".join([
            f"method={self.method}",
            f"lo={self.range.lo!r}",
            f"hi={self.range.hi!r}",
            "centers=" + ",".join(repr(c) for c in self.centers),
            "boundaries=" + ",".join(repr(b) for b in self.boundaries),
        ])

    @classmethod
    def from_record(cls, record: str) -> "AnchorSet":
        try:
            fields = dict(part.split("=", 1) for part in record.strip().split(";"))

            def floats(text):
                return tuple(float(v) for v in text.split(",")) if text else ()

            return cls(
                centers=floats(fields["centers"]),
                boundaries=floats(fields["boundaries"]),
                method=fields["method"],
                range=ScoreRange(float(fields["lo"]), float(fields["hi"])),
            )
        except (KeyError, ValueError) as e:
            if isinstance(e, InvalidParameterError):
                raise
            raise InvalidParameterError(f"malformed anchor record {record!r}: {e}") from e


@dataclass(frozen=True)
class QuantizerReport:
    """Outcome of a Lloyd-Max fit; `init` names the starting point of the reported run."""
    mse: float
    iterations: int
    converged: bool
    mse_history: tuple[float, ...] = ()
    init: str = INIT_UNIFORM


# =============================================================================
# Uniform Anchors
# =============================================================================

def uniform_anchors(range_: ScoreRange, m: int) -> AnchorSet:
    """Midpoints of M equal bins over the score range."""
    if m < 1:
        raise InvalidParameterError(f"need at least one anchor, got m={m}")
    span = range_.hi - range_.lo
    # multiply before dividing so decimal-looking anchors come out exact (3 * 1.0 / 10 == 0.3)
    centers = [range_.lo + (2 * i + 1) * span / (2 * m) for i in range(m)]
    boundaries = [range_.lo + i * span / m for i in range(1, m)]
    return AnchorSet(centers=tuple(centers), boundaries=tuple(boundaries),
                     method=UNIFORM, range=range_)


def assign_bin(anchors: AnchorSet, y: float) -> int:
    """
    1-based cell index m with b^{m-1} <= y < b^m.

    The lower range edge opens cell 1 and the upper edge belongs to cell M,
    so every in-range score is assigned.
    """
    if not anchors.range.contains(y):
        raise OutOfRangeError(
            f"score {y} outside [{anchors.range.lo}, {anchors.range.hi}]"
        )
    return int(np.searchsorted(anchors.boundaries, y, side="right")) + 1


# =============================================================================
# Lloyd-Max Quantizer
# =============================================================================

def _midpoints(centers: np.ndarray) -> np.ndarray:
    return (centers[:-1] + centers[1:]) / 2


def quantization_mse(scores: np.ndarray, centers: np.ndarray) -> float:
    """Mean-square error of nearest-center (midpoint boundary) quantization."""
    cells = np.searchsorted(_midpoints(centers), scores, side="right")
    return float(np.mean((scores - centers[cells]) ** 2))


def _optimal_partition_centers(scores: np.ndarray, m: int) -> np.ndarray:
    """
    Exact minimum-MSE contiguous partition of sorted scores into m cells.

    Dynamic program over distinct values weighted by multiplicity, so equal
    scores never straddle a cell boundary.
    """
    values, counts = np.unique(scores, return_counts=True)
    n = values.size
    w = np.concatenate([[0.0], np.cumsum(counts, dtype=np.float64)])
    s1 = np.concatenate([[0.0], np.cumsum(counts * values)])
    s2 = np.concatenate([[0.0], np.cumsum(counts * values ** 2)])

    def sse(i, j):
        # cost of values[i:j], i may be an array
        cnt = w[j] - w[i]
        tot = s1[j] - s1[i]
        return (s2[j] - s2[i]) - tot ** 2 / cnt

    cost = np.full((m + 1, n + 1), np.inf)
    split = np.zeros((m + 1, n + 1), dtype=np.int64)
    cost[0, 0] = 0.0
    for k in range(1, m + 1):
        for j in range(k, n + 1):
            i = np.arange(k - 1, j)
            total = cost[k - 1, i] + sse(i, j)
            best = int(np.argmin(total))
            cost[k, j] = total[best]
            split[k, j] = i[best]

    centers = np.empty(m)
    j = n
    for k in range(m, 0, -1):
        i = split[k, j]
        centers[k - 1] = (s1[j] - s1[i]) / (w[j] - w[i])
        j = i
    return centers


def _reseed_empty(scores: np.ndarray, centers: np.ndarray, empty: np.ndarray) -> np.ndarray:
    """
    Move each empty cell's center onto the score farthest from its current center.

    Scores already holding a center are skipped so centers stay distinct;
    m never exceeds the distinct score count, so a candidate always remains.
    """
    centers = centers.copy()
    for j in np.flatnonzero(empty):
        others = np.delete(centers, j)
        free = ~np.isin(scores, others)
        dist = np.where(free, np.abs(scores - centers[j]), -np.inf)
        centers[j] = scores[int(np.argmax(dist))]
    return np.sort(centers)


def _lloyd_iterate(scores: np.ndarray, init: np.ndarray, max_iter: int, tol: float):
    m = init.size
    centers = np.sort(np.asarray(init, dtype=np.float64))
    mse = quantization_mse(scores, centers)
    history = [mse]
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        cells = np.searchsorted(_midpoints(centers), scores, side="right")
        counts = np.bincount(cells, minlength=m)
        sums = np.bincount(cells, weights=scores, minlength=m)
        filled = counts > 0
        updated = centers.copy()
        updated[filled] = sums[filled] / counts[filled]
        if not filled.all():
            updated = _reseed_empty(scores, updated, ~filled)
        else:
            updated = np.sort(updated)
        new_mse = quantization_mse(scores, updated)
        centers = updated
        history.append(new_mse)
        if mse - new_mse < tol:
            converged = True
            break
        mse = new_mse
    return centers, tuple(history), iterations, converged


def lloyd_max(scores, m: int, max_iter: int = LLOYD_MAX_ITER, tol: float = LLOYD_TOL,
              range_: ScoreRange | None = None,
              exact: bool = False) -> tuple[AnchorSet, QuantizerReport]:
    """
    Fit M anchors to training scores by Lloyd-Max iteration.

    Alternates centroid updates (cell means) and boundary updates (center
    midpoints) until the MSE improves by less than `tol`, starting from the
    uniform anchor centers. The report describes that run.

    Lloyd iteration can stop at a local fixed point. With `exact=True` a
    second run starts from the exact 1-D optimal partition and the lower-MSE
    run is returned; `report.init` says which one.

    Args:
        scores: Training scores (normalized to [0, 1] unless range_ is given)
        m: Number of anchors
        max_iter: Iteration cap per run
        tol: Absolute MSE-change stopping threshold
        range_: Score range; defaults to [0, 1] widened to cover the scores
        exact: Also refine from the optimal partition and keep the better run

    Returns:
        Tuple of (AnchorSet, QuantizerReport)
    """
    y = np.sort(np.asarray(scores, dtype=np.float64).ravel())
    if y.size == 0:
        raise InvalidParameterError("lloyd_max needs at least one score")
    if m < 1:
        raise InvalidParameterError(f"need at least one anchor, got m={m}")
    if max_iter < 1 or tol < 0:
        raise InvalidParameterError("max_iter must be >= 1 and tol >= 0")
    if not np.all(np.isfinite(y)):
        raise InvalidParameterError("scores must be finite")
    distinct = np.unique(y).size
    if m > distinct:
        raise DegenerateQuantizerError(
            f"cannot place {m} anchors on {distinct} distinct score values"
        )
    if range_ is None:
        range_ = ScoreRange(min(0.0, float(y[0])), max(1.0, float(y[-1])))
    elif y[0] < range_.lo or y[-1] > range_.hi:
        raise OutOfRangeError(f"scores exceed range [{range_.lo}, {range_.hi}]")

    start = INIT_UNIFORM
    run = _lloyd_iterate(y, np.asarray(uniform_anchors(range_, m).centers), max_iter, tol)
    if exact:
        refined = _lloyd_iterate(y, _optimal_partition_centers(y, m), max_iter, tol)
        if refined[1][-1] < run[1][-1]:
            start, run = INIT_OPTIMAL, refined

    centers, history, iterations, converged = run
    anchors = AnchorSet(centers=tuple(centers), boundaries=tuple(_midpoints(centers)),
                        method=LLOYD_MAX, range=range_)
    return anchors, QuantizerReport(mse=float(history[-1]), iterations=iterations,
                                    converged=converged, mse_history=history, init=start)


def make_anchors(method: str, m: int, scores=None, range_: ScoreRange | None = None) -> AnchorSet:
    """Build anchors by name; lloyd_max needs the training scores."""
    range_ = range_ or ScoreRange()
    if method == UNIFORM:
        return uniform_anchors(range_, m)
    if method == LLOYD_MAX:
        if scores is None:
            raise InvalidParameterError("lloyd_max anchors need training scores")
        return lloyd_max(scores, m, range_=range_)[0]
    raise InvalidParameterError(f"unknown anchor method {method!r}")
