"""
Experiment harness - content-disjoint splits, evaluation and PQR vs SQR runs.

Protocol per repetition: split the sources, fit anchors (lloyd_max) and the
reverse mapper on the training scores only, train on the recorded random
crops, and after every epoch score each test image as the average of its
grid-patch predictions. Reports aggregate medians over repetitions.

Provides:
- ExperimentConfig, ExperimentReport, ComparisonReport, SweepTable
- split_by_content(): seeded source-level partition
- evaluate_model(): checkpoint -> MetricPair + per-image predictions
- per_kind_metrics(): per-distortion diagnostic breakdown
- run_experiment(): repeated train/evaluate with medians
- sweep(): beta and M grids
- compare(): both heads on identical splits
- convergence_epoch(): first epoch reaching a fraction of the final SRCC
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from pqriqa.anchors import ANCHOR_METHODS, LLOYD_MAX, UNIFORM, AnchorSet, make_anchors
from pqriqa.checkpoint import Checkpoint, load_checkpoint
from pqriqa.codec import (
    DEFAULT_BETA,
    DEFAULT_M,
    DEFAULT_RIDGE,
    SQUARED_EUCLIDEAN,
    EncoderConfig,
    ReverseMapper,
    apply_reverse_map_matrix,
    encode_matrix,
    fit_reverse_map,
)
from pqriqa.errors import (
    CorruptCheckpointError,
    InvalidParameterError,
    PqrError,
    UndefinedCorrelationError,
)
from pqriqa.fileio import csv_text
from pqriqa.lab import extract_patches
from pqriqa.manifest import TEST, TRAIN, VAL, DatasetManifest, ImageRecord, read_manifest
from pqriqa.metrics import MetricPair, metric_pair, pool_average
from pqriqa.network import (
    DROPOUT_RATE,
    HEADS,
    PQR,
    SQR,
    Network,
    TrainConfig,
    arch_preset,
    build,
    predict_patches,
    train,
)


SPLIT_FRACTIONS = (0.8, 0.2)
SELECTION_FRACTIONS = (0.6, 0.2, 0.2)
REPETITIONS = 10
CONVERGENCE_FRACTION = 0.95

BETA_GRID = tuple(float(2 ** s) for s in range(10))
M_GRID = tuple(range(2, 11))
SWEEP_PARAMETERS = ("beta", "m")


# =============================================================================
# Configuration
# =============================================================================

@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment varies; identical configs give identical reports."""
    manifest: Path
    head: str = PQR
    beta: float = DEFAULT_BETA
    m: int = DEFAULT_M
    anchor_method: str = UNIFORM
    distance: str = SQUARED_EUCLIDEAN
    ridge: float = DEFAULT_RIDGE
    arch: str = "desk"
    dropout_rate: float = DROPOUT_RATE
    train: TrainConfig = field(default_factory=TrainConfig)
    fractions: tuple[float, ...] = SPLIT_FRACTIONS
    repetitions: int = REPETITIONS
    stride: Optional[int] = None
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "manifest", Path(self.manifest))
        object.__setattr__(self, "fractions", tuple(float(f) for f in self.fractions))
        if self.head not in HEADS:
            raise InvalidParameterError(f"unknown head {self.head!r}")
        if self.anchor_method not in ANCHOR_METHODS:
            raise InvalidParameterError(f"unknown anchor method {self.anchor_method!r}")
        if len(self.fractions) not in (2, 3) or any(f <= 0 for f in self.fractions):
            raise InvalidParameterError("fractions must be 2 (train/test) or 3 (train/val/test) positive values")
        if sum(self.fractions) > 1 + 1e-9:
            raise InvalidParameterError(f"split fractions sum to {sum(self.fractions)} > 1")
        if self.repetitions < 1:
            raise InvalidParameterError("repetitions must be >= 1")
        if self.stride is not None and self.stride < 1:
            raise InvalidParameterError("stride must be positive")
        if self.workers < 1:
            raise InvalidParameterError("workers must be >= 1")

    @property
    def has_val(self) -> bool:
        return len(self.fractions) == 3

    def arch_config(self):
        return arch_preset(self.arch, head=self.head, m=self.m, dropout_rate=self.dropout_rate)

    def encoder_for(self, train_scores) -> Optional[EncoderConfig]:
        """Encoder with anchors fit on the training scores (pqr head only)."""
        if self.head != PQR:
            return None
        anchors = make_anchors(self.anchor_method, self.m, scores=train_scores)
        return EncoderConfig(beta=self.beta, anchors=anchors, distance=self.distance)

    def seeds(self) -> dict:
        return {"seed": self.seed, "train_seed": self.train.seed}


def repetition_seeds(seed: int, repetition: int) -> tuple[int, int, int]:
    """(split, init, train) seeds; independent of head and schedule."""
    split, init, train_ = np.random.SeedSequence([int(seed), int(repetition)]).generate_state(3)
    return int(split), int(init), int(train_)


# =============================================================================
# Splits
# =============================================================================

def split_by_content(manifest: DatasetManifest, fractions=SPLIT_FRACTIONS,
                     seed: int = 0) -> DatasetManifest:
    """
    Partition source ids into train/test (or train/val/test) with a seed.

    Every distorted version of a source lands in the same split. Split
    sizes are floored cumulatively, so they never exceed the source count.
    """
    fractions = tuple(float(f) for f in fractions)
    names = (TRAIN, TEST) if len(fractions) == 2 else (TRAIN, VAL, TEST)
    if len(fractions) not in (2, 3) or any(f < 0 for f in fractions):
        raise InvalidParameterError("fractions must be 2 or 3 non-negative values")
    if sum(fractions) > 1 + 1e-9:
        raise InvalidParameterError(f"split fractions sum to {sum(fractions)} > 1")

    sources = manifest.source_ids()
    n = len(sources)
    bounds = [0] + [min(n, int(np.floor(c * n + 1e-9))) for c in np.cumsum(fractions)]
    order = np.random.default_rng(seed).permutation(n)
    assignment = {}
    for name, lo, hi in zip(names, bounds[:-1], bounds[1:]):
        if hi <= lo:
            raise InvalidParameterError(
                f"{n} sources cannot fill split {name!r} with fractions {fractions}"
            )
        for i in order[lo:hi]:
            assignment[sources[i]] = name
    return manifest.with_splits(assignment, {"split_seed": int(seed), "fractions": list(fractions)})


# =============================================================================
# Evaluation
# =============================================================================

@dataclass(frozen=True)
class ImagePrediction:
    image_id: str
    kind: str
    mos: float
    predicted: float
    patches: int


@dataclass
class EvaluationResult:
    metrics: MetricPair
    predictions: list[ImagePrediction]

    def csv(self) -> str:
        rows = [(p.image_id, p.kind, p.mos, p.predicted, p.patches) for p in self.predictions]
        return csv_text(["image_id", "kind", "mos", "predicted", "patches"], rows)


@dataclass
class EvalSet:
    """Grid patches of a fixed image list, stacked once and scored per epoch."""
    images: list[ImageRecord]
    patches: np.ndarray
    counts: np.ndarray

    @property
    def mos(self) -> np.ndarray:
        return np.array([rec.mos for rec in self.images])


def build_eval_set(manifest: DatasetManifest, images: list[ImageRecord], size: int,
                   stride: Optional[int] = None, cache: Optional[dict] = None) -> EvalSet:
    stacks, counts = [], []
    for rec in images:
        if cache is None:
            pixels = manifest.load_image(rec)
        else:
            if rec.image_id not in cache:
                cache[rec.image_id] = manifest.load_image(rec)
            pixels = cache[rec.image_id]
        crops = extract_patches(pixels, size, "grid", stride=stride or size, image_id=rec.image_id)
        stacks.append(np.stack([c.pixels for c in crops]))
        counts.append(len(crops))
    patches = np.concatenate(stacks) if stacks else np.zeros((0, size, size, 3))
    return EvalSet(images=list(images), patches=patches, counts=np.array(counts, dtype=int))


def score_images(net: Network, mapper: Optional[ReverseMapper], eval_set: EvalSet) -> np.ndarray:
    """Per-image pooled scores: patch predictions, reverse-mapped for pqr, averaged."""
    out = predict_patches(net, eval_set.patches)
    if net.arch.head == PQR:
        if mapper is None:
            raise InvalidParameterError("pqr predictions need a reverse mapper")
        out = apply_reverse_map_matrix(mapper, out)
    bounds = np.concatenate([[0], np.cumsum(eval_set.counts)])
    return np.array([pool_average(out[lo:hi]) for lo, hi in zip(bounds[:-1], bounds[1:])])


def evaluate_model(checkpoint, manifest, split: str = TEST, stride: Optional[int] = None,
                   head: Optional[str] = None, m: Optional[int] = None) -> EvaluationResult:
    """
    Score every image of a manifest split with a trained checkpoint.

    Args:
        checkpoint: Checkpoint or path to one
        manifest: DatasetManifest or path (any lab, so cross-dataset works)
        split: "train", "val", "test" or "all"
        stride: Grid stride (default: patch size, non-overlapping)
        head: When given, must match the checkpoint's head
        m: When given, must match the checkpoint's anchor count

    Returns:
        EvaluationResult with SRCC/PLCC against the manifest MOS
    """
    ckpt = checkpoint if isinstance(checkpoint, Checkpoint) else load_checkpoint(checkpoint)
    man = manifest if isinstance(manifest, DatasetManifest) else read_manifest(manifest)
    if head is not None and head != ckpt.head:
        raise InvalidParameterError(f"checkpoint has a {ckpt.head} head, {head} was requested")
    if ckpt.head == PQR:
        if ckpt.mapper is None:
            raise CorruptCheckpointError("pqr checkpoint has no reverse mapper")
        if m is not None and m != ckpt.net.arch.m:
            raise InvalidParameterError(f"checkpoint has M={ckpt.net.arch.m}, M={m} was requested")
    images = man.select(split)
    if len(images) < 2:
        raise InvalidParameterError(f"split {split!r} has {len(images)} images; need at least 2")
    eval_set = build_eval_set(man, images, ckpt.net.arch.input_size, stride)
    scores = score_images(ckpt.net, ckpt.mapper, eval_set)
    predictions = [
        ImagePrediction(image_id=rec.image_id, kind=rec.kind, mos=rec.mos,
                        predicted=float(s), patches=int(c))
        for rec, s, c in zip(images, scores, eval_set.counts)
    ]
    return EvaluationResult(metrics=metric_pair(scores, eval_set.mos), predictions=predictions)


def per_kind_metrics(predictions: list[ImagePrediction]) -> dict[str, MetricPair]:
    """SRCC/PLCC per distortion kind; kinds with < 2 images or constant scores are skipped."""
    by_kind: dict[str, list[ImagePrediction]] = {}
    for p in predictions:
        by_kind.setdefault(p.kind, []).append(p)
    out = {}
    for kind in sorted(by_kind):
        group = by_kind[kind]
        if len(group) < 2:
            continue
        try:
            out[kind] = metric_pair([p.predicted for p in group], [p.mos for p in group])
        except UndefinedCorrelationError:
            continue
    return out


def convergence_epoch(srcc_trace, fraction: float = CONVERGENCE_FRACTION) -> int:
    """First 1-based epoch whose SRCC reaches `fraction` of the final SRCC."""
    trace = np.asarray(srcc_trace, dtype=np.float64)
    if trace.size == 0:
        raise InvalidParameterError("empty SRCC trace")
    if not 0 < fraction <= 1:
        raise InvalidParameterError(f"fraction must be in (0, 1], got {fraction}")
    target = fraction * trace[-1]
    hits = np.flatnonzero(trace >= target)
    return int(hits[0]) + 1 if hits.size else int(trace.size)


# =============================================================================
# Experiments
# =============================================================================

@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    loss: float
    test: MetricPair
    val: Optional[MetricPair] = None


@dataclass
class RepetitionResult:
    repetition: int
    split_seed: int
    train_sources: list[str]
    test_sources: list[str]
    epochs: list[EpochMetrics]
    anchors: Optional[AnchorSet] = None
    mapper: Optional[ReverseMapper] = None

    def trace(self, metric: str = "srcc", split: str = TEST) -> np.ndarray:
        return np.array([getattr(e.test if split == TEST else e.val, metric) for e in self.epochs])

    def selected_epoch(self) -> int:
        """Epoch with best validation SRCC (last epoch without a validation split)."""
        if self.epochs[0].val is None:
            return len(self.epochs)
        return int(np.argmax(self.trace("srcc", VAL))) + 1


def _safe_metrics(pred: np.ndarray, truth: np.ndarray) -> MetricPair:
    # collapsed networks predict a constant; no ranking information
    try:
        return metric_pair(pred, truth)
    except UndefinedCorrelationError:
        return MetricPair(srcc=0.0, plcc=0.0)


@dataclass
class ExperimentReport:
    """Per-repetition per-epoch metrics of one head with median aggregates."""
    config: ExperimentConfig
    runs: list[RepetitionResult]

    @property
    def head(self) -> str:
        return self.config.head

    @property
    def has_val(self) -> bool:
        return self.runs[0].epochs[0].val is not None

    def matrix(self, metric: str = "srcc", split: str = TEST) -> np.ndarray:
        """(repetitions, epochs) array of one metric."""
        return np.vstack([r.trace(metric, split) for r in self.runs])

    def median_by_epoch(self, metric: str = "srcc", split: str = TEST) -> np.ndarray:
        return np.median(self.matrix(metric, split), axis=0)

    def std_by_epoch(self, metric: str = "srcc", split: str = TEST) -> np.ndarray:
        return np.std(self.matrix(metric, split), axis=0)

    def best_epoch_median(self, metric: str = "srcc", split: str = TEST) -> float:
        """Best median among all epochs."""
        return float(np.max(self.median_by_epoch(metric, split)))

    def final_median(self, metric: str = "srcc", split: str = TEST) -> float:
        return float(self.median_by_epoch(metric, split)[-1])

    def final_std(self, metric: str = "srcc", split: str = TEST) -> float:
        return float(self.std_by_epoch(metric, split)[-1])

    def selected_median(self, metric: str = "srcc") -> float:
        """Median test metric at each repetition's best-validation epoch."""
        vals = [getattr(r.epochs[r.selected_epoch() - 1].test, metric) for r in self.runs]
        return float(np.median(vals))

    def convergence_epochs(self, fraction: float = CONVERGENCE_FRACTION) -> list[int]:
        return [convergence_epoch(r.trace("srcc"), fraction) for r in self.runs]

    def median_convergence_epoch(self, fraction: float = CONVERGENCE_FRACTION) -> float:
        return float(np.median(self.convergence_epochs(fraction)))

    def split_seeds(self) -> list[int]:
        return [r.split_seed for r in self.runs]

    def csv(self) -> str:
        header = ["repetition", "epoch", "loss", "srcc", "plcc"]
        if self.has_val:
            header += ["val_srcc", "val_plcc"]
        rows = []
        for r in self.runs:
            for e in r.epochs:
                row = [r.repetition, e.epoch, e.loss, e.test.srcc, e.test.plcc]
                if e.val is not None:
                    row += [e.val.srcc, e.val.plcc]
                rows.append(row)
        return csv_text(header, rows)

    def summary_rows(self) -> list[tuple]:
        """(head, metric, best-epoch median, final median, final std) rows."""
        return [(self.head, metric, self.best_epoch_median(metric), self.final_median(metric),
                 self.final_std(metric)) for metric in ("srcc", "plcc")]

    def summary_text(self) -> str:
        cfg = self.config
        lines = [
            f"head={cfg.head} arch={cfg.arch} repetitions={len(self.runs)} "
            f"epochs={cfg.train.epochs} seed={cfg.seed} train_seed={cfg.train.seed}",
            f"split_seeds={','.join(str(s) for s in self.split_seeds())}",
        ]
        if cfg.head == PQR:
            lines.append(f"beta={cfg.beta!r} M={cfg.m} anchors={cfg.anchor_method}")
        for head, metric, best, final, std in self.summary_rows():
            lines.append(f"{metric.upper()}: best-epoch median={best:.4f} "
                         f"final median={final:.4f} std={std:.4f}")
        if self.has_val:
            lines.append(f"selected (best val epoch): SRCC={self.selected_median('srcc'):.4f} "
                         f"PLCC={self.selected_median('plcc'):.4f}")
        lines.append(f"convergence epoch (median, {CONVERGENCE_FRACTION:.0%} of final SRCC): "
                     f"{self.median_convergence_epoch():g}")
        return "\n".join(lines) + "\n"


def training_set(manifest: DatasetManifest, images: list[ImageRecord], size: int,
                  cache: dict) -> tuple[np.ndarray, np.ndarray]:
    """Recorded random crops of the training images with inherited MOS labels."""
    xs, ys = [], []
    for rec in images:
        records = manifest.patches_for(rec.image_id, "random")
        if not records:
            continue
        if rec.image_id not in cache:
            cache[rec.image_id] = manifest.load_image(rec)
        pixels = cache[rec.image_id]
        for p in records:
            if p.size != size:
                raise InvalidParameterError(
                    f"patch size {p.size} in manifest does not match network input {size}"
                )
            xs.append(pixels[p.row:p.row + size, p.col:p.col + size])
            ys.append(rec.mos)
    if not xs:
        raise InvalidParameterError("training split has no recorded patches")
    return np.stack(xs), np.array(ys)


def _run_repetition(cfg: ExperimentConfig, manifest: DatasetManifest, rep: int, cache: dict,
                    verbose: bool) -> RepetitionResult:
    split_seed, init_seed, train_seed = repetition_seeds(cfg.seed, rep)
    labeled = split_by_content(manifest, cfg.fractions, split_seed)
    arch = cfg.arch_config()
    train_imgs = labeled.select(TRAIN)
    train_scores = np.array([rec.mos for rec in train_imgs])

    encoder = cfg.encoder_for(train_scores)
    mapper = None
    if encoder is not None:
        mapper = fit_reverse_map(encode_matrix(train_scores, encoder), train_scores, cfg.ridge)

    x, y = training_set(labeled, train_imgs, arch.input_size, cache)
    test_set = build_eval_set(labeled, labeled.select(TEST), arch.input_size, cfg.stride, cache)
    val_set = (build_eval_set(labeled, labeled.select(VAL), arch.input_size, cfg.stride, cache)
               if cfg.has_val else None)

    per_epoch = []

    def on_epoch(epoch, net):
        test = _safe_metrics(score_images(net, mapper, test_set), test_set.mos)
        val = _safe_metrics(score_images(net, mapper, val_set), val_set.mos) if val_set else None
        per_epoch.append((test, val))
        if verbose:
            print(f"  rep {rep} epoch {epoch:3d}: test {test}")

    tcfg = replace(cfg.train, seed=train_seed)
    _, trace = train(build(arch, init_seed), x, y, tcfg, encoder=encoder, epoch_callback=on_epoch)

    split_src = labeled.split_sources()
    epochs = [EpochMetrics(epoch=t.epoch, loss=t.mean_loss, test=test, val=val)
              for t, (test, val) in zip(trace, per_epoch)]
    return RepetitionResult(
        repetition=rep,
        split_seed=split_seed,
        train_sources=sorted(split_src.get(TRAIN, ())),
        test_sources=sorted(split_src.get(TEST, ())),
        epochs=epochs,
        anchors=encoder.anchors if encoder else None,
        mapper=mapper,
    )


def _tag_repetition(e: PqrError, rep: int) -> PqrError:
    e.args = (f"repetition {rep}: {e.args[0] if e.args else e}",) + tuple(e.args[1:])
    e.repetition = rep
    return e


def run_experiment(cfg: ExperimentConfig, manifest: Optional[DatasetManifest] = None,
                   verbose: bool = False) -> ExperimentReport:
    """
    Repeat split/train/evaluate cfg.repetitions times.

    Each repetition derives its seeds from (cfg.seed, repetition), so
    reports do not depend on cfg.workers or on the head being trained.
    """
    manifest = manifest or read_manifest(cfg.manifest)
    cache: dict = {}

    def one(rep):
        try:
            return _run_repetition(cfg, manifest, rep, cache, verbose)
        except PqrError as e:
            raise _tag_repetition(e, rep)

    if verbose:
        print(f"Running {cfg.repetitions} repetition(s), head={cfg.head}, seed={cfg.seed}")
    if cfg.workers > 1:
        # warm the shared image cache so worker threads only read it
        for rec in manifest.images:
            cache[rec.image_id] = manifest.load_image(rec)
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            runs = list(pool.map(one, range(cfg.repetitions)))
    else:
        runs = [one(rep) for rep in range(cfg.repetitions)]
    return ExperimentReport(config=cfg, runs=runs)


# =============================================================================
# Sweeps and Comparisons
# =============================================================================

@dataclass(frozen=True)
class SweepRow:
    parameter: str
    method: str
    value: float
    srcc: float
    plcc: float


@dataclass
class SweepTable:
    parameter: str
    selection_split: str
    rows: list[SweepRow]

    def csv(self) -> str:
        return csv_text(["parameter", "method", "value", "srcc", "plcc"],
                        [(r.parameter, r.method, r.value, r.srcc, r.plcc) for r in self.rows])


def sweep(cfg: ExperimentConfig, parameter: str, values=None, methods=None,
          manifest: Optional[DatasetManifest] = None, verbose: bool = False) -> SweepTable:
    """
    One run_experiment per grid point.

    beta: values default to 2^0..2^9 with cfg's anchor method.
    m: values default to 2..10, once per anchor method in `methods`
    (default both uniform and lloyd_max).

    Rows hold best-epoch medians on the validation split when cfg has one,
    otherwise on the test split.
    """
    if cfg.head != PQR:
        raise InvalidParameterError("sweeps vary PQR parameters and need the pqr head")
    if parameter not in SWEEP_PARAMETERS:
        raise InvalidParameterError(f"unknown sweep parameter {parameter!r}")
    if values is None:
        values = BETA_GRID if parameter == "beta" else M_GRID
    values = list(values)
    if not values:
        raise InvalidParameterError("sweep grid is empty")
    if parameter == "beta":
        methods = [cfg.anchor_method]
    else:
        methods = list(methods) if methods is not None else [UNIFORM, LLOYD_MAX]
        if not methods:
            raise InvalidParameterError("sweep needs at least one anchor method")

    manifest = manifest or read_manifest(cfg.manifest)
    split = VAL if cfg.has_val else TEST
    rows = []
    for method in methods:
        for value in values:
            point = (replace(cfg, beta=float(value), anchor_method=method) if parameter == "beta"
                     else replace(cfg, m=int(value), anchor_method=method))
            if verbose:
                print(f"--- {parameter}={value} ({method}) ---")
            report = run_experiment(point, manifest, verbose=verbose)
            rows.append(SweepRow(parameter=parameter, method=method, value=float(value),
                                 srcc=report.best_epoch_median("srcc", split),
                                 plcc=report.best_epoch_median("plcc", split)))
    return SweepTable(parameter=parameter, selection_split=split, rows=rows)


@dataclass
class ComparisonReport:
    """PQR and SQR reports trained on identical splits and seeds."""
    pqr: ExperimentReport
    sqr: ExperimentReport

    @property
    def reports(self) -> tuple[ExperimentReport, ExperimentReport]:
        return self.pqr, self.sqr

    def split_seeds_match(self) -> bool:
        return self.pqr.split_seeds() == self.sqr.split_seeds()

    def table_csv(self) -> str:
        rows = [row for rep in self.reports for row in rep.summary_rows()]
        return csv_text(["head", "metric", "best_epoch_median", "final_median", "final_std"], rows)

    def epochs_csv(self) -> str:
        rows = []
        for rep in self.reports:
            med_s, med_p = rep.median_by_epoch("srcc"), rep.median_by_epoch("plcc")
            std_s = rep.std_by_epoch("srcc")
            for i in range(med_s.size):
                rows.append((rep.head, i + 1, float(med_s[i]), float(med_p[i]), float(std_s[i])))
        return csv_text(["head", "epoch", "median_srcc", "median_plcc", "std_srcc"], rows)

    def convergence(self) -> dict[str, float]:
        return {rep.head: rep.median_convergence_epoch() for rep in self.reports}

    def summary_text(self) -> str:
        conv = self.convergence()
        lines = [
            f"seed={self.pqr.config.seed} train_seed={self.pqr.config.train.seed} "
            f"split_seeds_identical={'yes' if self.split_seeds_match() else 'no'}",
            f"split_seeds={','.join(str(s) for s in self.pqr.split_seeds())}",
            f"{'head':<6}{'metric':<8}{'best median':>14}{'final median':>14}{'std':>10}",
        ]
        for rep in self.reports:
            for head, metric, best, final, std in rep.summary_rows():
                lines.append(f"{head:<6}{metric:<8}{best:>14.4f}{final:>14.4f}{std:>10.4f}")
        lines.append(f"convergence epoch (median): pqr={conv[PQR]:g} sqr={conv[SQR]:g}")
        return "\n".join(lines) + "\n"


def compare(cfg: ExperimentConfig, manifest: Optional[DatasetManifest] = None,
            verbose: bool = False) -> ComparisonReport:
    """Run both heads with every other setting held constant."""
    manifest = manifest or read_manifest(cfg.manifest)
    pqr = run_experiment(replace(cfg, head=PQR), manifest, verbose=verbose)
    sqr = run_experiment(replace(cfg, head=SQR), manifest, verbose=verbose)
    return ComparisonReport(pqr=pqr, sqr=sqr)
