"""
Command-line entry point for the PQR quality pipeline.

Usage:
    pqr-iqa gen-data --out lab --sources 60 --kinds blur,awgn,contrast,block --levels 3
    pqr-iqa train --manifest lab --head pqr --out runs/pqr.ckpt
    pqr-iqa eval --checkpoint runs/pqr.ckpt --manifest lab --split test
    pqr-iqa encode --scores scores.csv --out pqr.csv
    pqr-iqa sweep --config run.ini --param beta --out sweep_beta.csv
    pqr-iqa compare --config run.ini --out-dir compare
    pqr-iqa results --db results.duckdb

Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.
"""

import argparse
import csv
import signal
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from pqriqa.anchors import ANCHOR_METHODS, UNIFORM, ScoreRange, make_anchors
from pqriqa.checkpoint import save_checkpoint
from pqriqa.codec import (
    DEFAULT_BETA,
    DEFAULT_M,
    DEFAULT_RIDGE,
    DISTANCES,
    SQUARED_EUCLIDEAN,
    EncoderConfig,
    encode_matrix,
    fit_reverse_map,
)
from pqriqa.config import load_config
from pqriqa.distortions import DEFAULT_KINDS
from pqriqa.errors import (
    EXIT_OK,
    EXIT_USAGE,
    DatasetIOError,
    InvalidParameterError,
    OutOfRangeError,
    PqrError,
)
from pqriqa.fileio import atomic_write_text, csv_text, resolve_output, sha256_file, write_csv
from pqriqa.harness import (
    BETA_GRID,
    M_GRID,
    SPLIT_FRACTIONS,
    compare,
    evaluate_model,
    per_kind_metrics,
    split_by_content,
    sweep,
    training_set,
)
from pqriqa.lab import OPINION_SIGMA, OPINION_SUBJECTS, PATCH_SIZE, SOURCE_SIZE, TRAIN_CROPS
from pqriqa.lab import OpinionModel, build_dataset
from pqriqa.manifest import MANIFEST_NAME, TRAIN, read_manifest, write_manifest
from pqriqa.network import (
    ARCH_PRESETS,
    DROPOUT_RATE,
    HEADS,
    LR_END,
    LR_START,
    PQR,
    TrainConfig,
    arch_preset,
    build,
    train,
)

def banner(title: str):
    print("\n" + "=" * 60)
    print(title)
    print("=" * 60)


def rule(title: str):
    print("\n" + "-" * 40)
    print(title)
    print("-" * 40)


def _fractions(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise InvalidParameterError(f"invalid split fractions {text!r}") from None


def _grid(text: str, conv) -> list:
    values = [v for v in text.split(",") if v.strip()]
    if not values:
        raise InvalidParameterError("sweep grid is empty")
    try:
        return [conv(v) for v in values]
    except ValueError:
        raise InvalidParameterError(f"invalid sweep grid {text!r}") from None


# =============================================================================
# Commands
# =============================================================================

def cmd_gen_data(args) -> int:
    """Generate a synthetic lab: distorted PPM images plus manifest.jsonl."""
    kinds = [k for k in args.kinds.split(",") if k.strip()]
    opinions = OpinionModel(sigma=args.sigma, subjects=args.subjects)

    banner("GENERATE DATASET")
    print(f"Sources: {args.sources}  Kinds: {', '.join(kinds)}  Levels: {args.levels}")
    print(f"Opinion model: sigma={args.sigma} subjects={args.subjects}")
    print(f"Seed: {args.seed}  Split seed: {args.split_seed}")

    manifest = build_dataset(
        n_sources=args.sources, kinds=kinds, levels=args.levels, opinions=opinions,
        seed=args.seed, out_dir=args.out, size=args.size, patch_size=args.patch_size,
        train_crops=args.train_crops, workers=args.workers, verbose=args.verbose,
    )
    fractions = _fractions(args.split)
    try:
        manifest = split_by_content(manifest, fractions, args.split_seed)
    except InvalidParameterError as e:
        print(f"No default split written: {e}")
    path = write_manifest(manifest, manifest.root / MANIFEST_NAME)

    rule("DATASET")
    print(f"Manifest: {path}")
    print(f"Images: {len(manifest.images)}  Patches: {len(manifest.patches)}")
    for split, sources in sorted(manifest.split_sources().items()):
        print(f"  {split:6} {len(sources):4} sources")
    mos = np.array([rec.mos for rec in manifest.images])
    counts, edges = np.histogram(mos, bins=10, range=(0.0, 1.0))
    print("MOS histogram:")
    for c, lo, hi in zip(counts, edges[:-1], edges[1:]):
        print(f"  [{lo:.1f}, {hi:.1f}) {c:5} {'#' * int(c * 40 / max(counts.max(), 1))}")
    print(f"Manifest sha256: {sha256_file(path)}")
    return EXIT_OK


def cmd_train(args) -> int:
    """Train one head on the manifest's train split and write a checkpoint."""
    arch = arch_preset(args.arch, head=args.head, m=args.m, dropout_rate=args.dropout)
    tcfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size, lr_start=args.lr_start,
                       lr_end=args.lr_end, seed=args.seed)
    manifest = read_manifest(args.manifest)
    images = manifest.select(TRAIN)
    if not images:
        raise DatasetIOError(f"manifest {args.manifest} has no train split", path=args.manifest)

    banner(f"TRAIN ({args.head.upper()} head)")
    print(f"Manifest: {args.manifest}  Train images: {len(images)}")
    print(f"Arch: {args.arch}  Epochs: {args.epochs}  Seed: {args.seed}")

    x, y = training_set(manifest, images, arch.input_size, {})
    encoder = mapper = anchors = None
    if args.head == PQR:
        anchors = make_anchors(args.anchors, args.m, scores=y)
        encoder = EncoderConfig(beta=args.beta, anchors=anchors, distance=args.distance)
        mapper = fit_reverse_map(encode_matrix(y, encoder), y, args.ridge)
        print(f"Anchors ({args.anchors}): {', '.join(f'{c:.4f}' for c in anchors.centers)}")
        print(f"beta={args.beta:g}  reverse-map fit MAE={mapper.fit_mae:.5f}")
    print(f"Training patches: {x.shape[0]}")

    net, trace = train(build(arch, args.seed), x, y, tcfg, encoder=encoder, verbose=args.verbose)
    meta = {"seed": args.seed, "epochs": args.epochs, "manifest_sha256": sha256_file(manifest.path)}
    out = save_checkpoint(net, mapper, anchors, resolve_output(args.out), encoder=encoder, meta=meta)
    trace_path = resolve_output(args.trace) if args.trace else out.with_suffix(".trace.csv")
    write_csv(trace_path, ["epoch", "lr", "loss"], [(t.epoch, t.lr, t.mean_loss) for t in trace])

    rule("RESULT")
    print(f"Final loss: {trace[-1].mean_loss:.5f}")
    print(f"Checkpoint: {out}")
    print(f"Loss trace: {trace_path}")
    return EXIT_OK


def cmd_eval(args) -> int:
    """Score a manifest split with a checkpoint; prints SRCC/PLCC."""
    result = evaluate_model(args.checkpoint, args.manifest, split=args.split, stride=args.stride,
                            head=args.head, m=args.m)
    out = resolve_output(args.out) if args.out else \
        Path(args.checkpoint).with_suffix(f".{args.split}.csv")
    atomic_write_text(out, result.csv())

    counts = sorted({p.patches for p in result.predictions})
    print(f"Images: {len(result.predictions)}  Patches per image: {','.join(map(str, counts))}")
    if args.verbose:
        rule("BY DISTORTION KIND")
        for kind, pair in per_kind_metrics(result.predictions).items():
            print(f"  {kind:20} {pair}")
    print(f"Predictions: {out}")
    print(f"SRCC={result.metrics.srcc:.6f} PLCC={result.metrics.plcc:.6f}")
    return EXIT_OK


def _read_scores(path) -> tuple[np.ndarray, list[int]]:
    """
    One score per row; a non-numeric first row is taken as the header.

    Returns the scores and the 1-based file line of each.
    """
    try:
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.reader(f)
            rows = [(reader.line_num, row[0]) for row in reader if row and row[0].strip()]
    except OSError as e:
        raise DatasetIOError(f"cannot read scores {path}: {e}", path=path) from e
    scores, lines = [], []
    for i, (line, cell) in enumerate(rows):
        try:
            scores.append(float(cell))
        except ValueError:
            if i == 0:
                continue
            raise DatasetIOError(f"{path}: line {line} is not a number: {cell!r}", path=path) from None
        lines.append(line)
    if not scores:
        raise DatasetIOError(f"{path} contains no scores", path=path)
    return np.array(scores), lines


def _check_range(path, scores: np.ndarray, lines: list[int], range_: ScoreRange):
    bad = np.flatnonzero(~((scores >= range_.lo) & (scores <= range_.hi)))
    if bad.size:
        i = int(bad[0])
        raise OutOfRangeError(f"{path}: line {lines[i]}: score {float(scores[i])} outside "
                              f"[{range_.lo}, {range_.hi}]", index=i)


def cmd_encode(args) -> int:
    """Encode scores as PQR rows and report reverse-mapping accuracy."""
    range_ = ScoreRange()
    scores, lines = _read_scores(args.scores)
    _check_range(args.scores, scores, lines, range_)
    fit_scores = scores
    if args.lloyd_scores:
        fit_scores, fit_lines = _read_scores(args.lloyd_scores)
        _check_range(args.lloyd_scores, fit_scores, fit_lines, range_)
    anchors = make_anchors(args.anchors, args.m, scores=fit_scores, range_=range_)
    encoder = EncoderConfig(beta=args.beta, anchors=anchors, distance=args.distance)
    try:
        pqrs = encode_matrix(scores, encoder)
    except PqrError as e:
        index = getattr(e, "index", None)
        if index is not None:
            e.args = (f"{args.scores}: line {lines[index]}: {e.args[0]}",)
        raise
    mapper = fit_reverse_map(pqrs, scores, args.ridge)

    header = ["score"] + [f"q{i + 1}" for i in range(anchors.m)]
    text = csv_text(header, [[float(y)] + [float(v) for v in row] for y, row in zip(scores, pqrs)])
    if args.out:
        atomic_write_text(resolve_output(args.out), text)
    else:
        sys.stdout.write(text)

    out = sys.stderr if not args.out else sys.stdout
    print(f"anchors ({args.anchors}): {', '.join(f'{c:.6g}' for c in anchors.centers)}", file=out)
    print(f"beta={args.beta:g} scores={scores.size}", file=out)
    status = "below" if mapper.fit_mae < 0.01 else "ABOVE"
    print(f"fit_mae={mapper.fit_mae:.6g} ({status} the 0.01 target)", file=out)
    return EXIT_OK


def _load_run_config(args):
    overrides = {}
    if getattr(args, "repetitions", None) is not None:
        overrides["repetitions"] = args.repetitions
    cfg = load_config(args.config, overrides)
    if getattr(args, "epochs", None) is not None:
        exp = replace(cfg.experiment, train=replace(cfg.experiment.train, epochs=args.epochs))
        cfg.experiment = exp
    return cfg


def _store(db_path, store):
    from pqriqa.results_db import get_connection, init_schema, results_lock

    with results_lock(db_path):
        conn = get_connection(db_path)
        try:
            init_schema(conn)
            return store(conn)
        finally:
            conn.close()


def cmd_sweep(args) -> int:
    """Sweep beta or M (per anchor method) and write a CSV table."""
    run_cfg = _load_run_config(args)
    cfg = run_cfg.experiment
    conv = float if args.param == "beta" else int
    values = _grid(args.values, conv) if args.values is not None else run_cfg.grid(args.param)
    methods = ([m for m in args.methods.split(",") if m.strip()] if args.methods
               else run_cfg.methods)

    banner(f"SWEEP {args.param}")
    print(f"Config: {args.config}  Seed: {cfg.seed}  Train seed: {cfg.train.seed}")
    print(f"Grid: {', '.join(str(v) for v in (values or (BETA_GRID if args.param == 'beta' else M_GRID)))}")

    table = sweep(cfg, args.param, values=values, methods=methods, verbose=args.verbose)
    out = atomic_write_text(resolve_output(args.out), table.csv())

    rule(f"RESULTS ({table.selection_split} split, best-epoch medians)")
    for r in table.rows:
        print(f"  {r.method:10} {args.param}={r.value:<8g} SRCC={r.srcc:.4f} PLCC={r.plcc:.4f}")
    print(f"\nTable: {out}")
    if args.results_db:
        from pqriqa.results_db import store_sweep
        run_id = _store(args.results_db, lambda conn: store_sweep(conn, table, label=str(args.config)))
        print(f"Stored as run {run_id} in {args.results_db}")
    return EXIT_OK


def cmd_compare(args) -> int:
    """PQR vs SQR on identical splits and seeds."""
    cfg = _load_run_config(args).experiment

    banner("COMPARE PQR vs SQR")
    print(f"Config: {args.config}  Repetitions: {cfg.repetitions}  Epochs: {cfg.train.epochs}")
    print(f"Seed: {cfg.seed}  Train seed: {cfg.train.seed}")

    report = compare(cfg, verbose=args.verbose)
    out_dir = resolve_output(args.out_dir)
    summary = report.summary_text()
    atomic_write_text(out_dir / "summary.txt", summary)
    atomic_write_text(out_dir / "table.csv", report.table_csv())
    atomic_write_text(out_dir / "epochs.csv", report.epochs_csv())
    for rep in report.reports:
        atomic_write_text(out_dir / f"{rep.head}_report.csv", rep.csv())

    rule("SUMMARY")
    print(summary, end="")
    print(f"\nOutputs: {out_dir}")
    if args.results_db:
        from pqriqa.results_db import store_report

        def store(conn):
            return [store_report(conn, rep, kind="compare", label=str(args.config))
                    for rep in report.reports]

        ids = _store(args.results_db, store)
        print(f"Stored as runs {', '.join(ids)} in {args.results_db}")
    return EXIT_OK


def cmd_results(args) -> int:
    """Show runs stored in a results database."""
    from pqriqa.results_db import get_connection, summarize

    conn = get_connection(args.db, read_only=True)
    try:
        rows = summarize(conn)
    finally:
        conn.close()

    banner("STORED RUNS")
    if not rows:
        print("No runs stored.")
    for run_id, kind, head, label, best_srcc, best_plcc in rows:
        srcc = f"{best_srcc:.4f}" if best_srcc is not None else "-"
        plcc = f"{best_plcc:.4f}" if best_plcc is not None else "-"
        print(f"  {run_id}  {kind:10} {head:4} SRCC={srcc} PLCC={plcc}  {label or ''}")
    return EXIT_OK


# =============================================================================
# Argument Parsing
# =============================================================================

class UsageParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with the pipeline's usage code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"ERROR: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _add_encoder_args(p):
    p.add_argument("--beta", type=float, default=DEFAULT_BETA,
                   help="Softmax sharpness beta (default: %(default)g)")
    p.add_argument("--M", dest="m", type=int, default=DEFAULT_M,
                   help="Number of quality anchors (default: %(default)s)")
    p.add_argument("--anchors", choices=ANCHOR_METHODS, default=UNIFORM,
                   help="Anchor placement (default: %(default)s)")
    p.add_argument("--distance", choices=DISTANCES, default=SQUARED_EUCLIDEAN,
                   help="Score-to-anchor distance (default: %(default)s)")
    p.add_argument("--ridge", type=float, default=DEFAULT_RIDGE,
                   help="Reverse-map ridge penalty (default: %(default)g)")


def build_parser() -> argparse.ArgumentParser:
    parser = UsageParser(
        prog="pqr-iqa",
        description="Blind image quality with probabilistic quality representations",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Defaults: beta=64, M=5 uniform anchors, dropout 0.5, 80/20 content-disjoint split.

Examples:
  pqr-iqa gen-data --out lab --sources 60 --levels 3        # Synthetic dataset
  pqr-iqa train --manifest lab --out runs/pqr.ckpt          # PQR head
  pqr-iqa train --manifest lab --head sqr --out runs/sqr.ckpt
  pqr-iqa eval --checkpoint runs/pqr.ckpt --manifest lab    # SRCC/PLCC on test split
  pqr-iqa compare --config run.ini --results-db results.duckdb
  pqr-iqa results --db results.duckdb                       # Stored runs

Set PQR_IQA_OUTPUT_ROOT to prefix relative output paths.
        """,
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=UsageParser)

    verbose = UsageParser(add_help=False)
    verbose.add_argument("-v", "--verbose", action="store_true",
                         help="Per-step detail and progress bars")

    p = sub.add_parser("gen-data", parents=[verbose], help="Generate a synthetic IQA dataset",
                       description=cmd_gen_data.__doc__)
    p.add_argument("--out", required=True, help="Dataset directory")
    p.add_argument("--sources", type=int, default=20, help="Number of source images (default: %(default)s)")
    p.add_argument("--size", type=int, default=SOURCE_SIZE, help="Source image size (default: %(default)s)")
    p.add_argument("--patch-size", type=int, default=PATCH_SIZE,
                   help="Training crop size (default: %(default)s)")
    p.add_argument("--kinds", default=",".join(DEFAULT_KINDS),
                   help="Comma-separated distortion kinds (default: %(default)s)")
    p.add_argument("--levels", type=int, default=3, help="Severity levels per kind (default: %(default)s)")
    p.add_argument("--sigma", type=float, default=OPINION_SIGMA,
                   help="Per-subject opinion noise std (default: %(default)s)")
    p.add_argument("--subjects", type=int, default=OPINION_SUBJECTS,
                   help="Subjects per image (default: %(default)s)")
    p.add_argument("--train-crops", type=int, default=TRAIN_CROPS,
                   help="Random training crops recorded per image (default: %(default)s)")
    p.add_argument("--split", default=",".join(str(f) for f in SPLIT_FRACTIONS),
                   help="Default train,test (or train,val,test) fractions (default: %(default)s)")
    p.add_argument("--split-seed", type=int, default=0, help="Seed of the default split (default: %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="Generation seed (default: %(default)s)")
    p.add_argument("--workers", type=int, default=1, help="Rendering threads (default: %(default)s)")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", parents=[verbose], help="Train a quality network",
                       description=cmd_train.__doc__)
    p.add_argument("--manifest", required=True, help="Manifest file or dataset directory")
    p.add_argument("--head", choices=HEADS, default=PQR, help="Output head (default: %(default)s)")
    _add_encoder_args(p)
    p.add_argument("--arch", choices=list(ARCH_PRESETS), default="desk",
                   help="Architecture preset (default: %(default)s)")
    p.add_argument("--dropout", type=float, default=DROPOUT_RATE,
                   help="Dropout before the output layer (default: %(default)s)")
    p.add_argument("--epochs", type=int, default=30, help="Epochs (default: %(default)s)")
    p.add_argument("--batch-size", type=int, default=64, help="Mini-batch size (default: %(default)s)")
    p.add_argument("--lr-start", type=float, default=LR_START, help="First-epoch learning rate (default: %(default)g)")
    p.add_argument("--lr-end", type=float, default=LR_END, help="Last-epoch learning rate (default: %(default)g)")
    p.add_argument("--seed", type=int, default=0, help="Init and shuffling seed (default: %(default)s)")
    p.add_argument("--out", required=True, help="Checkpoint path")
    p.add_argument("--trace", help="Loss trace CSV (default: <checkpoint>.trace.csv)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[verbose], help="Evaluate a checkpoint",
                       description=cmd_eval.__doc__)
    p.add_argument("--checkpoint", required=True, help="Checkpoint path")
    p.add_argument("--manifest", required=True, help="Manifest file or dataset directory")
    p.add_argument("--split", choices=["train", "val", "test", "all"], default="test",
                   help="Images to score (default: %(default)s)")
    p.add_argument("--stride", type=int, help="Grid stride (default: patch size)")
    p.add_argument("--head", choices=HEADS, help="Require this head")
    p.add_argument("--M", dest="m", type=int, help="Require this many anchors")
    p.add_argument("--out", help="Per-image predictions CSV (default: <checkpoint>.<split>.csv)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("encode", parents=[verbose], help="Encode scores as PQR vectors",
                       description=cmd_encode.__doc__)
    p.add_argument("--scores", required=True, help="CSV with one score per row")
    _add_encoder_args(p)
    p.add_argument("--lloyd-scores", help="Scores the lloyd_max anchors are fit on (default: --scores)")
    p.add_argument("--out", help="PQR CSV (default: stdout)")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("sweep", parents=[verbose], help="Sweep beta or M",
                       description=cmd_sweep.__doc__)
    p.add_argument("--config", required=True, help="Run config file")
    p.add_argument("--param", choices=["beta", "m"], required=True, help="Parameter to sweep")
    p.add_argument("--values", help="Comma-separated grid (default: 2^0..2^9 for beta, 2..10 for M)")
    p.add_argument("--methods", help="Anchor methods for an M sweep (default: uniform,lloyd_max)")
    p.add_argument("--repetitions", type=int, help="Override [eval] repetitions")
    p.add_argument("--epochs", type=int, help="Override [train] epochs")
    p.add_argument("--out", default="sweep.csv", help="Output CSV (default: %(default)s)")
    p.add_argument("--results-db", help="Also store the table in this DuckDB file")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", parents=[verbose], help="PQR vs SQR comparison",
                       description=cmd_compare.__doc__)
    p.add_argument("--config", required=True, help="Run config file")
    p.add_argument("--repetitions", type=int, help="Override [eval] repetitions")
    p.add_argument("--epochs", type=int, help="Override [train] epochs")
    p.add_argument("--out-dir", default="compare", help="Output directory (default: %(default)s)")
    p.add_argument("--results-db", help="Also store both reports in this DuckDB file")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("results", parents=[verbose], help="Show stored runs",
                       description=cmd_results.__doc__)
    p.add_argument("--db", required=True, help="Results DuckDB file")
    p.set_defaults(func=cmd_results)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PqrError as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return e.exit_code


def run():
    # exit quietly when stdout is closed early (e.g. piped into head)
    if hasattr(signal, "SIGPIPE"):
        signal.signal(signal.SIGPIPE, signal.SIG_DFL)
    sys.exit(main())


if __name__ == "__main__":
    run()
