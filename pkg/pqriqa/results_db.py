"""
DuckDB results store for experiment reports and sweep tables.

Runs are keyed by a content hash of their CSV, so storing the same report
twice is a no-op and reruns with identical seeds collapse onto one row.
"""

import fcntl
import hashlib
import json
import os
from contextlib import contextmanager
from dataclasses import asdict
from pathlib import Path

import duckdb

from pqriqa.errors import DatasetIOError, ResultsLockError
from pqriqa.harness import ExperimentReport, SweepTable

DB_NAME = "results.duckdb"


def _lock_path(db_path: Path) -> Path:
    return db_path.parent / f".{db_path.name}.lock"


@contextmanager
def results_lock(db_path):
    """Exclusive, non-blocking lock for writers of one results database.

    Raises:
        ResultsLockError: If another process holds the lock
    """
    db_path = Path(db_path)
    lock_path = _lock_path(db_path)
    lock_path.parent.mkdir(parents=True, exist_ok=True)
    lock_fd = os.open(str(lock_path), os.O_CREAT | os.O_RDWR)

    try:
        try:
            fcntl.flock(lock_fd, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError:
            os.close(lock_fd)
            lock_fd = None
            raise ResultsLockError(
                f"Could not acquire lock on {db_path}. Another run may be writing results."
            )
        yield
    finally:
        if lock_fd is not None:
            try:
                fcntl.flock(lock_fd, fcntl.LOCK_UN)
            except OSError:
                pass
            os.close(lock_fd)


def get_connection(db_path, read_only: bool = False) -> duckdb.DuckDBPyConnection:
    """Open the results database (read_only allows concurrent readers)."""
    db_path = Path(db_path)
    if read_only and not db_path.exists():
        raise DatasetIOError(f"results database {db_path} does not exist", path=db_path)
    db_path.parent.mkdir(parents=True, exist_ok=True)
    return duckdb.connect(str(db_path), read_only=read_only)


def init_schema(conn: duckdb.DuckDBPyConnection) -> None:
    conn.execute("""
        CREATE TABLE IF NOT EXISTS runs (
            run_id VARCHAR PRIMARY KEY,
            kind VARCHAR NOT NULL,
            head VARCHAR NOT NULL,
            label VARCHAR,
            created TIMESTAMP DEFAULT CURRENT_TIMESTAMP,
            seeds VARCHAR,
            config VARCHAR
        )
    """)

    # One row per (run, repetition, epoch), test metrics
    conn.execute("""
        CREATE TABLE IF NOT EXISTS epoch_metrics (
            run_id VARCHAR NOT NULL,
            repetition INTEGER NOT NULL,
            epoch INTEGER NOT NULL,
            srcc DOUBLE,
            plcc DOUBLE,
            loss DOUBLE
        )
    """)

    conn.execute("""
        CREATE TABLE IF NOT EXISTS summaries (
            run_id VARCHAR NOT NULL,
            head VARCHAR NOT NULL,
            metric VARCHAR NOT NULL,
            median DOUBLE,
            std DOUBLE,
            best_epoch_median DOUBLE,
            final_median DOUBLE
        )
    """)

    conn.execute("""
        CREATE TABLE IF NOT EXISTS sweep_rows (
            run_id VARCHAR NOT NULL,
            parameter VARCHAR NOT NULL,
            method VARCHAR NOT NULL,
            value DOUBLE,
            srcc DOUBLE,
            plcc DOUBLE
        )
    """)


def _run_id(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def _exists(conn, run_id: str) -> bool:
    return conn.execute("SELECT 1 FROM runs WHERE run_id = ?", [run_id]).fetchone() is not None


def _config_json(report: ExperimentReport) -> str:
    return json.dumps(asdict(report.config), sort_keys=True, default=str)


def store_report(conn, report: ExperimentReport, kind: str = "experiment", label: str = "") -> str:
    """Insert one experiment report; returns its run id."""
    run_id = _run_id(report.csv() + report.summary_text())
    if _exists(conn, run_id):
        return run_id
    conn.execute(
        "INSERT INTO runs (run_id, kind, head, label, seeds, config) VALUES (?, ?, ?, ?, ?, ?)",
        [run_id, kind, report.head, label, json.dumps(report.config.seeds(), sort_keys=True),
         _config_json(report)],
    )
    conn.executemany(
        "INSERT INTO epoch_metrics VALUES (?, ?, ?, ?, ?, ?)",
        [[run_id, r.repetition, e.epoch, e.test.srcc, e.test.plcc, e.loss]
         for r in report.runs for e in r.epochs],
    )
    for metric in ("srcc", "plcc"):
        conn.execute(
            "INSERT INTO summaries VALUES (?, ?, ?, ?, ?, ?, ?)",
            [run_id, report.head, metric, report.selected_median(metric), report.final_std(metric),
             report.best_epoch_median(metric), report.final_median(metric)],
        )
    return run_id


def store_sweep(conn, table: SweepTable, label: str = "") -> str:
    run_id = _run_id(table.csv())
    if _exists(conn, run_id):
        return run_id
    conn.execute(
        "INSERT INTO runs (run_id, kind, head, label, seeds, config) VALUES (?, ?, ?, ?, ?, ?)",
        [run_id, "sweep", "pqr", label, None,
         json.dumps({"parameter": table.parameter, "selection_split": table.selection_split})],
    )
    conn.executemany(
        "INSERT INTO sweep_rows VALUES (?, ?, ?, ?, ?, ?)",
        [[run_id, r.parameter, r.method, r.value, r.srcc, r.plcc] for r in table.rows],
    )
    return run_id


def summarize(conn) -> list[tuple]:
    """(run_id, kind, head, label, best SRCC median, best PLCC median) per stored run."""
    return conn.execute("""
        SELECT
            r.run_id,
            r.kind,
            r.head,
            r.label,
            COALESCE(s.best_srcc, w.best_srcc) AS best_srcc,
            COALESCE(s.best_plcc, w.best_plcc) AS best_plcc
        FROM runs r
        LEFT JOIN (
            SELECT
                run_id,
                MAX(CASE WHEN metric = 'srcc' THEN best_epoch_median END) AS best_srcc,
                MAX(CASE WHEN metric = 'plcc' THEN best_epoch_median END) AS best_plcc
            FROM summaries
            GROUP BY run_id
        ) s ON s.run_id = r.run_id
        LEFT JOIN (
            SELECT run_id, MAX(srcc) AS best_srcc, MAX(plcc) AS best_plcc
            FROM sweep_rows
            GROUP BY run_id
        ) w ON w.run_id = r.run_id
        ORDER BY r.created, r.run_id
    """).fetchall()
