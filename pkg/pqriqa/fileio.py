"""
File output helpers: atomic writes, CSV emission and the output-root override.

Every file the pipeline produces goes through atomic_write_bytes(), so a
failed command never leaves a partial manifest, checkpoint or report behind.
"""

import csv
import hashlib
import io
import os
import tempfile
from pathlib import Path

from pqriqa.errors import DatasetIOError

# Only environment override: prefix for relative output paths
OUTPUT_ROOT_ENV = "PQR_IQA_OUTPUT_ROOT"


def resolve_output(path) -> Path:
    """Apply PQR_IQA_OUTPUT_ROOT to relative output paths."""
    path = Path(path)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not path.is_absolute():
        return Path(root) / path
    return path


def atomic_write_bytes(path, data: bytes) -> Path:
    """Write to a temp file in the target directory, then rename over the target."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    except OSError as e:
        raise DatasetIOError(f"cannot write {path}: {e}", path=path) from e
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except OSError as e:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise DatasetIOError(f"cannot write {path}: {e}", path=path) from e
    return path


def atomic_write_text(path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def csv_text(header: list[str], rows) -> str:
    """Render rows as CSV with a header row and '\\n' line endings."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_csv(path, header: list[str], rows) -> Path:
    return atomic_write_text(path, csv_text(header, rows))


def _cell(value):
    if isinstance(value, float):
        return repr(value)
    return value


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
