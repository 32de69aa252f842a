"""
Dataset manifest - provenance, labels, splits and patch records for a lab dataset.

File format: JSON lines, one record per line, written with keys in this order.

    {"record": "meta", "version", "seed", "size", "patch_size", "kinds",
     "severities", "sigma", "subjects", "train_crops", "split_seed", "fractions"}
    {"record": "image", "image_id", "source_id", "path", "kind", "severity",
     "seed", "true_quality", "mos", "opinion_std", "split"}
    {"record": "patch", "image_id", "row", "col", "size", "mode"}

Image paths are relative to the manifest's directory.
"""

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from pqriqa.errors import DatasetIOError, InvalidParameterError
from pqriqa.fileio import atomic_write_text
from pqriqa.imageio import read_ppm

MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.jsonl"

TRAIN = "train"
VAL = "val"
TEST = "test"
ALL = "all"
SPLITS = (TRAIN, VAL, TEST)


# =============================================================================
# Records
# =============================================================================

@dataclass(frozen=True)
class ImageRecord:
    """One distorted image and its synthetic subjective data."""
    image_id: str
    source_id: str
    path: str
    kind: str
    severity: float
    seed: int
    true_quality: float
    mos: float
    opinion_std: float
    split: Optional[str] = None


@dataclass(frozen=True)
class PatchRecord:
    """A crop of an image: top-left offset and square size."""
    image_id: str
    row: int
    col: int
    size: int
    mode: str = "random"


@dataclass
class DatasetManifest:
    """All image and patch records of one dataset plus its generation settings."""
    images: list[ImageRecord]
    patches: list[PatchRecord] = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    root: Path = Path(".")
    # file this manifest was read from, if any
    path: Optional[Path] = None

    def __post_init__(self):
        self._by_id = {rec.image_id: rec for rec in self.images}
        self._patches_by_id: dict[str, list[PatchRecord]] = {}
        for p in self.patches:
            self._patches_by_id.setdefault(p.image_id, []).append(p)

    def image(self, image_id: str) -> ImageRecord:
        try:
            return self._by_id[image_id]
        except KeyError:
            raise DatasetIOError(f"no image {image_id!r} in manifest") from None

    def source_ids(self) -> list[str]:
        return sorted({rec.source_id for rec in self.images})

    def select(self, split: str) -> list[ImageRecord]:
        """Images of one split ("all" returns every image)."""
        if split == ALL:
            return list(self.images)
        if split not in SPLITS:
            raise InvalidParameterError(f"unknown split {split!r}")
        return [rec for rec in self.images if rec.split == split]

    def patches_for(self, image_id: str, mode: Optional[str] = None) -> list[PatchRecord]:
        records = self._patches_by_id.get(image_id, [])
        if mode is None:
            return list(records)
        return [p for p in records if p.mode == mode]

    def with_splits(self, assignment: dict[str, str], meta_update: Optional[dict] = None
                    ) -> "DatasetManifest":
        """New manifest with images labeled by source id -> split."""
        images = [replace(rec, split=assignment.get(rec.source_id)) for rec in self.images]
        meta = dict(self.meta)
        meta.update(meta_update or {})
        return DatasetManifest(images=images, patches=list(self.patches), meta=meta, root=self.root)

    def image_path(self, rec: ImageRecord) -> Path:
        return self.root / rec.path

    def load_image(self, rec: ImageRecord) -> np.ndarray:
        path = self.image_path(rec)
        try:
            return read_ppm(path)
        except DatasetIOError as e:
            raise DatasetIOError(f"image {rec.image_id}: {e}", path=path) from e

    def validate(self):
        """Check score ranges, patch references and content-disjoint splits."""
        ids = set()
        for rec in self.images:
            if rec.image_id in ids:
                raise InvalidParameterError(f"duplicate image id {rec.image_id}")
            ids.add(rec.image_id)
            if not (0.0 <= rec.mos <= 1.0 and 0.0 <= rec.true_quality <= 1.0):
                raise InvalidParameterError(f"image {rec.image_id} has a score outside [0, 1]")
        for p in self.patches:
            if p.image_id not in ids:
                raise InvalidParameterError(f"patch references unknown image {p.image_id}")
        owner = {}
        for rec in self.images:
            if rec.split is None:
                continue
            prev = owner.setdefault(rec.source_id, rec.split)
            if prev != rec.split:
                raise InvalidParameterError(
                    f"source {rec.source_id} appears in splits {prev} and {rec.split}"
                )

    def split_sources(self) -> dict[str, set[str]]:
        out: dict[str, set[str]] = {}
        for rec in self.images:
            if rec.split is not None:
                out.setdefault(rec.split, set()).add(rec.source_id)
        return out


# =============================================================================
# File I/O
# =============================================================================

def manifest_text(manifest: DatasetManifest) -> str:
    lines = [json.dumps({"record": "meta", "version": MANIFEST_VERSION, **manifest.meta})]
    lines += [json.dumps({"record": "image", **asdict(rec)}) for rec in manifest.images]
    lines += [json.dumps({"record": "patch", **asdict(p)}) for p in manifest.patches]
    return "\n".join(lines) + "\n"


def write_manifest(manifest: DatasetManifest, path) -> Path:
    manifest.validate()
    return atomic_write_text(path, manifest_text(manifest))


def read_manifest(path) -> DatasetManifest:
    """Load a manifest; a directory argument means <dir>/manifest.jsonl."""
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise DatasetIOError(f"cannot read manifest {path}: {e}", path=path) from e

    meta, images, patches = {}, [], []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            kind = rec.pop("record")
            if kind == "meta":
                version = rec.pop("version", MANIFEST_VERSION)
                if version != MANIFEST_VERSION:
                    raise DatasetIOError(f"{path}: unsupported manifest version {version}", path=path)
                meta = rec
            elif kind == "image":
                images.append(ImageRecord(**rec))
            elif kind == "patch":
                patches.append(PatchRecord(**rec))
            else:
                raise ValueError(f"unknown record type {kind!r}")
        except (ValueError, TypeError, KeyError) as e:
            raise DatasetIOError(f"{path}:{lineno}: malformed manifest record: {e}", path=path) from e

    manifest = DatasetManifest(images=images, patches=patches, meta=meta, root=path.parent, path=path)
    manifest.validate()
    return manifest
