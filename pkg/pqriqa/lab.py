"""
Distortion lab - desk-scale synthetic IQA datasets.

Real IQA databases are replaced by procedural source images, parametric
distortions and simulated subject panels, so every label is reproducible
from a seed.

Provides:
- SourceImage, OpinionModel, Patch dataclasses
- generate_sources(): procedural reference content
- apply_distortion(): dispatch to the distortions registry
- synth_mos(): monotone severity -> quality curve plus a simulated panel
- build_dataset(): full factorial sources x kinds x levels on disk
- extract_patches(): random training crops or a strided test grid
"""

import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import ndimage
from tqdm import tqdm

from pqriqa.distortions import DistortionSpec, canonical_kind, get_distortion
from pqriqa.errors import InvalidParameterError
from pqriqa.fileio import resolve_output
from pqriqa.imageio import read_ppm, write_ppm
from pqriqa.manifest import (
    MANIFEST_NAME,
    DatasetManifest,
    ImageRecord,
    PatchRecord,
    write_manifest,
)


# Quality curve endpoints: y* runs from Q_HI (pristine) to Q_LO (severity 1)
Q_HI = 0.95
Q_LO = 0.05
QUALITY_DECAY = 3.0

# Simulated panel, spread mimicking in-the-wild opinion scatter on [0, 1]
OPINION_SIGMA = 0.19
OPINION_SUBJECTS = 35

SOURCE_SIZE = 64
PATCH_SIZE = 32
TRAIN_CROPS = 16


# =============================================================================
# Data Classes
# =============================================================================

@dataclass(frozen=True)
class SourceImage:
    """Reference content: H x W x 3 pixels in [0, 1]."""
    id: str
    pixels: np.ndarray
    origin: str


@dataclass(frozen=True)
class OpinionModel:
    """Simulated subject panel: per-subject noise std and panel size."""
    sigma: float = OPINION_SIGMA
    subjects: int = OPINION_SUBJECTS

    def __post_init__(self):
        if self.sigma < 0 or self.subjects < 1:
            raise InvalidParameterError("opinion model needs sigma >= 0 and subjects >= 1")


@dataclass(frozen=True)
class Patch:
    """A crop with the label inherited from its image."""
    image_id: str
    row: int
    col: int
    size: int
    pixels: np.ndarray
    label: Optional[float] = None


def stream_seed(seed: int, name: str) -> np.random.SeedSequence:
    """Per-item RNG stream from (seed, name); parallel and serial runs agree."""
    return np.random.SeedSequence([int(seed), zlib.crc32(name.encode("utf-8"))])


# =============================================================================
# Source Images
# =============================================================================

def _value_noise(rng, size: int) -> np.ndarray:
    grid = int(rng.integers(3, 9))
    coarse = rng.random((grid, grid, 3))
    fine = ndimage.zoom(coarse, (size / grid, size / grid, 1), order=3, mode="reflect")
    return fine[:size, :size]


def _gradient(rng, size: int) -> np.ndarray:
    angle = rng.uniform(0, 2 * np.pi)
    yy, xx = np.mgrid[0:size, 0:size] / max(size - 1, 1)
    ramp = np.cos(angle) * xx + np.sin(angle) * yy
    ramp = (ramp - ramp.min()) / max(np.ptp(ramp), 1e-12)
    lo, hi = rng.random(3), rng.random(3)
    return lo + ramp[..., None] * (hi - lo)


def _edges(rng, size: int) -> np.ndarray:
    img = np.tile(rng.random(3), (size, size, 1))
    for _ in range(int(rng.integers(2, 6))):
        r0, c0 = rng.integers(0, size - 1, 2)
        r1 = int(rng.integers(r0 + 1, size + 1))
        c1 = int(rng.integers(c0 + 1, size + 1))
        img[r0:r1, c0:c1] = rng.random(3)
    return img


def _procedural(rng, size: int) -> np.ndarray:
    w = rng.dirichlet(np.ones(3))
    img = w[0] * _value_noise(rng, size) + w[1] * _gradient(rng, size) + w[2] * _edges(rng, size)
    texture = ndimage.gaussian_filter(rng.normal(size=(size, size, 3)), sigma=(0.8, 0.8, 0))
    img = img + 0.08 * texture
    img = (img - img.min()) / max(np.ptp(img), 1e-12)
    return np.clip(img, 0.0, 1.0)


def generate_sources(count: int, size: int = SOURCE_SIZE, seed: int = 0,
                     patch_size: int = PATCH_SIZE) -> list[SourceImage]:
    """Deterministic procedural images (value noise, gradients, edges, texture)."""
    if count < 1:
        raise InvalidParameterError(f"need at least one source, got {count}")
    if size < patch_size:
        raise InvalidParameterError(f"source size {size} is smaller than patch size {patch_size}")
    sources = []
    for i in range(count):
        sid = f"src{i:03d}"
        rng = np.random.default_rng(stream_seed(seed, sid))
        sources.append(SourceImage(id=sid, pixels=_procedural(rng, size),
                                   origin=f"procedural:{seed}:mixture"))
    return sources


def source_from_file(path, source_id: Optional[str] = None) -> SourceImage:
    """Use a PPM file as reference content."""
    path = Path(path)
    pixels = read_ppm(path)
    if pixels.shape[2] == 1:
        pixels = np.repeat(pixels, 3, axis=2)
    return SourceImage(id=source_id or path.stem, pixels=pixels, origin=f"file:{path}")


# =============================================================================
# Distortions and Opinions
# =============================================================================

def apply_distortion(img, spec: DistortionSpec) -> np.ndarray:
    """Impair a SourceImage (or raw pixels) according to spec."""
    pixels = img.pixels if isinstance(img, SourceImage) else img
    kind = canonical_kind(spec.kind)
    spec = DistortionSpec(kind=kind, severity=spec.severity, seed=spec.seed)
    return get_distortion(kind).apply(pixels, spec)


def true_quality(severity: float, calibration: float = 1.0) -> float:
    """Monotone decreasing y* in [Q_LO, Q_HI]; severity 0 -> Q_HI, 1 -> Q_LO."""
    k = QUALITY_DECAY * calibration
    floor = np.exp(-k)
    return float(Q_LO + (Q_HI - Q_LO) * (np.exp(-k * severity) - floor) / (1.0 - floor))


def synth_mos(spec: DistortionSpec, opinions: OpinionModel, seed: int,
              calibration: Optional[dict[str, float]] = None) -> tuple[float, float, float]:
    """
    Simulated subjective scores for one distorted image.

    Each of S subjects reports y* + N(0, sigma^2) clamped to [0, 1]; the MOS
    is their mean and opinion_std their sample standard deviation.

    Returns:
        Tuple of (true_quality, mos, opinion_std)
    """
    kind = canonical_kind(spec.kind)
    k = (calibration or {}).get(kind, 1.0)
    if k <= 0:
        raise InvalidParameterError(f"calibration multiplier for {kind} must be positive")
    y_star = true_quality(spec.severity, k)
    if opinions.sigma == 0:
        return y_star, y_star, 0.0
    rng = np.random.default_rng(seed)
    draws = np.clip(rng.normal(y_star, opinions.sigma, size=opinions.subjects), 0.0, 1.0)
    std = float(draws.std(ddof=1)) if opinions.subjects > 1 else 0.0
    return y_star, float(np.clip(draws.mean(), 0.0, 1.0)), std


# =============================================================================
# Patches
# =============================================================================

def patch_offsets(height: int, width: int, size: int, mode: str = "grid",
                  stride: Optional[int] = None, count: Optional[int] = None,
                  seed: int = 0) -> list[tuple[int, int]]:
    """
    Top-left offsets of square crops.

    grid: rows/cols {0, stride, ...}; when stride <= size a final offset flush
    with the edge is added so the grid covers the whole image.
    random: `count` uniform offsets drawn with replacement.
    """
    if size > height or size > width or size < 1:
        raise InvalidParameterError(f"patch size {size} does not fit a {height}x{width} image")
    if mode == "grid":
        stride = stride or size
        if stride < 1:
            raise InvalidParameterError(f"stride must be positive, got {stride}")

        def axis(n):
            offs = list(range(0, n - size + 1, stride))
            if stride <= size and offs[-1] != n - size:
                offs.append(n - size)
            return offs

        return [(r, c) for r in axis(height) for c in axis(width)]
    if mode == "random":
        if count is None or count < 1:
            raise InvalidParameterError("random patch mode needs count >= 1")
        rng = np.random.default_rng(seed)
        rows = rng.integers(0, height - size + 1, size=count)
        cols = rng.integers(0, width - size + 1, size=count)
        return [(int(r), int(c)) for r, c in zip(rows, cols)]
    raise InvalidParameterError(f"unknown patch mode {mode!r}")


def extract_patches(img: np.ndarray, size: int, mode: str = "grid", stride: Optional[int] = None,
                    count: Optional[int] = None, seed: int = 0, image_id: str = "",
                    label: Optional[float] = None) -> list[Patch]:
    """Crop patches from an H x W x C image; each carries the image's label."""
    img = np.asarray(img, dtype=np.float64)
    offsets = patch_offsets(img.shape[0], img.shape[1], size, mode, stride, count, seed)
    return [Patch(image_id=image_id, row=r, col=c, size=size,
                  pixels=img[r:r + size, c:c + size], label=label) for r, c in offsets]


def stack_patches(patches: list[Patch]) -> np.ndarray:
    if not patches:
        return np.zeros((0, 0, 0, 0))
    return np.stack([p.pixels for p in patches])


# =============================================================================
# Dataset Construction
# =============================================================================

def severity_levels(levels) -> tuple[float, ...]:
    """An int L means L severities evenly spaced on [0.2, 0.8]; a sequence is used as is."""
    if isinstance(levels, int):
        if levels < 1:
            raise InvalidParameterError(f"need at least one level, got {levels}")
        if levels == 1:
            return (0.5,)
        return tuple(float(s) for s in np.round(np.linspace(0.2, 0.8, levels), 12))
    sev = tuple(float(s) for s in levels)
    if not sev:
        raise InvalidParameterError("need at least one severity level")
    return sev


def _render_image(source: SourceImage, kind: str, level: int, severity: float,
                  opinions: OpinionModel, seed: int, calibration, out_dir: Path,
                  patch_size: int, train_crops: int):
    image_id = f"{source.id}_{kind}_{level}"
    dist_seed, mos_seed, crop_seed = (
        int(s) for s in stream_seed(seed, image_id).generate_state(3)
    )
    spec = DistortionSpec(kind=kind, severity=severity, seed=dist_seed)
    pixels = apply_distortion(source, spec)
    y_star, mos, std = synth_mos(spec, opinions, mos_seed, calibration)
    rel = Path("images") / f"{image_id}.ppm"
    write_ppm(out_dir / rel, pixels)
    record = ImageRecord(image_id=image_id, source_id=source.id, path=rel.as_posix(), kind=kind,
                         severity=severity, seed=dist_seed, true_quality=y_star, mos=mos,
                         opinion_std=std)
    patches = []
    if train_crops:
        h, w = pixels.shape[:2]
        for r, c in patch_offsets(h, w, patch_size, "random", count=train_crops, seed=crop_seed):
            patches.append(PatchRecord(image_id=image_id, row=r, col=c, size=patch_size, mode="random"))
    return record, patches


def build_dataset(n_sources: int, kinds, levels, opinions: OpinionModel, seed: int, out_dir,
                  size: int = SOURCE_SIZE, patch_size: int = PATCH_SIZE,
                  train_crops: int = TRAIN_CROPS, calibration: Optional[dict[str, float]] = None,
                  workers: int = 1, verbose: bool = False) -> DatasetManifest:
    """
    Generate sources x kinds x levels distorted images and their manifest.

    Images are written as PPM under out_dir/images and the manifest last, so
    a failure never leaves a manifest pointing at missing files. Random
    training crops are recorded per image as patch records.

    Args:
        n_sources: Number of procedural source images
        kinds: Distortion kinds (aliases accepted)
        levels: Number of severity levels or explicit severities
        opinions: Simulated panel
        seed: Master seed; each image derives its own stream
        out_dir: Dataset directory
        size: Source image side length
        patch_size: Crop size for recorded training patches
        train_crops: Random crops recorded per image (0 for none)
        calibration: Optional per-kind multipliers of the quality curve
        workers: Threads used to render images
        verbose: Show a progress bar

    Returns:
        The written DatasetManifest
    """
    kinds = [canonical_kind(k) for k in kinds]
    if not kinds:
        raise InvalidParameterError("need at least one distortion kind")
    severities = severity_levels(levels)
    out_dir = resolve_output(out_dir)
    sources = generate_sources(n_sources, size, seed, patch_size)

    jobs = [(src, kind, li, sev) for src in sources for kind in kinds
            for li, sev in enumerate(severities, start=1)]

    def render(job):
        src, kind, li, sev = job
        return _render_image(src, kind, li, sev, opinions, seed, calibration, out_dir,
                             patch_size, train_crops)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = pool.map(render, jobs)
            results = list(tqdm(results, total=len(jobs), desc="images") if verbose else results)
    else:
        iterator = tqdm(jobs, desc="images") if verbose else jobs
        results = [render(job) for job in iterator]

    images = [rec for rec, _ in results]
    patches = [p for _, plist in results for p in plist]
    meta = {
        "seed": seed,
        "size": size,
        "patch_size": patch_size,
        "kinds": kinds,
        "severities": list(severities),
        "sigma": opinions.sigma,
        "subjects": opinions.subjects,
        "train_crops": train_crops,
    }
    manifest = DatasetManifest(images=images, patches=patches, meta=meta, root=out_dir)
    write_manifest(manifest, out_dir / MANIFEST_NAME)
    return manifest
