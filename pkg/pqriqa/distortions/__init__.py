"""
Distortions package - parametric impairment implementations.

Provides one class per distortion kind:
- GaussianBlur: separable Gaussian blur
- WhiteNoise: additive white Gaussian noise
- ContrastDecrement: contrast contraction toward mid-gray
- BlockQuantization: per-block requantization (compression analogue)
"""

from pqriqa.errors import InvalidParameterError

from .base import Distortion, DistortionSpec
from .blockq import BlockQuantization
from .blur import GaussianBlur
from .contrast import ContrastDecrement
from .noise import WhiteNoise

DISTORTIONS = {
    "gaussian_blur": GaussianBlur,
    "awgn": WhiteNoise,
    "contrast_decrement": ContrastDecrement,
    "block_quantization": BlockQuantization,
}

# Short names accepted on the command line
KIND_ALIASES = {
    "blur": "gaussian_blur",
    "noise": "awgn",
    "contrast": "contrast_decrement",
    "block": "block_quantization",
    "blockq": "block_quantization",
}

DEFAULT_KINDS = tuple(DISTORTIONS)


def canonical_kind(kind: str) -> str:
    """Resolve aliases; unknown kinds raise InvalidParameterError."""
    name = KIND_ALIASES.get(kind.strip().lower(), kind.strip().lower())
    if name not in DISTORTIONS:
        raise InvalidParameterError(
            f"unknown distortion kind {kind!r}; available: {', '.join(DISTORTIONS)}"
        )
    return name


def get_distortion(kind: str) -> Distortion:
    return DISTORTIONS[canonical_kind(kind)]()


__all__ = [
    "Distortion",
    "DistortionSpec",
    "GaussianBlur",
    "WhiteNoise",
    "ContrastDecrement",
    "BlockQuantization",
    "DISTORTIONS",
    "KIND_ALIASES",
    "DEFAULT_KINDS",
    "canonical_kind",
    "get_distortion",
]
