"""Contrast decrement toward mid-gray."""

from .base import Distortion


class ContrastDecrement(Distortion):
    """pixels <- 0.5 + (1 - severity) (pixels - 0.5)."""

    @property
    def kind(self) -> str:
        return "contrast_decrement"

    def _apply(self, pixels, severity, rng):
        return 0.5 + (1.0 - severity) * (pixels - 0.5)
