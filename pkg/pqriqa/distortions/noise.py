"""Additive white Gaussian noise."""

from .base import Distortion

# Noise std at severity 1
NOISE_STD_MAX = 0.25


class WhiteNoise(Distortion):
    """Add N(0, (severity * NOISE_STD_MAX)^2) independently per pixel and channel."""

    stochastic = True

    @property
    def kind(self) -> str:
        return "awgn"

    def _apply(self, pixels, severity, rng):
        return pixels + rng.normal(0.0, severity * NOISE_STD_MAX, size=pixels.shape)
