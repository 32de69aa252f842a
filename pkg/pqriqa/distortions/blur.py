"""Gaussian blur - separable kernel, reflect padding."""

from scipy import ndimage

from .base import Distortion

# Blur sigma at severity 1, in pixels
SIGMA_MAX = 4.0


class GaussianBlur(Distortion):
    """sigma_blur = severity * SIGMA_MAX, applied along rows then columns."""

    @property
    def kind(self) -> str:
        return "gaussian_blur"

    def _apply(self, pixels, severity, rng):
        sigma = severity * SIGMA_MAX
        out = ndimage.gaussian_filter1d(pixels, sigma, axis=0, mode="reflect")
        return ndimage.gaussian_filter1d(out, sigma, axis=1, mode="reflect")
