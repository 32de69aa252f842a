"""
Block quantization - a codec-free stand-in for block-based compression.

Each 8x8 block (per channel) is requantized to L levels spread between the
block's own min and max, L = ceil((1 - severity) * L_MAX) + 1. At L = 1
every block collapses to its mean, the extreme blocking artifact.
"""

import math

import numpy as np

from .base import Distortion

BLOCK = 8
L_MAX = 31


class BlockQuantization(Distortion):

    @property
    def kind(self) -> str:
        return "block_quantization"

    @staticmethod
    def levels(severity: float) -> int:
        return math.ceil((1.0 - severity) * L_MAX) + 1

    def _apply(self, pixels, severity, rng):
        levels = self.levels(severity)
        out = pixels.copy()
        h, w = pixels.shape[:2]
        for r in range(0, h, BLOCK):
            for c in range(0, w, BLOCK):
                block = pixels[r:r + BLOCK, c:c + BLOCK]
                if levels == 1:
                    out[r:r + BLOCK, c:c + BLOCK] = block.mean(axis=(0, 1))
                    continue
                lo = block.min(axis=(0, 1))
                span = block.max(axis=(0, 1)) - lo
                safe = np.where(span > 0, span, 1.0)
                q = np.rint((block - lo) / safe * (levels - 1)) / (levels - 1)
                out[r:r + BLOCK, c:c + BLOCK] = np.where(span > 0, lo + q * span, block)
        return out
