"""
Base Distortion - abstract base class and shared types for all distortion kinds.

Provides:
- DistortionSpec dataclass (kind, severity, seed)
- Abstract Distortion class with severity validation, the severity-0
  identity contract and output clamping
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np

from pqriqa.errors import InvalidParameterError


# =============================================================================
# Shared Data Classes
# =============================================================================

@dataclass(frozen=True)
class DistortionSpec:
    """One parametric impairment: kind, severity in [0, 1], seed for noise."""
    kind: str
    severity: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.severity <= 1.0:
            raise InvalidParameterError(f"severity must be in [0, 1], got {self.severity}")


# =============================================================================
# Abstract Base Distortion
# =============================================================================

class Distortion(ABC):
    """
    Abstract base class for reference-free parametric distortions.

    Subclasses must implement:
    - kind: registry name (e.g. "gaussian_blur")
    - _apply(): the impairment for severity in (0, 1]

    Subclasses drawing random numbers set `stochastic = True`; they then
    receive a Generator seeded from the spec.
    """

    stochastic = False

    @property
    @abstractmethod
    def kind(self) -> str:
        """Registry name for this distortion."""
        pass

    @abstractmethod
    def _apply(self, pixels: np.ndarray, severity: float,
               rng: Optional[np.random.Generator]) -> np.ndarray:
        """
        Impair an H x W x C image.

        Args:
            pixels: Float image in [0, 1]
            severity: Strength in (0, 1]
            rng: Random generator (None unless stochastic)

        Returns:
            Impaired image (clamped by the caller)
        """
        pass

    def apply(self, pixels: np.ndarray, spec: DistortionSpec) -> np.ndarray:
        """Apply `spec` to `pixels`; severity 0 returns an exact copy."""
        if spec.kind != self.kind:
            raise InvalidParameterError(f"{self.kind} cannot apply a {spec.kind} spec")
        pixels = np.asarray(pixels, dtype=np.float64)
        if spec.severity == 0:
            return pixels.copy()
        rng = np.random.default_rng(spec.seed) if self.stochastic else None
        return np.clip(self._apply(pixels, float(spec.severity), rng), 0.0, 1.0)
