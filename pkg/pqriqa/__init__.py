"""
pqriqa - blind image quality assessment with probabilistic quality representations.

Scalar quality labels are soft-mapped onto M quality anchors, a shallow CNN
learns the resulting distributions, and a linear reverse map turns predicted
distributions back into scores.
"""

__version__ = "0.1.0"
