"""Shared fixtures: tiny synthetic labs and tiny networks."""

import numpy as np
import pytest

from pqriqa.lab import OpinionModel, build_dataset
from pqriqa.network import PQR, SQR, ArchConfig, TINY_CONV_SPECS, build


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def tiny_lab(tmp_path_factory):
    """6 sources x 2 kinds x 2 levels of 16x16 images with 8x8 training crops."""
    out = tmp_path_factory.mktemp("tiny_lab")
    return build_dataset(
        n_sources=6, kinds=["blur", "awgn"], levels=2, opinions=OpinionModel(),
        seed=5, out_dir=out, size=16, patch_size=8, train_crops=4,
    )


@pytest.fixture(scope="session")
def quiet_lab(tmp_path_factory):
    """Noise-free opinions: MOS equals the true quality curve."""
    out = tmp_path_factory.mktemp("quiet_lab")
    return build_dataset(
        n_sources=2, kinds=["blur", "contrast"], levels=(0.2, 0.5, 0.8),
        opinions=OpinionModel(sigma=0.0), seed=1, out_dir=out, size=16, patch_size=8,
        train_crops=2,
    )


def tiny_arch(head: str = PQR, m: int = 5, dropout_rate: float = 0.5, fc_width: int = 8) -> ArchConfig:
    return ArchConfig(input_size=8, conv_specs=TINY_CONV_SPECS, fc_width=fc_width, head=head, m=m,
                      dropout_rate=dropout_rate)


@pytest.fixture
def tiny_pqr_net():
    return build(tiny_arch(PQR), seed=3)


@pytest.fixture
def tiny_sqr_net():
    return build(tiny_arch(SQR), seed=3)
