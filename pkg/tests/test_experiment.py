"""
Desk-scale end-to-end comparison of the two heads.

Deselected by default; run with `pytest -m slow`. Budget is roughly a
quarter hour per comparison on a 4-core machine.
"""

import pytest

from pqriqa.distortions import DEFAULT_KINDS
from pqriqa.harness import ExperimentConfig, compare
from pqriqa.lab import OpinionModel, build_dataset
from pqriqa.network import TrainConfig

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def desk_config(tmp_path_factory):
    manifest = build_dataset(n_sources=60, kinds=DEFAULT_KINDS, levels=3,
                             opinions=OpinionModel(sigma=0.19, subjects=35), seed=0,
                             out_dir=tmp_path_factory.mktemp("desk"), workers=4)
    cfg = ExperimentConfig(manifest=manifest.root, arch="desk", train=TrainConfig(epochs=30),
                           repetitions=5, seed=0, workers=4)
    return cfg, manifest


@pytest.fixture(scope="module")
def comparison(desk_config):
    cfg, manifest = desk_config
    return compare(cfg, manifest)


def test_pqr_reaches_target(comparison):
    assert comparison.split_seeds_match()
    assert comparison.pqr.final_median("srcc") >= 0.85


def test_pqr_not_worse_than_sqr(comparison):
    assert comparison.pqr.final_median("srcc") >= comparison.sqr.final_median("srcc")


@pytest.mark.xfail(strict=False, reason="statistical claim; a failure is a prompt to investigate")
def test_pqr_converges_no_later(comparison):
    conv = comparison.convergence()
    assert conv["pqr"] <= conv["sqr"]


def test_rerun_is_byte_identical(desk_config, comparison):
    cfg, manifest = desk_config
    again = compare(cfg, manifest)
    assert again.summary_text() == comparison.summary_text()
    assert again.epochs_csv() == comparison.epochs_csv()
    for first, second in zip(comparison.reports, again.reports):
        assert first.csv() == second.csv()
