import numpy as np
import pytest

from pqriqa.distortions import (
    DEFAULT_KINDS,
    BlockQuantization,
    DistortionSpec,
    canonical_kind,
    get_distortion,
)
from pqriqa.distortions.blockq import BLOCK
from pqriqa.errors import InvalidParameterError
from pqriqa.lab import apply_distortion, generate_sources


@pytest.fixture
def source():
    return generate_sources(1, size=32, seed=3, patch_size=8)[0]


class TestRegistry:

    @pytest.mark.parametrize("alias, kind", [
        ("blur", "gaussian_blur"),
        ("noise", "awgn"),
        ("contrast", "contrast_decrement"),
        ("block", "block_quantization"),
        ("AWGN", "awgn"),
    ])
    def test_aliases(self, alias, kind):
        assert canonical_kind(alias) == kind

    def test_unknown_kind(self):
        with pytest.raises(InvalidParameterError):
            get_distortion("jpeg2000")

    def test_spec_checks_severity(self):
        with pytest.raises(InvalidParameterError):
            DistortionSpec("awgn", 1.5)

    def test_distortion_rejects_foreign_spec(self, source):
        with pytest.raises(InvalidParameterError):
            get_distortion("awgn").apply(source.pixels, DistortionSpec("gaussian_blur", 0.5))


class TestSeverityZero:

    @pytest.mark.parametrize("kind", DEFAULT_KINDS)
    def test_identity(self, source, kind):
        out = apply_distortion(source, DistortionSpec(kind, 0.0, seed=5))
        assert np.array_equal(out, source.pixels)
        assert out is not source.pixels


class TestKinds:

    @pytest.mark.parametrize("kind", DEFAULT_KINDS)
    def test_output_stays_in_range(self, source, kind):
        out = apply_distortion(source, DistortionSpec(kind, 0.9, seed=1))
        assert out.shape == source.pixels.shape
        assert out.min() >= 0.0 and out.max() <= 1.0

    def test_noise_std(self):
        flat = np.full((200, 200, 3), 0.5)
        out = apply_distortion(flat, DistortionSpec("awgn", 0.4, seed=2))
        assert np.std(out - flat) == pytest.approx(0.1, rel=0.02)

    def test_noise_is_seeded(self, source):
        a = apply_distortion(source, DistortionSpec("awgn", 0.3, seed=9))
        b = apply_distortion(source, DistortionSpec("awgn", 0.3, seed=9))
        c = apply_distortion(source, DistortionSpec("awgn", 0.3, seed=10))
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_full_contrast_decrement_is_mid_gray(self, source):
        out = apply_distortion(source, DistortionSpec("contrast", 1.0))
        assert np.all(out == 0.5)

    def test_blur_smooths(self, source):
        out = apply_distortion(source, DistortionSpec("blur", 0.5))
        assert np.var(np.diff(out, axis=1)) < np.var(np.diff(source.pixels, axis=1))

    def test_stronger_blur_smooths_more(self, source):
        weak = apply_distortion(source, DistortionSpec("blur", 0.2))
        strong = apply_distortion(source, DistortionSpec("blur", 0.8))
        assert np.var(np.diff(strong, axis=1)) < np.var(np.diff(weak, axis=1))

    def test_block_levels(self):
        assert BlockQuantization.levels(0.0) == 32
        assert BlockQuantization.levels(1.0) == 1

    def test_full_block_quantization_flattens_blocks(self, source):
        out = apply_distortion(source, DistortionSpec("block", 1.0))
        block = out[:BLOCK, :BLOCK]
        np.testing.assert_allclose(block, block[0, 0], atol=1e-12)
        np.testing.assert_allclose(block[0, 0], source.pixels[:BLOCK, :BLOCK].mean(axis=(0, 1)), atol=1e-12)
