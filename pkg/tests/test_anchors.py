from itertools import combinations

import numpy as np
import pytest

from pqriqa.anchors import (
    INIT_OPTIMAL,
    INIT_UNIFORM,
    LLOYD_MAX,
    UNIFORM,
    AnchorSet,
    ScoreRange,
    _reseed_empty,
    assign_bin,
    lloyd_max,
    make_anchors,
    quantization_mse,
    uniform_anchors,
)
from pqriqa.errors import DegenerateQuantizerError, InvalidParameterError, OutOfRangeError


def brute_force_mse(scores, m):
    """Minimum MSE over all contiguous partitions of the sorted scores."""
    y = np.sort(np.asarray(scores, dtype=float))
    n = y.size
    best = np.inf
    for cuts in combinations(range(1, n), m - 1):
        edges = (0,) + cuts + (n,)
        sse = sum(np.sum((y[a:b] - y[a:b].mean()) ** 2) for a, b in zip(edges[:-1], edges[1:]))
        best = min(best, sse / n)
    return best


class TestUniformAnchors:

    def test_five_bins_on_unit_range(self):
        a = uniform_anchors(ScoreRange(), 5)
        assert a.centers == (0.1, 0.3, 0.5, 0.7, 0.9)
        assert a.boundaries == (0.2, 0.4, 0.6, 0.8)
        assert a.method == UNIFORM

    def test_single_bin(self):
        a = uniform_anchors(ScoreRange(), 1)
        assert a.centers == (0.5,)
        assert a.boundaries == ()

    def test_hundred_point_scale(self):
        a = uniform_anchors(ScoreRange(0, 100), 2)
        assert a.centers == (25.0, 75.0)
        assert a.boundaries == (50.0,)

    def test_zero_bins_rejected(self):
        with pytest.raises(InvalidParameterError):
            uniform_anchors(ScoreRange(), 0)

    @pytest.mark.parametrize("m", range(1, 11))
    def test_equal_bin_widths(self, m):
        a = uniform_anchors(ScoreRange(), m)
        edges = np.concatenate([[0.0], a.boundaries, [1.0]])
        np.testing.assert_allclose(np.diff(edges), 1.0 / m, atol=1e-12)


class TestAnchorSet:

    def test_rejects_non_interleaved_boundaries(self):
        with pytest.raises(InvalidParameterError):
            AnchorSet(centers=(0.2, 0.4), boundaries=(0.5,), method=UNIFORM)

    def test_rejects_lloyd_boundary_off_midpoint(self):
        with pytest.raises(InvalidParameterError):
            AnchorSet(centers=(0.2, 0.4), boundaries=(0.25,), method=LLOYD_MAX)

    def test_rejects_centers_outside_range(self):
        with pytest.raises(InvalidParameterError):
            AnchorSet(centers=(0.5, 1.5), boundaries=(1.0,), method=UNIFORM)

    def test_record_round_trip(self):
        a, _ = lloyd_max([0.1, 0.2, 0.8, 0.85, 0.33], 3)
        assert AnchorSet.from_record(a.to_record()) == a

    def test_score_range_needs_lo_below_hi(self):
        with pytest.raises(InvalidParameterError):
            ScoreRange(1.0, 1.0)


class TestLloydMax:

    def test_two_point_masses(self):
        a, report = lloyd_max([0, 0, 1, 1], 2)
        assert a.centers == pytest.approx((0.0, 1.0), abs=1e-12)
        assert a.boundaries == pytest.approx((0.5,), abs=1e-12)
        assert report.mse == pytest.approx(0.0, abs=1e-15)

    def test_three_scores_two_cells(self):
        a, _ = lloyd_max([0.1, 0.2, 0.8], 2)
        assert a.centers == pytest.approx((0.15, 0.8), abs=1e-12)
        assert a.boundaries == pytest.approx((0.475,), abs=1e-12)

    def test_single_cluster(self):
        a, report = lloyd_max([0.3, 0.3, 0.3], 1)
        assert a.centers == pytest.approx((0.3,), abs=1e-12)
        assert report.mse == pytest.approx(0.0, abs=1e-15)

    def test_too_many_levels(self):
        with pytest.raises(DegenerateQuantizerError):
            lloyd_max([0.2, 0.2, 0.4], 3)

    def test_empty_scores(self):
        with pytest.raises(InvalidParameterError):
            lloyd_max([], 2)

    def test_scores_outside_explicit_range(self):
        with pytest.raises(OutOfRangeError):
            lloyd_max([0.2, 1.4], 2, range_=ScoreRange())

    def test_boundaries_are_midpoints(self, rng):
        a, _ = lloyd_max(rng.random(50), 6)
        c = np.asarray(a.centers)
        np.testing.assert_allclose(a.boundaries, (c[:-1] + c[1:]) / 2, atol=1e-9)


class TestLloydMaxOptimality:

    def test_matches_brute_force_on_small_instances(self):
        rng = np.random.default_rng(2024)
        checked = 0
        while checked < 500:
            n = int(rng.integers(1, 11))
            # coarse grid so many instances contain ties
            scores = rng.integers(0, 21, size=n) / 20
            m = int(rng.integers(1, 4))
            if np.unique(scores).size < m:
                continue
            _, report = lloyd_max(scores, m, exact=True)
            assert report.mse == pytest.approx(brute_force_mse(scores, m), abs=1e-9)
            checked += 1

    def test_mse_non_increasing_per_iteration(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            scores = rng.random(int(rng.integers(3, 40)))
            m = int(rng.integers(1, min(8, scores.size) + 1))
            _, report = lloyd_max(scores, m)
            assert np.all(np.diff(report.mse_history) <= 1e-12)
            assert report.mse >= 0

    # {0, .45} | {.55, 1} is a fixed point reached from the uniform centers;
    # {0} | {.45, .55, 1} is optimal
    LOCAL_TRAP = [0.0, 0.45, 0.55, 1.0]

    def test_default_reports_the_uniform_start_run(self):
        _, report = lloyd_max(self.LOCAL_TRAP, 2)
        assert report.init == INIT_UNIFORM
        assert report.mse_history[0] == pytest.approx(
            quantization_mse(np.asarray(self.LOCAL_TRAP), np.array([0.25, 0.75])), abs=1e-15)
        assert report.mse == pytest.approx(0.050625, abs=1e-12)
        assert report.mse > brute_force_mse(self.LOCAL_TRAP, 2)

    def test_default_anchors_come_from_the_uniform_start(self):
        a, _ = lloyd_max(self.LOCAL_TRAP, 2)
        assert a.centers == pytest.approx((0.225, 0.775), abs=1e-12)

    def test_exact_reports_the_refined_run(self):
        _, report = lloyd_max(self.LOCAL_TRAP, 2, exact=True)
        assert report.init == INIT_OPTIMAL
        assert report.mse == pytest.approx(brute_force_mse(self.LOCAL_TRAP, 2), abs=1e-12)
        assert report.mse_history[0] == pytest.approx(report.mse, abs=1e-15)

    def test_exact_keeps_uniform_run_when_it_is_optimal(self):
        _, report = lloyd_max([0.1, 0.2, 0.8], 2, exact=True)
        assert report.init == INIT_UNIFORM


class TestReseedEmpty:

    def test_moves_to_score_farthest_from_own_center(self):
        scores = np.array([0.0, 0.1, 0.5, 0.9])
        centers = np.array([0.05, 0.6, 0.9])
        out = _reseed_empty(scores, centers, np.array([False, True, False]))
        np.testing.assert_allclose(out, [0.0, 0.05, 0.9])

    def test_skips_scores_that_hold_a_center(self):
        scores = np.array([0.05, 0.5, 0.9])
        centers = np.array([0.05, 0.8, 0.9])
        out = _reseed_empty(scores, centers, np.array([False, True, False]))
        np.testing.assert_allclose(out, [0.05, 0.5, 0.9])

    def test_empty_cell_during_fit_keeps_centers_distinct(self):
        # middle uniform cell starts empty
        a, report = lloyd_max([0.0, 0.02, 0.04, 0.96, 0.98, 1.0], 3)
        assert np.all(np.diff(a.centers) > 0)
        assert np.all(np.diff(report.mse_history) <= 1e-12)


class TestAssignBin:

    @pytest.fixture
    def five(self):
        return uniform_anchors(ScoreRange(), 5)

    def test_interior_score(self, five):
        assert assign_bin(five, 0.35) == 2

    def test_upper_edge_maps_to_last_bin(self, five):
        assert assign_bin(five, 1.0) == 5

    def test_boundary_belongs_to_upper_bin(self, five):
        assert assign_bin(five, 0.2) == 2

    def test_lower_edge(self, five):
        assert assign_bin(five, 0.0) == 1

    def test_out_of_range(self, five):
        with pytest.raises(OutOfRangeError):
            assign_bin(five, 1.01)


class TestMakeAnchors:

    def test_lloyd_needs_scores(self):
        with pytest.raises(InvalidParameterError):
            make_anchors(LLOYD_MAX, 3)

    def test_unknown_method(self):
        with pytest.raises(InvalidParameterError):
            make_anchors("kmeans", 3)

    def test_lloyd_uses_scores(self):
        a = make_anchors(LLOYD_MAX, 2, scores=[0.1, 0.2, 0.8])
        assert a.method == LLOYD_MAX
        assert a.centers == pytest.approx((0.15, 0.8), abs=1e-12)
