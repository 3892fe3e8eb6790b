"""Normal, bootstrap, two-sample, and prediction bands."""

import numpy as np
import pytest

from funcband import (
    DegenerateVarianceError,
    FunctionalSample,
    GridError,
    band_covers,
    bootstrap_scb,
    make_eval_grid,
    normal_scb,
    prediction_band,
    split_half_bandwidth,
    two_sample_scb,
    uniform_design_grid,
)
from funcband.simlab import gen_model1, m1_mean


@pytest.fixture(scope="module")
def sample50():
    return gen_model1(50, 50, seed_or_rng=100)


@pytest.fixture(scope="module")
def eval_grid():
    return make_eval_grid(60)


class TestBandResult:
    def test_symmetry_exact(self, sample50, eval_grid):
        band = normal_scb(sample50, eval_grid, 0.05, seed=1)
        np.testing.assert_array_equal(band.upper, band.center + band.half_width)
        np.testing.assert_array_equal(band.lower, band.center - band.half_width)
        assert np.all(band.half_width >= 0)

    def test_coverage_checker_agrees_with_scan(self, sample50, eval_grid):
        band = normal_scb(sample50, eval_grid, 0.05, seed=1)
        rng = np.random.default_rng(0)
        for _ in range(20):
            curve = band.center + rng.uniform(-2, 2) * band.half_width * rng.uniform(0, 1.5)
            direct = all(
                band.lower[i] <= curve[i] <= band.upper[i]
                for i in range(len(curve))
            )
            assert band_covers(band, curve) == direct

    def test_level_monotonicity(self, sample50, eval_grid):
        # same seed => same simulated sup sample => nested bands
        b95 = normal_scb(sample50, eval_grid, 0.05, gamma=0.05, seed=2)
        b99 = normal_scb(sample50, eval_grid, 0.05, gamma=0.01, seed=2)
        assert b99.threshold >= b95.threshold
        assert np.all(b99.half_width >= b95.half_width)

    def test_scaling_equivariance(self, sample50, eval_grid):
        s = 3.7
        scaled = FunctionalSample(grid=sample50.grid, values=s * sample50.values)
        a = normal_scb(sample50, eval_grid, 0.05, seed=3)
        b = normal_scb(scaled, eval_grid, 0.05, seed=3)
        # correlation is scale-free up to roundoff in the shrinkage intensity
        assert b.threshold == pytest.approx(a.threshold, rel=1e-9)
        np.testing.assert_allclose(b.center, s * a.center, atol=1e-10)
        np.testing.assert_allclose(b.half_width, s * a.half_width, atol=1e-9)
        truth = m1_mean(eval_grid.points)
        assert band_covers(a, truth) == band_covers(b, s * truth)


class TestNormalScb:
    def test_one_replication_covers(self, sample50, eval_grid):
        band = normal_scb(sample50, eval_grid, 0.05, seed=4)
        assert band.method == "normal"
        assert band_covers(band, m1_mean(eval_grid.points))

    def test_degenerate_sample_errors(self, eval_grid):
        grid = uniform_design_grid(30)
        row = np.sin(2 * np.pi * grid.points)
        clones = FunctionalSample(grid=grid, values=np.tile(row, (5, 1)))
        with pytest.raises(DegenerateVarianceError):
            normal_scb(clones, eval_grid, 0.15, seed=5)

    def test_json_and_csv_round_trip(self, sample50, eval_grid, tmp_path):
        band = normal_scb(sample50, eval_grid, 0.05, seed=6)
        payload = band.to_dict()
        for key in ("level", "method", "threshold", "grid", "center", "lower", "upper"):
            assert key in payload
        path = tmp_path / "band.csv"
        band.write_csv(path)
        data = np.genfromtxt(path, delimiter=",", names=True)
        np.testing.assert_allclose(data["center"], band.center, atol=1e-12)
        np.testing.assert_allclose(data["lower"], band.lower, atol=1e-12)


class TestBootstrapScb:
    def test_single_resample_order_statistic(self, eval_grid):
        sample = gen_model1(12, 30, seed_or_rng=200)
        band = bootstrap_scb(sample, eval_grid, 0.1, bootstraps=1, seed=7)
        assert band.threshold > 0  # the single z* value, by the ceil convention
        assert band.method == "bootstrap"

    def test_deterministic_across_threads(self, eval_grid):
        sample = gen_model1(12, 30, seed_or_rng=201)
        a = bootstrap_scb(sample, eval_grid, 0.1, bootstraps=600, seed=8, threads=1)
        b = bootstrap_scb(sample, eval_grid, 0.1, bootstraps=600, seed=8, threads=8)
        assert a.threshold == b.threshold
        np.testing.assert_array_equal(a.half_width, b.half_width)

    def test_uses_original_sigma(self, eval_grid):
        sample = gen_model1(12, 30, seed_or_rng=202)
        normal = normal_scb(sample, eval_grid, 0.1, seed=9)
        boot = bootstrap_scb(sample, eval_grid, 0.1, bootstraps=500, seed=9)
        # half widths are proportional: both are c * sigma_hat / sqrt(n)
        ratio = boot.half_width / normal.half_width
        np.testing.assert_allclose(ratio, ratio[0], atol=1e-10)


class TestTwoSampleScb:
    def test_self_comparison_never_rejects(self, sample50, eval_grid):
        res = two_sample_scb(sample50, sample50, eval_grid, 0.05, 0.05, seed=10)
        np.testing.assert_allclose(res.band.center, 0.0, atol=1e-10)
        assert not res.reject

    def test_unit_shift_rejects(self, eval_grid):
        for rep in range(5):
            a = gen_model1(50, 50, seed_or_rng=300 + rep)
            b = gen_model1(50, 50, seed_or_rng=400 + rep)
            shifted = FunctionalSample(grid=b.grid, values=b.values + 1.0)
            res = two_sample_scb(a, shifted, eval_grid, 0.05, 0.05, seed=11)
            assert res.reject

    def test_grid_mismatch_errors(self, sample50, eval_grid):
        other = gen_model1(10, 40, seed_or_rng=12)
        with pytest.raises((GridError, ValueError)):
            two_sample_scb(sample50, other, eval_grid, 0.05, 0.05, seed=12)


class TestPredictionBand:
    def test_no_root_n_factor(self, sample50, eval_grid):
        normal = normal_scb(sample50, eval_grid, 0.05, seed=13)
        pred = prediction_band(sample50, eval_grid, 0.05, seed=13)
        assert pred.threshold == normal.threshold  # same correlation, same seed
        np.testing.assert_allclose(
            pred.half_width, normal.half_width * np.sqrt(sample50.n_curves), atol=1e-10
        )

    def test_degenerate_training_errors(self, eval_grid):
        grid = uniform_design_grid(30)
        row = np.cos(2 * np.pi * grid.points)
        clones = FunctionalSample(grid=grid, values=np.tile(row, (6, 1)))
        with pytest.raises(DegenerateVarianceError):
            prediction_band(clones, eval_grid, 0.15, seed=14)


class TestSplitHalfBandwidth:
    def test_single_candidate(self):
        sample = gen_model1(12, 30, seed_or_rng=500)
        best, _ = split_half_bandwidth(sample, [0.2], seed=15)
        assert best.values[0] == 0.2

    def test_ill_posed_candidate_skipped(self):
        sample = gen_model1(12, 30, seed_or_rng=501)
        best, _ = split_half_bandwidth(sample, [0.01, 0.25], seed=16)
        assert best.values[0] == 0.25
