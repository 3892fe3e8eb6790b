"""Synthetic data generators, the local bump alternative, and the
replication-loop experiment table."""

import json
import math

import numpy as np
import pytest

from funcband import FuncbandError
from funcband.simlab import (
    ExperimentRow,
    ExperimentTable,
    ModelSpec,
    _connector_coefs,
    _hump,
    _hump_d1,
    _hump_d2,
    bump_function,
    gen_model1,
    gen_model2,
    gen_model3,
    known_R_threshold,
    m1_mean,
    m2_covariance,
    m2_mean,
    ou_covariance,
    run_experiment,
    true_mean,
)


class TestBumpFunction:
    def test_peak_and_support(self):
        assert bump_function(np.array([0.5]))[0] == pytest.approx(0.2, abs=1e-15)
        np.testing.assert_array_equal(bump_function(np.array([0.0, 0.3, 0.4, 0.6, 0.7, 1.0])), 0.0)

    def test_sup_is_peak(self):
        x = np.linspace(0, 1, 100001)
        g = bump_function(x)
        assert g.max() == pytest.approx(0.2, abs=1e-12)
        assert g.min() >= -1e-9  # connectors do not undershoot materially

    def test_c2_continuity_at_junctions(self):
        # [DERIVED] polynomial derivatives of the quintic connectors match the
        # hump (or zero) in value, slope, and curvature at all four junctions
        left, right = _connector_coefs()
        powers = np.arange(6, dtype=float)

        def poly_derivs(coefs, x):
            val = float((x**powers) @ coefs)
            d1 = float((powers[1:] * x ** (powers[1:] - 1)) @ coefs[1:])
            d2c = powers[2:] * (powers[2:] - 1) * x ** (powers[2:] - 2)
            return val, d1, float(d2c @ coefs[2:])

        for x, target in ((0.4, (0.0, 0.0, 0.0)),
                          (0.45, (_hump(0.45), _hump_d1(0.45), _hump_d2(0.45)))):
            np.testing.assert_allclose(poly_derivs(left, x), target, atol=1e-7)
        for x, target in ((0.55, (_hump(0.55), _hump_d1(0.55), _hump_d2(0.55))),
                          (0.6, (0.0, 0.0, 0.0))):
            np.testing.assert_allclose(poly_derivs(right, x), target, atol=1e-7)

    def test_finite_difference_smoothness(self):
        # the second divided difference converges (a mere C^1 junction would
        # make it blow up like 1/dx as the mesh refines)
        maxes = []
        for m in (3001, 6001, 12001):
            x = np.linspace(0.35, 0.65, m)
            g = bump_function(x)
            maxes.append(np.abs(np.diff(g, 2)).max() / (x[1] - x[0]) ** 2)
        assert maxes[-1] < 500.0
        assert abs(maxes[2] - maxes[1]) < 0.02 * maxes[1]


class TestGenerators:
    def test_model1_mean_and_covariance_mc(self):
        sample = gen_model1(4000, 20, seed_or_rng=0)
        x = sample.grid.points
        np.testing.assert_allclose(sample.values.mean(axis=0), m1_mean(x), atol=0.02)
        emp = np.cov(sample.values, rowvar=False, ddof=1)
        np.testing.assert_allclose(emp, ou_covariance(x[:, None], x[None, :]), atol=0.005)

    def test_model2_moments_mc(self):
        # [DERIVED] var Y(x) = R2(x,x) + 0.01; centered factors have mean zero
        sample = gen_model2(200000, 20, seed_or_rng=0)
        x = sample.grid.points
        z_mean = sample.values.mean(axis=0) - m2_mean(x)
        np.testing.assert_allclose(z_mean, 0.0, atol=0.005)
        analytic = m2_covariance(x, x) + 0.01
        emp = sample.values.var(axis=0, ddof=1)
        assert np.abs(emp - analytic).max() <= 0.02 * analytic.max()
        # [DERIVED] pointwise sd ranges over [0.2955, 0.3480] on this grid
        sd = np.sqrt(analytic)
        assert 0.29 < sd.min() < 0.30 and 0.34 < sd.max() < 0.35

    def test_model3_hypotheses_share_noise(self):
        h0 = gen_model3(50, 40, seed_or_rng=7, hypothesis="h0")
        hn = gen_model3(50, 40, seed_or_rng=7, hypothesis="hn")
        scale = math.log(50) / math.sqrt(50)
        shift = scale * bump_function(h0.grid.points)
        np.testing.assert_allclose(
            hn.values - h0.values, np.broadcast_to(shift, h0.values.shape), atol=1e-12)

    def test_true_mean_dispatch(self):
        x = np.linspace(0, 1, 11)
        np.testing.assert_array_equal(true_mean("m1", x, 50), m1_mean(x))
        np.testing.assert_array_equal(true_mean("m3-h0", x, 50), x)
        hn = true_mean("m3-hn", x, 50)
        assert hn[5] > x[5]
        with pytest.raises(FuncbandError):
            true_mean("m4", x, 50)

    def test_generator_determinism(self):
        a = gen_model2(10, 15, seed_or_rng=3)
        b = gen_model2(10, 15, seed_or_rng=3)
        np.testing.assert_array_equal(a.values, b.values)


class TestModelSpec:
    def test_validation(self):
        with pytest.raises(FuncbandError):
            ModelSpec(model="m9", n=10, p=10, h=0.1)
        with pytest.raises(FuncbandError):
            ModelSpec(model="m1", n=1, p=10, h=0.1)

    def test_unknown_method(self):
        spec = ModelSpec(model="m1", n=5, p=10, h=0.2, reps=1)
        with pytest.raises(FuncbandError):
            run_experiment(spec, "magic")


class TestRunExperiment:
    @pytest.fixture(scope="class")
    def small_spec(self):
        return ModelSpec(model="m1", n=10, p=20, h=0.15, reps=8, seed=42,
                         grid_size=30, paths=2000)

    def test_deterministic_and_thread_invariant(self, small_spec):
        a = run_experiment(small_spec, "normal-scb", threads=1)
        b = run_experiment(small_spec, "normal-scb", threads=4)
        assert a.rate == b.rate
        assert a.median_threshold == b.median_threshold
        assert a.failures == b.failures == 0

    def test_stderr_is_binomial(self, small_spec):
        row = run_experiment(small_spec, "normal-scb")
        done = small_spec.reps - row.failures
        assert row.stderr == pytest.approx(
            math.sqrt(row.rate * (1 - row.rate) / done), abs=1e-12)

    def test_zero_reps_gives_nan_row(self):
        spec = ModelSpec(model="m1", n=10, p=20, h=0.15, reps=0, grid_size=20,
                         paths=2000)
        row = run_experiment(spec, "normal-scb")
        assert math.isnan(row.rate) and math.isnan(row.median_threshold)
        assert not row.flagged

    def test_plrt_method_row(self):
        spec = ModelSpec(model="m3-h0", n=20, p=20, h=0.2, reps=5, seed=1,
                         grid_size=20, paths=2000)
        row = run_experiment(spec, "plrt-known")
        assert 0.0 <= row.rate <= 1.0
        assert math.isnan(row.median_threshold)  # tests report no band threshold

    def test_table_serialization(self, small_spec):
        row = run_experiment(small_spec, "normal-scb")
        table = ExperimentTable(rows=[row])
        parsed = json.loads(table.to_json())
        assert parsed[0]["rate"] == row.rate
        header = table.to_csv().splitlines()[0].split(",")
        assert header == list(ExperimentRow.__dataclass_fields__)


class TestKnownThreshold:
    def test_smoothed_threshold_in_expected_range(self):
        # [DERIVED] model-1 covariance pushed through the p=50, h=0.05 smoother
        c = known_R_threshold("m1", grid_size=100, paths=20000, seed=0, p=50, h=0.05)
        assert 2.55 <= c <= 2.80

    def test_monotone_in_gamma(self):
        c05 = known_R_threshold("m1", grid_size=40, gamma=0.05, paths=10000, seed=1)
        c01 = known_R_threshold("m1", grid_size=40, gamma=0.01, paths=10000, seed=1)
        assert c01 > c05

    def test_p_and_h_must_come_together(self):
        with pytest.raises(FuncbandError):
            known_R_threshold("m1", grid_size=20, paths=10000, seed=0, p=50)
