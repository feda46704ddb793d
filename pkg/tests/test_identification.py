import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hamident.bloch import HamiltonianModel, effective_axis
from hamident.errors import RankDeficientError
from hamident.identification import (
    AxisMeasurement,
    InconsistencyWarning,
    error_norms,
    extract_hamiltonian,
    linear_fit,
    to_gauge,
)

GRID = (0.05, 0.1, 0.15, 0.2)


def truth_measurements(model, grid=GRID):
    out = [AxisMeasurement(0, 0.0, model.d0)]
    for m in range(1, model.n_channels + 1):
        out += [AxisMeasurement(m, f, effective_axis(model, m, f)) for f in grid]
    return out


vec = st.lists(st.floats(-1, 1), min_size=3, max_size=3).map(np.array)


class TestLinearFit:
    def test_exact_line(self):
        fit = linear_fit([(0, 0.2), (0.1, 0.3), (0.2, 0.4)])
        assert fit.slope == pytest.approx(1.0)
        assert fit.intercept == pytest.approx(0.2)
        assert fit.rms == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("pts", [[(0, 0.4)], [(0.1, 0.2), (0.1, 0.3)], []])
    def test_rank_deficient(self, pts):
        with pytest.raises(RankDeficientError):
            linear_fit(pts)

    def test_against_polyfit(self):
        rng = np.random.default_rng(4)
        f = rng.uniform(0, 1, 12)
        y = 0.3 - 2 * f + rng.normal(0, 0.1, 12)
        slope, intercept = np.polyfit(f, y, 1)
        fit = linear_fit(zip(f, y))
        assert (fit.slope, fit.intercept) == pytest.approx((slope, intercept), rel=1e-10)
        assert fit(0.0) == pytest.approx(intercept)


class TestExtract:
    def test_noiseless_recovery(self, benchmark_model):
        est = extract_hamiltonian(truth_measurements(benchmark_model), truth=benchmark_model)
        assert max(est.distances) < 1e-12
        assert est.consistent

    def test_two_point_line(self):
        d0, axis, f = np.array([0.2, 0.0, 0.1]), np.array([0.3, 0.2, 0.4]), 0.25
        est = extract_hamiltonian([AxisMeasurement(0, 0.0, d0), AxisMeasurement(1, f, axis)])
        np.testing.assert_allclose(est.model.controls[0], (axis - d0) / f, atol=1e-12)
        np.testing.assert_allclose(est.model.d0, d0, atol=1e-12)

    def test_without_free_evolution(self, benchmark_model):
        entries = [e for e in truth_measurements(benchmark_model) if e.channel > 0]
        est = extract_hamiltonian(entries, truth=benchmark_model)
        assert max(est.distances) < 1e-12

    def test_gap_in_channels(self):
        with pytest.raises(ValueError):
            extract_hamiltonian([AxisMeasurement(2, 0.1, [1, 0, 0]), AxisMeasurement(2, 0.2, [2, 0, 0])])

    def test_free_entry_with_f(self):
        with pytest.raises(ValueError):
            AxisMeasurement(0, 0.1, [0, 0, 1])

    def test_inconsistency_warning(self, benchmark_model):
        entries = [e for e in truth_measurements(benchmark_model) if e.channel > 0]
        # channel 2 read out in a shifted frame: both lines are exact but disagree on d0
        bent = [
            AxisMeasurement(e.channel, e.f, e.axis + (e.channel == 2) * np.array([0.05, 0, 0]))
            for e in entries
        ]
        with pytest.warns(InconsistencyWarning):
            est = extract_hamiltonian(bent)
        assert not est.consistent

    def test_consistent_noise_is_quiet(self, benchmark_model):
        rng = np.random.default_rng(1)
        entries = [AxisMeasurement(e.channel, e.f, e.axis + rng.normal(0, 0.01, 3)) for e in truth_measurements(benchmark_model)]
        with warnings.catch_warnings():
            warnings.simplefilter("error", InconsistencyWarning)
            extract_hamiltonian(entries)

    def test_report_dict(self, benchmark_model):
        d = extract_hamiltonian(truth_measurements(benchmark_model), truth=benchmark_model).to_dict()
        assert len(d["fits"]) == 6 and len(d["distances"]) == 3
        assert d["d0"] == pytest.approx([0.2, 0.0, 0.1])

    def test_determinism(self, benchmark_model):
        rng = np.random.default_rng(2)
        entries = [AxisMeasurement(e.channel, e.f, e.axis + rng.normal(0, 0.02, 3)) for e in truth_measurements(benchmark_model)]
        a, b = extract_hamiltonian(entries), extract_hamiltonian(list(entries))
        assert a.model.d0.tobytes() == b.model.d0.tobytes()
        assert all(x.tobytes() == y.tobytes() for x, y in zip(a.model.controls, b.model.controls))


class TestInvariants:
    @settings(max_examples=100)
    @given(vec, vec, vec, st.randoms(use_true_random=False))
    def test_permutation_invariance(self, d0, d1, d2, rnd):
        model = HamiltonianModel(d0, [d1, d2])
        rng = np.random.default_rng(rnd.randint(0, 2**32 - 1))
        entries = [AxisMeasurement(e.channel, e.f, e.axis + rng.normal(0, 0.01, 3)) for e in truth_measurements(model)]
        shuffled = list(entries)
        rnd.shuffle(shuffled)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", InconsistencyWarning)
            a, b = extract_hamiltonian(entries), extract_hamiltonian(shuffled)
        assert a.model.d0.tobytes() == b.model.d0.tobytes()
        for x, y in zip(a.model.controls, b.model.controls):
            assert x.tobytes() == y.tobytes()

    @settings(max_examples=100)
    @given(vec, vec, st.sampled_from([0.25, 0.5, 2.0, 4.0, 8.0]), st.integers(0, 2**32 - 1))
    def test_scaling_covariance_exact(self, d0, d1, s, seed):
        # powers of two scale floating-point values without rounding
        rng = np.random.default_rng(seed)
        model = HamiltonianModel(d0, [d1])
        entries = [AxisMeasurement(e.channel, e.f, e.axis + rng.normal(0, 0.01, 3)) for e in truth_measurements(model)]
        scaled = [AxisMeasurement(e.channel, e.f * s, e.axis) for e in entries]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", InconsistencyWarning)
            a, b = extract_hamiltonian(entries), extract_hamiltonian(scaled)
        np.testing.assert_array_equal(b.model.controls[0], a.model.controls[0] / s)
        np.testing.assert_array_equal(b.model.d0, a.model.d0)

    @settings(max_examples=100)
    @given(vec, vec, st.floats(0.1, 10.0), st.integers(0, 2**32 - 1))
    def test_scaling_covariance_general(self, d0, d1, s, seed):
        rng = np.random.default_rng(seed)
        model = HamiltonianModel(d0, [d1])
        entries = [AxisMeasurement(e.channel, e.f, e.axis + rng.normal(0, 0.01, 3)) for e in truth_measurements(model)]
        scaled = [AxisMeasurement(e.channel, e.f * s, e.axis) for e in entries]
        a, b = extract_hamiltonian(entries), extract_hamiltonian(scaled)
        np.testing.assert_allclose(b.model.controls[0] * s, a.model.controls[0], rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(b.model.d0, a.model.d0, rtol=1e-9, atol=1e-12)


class TestErrorNorms:
    def test_identity(self, benchmark_model):
        assert error_norms(benchmark_model, benchmark_model) == [0.0, 0.0, 0.0]

    def test_published_estimates(self, benchmark_model):
        est = HamiltonianModel([0.1986, 0.0048, 0.0979], [[0.9884, 1.0163, 0.0087], [0.0531, 0.0246, 0.9819]])
        assert error_norms(est, benchmark_model) == pytest.approx([0.0054, 0.0218, 0.0613], abs=5e-4)

    def test_d0_arithmetic(self, benchmark_model):
        est = HamiltonianModel([0.1986, 0.0048, 0.0979], benchmark_model.controls)
        assert error_norms(est, benchmark_model)[0] == pytest.approx(0.0054, abs=1e-4)

    def test_mismatch(self, benchmark_model):
        with pytest.raises(ValueError):
            error_norms(HamiltonianModel([0, 0, 1]), benchmark_model)


class TestGauge:
    def test_benchmark_system_is_already_gauged(self, benchmark_model):
        g = to_gauge(benchmark_model)
        np.testing.assert_allclose(g.d0, benchmark_model.d0, atol=1e-15)

    def test_reference_lands_on_xz_plane(self):
        model = HamiltonianModel([0.1, 0.2, 0.3], [[1, 0, 0]])
        g = to_gauge(model)
        assert abs(g.d0[1]) < 1e-15 and g.d0[0] > 0
        assert np.linalg.norm(g.controls[0]) == pytest.approx(1.0)
        assert math.atan2(g.controls[0][1], g.controls[0][0]) == pytest.approx(-math.atan2(0.2, 0.1))
