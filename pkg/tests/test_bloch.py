import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from hamident.bloch import (
    AxisSpherical,
    HamiltonianModel,
    cartesian_from_spherical,
    effective_axis,
    evolve_z,
    rotate,
    spherical_from_cartesian,
)
from hamident.errors import InvalidAxisError, UnknownChannelError

finite = st.floats(-3, 3, allow_nan=False)
vectors = st.tuples(finite, finite, finite)
axes = vectors.filter(lambda v: np.linalg.norm(v) > 1e-3)
angles = st.floats(-10, 10, allow_nan=False)


def skew(d):
    x, y, z = d
    return np.array([[0, -z, y], [z, 0, -x], [-y, x, 0]])


def precess_by_expm(v, d, t):
    """ds/dt = d x s integrated by matrix exponential."""
    return expm(skew(np.asarray(d, float)) * t) @ np.asarray(v, float)


class TestRotate:
    def test_about_itself(self):
        np.testing.assert_allclose(rotate([0, 0, 1], [0, 0, 1], 2.7), [0, 0, 1], atol=1e-15)

    def test_right_hand_rule(self):
        np.testing.assert_allclose(rotate([1, 0, 0], [0, 0, 1], math.pi / 2), [0, 1, 0], atol=1e-15)

    def test_equatorial_prep_example(self):
        out = rotate([0, 0, 1], [0.8944, 0, 0.4472], 1.8235)
        np.testing.assert_allclose(out, [0.5, -0.866, 0.0], atol=1e-3)

    def test_zero_axis(self):
        with pytest.raises(InvalidAxisError):
            rotate([1, 0, 0], [0, 0, 0], 1.0)

    @settings(max_examples=200)
    @given(vectors, axes, st.floats(0, 20))
    def test_matches_matrix_exponential(self, v, d, t):
        n = np.linalg.norm(d)
        np.testing.assert_allclose(rotate(v, d, n * t), precess_by_expm(v, d, t), atol=1e-9)

    @settings(max_examples=300)
    @given(vectors, axes, angles)
    def test_norm_preserved(self, v, a, angle):
        assert np.linalg.norm(rotate(v, a, angle)) == pytest.approx(np.linalg.norm(v), abs=1e-12)

    @settings(max_examples=300)
    @given(vectors, axes, angles, angles)
    def test_composition(self, v, a, alpha, beta):
        np.testing.assert_allclose(
            rotate(v, a, alpha + beta), rotate(rotate(v, a, alpha), a, beta), atol=1e-10
        )


class TestEvolveZ:
    def test_t0(self):
        assert evolve_z([0, 0, 1], [0.2, 0, 0.2], 0.0) == pytest.approx(1.0)

    def test_half_period(self):
        assert evolve_z([0, 0, 1], [0.2, 0, 0.2], math.pi / 0.2828) == pytest.approx(0.0, abs=1e-3)

    @pytest.mark.parametrize("t", [0.0, 1.3, 17.0, 1e3])
    def test_state_on_axis(self, t):
        assert evolve_z([0, 0, 1], [0, 0, 5], t) == pytest.approx(1.0)

    def test_vectorized(self):
        t = np.linspace(0, 10, 7)
        z = evolve_z([0, 0, 1], [0.2, 0, 0.2], t)
        assert z.shape == t.shape

    def test_rejects_non_unit_state(self):
        with pytest.raises(ValueError):
            evolve_z([0, 0, 2], [1, 0, 0], 1.0)

    @settings(max_examples=300)
    @given(axes, st.floats(0, 100))
    def test_pole_closed_form(self, d, t):
        a = spherical_from_cartesian(d)
        expected = math.cos(a.theta) ** 2 + math.sin(a.theta) ** 2 * math.cos(a.omega * t)
        assert evolve_z([0, 0, 1], d, t) == pytest.approx(expected, abs=1e-10)

    @settings(max_examples=300)
    @given(axes, st.floats(0, 100))
    def test_pole_trajectory_blind_to_dz_sign(self, d, t):
        mirrored = (d[0], d[1], -d[2])
        assert evolve_z([0, 0, 1], d, t) == pytest.approx(evolve_z([0, 0, 1], mirrored, t), abs=1e-12)


class TestSpherical:
    def test_fig2_axis(self):
        a = spherical_from_cartesian([0.2, 0, 0.2])
        assert (a.omega, a.theta, a.phi) == pytest.approx((0.2828, 0.7854, 0.0), abs=1e-4)

    def test_pole_convention(self):
        assert spherical_from_cartesian([0, 0, 1]) == AxisSpherical(1.0, 0.0, 0.0)

    def test_fig3_axis(self):
        a = spherical_from_cartesian([0.3, 0.1, 0.1])
        assert (a.omega, a.theta, a.phi) == pytest.approx((0.3317, 1.2645, 0.3218), abs=1e-4)

    def test_zero_vector(self):
        with pytest.raises(InvalidAxisError):
            spherical_from_cartesian([0, 0, 0])

    @pytest.mark.parametrize(
        "axis, expected, tol",
        [
            (AxisSpherical(0.2828, 0.7854, 0.0), (0.2, 0, 0.2), 1e-4),
            (AxisSpherical(1.0, 0.0, 2.5), (0, 0, 1), 1e-15),
            (AxisSpherical(0.3317, 1.2645, 0.3218), (0.3, 0.1, 0.1), 1e-3),
        ],
    )
    def test_to_cartesian(self, axis, expected, tol):
        np.testing.assert_allclose(cartesian_from_spherical(axis), expected, atol=tol)

    def test_range_validation(self):
        with pytest.raises(ValueError):
            AxisSpherical(-1.0, 0.1, 0.0)
        with pytest.raises(ValueError):
            AxisSpherical(1.0, 0.1, -math.pi)

    @settings(max_examples=300)
    @given(axes)
    def test_round_trip(self, d):
        a = spherical_from_cartesian(d)
        if math.sin(a.theta) < 1e-6:
            return
        back = cartesian_from_spherical(a)
        assert np.linalg.norm(back - d) <= 1e-12 * np.linalg.norm(d)


class TestEffectiveAxis:
    def test_benchmark_settings(self, benchmark_model):
        np.testing.assert_allclose(effective_axis(benchmark_model, 2, 0.1), [0.2, 0, 0.2])
        np.testing.assert_allclose(effective_axis(benchmark_model, 1, 0.1), [0.3, 0.1, 0.1])

    def test_zero_field_is_d0(self, benchmark_model):
        assert np.array_equal(effective_axis(benchmark_model, 1, 0.0), benchmark_model.d0)

    @pytest.mark.parametrize("m", [3, -1])
    def test_unknown_channel(self, benchmark_model, m):
        with pytest.raises(UnknownChannelError):
            effective_axis(benchmark_model, m, 0.1)

    def test_model_without_controls(self):
        model = HamiltonianModel([0.1, 0, 0])
        assert model.n_channels == 0
        with pytest.raises(UnknownChannelError):
            effective_axis(model, 1, 0.0)
