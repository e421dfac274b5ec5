"""Tests for the proximity change rate."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capfi.features.motion import proximity_change_rate, proximity_rate_sequence

distances = st.lists(st.floats(min_value=0.5, max_value=200.0), min_size=2, max_size=30)


def test_approaching_pedestrian():
    feature = proximity_change_rate([30.0] + [27.0] * 14 + [24.0], dt=15)
    assert feature.delta_p == pytest.approx(0.4, abs=1e-15)
    assert feature.delta_t0 == 30.0
    assert feature.delta_tn == 24.0
    assert feature.per_second(30.0) == pytest.approx(12.0)


def test_receding_pedestrian():
    feature = proximity_change_rate([24.0] + [27.0] * 14 + [30.0], dt=15)
    assert feature.delta_p == pytest.approx(-0.4, abs=1e-15)


def test_stationary():
    assert proximity_change_rate([12.0] * 15, dt=14).delta_p == 0.0


def test_uses_frame_dt_not_last_frame():
    feature = proximity_change_rate([10.0, 9.0, 8.0, 1.0], dt=2)
    assert feature.delta_p == 1.0


@pytest.mark.parametrize(
    "values, dt",
    [([10.0, 9.0], 2), ([10.0, 9.0, 8.0], 0), ([10.0, 0.0, 8.0], 1), ([10.0, -1.0], 1)],
)
def test_invalid_inputs(values, dt):
    with pytest.raises(ValueError):
        proximity_change_rate(values, dt)


@settings(max_examples=1000, deadline=None)
@given(values=distances, scale=st.floats(min_value=0.01, max_value=100.0), data=st.data())
def test_linearity(values, scale, data):
    dt = data.draw(st.integers(min_value=1, max_value=len(values) - 1))
    base = proximity_change_rate(values, dt).delta_p
    scaled = proximity_change_rate([scale * v for v in values], dt).delta_p
    # rounding of the scaled distances bounds the error, not the rate itself
    tolerance = 1e-12 * scale * max(values)
    assert scaled == pytest.approx(scale * base, rel=1e-12, abs=tolerance)


@settings(max_examples=1000, deadline=None)
@given(values=distances)
def test_antisymmetry(values):
    dt = len(values) - 1
    forward = proximity_change_rate(values, dt).delta_p
    backward = proximity_change_rate(values[::-1], dt).delta_p
    assert backward == pytest.approx(-forward, rel=1e-12, abs=1e-12)


def test_rate_sequence_rolls_over_window():
    rates = proximity_rate_sequence([20.0, 19.0, 17.0, 14.0, 10.0], dt=2)
    # frame 1 looks back 1 frame, later frames 2
    np.testing.assert_allclose(rates, [1.0, 1.0, 1.5, 2.5, 3.5])


def test_rate_sequence_full_window_matches_single_rate():
    values = [30.0, 29.0, 27.5, 26.0, 24.0]
    rates = proximity_rate_sequence(values, dt=4)
    assert rates[-1] == pytest.approx(proximity_change_rate(values, 4).delta_p)


def test_rate_sequence_rejects_bad_distances():
    with pytest.raises(ValueError):
        proximity_rate_sequence([10.0, 0.0, 3.0], dt=1)
    with pytest.raises(ValueError):
        proximity_rate_sequence([10.0, 9.0], dt=0)
