import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corrxray.slippage import (
    axis_point,
    bump_detour,
    distance_to_axis_segment,
    fit_decay_base,
    proportion_far,
    slippage_check,
    straight_path,
    triangle_detour,
    zigzag_detour,
)


def detours(L, C):
    yield "triangle", triangle_detour(L, C, L / 2, 3.0)
    yield "triangle_narrow", triangle_detour(L, C, L / 3, 0.2, side=-1)
    yield "triangle_wide", triangle_detour(L, C, L / 2, 20.0)
    yield "bump", bump_detour(L, C, L / 3, C / 4)
    yield "zigzag", zigzag_detour(L, C, 5)


def test_axis_point_distance():
    for u in (-2.0, 0.0, 0.7, 3.0):
        z = axis_point(1.5, u)
        assert distance_to_axis_segment(np.array([z]), 10.0)[0] == pytest.approx(abs(u), abs=1e-12)


def test_straight_path_has_no_slippage():
    r = slippage_check(200.0, 0.5, straight_path(200.0))
    assert r.path_length == pytest.approx(200.0, abs=1e-9)
    assert r.max_distance < 1e-6


@pytest.mark.parametrize("L", [200.0, 500.0])
@pytest.mark.parametrize("C", [0.5, 1.0, 2.0])
def test_detours_within_bound(L, C):
    for name, path in detours(L, C):
        r = slippage_check(L, C, path)
        assert r.path_length == pytest.approx(L + C, abs=1e-3), name
        assert r.max_distance <= r.bound, name
        assert r.max_parametrized_deviation <= r.bound, name


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 2.0), st.floats(0.05, 30.0), st.floats(0.2, 0.8))
def test_triangle_slack_is_exact(C, h, at):
    L = 200.0
    path = triangle_detour(L, C, at * L, min(h, at * L / 2), step=0.5)
    r = slippage_check(L, C, path)
    assert r.path_length - L == pytest.approx(C, abs=1e-6)
    assert r.max_distance <= math.log(4) + 1.5 * C


def test_bump_height_validated():
    with pytest.raises(ValueError):
        bump_detour(200.0, 1.0, 50.0, 0.6)


@pytest.mark.parametrize("C", [0.5, 1.0, 2.0])
def test_proportion_far_decreasing_in_threshold(C):
    th = np.linspace(0.0, 2.0, 21)
    for _, path in detours(200.0, C):
        p = proportion_far(path, 200.0, th)
        assert p[0] == pytest.approx(1.0)
        assert np.all(np.diff(p) <= 1e-12)


def test_fit_decay_base():
    th = np.array([0.1, 0.5, 1.0])
    assert fit_decay_base(th, (1 / 100) * 3.0 ** -th, 2.0, 200.0) == pytest.approx(3.0)
    assert fit_decay_base(th, [0.1, 0.0, 0.0], 2.0, 200.0) is None
