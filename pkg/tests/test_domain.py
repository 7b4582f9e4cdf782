import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lssopt.domain import (
    PEAK_X,
    VALLEY_X,
    BoxDomain,
    get_objective,
    landscape_extrema,
    reflect_into_box,
    toy_f,
    toy_g,
    toy_g_normalized,
)
from lssopt.errors import InvalidInputError


def reflect_iterative(x, lo, hi):
    # mirror at whichever face is crossed until inside
    while x < lo or x > hi:
        x = 2 * hi - x if x > hi else 2 * lo - x
    return x


def caption_formula(x):
    lam = math.sin(10 * math.pi * x + math.pi / 2)
    u = (25 + 30 * (x - 0.1) ** 2) / 25
    l = (5 + 25 * (x - 0.9) ** 2) / 25
    return (1 + lam) / 2 * u + (1 - lam) / 2 * l


UNIT = BoxDomain.unit(1)


@pytest.mark.parametrize("x,expected", [(0.5, 0.5), (1.2, 0.8), (2.5, 0.5), (-0.3, 0.3), (-1.25, 0.75)])
def test_reflect_examples(x, expected):
    assert reflect_into_box([x], UNIT)[0] == pytest.approx(expected, abs=1e-12)


def test_reflect_rejects_non_finite():
    with pytest.raises(InvalidInputError):
        reflect_into_box([math.inf], UNIT)
    with pytest.raises(InvalidInputError):
        reflect_into_box([math.nan], UNIT)


def test_box_validation():
    with pytest.raises(InvalidInputError):
        BoxDomain((1.0,), (0.0,))
    with pytest.raises(InvalidInputError):
        BoxDomain((0.0, 0.0), (1.0,))
    assert BoxDomain.unit(3).dim == 3


finite = st.floats(min_value=-50, max_value=50, allow_nan=False)


@given(finite, st.floats(-3, 3), st.floats(0.01, 5))
def test_reflect_matches_iterative_oracle(x, lo, width):
    dom = BoxDomain((lo,), (lo + width,))
    got = reflect_into_box([x], dom)[0]
    assert got == pytest.approx(reflect_iterative(x, lo, lo + width), abs=1e-9)


@given(st.lists(finite, min_size=1, max_size=4))
def test_reflect_idempotent(xs):
    dom = BoxDomain.unit(len(xs))
    once = reflect_into_box(xs, dom)
    assert np.array_equal(reflect_into_box(once, dom), once)


def test_reflect_random_points_land_in_box():
    rng = np.random.default_rng(7)
    dom = BoxDomain((-1.0, 2.0), (0.5, 3.0))
    pts = rng.uniform(-20, 20, size=(10_000, 2))
    assert all(dom.contains(reflect_into_box(p, dom)) for p in pts)


@pytest.mark.parametrize("x,expected", [(0.9, 0.2), (0.1, 0.84), (0.2, 1.012)])
def test_toy_f_examples(x, expected):
    assert toy_f(x) == pytest.approx(expected, abs=1e-12)


@given(st.floats(-2, 2))
def test_toy_f_equals_caption_formula(x):
    assert toy_f(x) == caption_formula(x)


def test_toy_g_examples():
    assert toy_g([0.9, 0.9]) == pytest.approx(0.04, abs=1e-12)
    assert toy_g([0.5]) == toy_f(0.5)
    assert toy_g([0.1] * 4) == pytest.approx(0.84 ** 4, abs=1e-12)
    assert 0.84 ** 4 == pytest.approx(0.49787136, abs=1e-12)
    with pytest.raises(InvalidInputError):
        toy_g([])


def test_toy_g_normalized_examples():
    for n in (1, 2, 5, 8):
        assert toy_g_normalized([0.9] * n) == pytest.approx(0.2, abs=1e-12)
    assert toy_g_normalized([0.37]) == pytest.approx(toy_g([0.37]), abs=1e-15)
    assert toy_g_normalized([0.1, 0.9]) == pytest.approx(math.sqrt(0.84 * 0.2), abs=1e-12)
    assert math.sqrt(0.84 * 0.2) == pytest.approx(0.40988, abs=1e-5)


def test_landscape_extrema_values():
    valleys, peaks = landscape_extrema()
    assert valleys == pytest.approx((0.84, 0.56, 0.36, 0.24, 0.2), abs=1e-12)
    assert peaks == pytest.approx((1.012, 1.108, 1.3, 1.588, 1.972), abs=1e-12)
    # independent oracle: envelope values at the abscissae
    assert valleys == pytest.approx(tuple((5 + 25 * (x - 0.9) ** 2) / 25 for x in VALLEY_X), abs=1e-12)
    assert peaks == pytest.approx(tuple((25 + 30 * (x - 0.1) ** 2) / 25 for x in PEAK_X), abs=1e-12)


def test_landscape_properties():
    v, p = landscape_extrema()
    assert all(a > b for a, b in zip(v, v[1:]))
    gaps = [a - b for a, b in zip(v, v[1:])]
    assert v[0] - v[1] == pytest.approx(0.28) and v[1] - v[2] == pytest.approx(0.20)
    assert all(g1 > g2 for g1, g2 in zip(gaps[:3], gaps[1:4]))
    heights = [pk - vk for pk, vk in zip(p, v)]
    assert all(a < b for a, b in zip(heights, heights[1:]))


def test_grid_scan_global_minimum():
    xs = np.arange(0, 100_001) * 1e-5
    lam = np.sin(10 * np.pi * xs + np.pi / 2)
    vals = (1 + lam) / 2 * (25 + 30 * (xs - 0.1) ** 2) / 25 + (1 - lam) / 2 * (5 + 25 * (xs - 0.9) ** 2) / 25
    k = int(np.argmin(vals))
    assert xs[k] == pytest.approx(0.9, abs=1e-6)
    assert vals[k] == pytest.approx(0.2, abs=1e-6)
    assert toy_f(xs[k]) == pytest.approx(vals[k], abs=1e-12)


def test_get_objective():
    o = get_objective("toy1d")
    assert o.dim == 1 and o([0.9]) == pytest.approx(0.2)
    o4 = get_objective("toyNd:4")
    assert o4.dim == 4 and o4.domain == BoxDomain.unit(4)
    assert get_objective("toyNd", dim=3).dim == 3
    for bad in [("bogus", None), ("toy1d", 2), ("toyNd:2", 3), ("toyNd", None)]:
        with pytest.raises(InvalidInputError):
            get_objective(*bad)


def test_objective_deterministic():
    o = get_objective("toyNd:3")
    x = np.array([0.31, 0.72, 0.05])
    assert o(x) == o(x.copy())
