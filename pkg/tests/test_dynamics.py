import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from trajrecon import (Circle, FiniteSpace, Interval, Observable, ReconError, System,
                       UnsupportedError, iterate, make_space, orbit, periodic_points)
from trajrecon.dynamics import (check_self_map, classes_from_map, eventual_orbit_classes,
                                is_trajectory_separated)

from conftest import ZOO


@pytest.mark.parametrize("name,system", ZOO, ids=[n for n, _ in ZOO])
def test_zoo_maps_are_self_maps(name, system, rng):
    assert check_self_map(system, rng, n=2000)


def test_tent_values():
    T = System(Interval(), "tent")
    assert T(0.3) == pytest.approx(0.6)
    assert T(0.7) == pytest.approx(0.6)
    assert iterate(T, 0.3, 0) == 0.3


def test_orbit_length():
    D = System(Circle(), "doubling")
    o = orbit(D, 0.1, 5)
    assert len(o) == 6
    assert o[3] == pytest.approx(0.8)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_doubling_periodic_point_count(n):
    # Fix(T^i) = {j / (2^i - 1)}; the finder returns the union over i <= n
    D = System(Circle(), "doubling")
    pts = periodic_points(D, n, 2.0 ** -12)
    expected = {Fraction(j, 2 ** i - 1) % 1 for i in range(1, n + 1) for j in range(2 ** i - 1)}
    assert len(pts) == len(expected)
    xs = sorted(x for x, _ in pts)
    assert xs == pytest.approx(sorted(float(e) for e in expected), abs=1e-9)
    for x, per in pts:
        assert (2 ** per * x) % 1.0 == pytest.approx(x, abs=1e-8)


def test_tent_fixed_points():
    T = System(Interval(), "tent")
    xs = sorted(x for x, per in periodic_points(T, 1, 2.0 ** -10))
    assert xs == pytest.approx([0.0, 2 / 3], abs=1e-9)


def test_gasket_periodic_words():
    G = make_space("gasket", depth=6)
    S = System(G, "gasket_shift")
    pts = periodic_points(S, 2, 0.1)
    # 3 constant words plus the 6 alternating words (ab)^inf with a != b
    assert len(pts) == 3 + 6
    assert sum(per == 2 for _, per in pts) == 6
    # the refill letter breaks exact periodicity in the tail, so compare
    # the part of the word the shift has not touched
    for w, per in pts:
        assert iterate(S, w, per)[:6 - per] == w[:6 - per]


def test_finite_periodic_points():
    F = FiniteSpace(5)
    S = System(F, "finite_map", {"table": [1, 2, 0, 0, 3]})
    assert sorted(x for x, _ in periodic_points(S, 5, 1.0)) == [0, 1, 2]


def test_unsupported_combination():
    with pytest.raises(UnsupportedError):
        System(Interval(), "rotation")
    with pytest.raises(UnsupportedError):
        System(Circle(), "gasket_shift")


def test_logistic_parameter_range():
    with pytest.raises(ReconError):
        System(Interval(), "logistic", {"r": 4.5})


def test_separation_verdicts():
    T = System(Interval(), "tent")
    assert is_trajectory_separated(T, 0.3, 0.7, 10, 0.01).merged
    D = System(Circle(), "doubling")
    v = is_trajectory_separated(D, 0.1, 0.3, 20, 1e-6)
    assert v.kind == "separated"


def test_finite_classes():
    assert classes_from_map([1, 2, 2]) == [[0, 1, 2]]
    assert classes_from_map([1, 0, 2]) == [[0], [1], [2]]
    F = FiniteSpace(labels="abc")
    S = System(F, "finite_map", {"table": {"a": "b", "b": "a", "c": "c"}})
    assert eventual_orbit_classes(S) == [[0], [1], [2]]


def test_table_observable_is_exact():
    F = FiniteSpace(3)
    f = Observable("table", {"values": ["1/3", 0.5, 2]})
    v = f.values(F, F.all_points())
    assert v[0] == Fraction(1, 3)
    assert f.exact


@given(seed=st.integers(0, 2**31))
def test_fourier_observable_bounded_and_seeded(seed):
    f = Observable("fourier", {"seed": seed, "order": 5, "decay": 0.5})
    g = Observable("fourier", {"seed": seed, "order": 5, "decay": 0.5})
    x = np.linspace(0, 1, 33)
    a, b = f.values(Interval(), x), g.values(Interval(), x)
    assert np.array_equal(a, b)
    # coefficients are bounded by the decaying envelope
    bound = 2 * sum(0.5 ** j for j in range(1, 6))
    assert np.all(np.abs(a) <= bound + 1e-12)


def test_observable_unknown_kind():
    with pytest.raises(UnsupportedError):
        Observable("wavelet")


def test_piecewise_constant_needs_distinct_values():
    with pytest.raises(ReconError):
        Observable("piecewise_constant", {"breaks": [0.5], "values": [1.0, 1.0]})
