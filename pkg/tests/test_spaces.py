import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from trajrecon import (Circle, Dendrite, FiniteSpace, Interval, PointError, ReconError,
                       SierpinskiCarpet, SierpinskiGasket, Simplex2, make_space)

SPACES = {
    "interval": Interval(),
    "circle": Circle(),
    "simplex2": Simplex2(),
    "cantor": make_space("cantor", depth=10),
    "gasket": SierpinskiGasket(depth=8),
    "carpet": SierpinskiCarpet(depth=5),
    "dendrite": Dendrite(lengths=[1.0, 2.0, 0.5]),
    "finite": FiniteSpace(6),
}

seeds = st.integers(0, 2**32 - 1)


@pytest.mark.parametrize("name", sorted(SPACES))
@given(seed=seeds)
def test_metric_axioms(name, seed):
    space = SPACES[name]
    rng = np.random.default_rng(seed)
    a, b, c = (space.sample(rng, 16) for _ in range(3))
    dab = space.distances(a, b)
    assert np.all(space.distances(a, a) <= 1e-12)
    assert np.allclose(dab, space.distances(b, a), atol=1e-12)
    assert np.all(dab >= 0)
    assert np.all(dab <= space.distances(a, c) + space.distances(c, b) + 1e-9)
    assert np.all(dab <= space.diameter + 1e-9)


@pytest.mark.parametrize("name", sorted(SPACES))
def test_grid_covers_samples(name, rng):
    space = SPACES[name]
    mesh = 0.2 if name != "finite" else 0.5
    g = space.grid(mesh)
    pts = space.sample(rng, 200)
    idx = g.locate(pts)
    d = space.distances(pts, g.reps[idx])
    assert np.all(d <= g.radii[idx] + 1e-9)


def test_circle_wraps():
    C = Circle()
    assert C.metric(0.05, 0.95) == pytest.approx(0.1)
    with pytest.raises(PointError):
        C.check(1.25)


def test_interval_rejects_outside():
    with pytest.raises(PointError):
        Interval().check(1.5)


def test_gasket_address_distance_is_exact_at_depth():
    G = SierpinskiGasket(depth=6)
    a = G.pad("0")
    b = G.pad("1")
    # corner cells at level 1 of the unit-side gasket
    assert G.metric(a, b) == pytest.approx(1.0)
    assert G.metric(a, a) == 0.0
    assert G.resolution == pytest.approx(0.5 ** 6)


def test_gasket_bad_letter():
    G = SierpinskiGasket(depth=3)
    with pytest.raises(PointError):
        G.check("013")


def test_cells_at_level_count():
    G = SierpinskiGasket(depth=8)
    assert len(G.cells_at_level(4)) == 3 ** 4


def test_level_finer_than_depth_refused():
    G = SierpinskiGasket(depth=4)
    with pytest.raises(ReconError):
        G.grid(1e-4)


def test_dendrite_metric_through_branch_point():
    D = Dendrite(lengths=[1.0, 2.0, 0.5])
    # midpoints of edge 0 and edge 1 go through vertex 0
    assert D.metric((0, 0.5), (1, 0.5)) == pytest.approx(0.5 + 1.0)
    assert D.diameter == pytest.approx(3.0)


def test_dendrite_not_a_tree():
    with pytest.raises(ReconError):
        Dendrite(edges=[(0, 1), (1, 2), (2, 0)])


def test_finite_labels_and_metric():
    F = FiniteSpace(labels="abc")
    assert F.metric("a", "b") == 1.0
    assert F.metric("c", "c") == 0.0
    with pytest.raises(PointError):
        F.check("z")


def test_unknown_space():
    with pytest.raises(ReconError):
        make_space("torus")


@given(x=st.floats(0, 1), y=st.floats(0, 1))
def test_circle_metric_closed_form(x, y):
    d = abs(x - y)
    assert Circle().metric(x, y) == pytest.approx(min(d, 1 - d), abs=1e-12)


def test_simplex_contains():
    S = Simplex2()
    pts = S.sample(np.random.default_rng(0), 100)
    assert S.contains(pts).all()
    assert math.isclose(S.diameter, 1.0)
