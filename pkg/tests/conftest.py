import numpy as np
import pytest
from hypothesis import settings

from trajrecon import (Circle, Dendrite, FiniteSpace, Interval, Observable, SierpinskiGasket,
                       Simplex2, System, make_space)

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def zoo():
    """(label, system) pairs covering every space tier."""
    I, C = Interval(), Circle()
    G = SierpinskiGasket(depth=8)
    D = Dendrite()
    F = FiniteSpace(5)
    return [
        ("tent", System(I, "tent")),
        ("logistic", System(I, "logistic")),
        ("square", System(I, "square")),
        ("doubling", System(C, "doubling")),
        ("rotation", System(C, "rotation")),
        ("north_south", System(C, "north_south")),
        ("identity", System(I, "identity")),
        ("gasket_shift", System(G, "gasket_shift")),
        ("cantor_shift", System(make_space("cantor", depth=10), "cantor_shift")),
        ("simplex_fold", System(Simplex2(), "simplex_fold")),
        ("dendrite", System(D, "dendrite_pl", {"vertex_map": [0, 2, 3, 1]})),
        ("finite", System(F, "finite_map", {"table": [1, 2, 0, 0, 3]})),
    ]


ZOO = zoo()


@pytest.fixture(params=ZOO, ids=[n for n, _ in ZOO])
def zoo_system(request):
    return request.param[1]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def observable_for(system):
    if isinstance(system.space, FiniteSpace):
        return Observable("table", {"values": list(range(system.space.size))})
    return Observable("fourier", {"seed": 3})
