import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from trajrecon import Circle, Interval, Observable, PreconditionError, ReconError, System
from trajrecon import entropy as en

from conftest import ZOO

# zoo members whose metric is cheap enough for pairwise rechecks
TARGETS = [(n, s) for n, s in ZOO]


def _targets():
    out = list(TARGETS)
    T = System(Interval(), "tent")
    out.append(("shift[tent]", en.ReconstructedShift(T, Observable("fourier", {"seed": 1}), 2)))
    return out


ALL = _targets()


@pytest.mark.parametrize("name,target", ALL, ids=[n for n, _ in ALL])
@given(seed=st.integers(0, 2**31), n=st.integers(1, 6), eps=st.floats(0.02, 0.6))
def test_greedy_witness_is_separated_and_maximal(name, target, seed, n, eps):
    rng = np.random.default_rng(seed)
    cand = target.space.sample(rng, 60)
    res = en.max_separated_greedy(target, cand, n, eps, exact=False)
    assert res.s_n_lower == len(res.witness) >= 1
    assert en.is_separated(target, cand[res.witness], n, eps)
    assert en.is_maximal(target, cand, res.witness, n, eps)


def _brute_max(target, cand, n, eps):
    m = len(cand)
    for size in range(m, 0, -1):
        for sub in itertools.combinations(range(m), size):
            if en.is_separated(target, cand[list(sub)], n, eps):
                return size
    return 0


@given(seed=st.integers(0, 2**31), n=st.integers(1, 4), eps=st.floats(0.05, 0.5))
def test_exact_search_matches_brute_force(seed, n, eps):
    T = System(Interval(), "tent")
    cand = np.random.default_rng(seed).random(9)
    res = en.max_separated_greedy(T, cand, n, eps, exact=True)
    assert res.exact
    assert res.s_n_lower == _brute_max(T, cand, n, eps)
    assert en.is_separated(T, cand[res.witness], n, eps)
    greedy = en.max_separated_greedy(T, cand, n, eps, exact=False)
    assert greedy.s_n_lower <= res.s_n_lower


def test_greedy_keeps_seed():
    T = System(Interval(), "tent")
    cand = np.linspace(0, 1, 101)
    res = en.max_separated_greedy(T, cand, 3, 0.1, exact=False, seed=[50])
    assert 50 in res.witness.tolist()


def test_separated_set_errors():
    T = System(Interval(), "tent")
    with pytest.raises(ReconError):
        en.max_separated_greedy(T, np.array([]), 2, 0.1)
    with pytest.raises(ReconError):
        en.max_separated_greedy(T, np.array([0.1]), 0, 0.1)
    with pytest.raises(ReconError):
        en.max_separated_greedy(T, np.array([0.1]), 2, 0.0)


def test_candidate_net_covers():
    for space in (Interval(), Circle()):
        net = en.candidate_net(space, 2.0 ** -6)
        probe = np.linspace(0, 1, 1001, endpoint=False)
        d = np.min(np.abs(probe[:, None] - net[None, :]), axis=1)
        assert d.max() <= 2.0 ** -6 + 1e-12


def test_curve_counts_monotone():
    T = System(Interval(), "tent")
    est = en.entropy_curve(T, [0.2, 0.1], range(1, 9), 2.0 ** -9)
    for eps in est.eps_list:
        c = est.counts(eps)
        assert all(a <= b for a, b in zip(c, c[1:]))
    for a, b in zip(est.counts(0.2), est.counts(0.1)):
        assert a <= b


def test_identity_and_rotation_have_zero_entropy():
    for system in (System(Interval(), "identity"), System(Circle(), "rotation")):
        est = en.entropy_curve(system, [0.1, 0.05], range(2, 10), 2.0 ** -8)
        assert abs(est.h_estimate) < 0.05


def test_doubling_entropy_close_to_log2():
    D = System(Circle(), "doubling")
    est = en.entropy_curve(D, [0.1], range(1, 11), 2.0 ** -12)
    assert est.h_estimate == pytest.approx(math.log(2), abs=0.1)


def test_mesh_must_be_fine_enough():
    T = System(Interval(), "tent")
    with pytest.raises(ReconError):
        en.entropy_curve(T, [0.1], range(1, 6), 0.1)


def test_fit_window_too_short():
    T = System(Interval(), "tent")
    with pytest.raises(ReconError):
        en.entropy_curve(T, [0.1], [1, 2], 2.0 ** -8)


def test_explicit_window():
    T = System(Interval(), "tent")
    est = en.entropy_curve(T, [0.1], range(1, 10), 2.0 ** -9, window=(2, 6))
    assert est.windows[0.1] == [2, 6]


def test_equality_needs_certificate():
    D = System(Circle(), "doubling")
    with pytest.raises(PreconditionError):
        en.entropy_equality_check(D, Observable("coordinate"), 2, [0.1], range(1, 8),
                                  2.0 ** -8, None)


def test_reconstructed_bowen_matches_direct_recomputation():
    D = System(Circle(), "doubling")
    target = en.ReconstructedShift(D, Observable("fourier", {"seed": 4}), 2)
    cand = en.candidate_net(D.space, 2.0 ** -5)
    feat = en.features_for(target, cand, 4)
    direct = en._pair_bowen(target, cand, np.repeat(cand[3:4], len(cand)), 4)
    assert np.allclose(feat.bowen(np.arange(len(cand)), 3, 4), direct)
