import numpy as np
import pytest
from hypothesis import given, strategies as st

from trajrecon import (Circle, FiniteSpace, Interval, Observable, PreconditionError, ReconError,
                       System, UnsupportedError)
from trajrecon import delay as dl

from conftest import ZOO, observable_for


def test_schedule_basics():
    S = dl.as_schedule(2)
    assert S.times == (0, 1, 2) and S.is_prefix() and S.span == 2
    T = dl.as_schedule([0, 3, 5])
    assert not T.is_prefix() and T.span == 5
    assert dl.as_schedule([2, 0, 2]).times == (0, 2)
    with pytest.raises(ReconError):
        dl.as_schedule([-1, 0])


def test_delay_map_tent():
    T = System(Interval(), "tent")
    f = Observable("coordinate")
    v = dl.delay_map(T, f, 2, 0.1)
    assert v.values == pytest.approx((0.1, 0.2, 0.4))


# naturality: the k+1 vector from x, minus its first entry, is the k vector from T x


@pytest.mark.parametrize("name,system", ZOO, ids=[n for n, _ in ZOO])
@given(seed=st.integers(0, 2**31), k=st.integers(1, 5))
def test_naturality_is_exact(name, system, seed, k):
    rng = np.random.default_rng(seed)
    pts = system.space.sample(rng, 50)
    rep = dl.shift_naturality_check(system, observable_for(system), k, pts)
    assert rep.max_deviation == 0


def test_embedding_doubling_coordinate():
    D = System(Circle(), "doubling")
    cert = dl.alpha_embedding_check(D, Observable("coordinate"), 2, 0.05, n_pairs=3000, rng=1)
    assert cert.passed and cert.n_kept == 3000


def test_embedding_constant_observable_fails():
    T = System(Interval(), "tent")
    cert = dl.alpha_embedding_check(T, Observable("constant"), 2, 0.05, n_pairs=500, rng=0)
    assert not cert.passed
    assert cert.n_violations == cert.n_kept
    assert len(cert.violations) == dl.MAX_LISTED


def test_embedding_alpha_must_be_positive():
    T = System(Interval(), "tent")
    with pytest.raises(ReconError):
        dl.alpha_embedding_check(T, Observable("coordinate"), 2, 0.0)


def test_shift_modulus_needs_certificate():
    T = System(Interval(), "tent")
    with pytest.raises(PreconditionError):
        dl.reconstructed_shift_welldefined(T, Observable("coordinate"), 2, 1e-3, None)


def test_shift_modulus_small_for_doubling():
    D = System(Circle(), "doubling")
    f = Observable("coordinate")
    cert = dl.alpha_embedding_check(D, f, 2, 0.05, n_pairs=1000, rng=0)
    mod = dl.reconstructed_shift_welldefined(D, f, 2, 1e-6, cert, n_pairs=500, rng=0)
    # sigma only drops the first entry and appends T^{k+1}: Lipschitz 2 in this metric
    assert mod.max_output <= 2 * mod.max_input + 1e-12


def test_projection_injectivity_finite():
    F = FiniteSpace(4)
    S = System(F, "finite_map", {"table": [1, 2, 3, 3]})
    f = Observable("table", {"values": [0, 0, 1, 1]})
    assert dl.projection_injectivity_check(S, f, 1, 3, F.all_points()).passed


# coincidences


def test_coincidence_tent_merge():
    T = System(Interval(), "tent")
    rep = dl.coincidence_count(T, Observable("coordinate"), 0.3, 0.7, 10)
    assert rep.indices == list(range(1, 11))
    assert rep.verdict.merged and not rep.violated


def test_coincidence_doubling_none():
    D = System(Circle(), "doubling")
    rep = dl.coincidence_count(D, Observable("coordinate"), 0.1, 0.3, 20)
    assert rep.count == 0


@given(seed=st.integers(0, 2**31), n=st.integers(3, 30))
def test_coincidence_count_monotone_in_horizon(seed, n):
    T = System(Interval(), "tent")
    f = Observable("fourier", {"seed": seed % 7})
    rng = np.random.default_rng(seed)
    x, y = rng.random(2)
    a = dl.coincidence_count(T, f, float(x), float(y), n).count
    b = dl.coincidence_count(T, f, float(x), float(y), n + 5).count
    assert a <= b


def test_sampled_pairs_are_separated():
    T = System(Interval(), "tent")
    xs, ys = dl.sample_separated_pairs(T, np.random.default_rng(0), 200, 16, 0.02)
    gaps = dl._gaps_at(T, xs, ys, dl.DelaySchedule.prefix(16))
    assert len(xs) == 200 and gaps.min() >= 0.02


# eventual-equality inference


def test_infer_tent_merge():
    T = System(Interval(), "tent")
    f = Observable("coordinate")
    sx = dl.delay_map(T, f, 19, 0.3).values
    sy = dl.delay_map(T, f, 19, 0.7).values
    v = dl.orbit_class_infer(sx, sy, d=1)
    assert v.declared_equal_from == 3 and v.evidence == [1, 2, 3]


def test_infer_doubling_no_declaration():
    D = System(Circle(), "doubling")
    f = Observable("coordinate")
    v = dl.orbit_class_infer(dl.delay_map(D, f, 19, 0.1).values,
                             dl.delay_map(D, f, 19, 0.3).values, d=1)
    assert not v.declared


def test_infer_constant_series_low_confidence():
    v = dl.orbit_class_infer([1.0] * 5, [1.0] * 5, d=1)
    assert v.declared and v.low_confidence


def test_infer_too_short():
    with pytest.raises(ReconError):
        dl.orbit_class_infer([0.0, 1.0], [0.0, 1.0], d=1)


# finite trajectory-isomorphism


def test_isomorphism_hand_examples():
    abc = FiniteSpace(labels="abc")
    f = Observable("table", {"values": [0, 0, 1]})
    chain = System(abc, "finite_map", {"table": {"a": "b", "b": "c", "c": "c"}})
    assert dl.trajectory_isomorphism_check_finite(chain, f, 1).passed
    cyc = System(abc, "finite_map", {"table": {"a": "b", "b": "a", "c": "c"}})
    res = dl.trajectory_isomorphism_check_finite(cyc, f, 1)
    assert not res.passed and res.witness == ("a", "b")


def test_isomorphism_needs_finite():
    with pytest.raises(UnsupportedError):
        dl.trajectory_isomorphism_check_finite(System(Interval(), "tent"),
                                               Observable("coordinate"), 1)


def _brute_isomorphic(table, values, k):
    # independent oracle: sigma well defined, and eventual equality of orbits
    # matches eventual equality of the delay-vector sequences
    m = len(table)

    def it(x, n):
        for _ in range(n):
            x = table[x]
        return x

    def vec(x):
        return tuple(values[it(x, j)] for j in range(k + 1))

    for x in range(m):
        for y in range(m):
            if vec(x) == vec(y) and vec(table[x]) != vec(table[y]):
                return False
            src = any(it(x, n) == it(y, n) for n in range(m + 1))
            img = any(vec(it(x, n)) == vec(it(y, n)) for n in range(m + 1))
            if src != img:
                return False
    return True


@given(table=st.lists(st.integers(0, 3), min_size=4, max_size=4),
       values=st.lists(st.integers(0, 2), min_size=4, max_size=4),
       k=st.integers(0, 2))
def test_isomorphism_matches_brute_force(table, values, k):
    S = System(FiniteSpace(4), "finite_map", {"table": table})
    f = Observable("table", {"values": values})
    got = dl.trajectory_isomorphism_check_finite(S, f, k).passed
    assert got == _brute_isomorphic(table, values, k)


def test_fault_injection_is_caught():
    S = System(FiniteSpace(3), "finite_map", {"table": [1, 2, 0]})
    f = Observable("table", {"values": [0, 1, 2]})
    res = dl.trajectory_isomorphism_check_finite(S, f, 0, shift=lambda v: v)
    assert not res.passed


# genericity scans


def test_generic_scan_thread_independent():
    T = System(Interval(), "tent")
    a = dl.generic_scan(dl.fixed_system(T), dl.fourier_family(), 2, 0.05, 4, 7, n_pairs=300)
    b = dl.generic_scan(dl.fixed_system(T), dl.fourier_family(), 2, 0.05, 4, 7, n_pairs=300,
                        threads=3)
    assert a.to_dict() == b.to_dict()
    assert 0 <= a.ci_low <= a.density <= a.ci_high <= 1


def test_generic_scan_constant_family_never_passes():
    T = System(Interval(), "tent")
    res = dl.generic_scan(dl.fixed_system(T), dl.constant_family(), 2, 0.05, 3, 0, n_pairs=100)
    assert res.passes == 0
