"""Acceptance criteria, one test each, at their stated tolerances.

Each test prints a single ``[ACCEPT n] PASS|FAIL ...`` line.  Criteria that
have a config in ``configs/`` run through the same path as the CLI, so
criterion 9 can rerun them and compare bytes.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from trajrecon import (Circle, FiniteSpace, Interval, Observable, System, make_space,
                       periodic_points)
from trajrecon import delay as dl
from trajrecon import entropy as en
from trajrecon import recurrence as rc
from trajrecon.cli import run
from trajrecon.config import load_config

from conftest import ZOO, observable_for

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
ACCEPTANCE_CONFIGS = [
    "tent_entropy", "doubling_compare", "gasket_entropy", "tent_coincide", "finite_oracle",
    "x2_chainrec", "doubling_chainrec", "rotation_chainrec", "doubling_tsp",
    "doubling_tsp_hand", "identity_tsp", "tent_infer", "doubling_infer",
]


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("accept")
    cache = {}

    def get(name):
        if name not in cache:
            raw, _, _ = load_config(CONFIGS / f"{name}.toml")
            cache[name] = run(raw, out_root=root / "first")
        return cache[name]

    get.root = root
    return get


def verdict(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\n[ACCEPT {n}] {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


def test_criterion_01_tent_entropy(runs, capsys):
    rep, _ = runs("tent_entropy")
    p = rep["payload"]["source"]
    h = rep["payload"]["h_estimate"]
    # exact symbolic oracle: 2^n distinct itineraries, so the count grows like ln 2
    net = en.candidate_net(Interval(), 2.0 ** -14)
    T = System(Interval(), "tent")
    orb = np.stack([T.iterate_array(net, j) for j in range(12)], axis=1) >= 0.5
    n_itin = len({row.tobytes() for row in orb})
    ok = (p["n"] == list(range(4, 17)) and p["eps"] == [0.2, 0.1, 0.05]
          and p["n_candidates"] == 2 ** 14 and abs(h - math.log(2)) <= 0.08
          and rep["wall_time_s"] < 60 and n_itin == 2 ** 12)
    verdict(capsys, 1, ok, f"h={h:.4f} |h-ln2|={abs(h - math.log(2)):.4f} "
            f"time={rep['wall_time_s']:.1f}s itineraries(12)={n_itin}")


def test_criterion_02_entropy_equality(runs, capsys):
    rep, _ = runs("doubling_compare")
    c = rep["payload"]["comparison"]
    cert = rep["payload"]["certificate"]
    ok = (c["difference"] <= 0.05 and cert["passed"] and cert["schedule"] == [0, 1, 2]
          and c["source"]["n_candidates"] == c["reconstructed"]["n_candidates"])
    verdict(capsys, 2, ok, f"h_T={c['h_T']:.4f} h_sigma={c['h_sigma']:.4f} "
            f"diff={c['difference']:.4f}")


def test_criterion_03_gasket_entropy(runs, capsys):
    rep, _ = runs("gasket_entropy")
    h = rep["payload"]["h_estimate"]
    cfg = rep["config"]
    ok = (cfg["space"]["depth"] == 12 and cfg["params"]["n"] == list(range(3, 9))
          and abs(h - math.log(3)) <= 0.1)
    verdict(capsys, 3, ok, f"h={h:.4f} |h-ln3|={abs(h - math.log(3)):.4f}")


def test_criterion_04_coincidence_bound(runs, capsys):
    rep, _ = runs("tent_coincide")
    p = rep["payload"]
    ok = (p["violations"] == 0 and p["pairs"] == 10_000 and p["horizon"] == 32
          and p["alpha"] == 0.02 and len(p["per_observable"]) == 20 and p["bound"] == 2)
    worst = max(r["max_count"] for r in p["per_observable"])
    verdict(capsys, 4, ok, f"observables=20 pairs={p['pairs']} violations={p['violations']} "
            f"max_count={worst}")


def test_criterion_05_finite_oracle(capsys):
    space = FiniteSpace(5)
    f = Observable("table", {"values": [0, 1, 2, 3, 4]})
    t0 = time.perf_counter()
    failed = []
    n = 0
    for code in range(5 ** 5):
        table = [(code // 5 ** i) % 5 for i in range(5)]
        n += 1
        res = dl.trajectory_isomorphism_check_finite(
            System(space, "finite_map", {"table": table}), f, 0)
        if not res.passed:
            failed.append(table)
    dt = time.perf_counter() - t0
    ok = n == 3125 and not failed and dt < 10
    verdict(capsys, 5, ok, f"maps={n} failed={len(failed)} time={dt:.2f}s")


def test_criterion_06_chain_recurrence(runs, capsys):
    sq, _ = runs("x2_chainrec")
    iv = np.asarray(sq["payload"]["cr_intervals"])
    in_ends = bool(np.all((iv[:, 1] <= 0.02) | (iv[:, 0] >= 0.98)))
    dec = sq["payload"]["decomposition"]["verdict"]
    full = {}
    for name in ("doubling_chainrec", "rotation_chainrec"):
        r, _ = runs(name)
        full[name] = r["payload"]["n_cr"] == r["payload"]["n_cells"] == 1024
    # P subset CR for every periodic point found (period <= 4)
    missing = {}
    for name, system in (("square", System(Interval(), "square")),
                         ("doubling", System(Circle(), "doubling")),
                         ("rotation", System(Circle(), "rotation"))):
        g = rc.build_transition_graph(system, 2.0 ** -10, 2.0 ** -8, seed=3)
        cr = rc.chain_recurrent_cells(g)
        missing[name] = len(rc.periodic_points_outside(system, cr, 4))
    n_sq_periodic = len(periodic_points(System(Interval(), "square"), 4, 2.0 ** -10))
    ok = (in_ends and dec and all(full.values()) and not any(missing.values())
          and sq["payload"]["periodic_outside_cr"] == [] and n_sq_periodic == 2)
    verdict(capsys, 6, ok, f"x^2 CR in ends={in_ends} decomposition={dec} "
            f"all-cells={full} periodic outside CR={missing}")


def test_criterion_07_tsp(runs, capsys):
    search, _ = runs("doubling_tsp")
    hand, _ = runs("doubling_tsp_hand")
    found = search["payload"]["found"] and search["payload"]["verification"]["verified"]
    hand_ok = (hand["payload"]["verification"]["verified"]
               and hand["payload"]["certificate"]["H"] == [0.15, 0.45, 0.75])
    ident, _ = runs("identity_tsp")
    I = System(Interval(), "identity")
    ident_fail = not ident["payload"]["found"] and all(
        not rc.tsp_search(I, k, 0.35, 1, 2.0 ** -10, budget=60, seed=k).found for k in (2, 3))
    ok = found and hand_ok and ident_fail
    verdict(capsys, 7, ok, f"search found={found} attempts={search['payload']['attempts']} "
            f"hand H verified={hand_ok} identity fails={ident_fail}")


def test_criterion_08_orbit_inference(runs, capsys):
    tent, _ = runs("tent_infer")
    dbl, _ = runs("doubling_infer")
    v = tent["payload"]["verdict"]
    gt = tent["payload"]["ground_truth"]
    w = dbl["payload"]["verdict"]
    ok = (v["declared_equal_from"] is not None and v["declared_equal_from"] <= 3
          and gt["kind"] == "merged" and gt["merge_index"] == 1
          and w["declared_equal_from"] is None and dbl["payload"]["length"] == 20)
    verdict(capsys, 8, ok, f"tent declared_from={v['declared_equal_from']} "
            f"merge={gt['merge_index']} doubling declared={w['declared_equal_from']}")


def test_criterion_09_determinism(runs, capsys):
    differ = []
    n_files = 0
    for name in ACCEPTANCE_CONFIGS:
        _, first = runs(name)
        raw, _, _ = load_config(CONFIGS / f"{name}.toml")
        _, second = run(raw, out_root=runs.root / "second")
        for path in sorted(first.iterdir()):
            if path.suffix not in (".csv", ".json") or path.name == "report.json":
                continue
            n_files += 1
            if path.read_bytes() != (second / path.name).read_bytes():
                differ.append(f"{name}/{path.name}")
    ok = not differ and n_files >= len(ACCEPTANCE_CONFIGS)
    verdict(capsys, 9, ok, f"configs={len(ACCEPTANCE_CONFIGS)} files={n_files} differ={differ}")


def _zoo_invariants(name, system, rng):
    space = system.space
    problems = []
    a, b, c = (space.sample(rng, 200) for _ in range(3))
    dab = space.distances(a, b)
    if not (np.all(space.distances(a, a) <= 1e-12) and np.allclose(dab, space.distances(b, a))
            and np.all(dab <= space.distances(a, c) + space.distances(c, b) + 1e-9)):
        problems.append("metric")
    f = observable_for(system)
    for k in (1, 2, 4):
        if dl.shift_naturality_check(system, f, k, a).max_deviation != 0:
            problems.append(f"naturality k={k}")
    cand = space.sample(rng, 150)
    for n, eps in ((1, 0.2), (3, 0.1), (5, 0.3)):
        res = en.max_separated_greedy(system, cand, n, eps, exact=False)
        if not (en.is_separated(system, cand[res.witness], n, eps)
                and en.is_maximal(system, cand, res.witness, n, eps)):
            problems.append(f"separated n={n} eps={eps}")
    if space.name in ("interval", "circle", "gasket", "cantor", "finite"):
        mesh = 2.0 ** -7 if space.name in ("interval", "circle") else 0.3
        grids = {}
        for eps in (2.0 ** -8, 2.0 ** -6, 2.0 ** -4):
            g = rc.build_transition_graph(system, mesh, eps, lip=3.0)
            grids[eps] = set(rc.chain_recurrent_cells(g).cells.tolist())
        e = sorted(grids)
        if not (grids[e[0]] <= grids[e[1]] <= grids[e[2]]):
            problems.append("CR monotone")
        cr = rc.chain_recurrent_cells(rc.build_transition_graph(system, mesh, e[0], lip=3.0))
        if rc.periodic_points_outside(system, cr, 3, mesh):
            problems.append("P in CR")
    return problems


def test_criterion_10_invariant_suites(capsys):
    rng = np.random.default_rng(2024)
    bad = {}
    for name, system in ZOO:
        problems = _zoo_invariants(name, system, rng)
        if problems:
            bad[name] = problems
    ok = not bad
    verdict(capsys, 10, ok, f"systems={len(ZOO)} failures={bad}")
