"""Built-in oracle batteries with known answers."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .delay import (alpha_embedding_check, projection_injectivity_check,
                    reconstructed_shift_welldefined, shift_naturality_check,
                    trajectory_isomorphism_check_finite)
from .dynamics import Observable, System
from .errors import ReconError
from .recurrence import build_transition_graph, chain_recurrent_cells, periodic_points_outside
from .spaces import Circle, FiniteSpace, Interval

SUITE_NAMES = ("finite", "chain_recurrence")


@dataclass
class CheckResult:
    suite: str
    check: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_row(self):
        return {"suite": self.suite, "check": self.check, "passed": self.passed}


@dataclass
class SuiteReport:
    results: list

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    @property
    def failures(self):
        return [r for r in self.results if not r.passed]

    def to_dict(self):
        return {"passed": self.passed, "n_checks": len(self.results),
                "n_failed": len(self.failures),
                "checks": [{"suite": r.suite, "check": r.check, "passed": r.passed,
                            "detail": r.detail} for r in self.results]}


def _identity_shift(vec):
    # corrupted rule for fault injection: leaves every delay vector in place
    return vec


def finite_battery(size: int = 5, inject_fault: bool = False) -> list[CheckResult]:
    """Exhaustive checks on every self-map of a ``size``-element set."""
    out = []
    space = FiniteSpace(size)
    f = Observable("table", {"values": list(range(size))}, name="injective")
    shift = _identity_shift if inject_fault else None
    failed = None
    n = 0
    for table in itertools.product(range(size), repeat=size):
        n += 1
        res = trajectory_isomorphism_check_finite(
            System(space, "finite_map", {"table": list(table)}), f, 0, shift=shift)
        if not res.passed:
            failed = {"table": list(table), "reason": res.reason,
                      "witness": [str(w) for w in res.witness] if res.witness else None}
            break
    out.append(CheckResult("finite", f"isomorphism, all {size}^{size} maps, k=0", failed is None,
                           {"maps_checked": n, "failure": failed}))

    # hand-enumerated examples on {a, b, c}
    abc = FiniteSpace(labels="abc")
    f01 = Observable("table", {"values": [0, 0, 1]})
    chain = System(abc, "finite_map", {"table": {"a": "b", "b": "c", "c": "c"}})
    res = trajectory_isomorphism_check_finite(chain, f01, 1, shift=shift)
    out.append(CheckResult("finite", "a->b->c->c, k=1 passes", res.passed, res.to_dict()))
    cyc = System(abc, "finite_map", {"table": {"a": "b", "b": "a", "c": "c"}})
    res = trajectory_isomorphism_check_finite(cyc, f01, 1)
    ok = (not res.passed) and res.witness == ("a", "b")
    out.append(CheckResult("finite", "2-cycle collapse fails with witness (a, b)", ok,
                           res.to_dict()))

    # delay-map invariants on a fixed non-trivial map
    sysm = System(space, "finite_map", {"table": [1, 2, 0, 0, 3][:size] + [0] * max(0, size - 5)})
    states = space.all_points()
    nat = shift_naturality_check(sysm, f, 1, states)
    out.append(CheckResult("finite", "naturality on all states", nat.passed,
                           {"max_deviation": nat.max_deviation}))
    cert = alpha_embedding_check(sysm, f, 0, 1.0)
    mod = reconstructed_shift_welldefined(sysm, f, 0, 0.0, cert)
    out.append(CheckResult("finite", "equal vectors in, equal vectors out (k=0)",
                           cert.passed and mod.max_output == 0, mod.to_dict()))
    proj = projection_injectivity_check(sysm, f, 0, size, states)
    out.append(CheckResult("finite", "projection injective (k=0)", proj.passed, proj.to_dict()))
    return out


def _cells_of(grid, pts):
    return set(grid.locate(np.asarray(pts)).tolist())


def chain_recurrence_battery(mesh: float = 2.0 ** -8, eps: float = 2.0 ** -6,
                             seed: int = 0) -> list[CheckResult]:
    """Systems whose chain-recurrent set is known in closed form."""
    I, C = Interval(), Circle()
    cases = [
        ("identity", System(I, "identity"), None),
        ("rotation", System(C, "rotation"), None),
        ("doubling", System(C, "doubling"), None),
        ("x^2", System(I, "square"), [0.0, 1.0]),
        ("north_south", System(C, "north_south"), [0.0, 0.5]),
    ]
    out = []
    for name, system, points in cases:
        g = build_transition_graph(system, mesh, eps, seed=seed)
        cr = chain_recurrent_cells(g)
        have = set(cr.cells.tolist())
        need = set(range(g.n_cells)) if points is None else _cells_of(g.grid, points)
        out.append(CheckResult("chain_recurrence", f"{name}: contains true CR cells",
                               need <= have, {"n_cells": g.n_cells, "n_cr": len(have)}))
        if points is not None:
            near = all(min(abs(float(r) - p) if name == "x^2" else C.metric(float(r), p)
                           for p in points) <= 0.1 for r in g.grid.reps[cr.cells])
            out.append(CheckResult("chain_recurrence", f"{name}: CR cells near the true CR",
                                   near, {}))
        coarse = chain_recurrent_cells(build_transition_graph(system, mesh, 2 * eps, seed=seed))
        out.append(CheckResult("chain_recurrence", f"{name}: monotone in eps",
                               have <= set(coarse.cells.tolist()), {}))
        missing = periodic_points_outside(system, cr, 3)
        out.append(CheckResult("chain_recurrence", f"{name}: periodic points in CR",
                               not missing, {"missing": [[float(x), per] for x, per in missing]}))
    return out


def oracle_suite(suites=SUITE_NAMES, *, inject_fault: bool = False) -> SuiteReport:
    """Run the selected batteries; ``inject_fault`` corrupts the induced shift."""
    suites = list(suites)
    if not suites:
        raise ReconError("no suites selected")
    unknown = [s for s in suites if s not in SUITE_NAMES]
    if unknown:
        raise ReconError(f"unknown suites {unknown}")
    results = []
    if "finite" in suites:
        results += finite_battery(inject_fault=inject_fault)
    if "chain_recurrence" in suites:
        results += chain_recurrence_battery()
    return SuiteReport(results)
