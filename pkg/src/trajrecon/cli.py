"""Command-line runner.

``trajrecon <command> --config run.toml`` validates the config, runs one
command and writes a name-keyed run directory.  Exit codes: 0 pass, 1 check
failure, 2 config error or refused combination.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import delay as dl
from . import entropy as en
from . import recurrence as rc
from .config import COMMANDS, SUITES, load_config, build_objects, parse_config
from .dynamics import Observable, is_trajectory_separated
from .errors import ConfigError, ReconError, UnsupportedError
from .report import read_series, save_svg, series_rows, svg_setup, write_run
from .suites import oracle_suite

OUT_ENV = "TRAJRECON_OUT"
DEFAULT_OUT = "runs"


def _point(space, value):
    if isinstance(value, list):
        value = tuple(value)
    return space.check(value)


# ---------------------------------------------------------------------------
# commands; each returns (passed, payload, tables, plots)


def cmd_embed(cfg, p, objs, opts):
    space, system, f = objs
    _need_observable(f)
    S = dl.as_schedule(p.schedule)
    rng = np.random.default_rng(cfg.seed)
    cert = dl.alpha_embedding_check(system, f, S, p.alpha, n_pairs=p.n_pairs, rng=rng)
    nat = dl.shift_naturality_check(system, f, max(1, S.span), space.sample(rng, p.naturality_samples))
    out = {"schedules_tested": [list(S.times)], "embedding": cert.to_dict(),
           "naturality": {"k": nat.k, "max_deviation": nat.max_deviation, "passed": nat.passed}}
    passed = cert.passed and nat.passed
    if p.k_long is not None:
        proj = dl.projection_injectivity_check(system, f, S.span, p.k_long,
                                               space.sample(rng, p.n_pairs))
        out["projection"] = proj.to_dict()
        passed = passed and proj.passed
    if p.delta_in is not None:
        if cert.passed and S.is_prefix():
            mod = dl.reconstructed_shift_welldefined(system, f, S.span, p.delta_in, cert,
                                                     n_pairs=p.n_pairs, rng=rng)
            out["shift_modulus"] = mod.to_dict()
        else:
            out["shift_modulus"] = None
    rows = [{"x": str(a), "y": str(b)} for a, b in cert.violations]
    return passed, out, {"violations": rows}, {}


def _need_observable(f):
    if f is None:
        raise ConfigError([("observable", "this command needs an [observable] block")])


def _entropy_plot(est_list):
    def draw(path):
        plt = svg_setup()
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for label, est in est_list:
            for eps in est.eps_list:
                ax.plot(est.n_list, np.log(est.counts(eps)), marker="o", ms=3,
                        label=f"{label} eps={eps:g}")
        ax.set_xlabel("n")
        ax.set_ylabel("log s_n")
        ax.legend(fontsize=6)
        fig.tight_layout()
        save_svg(fig, path)
        plt.close(fig)
    return draw


def cmd_entropy(cfg, p, objs, opts):
    space, system, f = objs
    cand = None
    mesh = p.mesh
    if p.level is not None:
        if not hasattr(space, "cells_at_level"):
            raise ConfigError([("params.level", "level needs an address space")])
        cand = space.cells_at_level(p.level).reps
        mesh = None
    kw = dict(candidates=cand, window=p.window, saturation=p.saturation)
    tables, plots = {}, {}
    if p.compare_k is None:
        est = en.entropy_curve(system, p.eps, p.n, mesh, **kw)
        tables["entropy"] = est.rows()
        if p.plot:
            plots["entropy"] = _entropy_plot([("T", est)])
        return True, {"source": est.to_dict(), "h_estimate": est.h_estimate}, tables, plots
    _need_observable(f)
    if cfg.seed is None:
        raise ConfigError([("seed", "comparison needs a seed for the embedding certificate")])
    cert = dl.alpha_embedding_check(system, f, p.compare_k, p.alpha, n_pairs=p.n_pairs,
                                    rng=np.random.default_rng(cfg.seed))
    cmp_ = en.entropy_equality_check(system, f, p.compare_k, p.eps, p.n, mesh, cert,
                                     tolerance=p.tolerance, **kw)
    rows = [{"side": "T", **r} for r in cmp_.source.rows()]
    rows += [{"side": "sigma", **r} for r in cmp_.reconstructed.rows()]
    tables["entropy"] = rows
    if p.plot:
        plots["entropy"] = _entropy_plot([("T", cmp_.source), ("sigma", cmp_.reconstructed)])
    out = {"comparison": cmp_.to_dict(), "certificate": cert.to_dict()}
    return cmp_.passed, out, tables, plots


def _cr_plot(cr):
    def draw(path):
        plt = svg_setup()
        fig, ax = plt.subplots(figsize=(6, 1.4))
        for lo, hi in cr.intervals():
            ax.axvspan(lo, hi, color="k", lw=0)
        ax.set_yticks([])
        ax.set_xlim(0, 1)
        fig.tight_layout()
        save_svg(fig, path)
        plt.close(fig)
    return draw


def cmd_chainrec(cfg, p, objs, opts):
    space, system, _ = objs
    g = rc.build_transition_graph(system, p.mesh, p.eps, lip=p.lip, seed=cfg.seed or 0,
                                  max_cells=p.max_cells)
    cr = rc.chain_recurrent_cells(g)
    out = {"n_cells": g.n_cells, "n_edges": len(g.src), "lip": g.lip, "eps": g.eps,
           "mesh": p.mesh, "n_cr": len(cr.cells), "cr_cells": cr.cells,
           "min_out_degree": int(g.out_degree().min())}
    passed = out["min_out_degree"] >= 1
    one_d = space.coord_metric in ("euclidean", "circle") and np.ndim(g.grid.reps) == 1
    if one_d:
        out["cr_intervals"] = cr.intervals()
    if p.eta is not None and len(cr.cells):
        out["decomposition"] = rc.decomposition_check(g.grid, cr, p.eta).to_dict()
    if p.period:
        missing = rc.periodic_points_outside(system, cr, p.period)
        out["periodic_outside_cr"] = [[x, per] for x, per in missing]
        passed = passed and not missing
    tables = {"edges": g.edge_rows(),
              "cr_cells": [{"cell": int(c), "rep": str(space.point(g.grid.reps[c]))}
                           for c in cr.cells]}
    plots = {"chainrec": _cr_plot(cr)} if p.plot and one_d else {}
    return passed, out, tables, plots


def cmd_tsp(cfg, p, objs, opts):
    space, system, _ = objs
    if p.H is not None:
        H = [_point(space, h) for h in p.H]
        cert = rc.make_certificate(system, H, p.k, p.eta, p.d, p.mesh, seed=cfg.seed)
        ver = rc.tsp_verify(system, cert, p.density, cfg.seed + 1)
        out = {"mode": "verify", "certificate": cert.to_dict(), "verification": ver.to_dict()}
        return cert.valid and ver.verified, out, {}, {}
    res = rc.tsp_search(system, p.k, p.eta, p.d, p.mesh, budget=p.budget, seed=cfg.seed,
                        verify_density=p.density)
    out = {"mode": "search", **res.to_dict()}
    return res.found, out, {}, {}


def cmd_coincide(cfg, p, objs, opts):
    space, system, f = objs
    if p.n_pairs is None:
        _need_observable(f)
        rep = dl.coincidence_count(system, f, _point(space, p.x), _point(space, p.y), p.horizon,
                                   tol=p.tol, alpha=p.alpha)
        rows = [{"index": i} for i in rep.indices]
        return not rep.violated, rep.to_dict(), {"coincidences": rows}, {}
    if p.observables is not None:
        base = dict(cfg.observable.params) if cfg.observable else {}
        obs = [Observable("fourier", {**base, "seed": s}, name=f"fourier[{s}]")
               for s in p.observables]
    else:
        _need_observable(f)
        obs = [f]
    rng = np.random.default_rng(cfg.seed)
    xs, ys = dl.sample_separated_pairs(system, rng, p.n_pairs, p.horizon, p.alpha)
    bound = 2 * space.dim
    rows = []
    for ob in obs:
        counts = dl.coincidence_counts(system, ob, xs, ys, p.horizon, p.tol)
        rows.append({"observable": ob.label, "pairs": len(xs), "max_count": int(counts.max()),
                     "violations": int((counts > bound).sum())})
    total = sum(r["violations"] for r in rows)
    out = {"pairs": len(xs), "pairs_requested": p.n_pairs, "horizon": p.horizon,
           "alpha": p.alpha, "bound": bound, "violations": total, "per_observable": rows}
    return total == 0 and len(xs) == p.n_pairs, out, {"coincidences": rows}, {}


def cmd_infer(cfg, p, objs, opts):
    space, system, f = objs
    d = space.dim if p.d is None else p.d
    tables = {}
    truth = None
    if p.series_x is not None:
        sx, sy = read_series(p.series_x), read_series(p.series_y)
    else:
        _need_observable(f)
        x, y = _point(space, p.x), _point(space, p.y)
        sx = np.asarray(dl.delay_map(system, f, p.length - 1, x).values, dtype=float)
        sy = np.asarray(dl.delay_map(system, f, p.length - 1, y).values, dtype=float)
        v = is_trajectory_separated(system, x, y, p.length - 1, 1e-6)
        truth = {"kind": v.kind, "merge_index": v.index}
        tables = {"series_x": series_rows(sx), "series_y": series_rows(sy)}
    verdict = dl.orbit_class_infer(sx, sy, d, p.tol)
    out = {"verdict": verdict.to_dict(), "d": d, "length": len(sx), "ground_truth": truth}
    passed = True
    if truth is not None and verdict.declared:
        passed = truth["kind"] == "merged" and truth["merge_index"] <= verdict.declared_equal_from
    return passed, out, tables, {}


def cmd_scan(cfg, p, objs, opts):
    space, system, _ = objs
    fam = {"fourier": lambda: dl.fourier_family(p.order, p.decay),
           "constant": lambda: dl.constant_family(),
           "perturbed_coordinate": lambda: dl.perturbed_coordinate_family(p.amplitude, p.order,
                                                                          p.decay)}[p.family]()
    res = dl.generic_scan(dl.fixed_system(system), fam, p.schedule, p.alpha, p.n_draws, cfg.seed,
                          n_pairs=p.n_pairs, threads=opts.threads or cfg.threads)
    out = res.to_dict()
    out["schedules_tested"] = [list(res.schedule.times)]
    records = out.pop("records")
    passed = p.min_density is None or res.density >= p.min_density
    return passed, out, {"draws": records}, {}


def cmd_suite(cfg, p, objs, opts):
    rep = oracle_suite(p.suites, inject_fault=p.inject_fault)
    return rep.passed, rep.to_dict(), {"checks": [r.to_row() for r in rep.results]}, {}


DISPATCH = {"embed": cmd_embed, "entropy": cmd_entropy, "chainrec": cmd_chainrec,
            "tsp": cmd_tsp, "coincide": cmd_coincide, "infer-orbit": cmd_infer,
            "scan-generic": cmd_scan, "oracle-suite": cmd_suite}


# ---------------------------------------------------------------------------


def run(raw: dict, *, out_root=None, command=None, seed=None, threads=None, verify=False):
    """Validate ``raw``, run it and write the run directory; returns ``(report, run_dir)``."""
    cfg, params = parse_config(raw, command=command, seed=seed, threads=threads)
    objs = build_objects(cfg) if cfg.space is not None else (None, None, None)
    if verify and cfg.command == "tsp":
        params = params.model_copy(update={"density": max(params.density, 4)})
    opts = argparse.Namespace(threads=threads, verify=verify)
    t0 = time.perf_counter()
    passed, payload, tables, plots = DISPATCH[cfg.command](cfg, params, objs, opts)
    if verify and cfg.command != "oracle-suite":
        rep = oracle_suite()
        payload = {**payload, "oracle_recheck": {"passed": rep.passed,
                                                 "n_failed": len(rep.failures)}}
        passed = passed and rep.passed
    wall = time.perf_counter() - t0
    root = Path(out_root or os.environ.get(OUT_ENV) or cfg.out or DEFAULT_OUT)
    echo = dict(raw)
    if command is not None:
        echo["command"] = command
    if seed is not None:
        echo["seed"] = seed
    run_dir = root / cfg.name
    report = write_run(run_dir, config_echo=echo, command=cfg.command, passed=passed,
                       payload=payload, tables=tables, plots=plots, wall_time=wall)
    return report, run_dir


def _parser():
    ap = argparse.ArgumentParser(prog="trajrecon",
                                 description="Delay-observation reconstruction experiments.")
    sub = ap.add_subparsers(dest="cmd", required=True)
    for name in ("run",) + COMMANDS:
        sp = sub.add_parser(name, help="run the command named in the config" if name == "run"
                            else f"run the {name} command")
        sp.add_argument("--config", type=Path, required=name not in ("oracle-suite",))
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", type=Path)
        sp.add_argument("--threads", type=int)
        sp.add_argument("--verify", action="store_true",
                        help="re-verify certificates and re-run the oracle batteries")
        if name == "oracle-suite":
            sp.add_argument("--suites", default=",".join(SUITES),
                            help="comma-separated battery names")
            sp.add_argument("--inject-fault", action="store_true",
                            help="corrupt the induced shift (self-test of the battery)")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.cmd == "oracle-suite" and args.config is None:
            suites = [s for s in args.suites.split(",") if s]
            raw = {"name": "oracle-suite", "command": "oracle-suite",
                   "params": {"suites": suites, "inject_fault": args.inject_fault}}
            if not suites:
                raise ReconError("no suites selected")
        elif args.config is not None:
            raw, _, _ = load_config(args.config)
        command = None if args.cmd == "run" else args.cmd
        report, run_dir = run(raw, out_root=args.out, command=command, seed=args.seed,
                              threads=args.threads, verify=args.verify)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except UnsupportedError as e:
        print(f"unsupported: {e}", file=sys.stderr)
        return 2
    except ReconError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    status = "PASS" if report["passed"] else "FAIL"
    print(f"{status} {report['command']} -> {run_dir}")
    return 0 if report["passed"] else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
