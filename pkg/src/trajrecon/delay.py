"""Delay observation maps and the checks built on them.

``I^S(x) = (f T^j(x))_{j in S}``; vectors in ``R^S`` carry the sup metric.
Observables with exact values (finite tables) give exact vectors compared by
equality.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import binomtest

from .dynamics import (Observable, SeparationVerdict, System,
                       _separation_from_orbits, classes_from_map, eventual_orbit_classes,
                       merge_tolerance, orbit_array)
from .errors import PreconditionError, ReconError, UnsupportedError
from .spaces import FiniteSpace

REAL_VECTOR_TOL = 1e-9
COINCIDENCE_TOL = 1e-9
MAX_LISTED = 20


@dataclass(frozen=True)
class DelaySchedule:
    """A finite set of delay times, sorted."""

    times: tuple

    def __post_init__(self):
        t = tuple(sorted(set(int(j) for j in self.times)))
        if not t:
            raise ReconError("a delay schedule needs at least one time")
        if t[0] < 0:
            raise ReconError("delay times must be >= 0")
        object.__setattr__(self, "times", t)

    @classmethod
    def prefix(cls, k: int) -> "DelaySchedule":
        """``{0, 1, ..., k}``."""
        return cls(tuple(range(int(k) + 1)))

    @property
    def span(self) -> int:
        return self.times[-1]

    def is_prefix(self, k=None) -> bool:
        return self.times == tuple(range(self.span + 1)) and (k is None or self.span == k)

    def __len__(self):
        return len(self.times)

    def __iter__(self):
        return iter(self.times)


def as_schedule(S) -> DelaySchedule:
    if isinstance(S, DelaySchedule):
        return S
    if isinstance(S, int):
        return DelaySchedule.prefix(S)
    return DelaySchedule(tuple(S))


@dataclass(frozen=True)
class DelayVector:
    schedule: DelaySchedule
    values: tuple
    system: str = ""
    observable: str = ""
    base: object = None

    def __len__(self):
        return len(self.values)

    def distance(self, other: "DelayVector") -> float:
        return vector_distance(np.array([self.values], dtype=object),
                               np.array([other.values], dtype=object))[0]


def vector_distance(a, b) -> np.ndarray:
    """Sup-metric distance between rows; exact rows give 0 or inf."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.dtype == object or b.dtype == object:
        return np.array([0.0 if tuple(r) == tuple(s) else math.inf for r, s in zip(a, b)])
    if a.shape[-1] == 0:
        return np.zeros(len(a))
    return np.max(np.abs(a - b), axis=-1)


def delay_vectors(system: System, f: Observable, S, points) -> np.ndarray:
    """Delay vectors of many points, shape ``(N, |S|)``."""
    S = as_schedule(S)
    space = system.space
    x = np.asarray(points)
    cols = []
    for j in range(S.span + 1):
        if j in S.times:
            cols.append(f.values(space, x))
        if j < S.span:
            x = system.apply(x)
    out = np.stack(cols, axis=1)
    return out


def delay_map(system: System, f: Observable, S, x) -> DelayVector:
    """``I^S_{T,f}(x)``."""
    S = as_schedule(S)
    arr = system.space.asarray([x])
    row = delay_vectors(system, f, S, arr)[0]
    values = tuple(v if f.exact else float(v) for v in row)
    return DelayVector(S, values, system.label, f.label, system.space.point(arr[0]))


def default_vector_tol(system, f):
    return 0.0 if (f.exact or system.space.exact and f.kind == "table") else REAL_VECTOR_TOL


# ---------------------------------------------------------------------------
# naturality


@dataclass(frozen=True)
class NaturalityReport:
    k: int
    n_points: int
    max_deviation: float

    @property
    def passed(self):
        return self.max_deviation == 0


def shift_naturality_check(system: System, f: Observable, k: int, points) -> NaturalityReport:
    """Compare ``I^{0..k}(T x)`` with coordinates ``1..k+1`` of ``I^{0..k+1}(x)``."""
    if k < 1:
        raise ReconError("k must be >= 1")
    x = np.asarray(points)
    long = delay_vectors(system, f, DelaySchedule.prefix(k + 1), x)[:, 1:]
    short = delay_vectors(system, f, DelaySchedule.prefix(k), system.apply(x))
    if long.dtype == object:
        dev = 0.0 if all(tuple(a) == tuple(b) for a, b in zip(long, short)) else math.inf
    else:
        dev = float(np.max(np.abs(long - short))) if long.size else 0.0
    return NaturalityReport(k, len(x), dev)


# ---------------------------------------------------------------------------
# alpha trajectory-embedding


@dataclass
class EmbeddingCheck:
    """Finite-sample certificate for membership of ``(T, f)`` in ``E(alpha; S)``."""

    system: str
    observable: str
    schedule: DelaySchedule
    alpha: float
    vector_tol: float
    n_drawn: int
    n_kept: int
    n_violations: int
    violations: list = field(default_factory=list)
    min_vector_gap: float = math.inf

    @property
    def passed(self) -> bool:
        return self.n_violations == 0

    def to_dict(self):
        return {
            "system": self.system, "observable": self.observable,
            "schedule": list(self.schedule.times), "alpha": self.alpha,
            "vector_tol": self.vector_tol, "n_drawn": self.n_drawn, "n_kept": self.n_kept,
            "n_violations": self.n_violations, "passed": self.passed,
            "min_vector_gap": self.min_vector_gap,
            "violations": [[_jsonable(a), _jsonable(b)] for a, b in self.violations],
        }


def _jsonable(p):
    if isinstance(p, tuple):
        return [_jsonable(v) for v in p]
    if isinstance(p, (np.integer,)):
        return int(p)
    if isinstance(p, (np.floating,)):
        return float(p)
    return p


def uniform_pairs(space, rng, n):
    if isinstance(space, FiniteSpace):
        i, j = np.triu_indices(space.size, k=1)
        return i.astype(np.int64), j.astype(np.int64)
    return space.sample(rng, n), space.sample(rng, n)


def alpha_embedding_check(system: System, f: Observable, S, alpha: float, *,
                          n_pairs: int = 10_000, rng=None, sampler=None,
                          vector_tol: float | None = None, max_rounds: int = 50) -> EmbeddingCheck:
    """Check that pairs staying ``alpha`` apart at all times of ``S`` get distinct vectors.

    ``sampler(space, rng, n)`` returns two point arrays; the default draws
    uniform pairs (all pairs on a finite space).  Drawing continues until
    ``n_pairs`` pairs were kept or ``max_rounds`` batches were drawn.
    """
    if alpha <= 0:
        raise ReconError("alpha must be > 0")
    S = as_schedule(S)
    space = system.space
    rng = np.random.default_rng(rng)
    sampler = sampler or uniform_pairs
    tol = default_vector_tol(system, f) if vector_tol is None else vector_tol
    drawn = kept = n_bad = 0
    bad: list = []
    min_gap = math.inf
    for _ in range(max_rounds):
        xs, ys = sampler(space, rng, n_pairs)
        drawn += len(xs)
        gaps = _gaps_at(system, xs, ys, S)
        keep = np.all(gaps >= alpha, axis=1)
        take = np.flatnonzero(keep)[: n_pairs - kept]
        kept += len(take)
        if len(take):
            vx = delay_vectors(system, f, S, xs[take])
            vy = delay_vectors(system, f, S, ys[take])
            d = vector_distance(vx, vy)
            min_gap = min(min_gap, float(d.min()))
            viol = np.flatnonzero(d <= tol)
            n_bad += len(viol)
            for i in viol[: MAX_LISTED - len(bad)]:
                bad.append((space.point(xs[take[i]]), space.point(ys[take[i]])))
        if kept >= n_pairs or isinstance(space, FiniteSpace):
            break
    return EmbeddingCheck(system.label, f.label, S, float(alpha), tol, drawn, kept, n_bad,
                          bad, min_gap)


def _gaps_at(system, xs, ys, S):
    space = system.space
    x, y = np.asarray(xs), np.asarray(ys)
    cols = []
    for j in range(S.span + 1):
        if j in S.times:
            cols.append(space.distances(x, y))
        if j < S.span:
            x, y = system.apply(x), system.apply(y)
    return np.stack(cols, axis=1)


def _require_certificate(cert, k):
    if cert is None or not isinstance(cert, EmbeddingCheck):
        raise PreconditionError("an alpha-embedding certificate for {0..k} is required")
    if not cert.passed:
        raise PreconditionError("the alpha-embedding check did not pass")
    if not cert.schedule.is_prefix(k):
        raise PreconditionError(f"certificate schedule {cert.schedule.times} is not {{0..{k}}}")


# ---------------------------------------------------------------------------
# reconstructed shift


@dataclass
class ShiftModulus:
    """Empirical modulus of continuity of the reconstructed shift."""

    k: int
    delta_in: float
    n_pairs: int
    max_input: float
    max_output: float
    worst_pair: tuple | None

    def to_dict(self):
        return {"k": self.k, "delta_in": self.delta_in, "n_pairs": self.n_pairs,
                "max_input": self.max_input, "max_output": self.max_output,
                "worst_pair": _jsonable(self.worst_pair)}


def near_pairs(space, rng, n, scale):
    """Pairs ``(x, y)`` with ``y`` a small perturbation of ``x``."""
    x = space.sample(rng, n)
    if space.coord_metric in ("euclidean", "circle") and x.ndim == 1:
        y = x + rng.uniform(-scale, scale, size=n)
        if space.coord_metric == "circle":
            y = y % 1.0
        else:
            y = np.clip(y, space.lo, space.hi)
        return x, y
    if isinstance(space, FiniteSpace):
        return x, x.copy()
    g = space.grid(max(scale, getattr(space, "resolution", 0.0)))
    cells = g.locate(x)
    y = np.concatenate([space.sample_cell(g, c, rng, 1) for c in cells])
    return x, y


def reconstructed_shift_welldefined(system: System, f: Observable, k: int, delta_in: float,
                                    certificate: EmbeddingCheck, *, pairs=None,
                                    n_pairs: int = 10_000, rng=None) -> ShiftModulus:
    """Max output distance of ``sigma^{0..k}`` over pairs with input distance <= delta_in."""
    _require_certificate(certificate, k)
    space = system.space
    rng = np.random.default_rng(rng)
    if pairs is None:
        if isinstance(space, FiniteSpace):
            i, j = np.meshgrid(space.all_points(), space.all_points(), indexing="ij")
            xs, ys = i.ravel(), j.ravel()
        else:
            xs, ys = near_pairs(space, rng, n_pairs, delta_in / 4 if delta_in > 0 else 0.0)
    else:
        xs = space.asarray([p[0] for p in pairs])
        ys = space.asarray([p[1] for p in pairs])
    long_x = delay_vectors(system, f, DelaySchedule.prefix(k + 1), xs)
    long_y = delay_vectors(system, f, DelaySchedule.prefix(k + 1), ys)
    d_in = vector_distance(long_x[:, :k + 1], long_y[:, :k + 1])
    keep = np.flatnonzero(d_in <= delta_in)
    if not len(keep):
        return ShiftModulus(k, delta_in, 0, 0.0, 0.0, None)
    d_out = vector_distance(long_x[keep, 1:], long_y[keep, 1:])
    w = int(np.argmax(d_out))
    worst = (space.point(xs[keep[w]]), space.point(ys[keep[w]]))
    return ShiftModulus(k, float(delta_in), len(keep), float(d_in[keep].max()),
                        float(d_out[w]), worst)


# ---------------------------------------------------------------------------
# projection p_{0..k}


@dataclass
class ProjectionCheck:
    k: int
    k_long: int
    n_points: int
    n_premise_pairs: int
    counterexample: tuple | None = None
    reason: str = ""

    @property
    def passed(self):
        return self.counterexample is None

    def to_dict(self):
        return {"k": self.k, "k_long": self.k_long, "n_points": self.n_points,
                "n_premise_pairs": self.n_premise_pairs, "passed": self.passed,
                "counterexample": _jsonable(self.counterexample), "reason": self.reason}


def _close_pairs(vectors, tol):
    if vectors.dtype == object:
        groups: dict = {}
        for i, row in enumerate(vectors):
            groups.setdefault(tuple(row), []).append(i)
        out = []
        for idx in groups.values():
            out += [(a, b) for ai, a in enumerate(idx) for b in idx[ai + 1:]]
        return np.asarray(out, dtype=int).reshape(-1, 2)
    tree = cKDTree(np.asarray(vectors, dtype=float))
    return tree.query_pairs(r=tol, p=np.inf, output_type="ndarray")


def projection_injectivity_check(system: System, f: Observable, k: int, k_long: int, points,
                                 *, tol: float | None = None,
                                 long_tol: float | None = None) -> ProjectionCheck:
    """Equal ``{0..k}`` vectors must force equal ``{0..k_long}`` vectors.

    Also checks the step that makes this work, ``T^k x = T^k y`` for every
    premise pair; a pair whose orbits have not merged by step ``k`` is
    reported as a counterexample even when the long vectors agree.
    """
    if k_long <= k:
        raise ReconError("k_long must exceed k")
    space = system.space
    x = np.asarray(points)
    tol = default_vector_tol(system, f) if tol is None else tol
    long_tol = (0.0 if f.exact else 1e-6) if long_tol is None else long_tol
    vec = delay_vectors(system, f, DelaySchedule.prefix(k_long), x)
    pairs = _close_pairs(vec[:, :k + 1], tol)
    check = ProjectionCheck(k, k_long, len(x), len(pairs))
    if not len(pairs):
        return check
    a, b = pairs[:, 0], pairs[:, 1]
    d_long = vector_distance(vec[a], vec[b])
    tk = system.iterate_array(x, k)
    if space.exact:
        merged = space.same(tk[a], tk[b])
    else:
        merged = space.distances(tk[a], tk[b]) <= max(merge_tolerance(space), long_tol)
    bad_long = np.flatnonzero(d_long > long_tol)
    bad_merge = np.flatnonzero(~merged)
    if len(bad_long):
        i = bad_long[0]
        check.reason = "long vectors differ"
    elif len(bad_merge):
        i = bad_merge[0]
        check.reason = f"orbits not merged by step {k}"
    else:
        return check
    check.counterexample = (space.point(x[a[i]]), space.point(x[b[i]]))
    return check


# ---------------------------------------------------------------------------
# coincidences


@dataclass
class CoincidenceReport:
    pair: tuple
    horizon: int
    tol: float
    indices: list
    verdict: SeparationVerdict
    bound: int

    @property
    def count(self):
        return len(self.indices)

    @property
    def violated(self):
        return self.verdict.separated and self.count > self.bound

    def to_dict(self):
        return {"pair": _jsonable(self.pair), "horizon": self.horizon, "tol": self.tol,
                "indices": self.indices, "count": self.count,
                "verdict": {"kind": self.verdict.kind, "index": self.verdict.index,
                            "alpha": self.verdict.alpha, "min_gap": self.verdict.min_gap},
                "bound": self.bound, "violated": self.violated}


def coincidence_count(system: System, f: Observable, x, y, horizon: int, *,
                      tol: float = COINCIDENCE_TOL, alpha: float = 1e-6,
                      dim: int | None = None) -> CoincidenceReport:
    """Times ``i <= horizon`` where ``f T^i x`` and ``f T^i y`` agree within ``tol``."""
    space = system.space
    d = space.dim if dim is None else dim
    if horizon < 2 * d + 1:
        raise ReconError(f"horizon must be >= 2d + 1 = {2 * d + 1}")
    xs, ys = space.asarray([x]), space.asarray([y])
    ox = orbit_array(system, xs, horizon)[0]
    oy = orbit_array(system, ys, horizon)[0]
    fx, fy = f.values(space, ox), f.values(space, oy)
    if f.exact:
        idx = [i for i in range(horizon + 1) if fx[i] == fy[i]]
    else:
        idx = np.flatnonzero(np.abs(fx.astype(float) - fy.astype(float)) <= tol).tolist()
    verdict = _separation_from_orbits(space, ox, oy, horizon, alpha)
    return CoincidenceReport((space.point(xs[0]), space.point(ys[0])), horizon, tol, idx,
                             verdict, 2 * d)


def coincidence_counts(system: System, f: Observable, xs, ys, horizon: int,
                       tol: float = COINCIDENCE_TOL) -> np.ndarray:
    """Vectorised coincidence counts over ``0..horizon`` for many pairs."""
    space = system.space
    x, y = np.asarray(xs), np.asarray(ys)
    counts = np.zeros(len(x), dtype=int)
    for i in range(horizon + 1):
        counts += np.abs(f.values(space, x) - f.values(space, y)) <= tol
        if i < horizon:
            x, y = system.apply(x), system.apply(y)
    return counts


def sample_separated_pairs(system: System, rng, n: int, horizon: int, alpha: float,
                           max_rounds: int = 200):
    """Uniform pairs whose gaps stay >= alpha at every time ``0..horizon``."""
    space = system.space
    got_x, got_y, total = [], [], 0
    for _ in range(max_rounds):
        xs, ys = space.sample(rng, n), space.sample(rng, n)
        gaps = _gaps_at(system, xs, ys, DelaySchedule.prefix(horizon))
        keep = np.all(gaps >= alpha, axis=1)
        got_x.append(xs[keep])
        got_y.append(ys[keep])
        total += int(keep.sum())
        if total >= n:
            break
    return np.concatenate(got_x)[:n], np.concatenate(got_y)[:n]


# ---------------------------------------------------------------------------
# orbit-class inference from two observed series


@dataclass
class OrbitClassVerdict:
    declared_equal_from: int | None
    evidence: list
    threshold: int
    low_confidence: bool = False

    @property
    def declared(self):
        return self.declared_equal_from is not None

    def to_dict(self):
        return {"declared_equal_from": self.declared_equal_from, "evidence": self.evidence,
                "threshold": self.threshold, "low_confidence": self.low_confidence}


def orbit_class_infer(series_x, series_y, d: int, tol: float = COINCIDENCE_TOL) -> OrbitClassVerdict:
    """Declare eventual equality once ``2d + 1`` coincidences have been seen.

    The declaration index is the position of the ``(2d + 1)``-th coincidence.
    Series with (near) zero variance are flagged as low confidence.
    """
    sx = np.asarray(series_x, dtype=float)
    sy = np.asarray(series_y, dtype=float)
    need = 2 * d + 1
    if len(sx) != len(sy):
        raise ReconError("series must have equal length")
    if len(sx) < need:
        raise ReconError(f"series need at least 2d + 1 = {need} terms")
    hits = np.flatnonzero(np.abs(sx - sy) <= tol).tolist()
    flat = max(float(np.var(sx)), float(np.var(sy))) < tol
    if len(hits) >= need:
        return OrbitClassVerdict(hits[need - 1], hits[:need], need, flat)
    return OrbitClassVerdict(None, hits, need, flat)


# ---------------------------------------------------------------------------
# genericity scans


def fixed_system(system):
    return lambda rng: system


def fourier_family(order=5, decay=0.5):
    def draw(rng):
        seed = int(rng.integers(0, 2**63 - 1))
        return Observable("fourier", {"seed": seed, "order": order, "decay": decay},
                          name=f"fourier[{seed}]")
    return draw


def constant_family(lo=-1.0, hi=1.0):
    def draw(rng):
        return Observable("constant", {"value": float(rng.uniform(lo, hi))})
    return draw


def perturbed_coordinate_family(amplitude=1e-3, order=3, decay=0.5):
    """The coordinate observable plus a small seeded Fourier term."""
    def draw(rng):
        seed = int(rng.integers(0, 2**63 - 1))
        return Observable("fourier", {"seed": seed, "order": order, "decay": decay,
                                      "amplitude": amplitude, "base": "coordinate"},
                          name=f"coord+{amplitude:g}fourier[{seed}]")
    return draw


@dataclass
class ScanResult:
    draws: int
    passes: int
    ci_low: float
    ci_high: float
    schedule: DelaySchedule
    alpha: float
    records: list = field(default_factory=list)

    @property
    def density(self):
        return self.passes / self.draws

    def to_dict(self):
        return {"draws": self.draws, "passes": self.passes, "density": self.density,
                "ci95": [self.ci_low, self.ci_high], "schedule": list(self.schedule.times),
                "alpha": self.alpha, "records": self.records}


def generic_scan(system_family, observable_family, S, alpha: float, n_draws: int, seed: int, *,
                 n_pairs: int = 2_000, threads: int = 1) -> ScanResult:
    """Fraction of seeded draws ``(T, f)`` passing :func:`alpha_embedding_check`.

    Each draw gets its own child of ``SeedSequence(seed)``, so results do not
    depend on ``threads``.
    """
    if n_draws < 1:
        raise ReconError("n_draws must be >= 1")
    S = as_schedule(S)
    children = np.random.SeedSequence(seed).spawn(n_draws)

    def one(i):
        rng = np.random.default_rng(children[i])
        system = system_family(rng)
        f = observable_family(rng)
        chk = alpha_embedding_check(system, f, S, alpha, n_pairs=n_pairs, rng=rng)
        return {"draw": i, "system": system.label, "observable": f.label,
                "passed": chk.passed, "n_kept": chk.n_kept, "n_violations": chk.n_violations,
                "min_vector_gap": chk.min_vector_gap}

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            records = list(pool.map(one, range(n_draws)))
    else:
        records = [one(i) for i in range(n_draws)]
    passes = sum(r["passed"] for r in records)
    ci = binomtest(passes, n_draws).proportion_ci(0.95, method="exact")
    return ScanResult(n_draws, passes, float(ci.low), float(ci.high), S, float(alpha), records)


# ---------------------------------------------------------------------------
# exact trajectory-isomorphism on finite systems


@dataclass
class IsomorphismCheck:
    passed: bool
    reason: str = ""
    witness: tuple | None = None
    source_classes: int = 0
    image_classes: int = 0
    image_states: int = 0

    def to_dict(self):
        return {"passed": self.passed, "reason": self.reason, "witness": _jsonable(self.witness),
                "source_classes": self.source_classes, "image_classes": self.image_classes,
                "image_states": self.image_states}


def trajectory_isomorphism_check_finite(system: System, f: Observable, k: int,
                                        shift=None) -> IsomorphismCheck:
    """Exact check that ``I^{0..k}`` induces a bijection of eventual-orbit classes.

    The image system has the distinct delay vectors as states and the induced
    shift ``sigma(I(x)) = I(T x)``.  ``shift`` overrides that rule (a callable
    on vectors), which lets callers inject faults.
    """
    space = system.space
    if not isinstance(space, FiniteSpace):
        raise UnsupportedError("exact isomorphism check needs a finite system")
    states = space.all_points()
    table = system.params["table"]
    vec = [tuple(r) for r in delay_vectors(system, f, DelaySchedule.prefix(k), states)]
    index: dict = {}
    for v in vec:
        index.setdefault(v, len(index))
    img = np.array([index[v] for v in vec])
    sigma = np.full(len(index), -1, dtype=np.int64)
    owner = {}
    for x in states.tolist():
        target = vec[table[x]] if shift is None else tuple(shift(vec[x]))
        if shift is not None and target != vec[table[x]]:
            return IsomorphismCheck(False, "supplied shift is not a morphism", (x,))
        t = index.get(target)
        if t is None:
            return IsomorphismCheck(False, "shift leaves the image", (x,))
        s = img[x]
        if sigma[s] == -1:
            sigma[s], owner[s] = t, x
        elif sigma[s] != t:
            return IsomorphismCheck(False, "induced shift not well-defined", (owner[s], x))
    src = eventual_orbit_classes(system)
    dst = classes_from_map(sigma)
    dst_of = {s: ci for ci, cls in enumerate(dst) for s in cls}
    seen: dict = {}
    for cls in src:
        c = dst_of[img[cls[0]]]
        if any(dst_of[img[x]] != c for x in cls):
            return IsomorphismCheck(False, "induced class map not well-defined", (cls[0],))
        if c in seen:
            return IsomorphismCheck(False, "distinct orbit classes collapse",
                                    (space.labels[seen[c]], space.labels[cls[0]]),
                                    len(src), len(dst), len(index))
        seen[c] = cls[0]
    if len(seen) != len(dst):
        return IsomorphismCheck(False, "class map not surjective", None, len(src), len(dst),
                                len(index))
    return IsomorphismCheck(True, "", None, len(src), len(dst), len(index))
