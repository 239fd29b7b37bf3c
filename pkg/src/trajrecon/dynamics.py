"""Maps ``T: X -> X``, observables ``f: X -> R`` and orbit-level tools."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import PointError, ReconError, UnsupportedError
from .spaces import (AddressSpace, Circle, Dendrite, FiniteSpace, Interval, Simplex2,
                     Space, barycentric)

REAL_MERGE_TOL = 1e-9

# map kind -> space classes it is defined on
_DOMAINS = {
    "identity": (Space,),
    "constant": (Space,),
    "tent": (Interval,),
    "logistic": (Interval,),
    "square": (Interval,),
    "doubling": (Circle, Interval),
    "rotation": (Circle,),
    "north_south": (Circle,),
    "gasket_shift": (AddressSpace,),
    "carpet_shift": (AddressSpace,),
    "cantor_shift": (AddressSpace,),
    "dendrite_pl": (Dendrite,),
    "simplex_fold": (Interval, Simplex2),
    "finite_map": (FiniteSpace,),
}
_SHIFT_SPACE = {"gasket_shift": "gasket", "carpet_shift": "carpet", "cantor_shift": "cantor"}


@dataclass(frozen=True)
class System:
    """A map of ``space`` into itself; evaluation is pure.

    ``params`` depend on ``kind``:

    * ``constant``: ``value`` (a point)
    * ``logistic``: ``r`` in (0, 4]
    * ``rotation``: ``theta``
    * ``north_south``: ``strength`` in (0, 1)
    * ``*_shift``: ``refill`` -- ``"repeat"`` (repeat the last letter) or ``"zero"``
    * ``dendrite_pl``: ``vertex_map`` (vertex -> vertex, extended along geodesics)
    * ``finite_map``: ``table`` (state -> state, one entry per state)
    """

    space: Space
    kind: str
    params: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        if self.kind not in _DOMAINS:
            raise UnsupportedError(f"unknown map kind {self.kind!r}")
        if not isinstance(self.space, _DOMAINS[self.kind]):
            raise UnsupportedError(f"map {self.kind!r} is not defined on space {self.space.name!r}")
        if self.kind in _SHIFT_SPACE and self.space.name != _SHIFT_SPACE[self.kind]:
            raise UnsupportedError(f"{self.kind} needs the {_SHIFT_SPACE[self.kind]} space")
        if self.kind == "simplex_fold" and isinstance(self.space, Interval) and (
                self.space.lo, self.space.hi) != (0.0, 1.0):
            raise UnsupportedError("simplex_fold on an interval needs [0, 1]")
        p = dict(self.params)
        if self.kind == "logistic":
            r = float(p.get("r", 4.0))
            if not 0 < r <= 4:
                raise ReconError("logistic needs 0 < r <= 4 so that [0, 1] is invariant")
            p["r"] = r
        elif self.kind == "rotation":
            p["theta"] = float(p.get("theta", (math.sqrt(5) - 1) / 2)) % 1.0
        elif self.kind == "north_south":
            s = float(p.get("strength", 0.5))
            if not 0 < s < 1:
                raise ReconError("north_south strength must lie in (0, 1)")
            p["strength"] = s
        elif self.kind in _SHIFT_SPACE:
            refill = p.get("refill", "repeat")
            if refill not in ("repeat", "zero"):
                raise ReconError("shift refill must be 'repeat' or 'zero'")
            p["refill"] = refill
        elif self.kind == "constant":
            p["value"] = self.space.check(p["value"]) if "value" in p else self.space.point(
                self.space.epsilon_net(self.space.diameter / 2)[0])
        elif self.kind == "finite_map":
            p["table"] = _finite_table(self.space, p.get("table"))
        elif self.kind == "dendrite_pl":
            p["vertex_map"] = _vertex_map(self.space, p.get("vertex_map"))
        object.__setattr__(self, "params", p)
        if self.kind == "dendrite_pl":
            object.__setattr__(self, "_paths", _edge_paths(self.space, p["vertex_map"]))

    @property
    def label(self):
        return self.name or self.kind

    def describe(self):
        params = {}
        for k, v in self.params.items():
            if isinstance(v, np.ndarray):
                v = v.tolist()
            elif isinstance(v, tuple):
                v = list(v)
            params[k] = v
        return {"kind": self.kind, "params": params, "space": self.space.describe()}

    # ------------------------------------------------------------------
    def apply(self, points) -> np.ndarray:
        """Vectorised ``T`` on a canonical point array."""
        x = np.asarray(points)
        k = self.kind
        p = self.params
        if k == "identity":
            return x.copy()
        if k == "constant":
            return np.repeat(self.space.asarray([p["value"]]), len(x), axis=0)
        if k == "tent":
            return np.where(x < 0.5, 2.0 * x, 2.0 * (1.0 - x))
        if k == "logistic":
            return p["r"] * x * (1.0 - x)
        if k == "square":
            return x * x
        if k == "doubling":
            return (2.0 * x) % 1.0
        if k == "rotation":
            return (x + p["theta"]) % 1.0
        if k == "north_south":
            y = x - p["strength"] / (2 * math.pi) * np.sin(2 * math.pi * x)
            return y % 1.0
        if k in _SHIFT_SPACE:
            fill = x[:, -1:] if p["refill"] == "repeat" else np.zeros_like(x[:, -1:])
            return np.concatenate([x[:, 1:], fill], axis=1)
        if k == "simplex_fold":
            return _fold(self.space, x)
        if k == "finite_map":
            return p["table"][x]
        if k == "dendrite_pl":
            return _dendrite_apply(self.space, self._paths, x)
        raise UnsupportedError(k)  # pragma: no cover

    def __call__(self, x):
        return self.space.point(self.apply(self.space.asarray([x]))[0])

    def iterate_array(self, points, n) -> np.ndarray:
        x = np.asarray(points)
        for _ in range(n):
            x = self.apply(x)
        return x


def _finite_table(space, table):
    if table is None:
        raise ReconError("finite_map needs a table")
    if isinstance(table, dict):
        out = np.empty(space.size, dtype=np.int64)
        seen = set()
        for src, dst in table.items():
            i = space.index(src)
            out[i] = space.index(dst) if not isinstance(dst, (int, np.integer)) else int(dst)
            seen.add(i)
        if len(seen) != space.size:
            raise ReconError("finite_map table must be total on the state set")
        return out
    arr = np.asarray([space.asarray([t])[0] for t in table], dtype=np.int64)
    if len(arr) != space.size:
        raise ReconError("finite_map table must be total on the state set")
    return arr


# ---------------------------------------------------------------------------
# folding map at barycentres


def fold_barycentric(lam: np.ndarray) -> np.ndarray:
    """Barycentric coordinates of the fold image.

    Sorting ``lam`` decreasingly as ``mu_0 >= ... >= mu_n`` selects the
    simplex of the barycentric subdivision holding the point; the vertex that
    is the barycentre of an ``i``-face goes to ``p_i``, which gives image
    weight ``(i + 1) * (mu_i - mu_{i+1})`` on ``p_i``.
    """
    mu = -np.sort(-lam, axis=1)
    nxt = np.concatenate([mu[:, 1:], np.zeros((len(mu), 1))], axis=1)
    return (np.arange(1, mu.shape[1] + 1)) * (mu - nxt)


def _fold(space, x):
    if isinstance(space, Interval):
        lam = np.column_stack([1.0 - x, x])
        return fold_barycentric(lam)[:, 1]
    lam = barycentric(x, space.vertices)
    return fold_barycentric(lam) @ space.vertices


# ---------------------------------------------------------------------------
# piecewise-linear maps of dendrites


def _vertex_map(space, vm):
    if vm is None:
        raise ReconError("dendrite_pl needs vertex_map")
    if isinstance(vm, dict):
        vm = [vm[k] for k in sorted(vm, key=int)]
    vm = np.asarray(vm, dtype=np.int64)
    if len(vm) != space.n_vertices or vm.min() < 0 or vm.max() >= space.n_vertices:
        raise ReconError("vertex_map must send every vertex to a vertex")
    return vm


def _geodesic(space, a, b):
    # edge sequence (edge, forward?) from vertex a to vertex b
    if a == b:
        return []
    D = space.vdist
    path, u = [], a
    while u != b:
        for e, (p, q) in enumerate(space.edges):
            if p == u or q == u:
                v = q if p == u else p
                if math.isclose(D[a, v] + D[v, b], D[a, b]) and D[a, v] > D[a, u]:
                    path.append((e, p == u))
                    u = v
                    break
    return path


def _edge_paths(space, vm):
    paths = []
    for u, v in space.edges:
        segs = _geodesic(space, int(vm[u]), int(vm[v]))
        lens = np.array([space.lengths[e] for e, _ in segs])
        paths.append((int(vm[u]), segs, np.concatenate([[0.0], np.cumsum(lens)])))
    return paths


def _dendrite_apply(space, paths, x):
    out = np.empty_like(x, dtype=float)
    for i, (e, t) in enumerate(np.asarray(x, dtype=float)):
        start, segs, cum = paths[int(e)]
        if not segs:
            out[i] = space.vertex_point(start)
            continue
        s = t * cum[-1]
        j = min(int(np.searchsorted(cum, s, side="right")) - 1, len(segs) - 1)
        edge, forward = segs[j]
        frac = (s - cum[j]) / space.lengths[edge]
        frac = min(max(frac, 0.0), 1.0)
        out[i] = (edge, frac if forward else 1.0 - frac)
    return out


# ---------------------------------------------------------------------------
# observables


@dataclass(frozen=True)
class Observable:
    """A real-valued function on a space.

    Kinds: ``coordinate`` (``index``), ``fourier`` (``seed``, ``order``,
    ``decay``, optional ``amplitude`` and ``base`` = ``"coordinate"`` to add
    the first coordinate), ``piecewise_constant`` (``breaks``, ``values``),
    ``table`` (``values``, one per finite state; kept exact), ``constant``
    (``value``).
    """

    kind: str
    params: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        p = dict(self.params)
        if self.kind == "fourier":
            m = int(p.get("order", 5))
            if m < 1:
                raise ReconError("fourier order must be >= 1")
            decay = float(p.get("decay", 0.5))
            rng = np.random.default_rng(int(p.get("seed", 0)))
            ab = rng.uniform(-1.0, 1.0, size=(2, m)) * decay ** np.arange(1, m + 1)
            p.update(order=m, decay=decay, seed=int(p.get("seed", 0)))
            object.__setattr__(self, "_coef", ab)
        elif self.kind == "piecewise_constant":
            breaks = np.asarray(p["breaks"], dtype=float)
            values = np.asarray(p["values"], dtype=float)
            if len(values) != len(breaks) + 1:
                raise ReconError("piecewise_constant needs len(values) == len(breaks) + 1")
            if np.any(np.diff(breaks) <= 0):
                raise ReconError("piecewise_constant breaks must increase")
            if len(set(values.tolist())) != len(values):
                raise ReconError("piecewise_constant values must be pairwise distinct")
            p.update(breaks=breaks, values=values)
        elif self.kind == "table":
            p["values"] = tuple(_exact(v) for v in p["values"])
        elif self.kind == "constant":
            p["value"] = float(p.get("value", 0.0))
        elif self.kind == "coordinate":
            p["index"] = int(p.get("index", 0))
        else:
            raise UnsupportedError(f"unknown observable kind {self.kind!r}")
        object.__setattr__(self, "params", p)

    @property
    def label(self):
        return self.name or self.kind

    def describe(self):
        out = {}
        for k, v in self.params.items():
            if isinstance(v, np.ndarray):
                v = v.tolist()
            elif isinstance(v, tuple):
                v = [str(x) if isinstance(x, Fraction) else x for x in v]
            out[k] = v
        return {"kind": self.kind, "params": out}

    @property
    def exact(self):
        return self.kind == "table"

    def values(self, space: Space, points) -> np.ndarray:
        """Evaluate on a canonical point array."""
        k, p = self.kind, self.params
        pts = np.asarray(points)
        if k == "table":
            if not isinstance(space, FiniteSpace) or len(p["values"]) != space.size:
                raise UnsupportedError("table observables need a finite space of matching size")
            table = np.empty(len(p["values"]), dtype=object)
            table[:] = p["values"]
            return table[pts]
        n = len(pts)
        if k == "constant":
            return np.full(n, p["value"])
        c = space.coords(pts)
        if k == "coordinate":
            if not 0 <= p["index"] < c.shape[1]:
                raise UnsupportedError(f"coordinate index {p['index']} out of range")
            return c[:, p["index"]].astype(float)
        if k == "piecewise_constant":
            if c.shape[1] != 1:
                raise UnsupportedError("piecewise_constant needs a 1-dimensional coordinate")
            return p["values"][np.searchsorted(p["breaks"], c[:, 0], side="right")]
        # fourier
        a, b = self._coef
        m = p["order"]
        dirs = self._directions(c.shape[1])
        phase = 2 * math.pi * (c @ dirs.T) * np.arange(1, m + 1)
        out = np.cos(phase) @ a + np.sin(phase) @ b
        out = out * float(p.get("amplitude", 1.0))
        if p.get("base") == "coordinate":
            out = out + c[:, 0]
        return out

    def _directions(self, dim):
        if dim == 1:
            return np.ones((self.params["order"], 1))
        rng = np.random.default_rng([self.params["seed"], dim])
        d = rng.normal(size=(self.params["order"], dim))
        return d / np.linalg.norm(d, axis=1, keepdims=True)

    def __call__(self, space, x):
        v = self.values(space, space.asarray([x]))[0]
        return v if self.exact else float(v)


def _exact(v):
    if isinstance(v, (int, Fraction)):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v)
    return v


# ---------------------------------------------------------------------------
# orbits


@dataclass(frozen=True)
class Orbit:
    """``(T^i(x))_{i=0..N}`` as a canonical point array."""

    system: System
    points: np.ndarray

    @property
    def base(self):
        return self.system.space.point(self.points[0])

    def __len__(self):
        return len(self.points)

    def __getitem__(self, i):
        return self.system.space.point(self.points[i])


def iterate(system: System, x, n: int):
    """``T^n(x)`` for a scalar point."""
    if n < 0:
        raise ReconError("n must be >= 0")
    arr = system.space.asarray([x])
    return system.space.point(system.iterate_array(arr, n)[0])


def orbit(system: System, x, n: int) -> Orbit:
    arr = system.space.asarray([x])
    rows = [arr[0]]
    for _ in range(n):
        arr = system.apply(arr)
        rows.append(arr[0])
    return Orbit(system, np.asarray(rows))


def orbit_array(system: System, points, n: int) -> np.ndarray:
    """Orbits of many points: shape ``(N, n + 1, ...)``."""
    x = np.asarray(points)
    out = [x]
    for _ in range(n):
        x = system.apply(x)
        out.append(x)
    return np.stack(out, axis=1)


def merge_tolerance(space: Space) -> float:
    return 0.0 if space.exact else REAL_MERGE_TOL


def estimate_lipschitz(system: System, grid, rng, per_cell=4) -> float:
    """Largest sampled ratio ``d(T p, T c) / d(p, c)`` over cells ``c``."""
    space = system.space
    reps = grid.reps
    img_reps = system.apply(reps)
    best = 0.0
    for _ in range(per_cell):
        pts = np.concatenate([space.sample_cell(grid, i, rng, 1) for i in range(len(grid))])
        d_in = space.distances(pts, reps)
        d_out = space.distances(system.apply(pts), img_reps)
        ok = d_in > 0
        if np.any(ok):
            best = max(best, float(np.max(d_out[ok] / d_in[ok])))
    return best


# ---------------------------------------------------------------------------
# periodic points


def periodic_points(system: System, n: int, mesh: float, tol: float = 1e-9):
    """Points with ``T^i(x) = x`` for some ``1 <= i <= n``, with minimal period.

    Real 1-dimensional systems: bisection on sign changes of the (wrapped)
    displacement ``T^i(x) - x`` in every grid cell; a bracket that does not
    shrink onto a root (a jump of the map) is discarded.  Finite systems are
    enumerated exactly.  Address shifts return the periodic words ``u^inf``
    truncated to the depth, exact up to the address resolution.
    """
    if n < 1:
        raise ReconError("n must be >= 1")
    space = system.space
    if isinstance(space, FiniteSpace):
        return _periodic_finite(system, n)
    if isinstance(space, AddressSpace) and system.kind in _SHIFT_SPACE:
        return _periodic_words(system, n)
    if isinstance(space, (Interval, Circle)):
        return _periodic_real(system, n, mesh, tol)
    raise UnsupportedError(f"periodic points of {system.kind} on {space.name} are not supported")


def _min_period(system, x, n, tol):
    space = system.space
    y = x
    for i in range(1, n + 1):
        y = system.apply(y)
        if space.distances(y, x)[0] <= tol:
            return i
    return None


def _periodic_finite(system, n):
    space = system.space
    out = []
    for s in space.all_points():
        per = _min_period(system, np.array([s]), n, 0.0)
        if per is not None:
            out.append((int(s), per))
    return out


def _periodic_words(system, n):
    space = system.space
    m = len(space.alphabet)
    seen, out = set(), []
    for per in range(1, n + 1):
        for u in np.ndindex(*([m] * per)):
            w = tuple((list(u) * (space.depth // per + 1))[:space.depth])
            if w in seen:
                continue
            seen.add(w)
            # minimal period of the infinite word u^inf
            p = next(q for q in range(1, per + 1) if per % q == 0 and u == tuple(u[:q]) * (per // q))
            out.append((w, p))
    return out


def _displacement(system, x, i):
    y = system.iterate_array(x, i)
    d = y - x
    if isinstance(system.space, Circle):
        d = (d + 0.5) % 1.0 - 0.5
    return d


def _periodic_real(system, n, mesh, tol):
    space = system.space
    g = space.grid(mesh)
    left = g.reps - g.radii
    right = g.reps + g.radii
    if isinstance(space, Interval):
        right[-1] = space.hi
    found = []
    for i in range(1, n + 1):
        fl = _displacement(system, left, i)
        fr = _displacement(system, right, i)
        zero = np.abs(fl) <= tol
        found.extend(left[zero].tolist())
        if isinstance(space, Interval) and abs(fr[-1]) <= tol:
            found.append(float(right[-1]))
        bracket = np.flatnonzero(~zero & (np.sign(fl) * np.sign(fr) < 0))
        for j in bracket:
            root = _bisect(system, i, left[j], right[j], fl[j])
            if root is not None and space.metric(system.iterate_array(np.array([root]), i)[0], root) <= tol:
                found.append(root)
    found = sorted(set(float(space.asarray([x])[0]) for x in found))
    out, last = [], None
    for x in found:
        if last is not None and space.metric(x, last) <= max(tol, 1e-12) * 10:
            continue
        per = _min_period(system, np.array([x]), n, tol)
        if per is not None:
            out.append((x, per))
            last = x
    return out


def _bisect(system, i, a, b, fa, iters=200):
    for _ in range(iters):
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        fm = _displacement(system, np.array([m]), i)[0]
        if fm == 0:
            return float(m)
        if np.sign(fm) == np.sign(fa):
            a, fa = m, fm
        else:
            b = m
    return float(0.5 * (a + b))


# ---------------------------------------------------------------------------
# trajectory separation


@dataclass(frozen=True)
class SeparationVerdict:
    """Outcome of a finite-horizon trajectory-separation test.

    ``kind`` is ``"separated"`` (all gaps >= alpha up to ``horizon``),
    ``"merged"`` (orbits meet at ``index``) or ``"undetermined"``.
    """

    kind: str
    horizon: int
    alpha: float
    index: int | None = None
    min_gap: float = math.inf

    @property
    def separated(self):
        return self.kind == "separated"

    @property
    def merged(self):
        return self.kind == "merged"


def is_trajectory_separated(system: System, x, y, horizon: int, alpha: float,
                            merge_tol: float | None = None) -> SeparationVerdict:
    if alpha <= 0:
        raise ReconError("alpha must be > 0")
    if horizon < 1:
        raise ReconError("horizon must be >= 1")
    space = system.space
    ox = orbit_array(system, space.asarray([x]), horizon)[0]
    oy = orbit_array(system, space.asarray([y]), horizon)[0]
    return _separation_from_orbits(space, ox, oy, horizon, alpha, merge_tol)


def _separation_from_orbits(space, ox, oy, horizon, alpha, merge_tol=None):
    gaps = space.distances(ox, oy)
    if merge_tol is None:
        merge_tol = merge_tolerance(space)
    if space.exact:
        met = space.same(ox, oy)
    else:
        met = gaps <= merge_tol
    hit = np.flatnonzero(met)
    if hit.size:
        return SeparationVerdict("merged", horizon, alpha, int(hit[0]), float(gaps.min()))
    kind = "separated" if np.all(gaps >= alpha) else "undetermined"
    return SeparationVerdict(kind, horizon, alpha, None, float(gaps.min()))


def separation_gaps(system: System, xs, ys, horizon: int) -> np.ndarray:
    """Gaps ``d(T^i x, T^i y)`` for many pairs, shape ``(N, horizon + 1)``."""
    space = system.space
    x, y = np.asarray(xs), np.asarray(ys)
    out = []
    for _ in range(horizon + 1):
        out.append(space.distances(x, y))
        x, y = system.apply(x), system.apply(y)
    return np.stack(out, axis=1)


# ---------------------------------------------------------------------------
# exact finite oracle


def _require_finite(system):
    if not isinstance(system.space, FiniteSpace):
        raise UnsupportedError("this operation needs a finite system")


def eventual_orbit_classes(system: System) -> list[list[int]]:
    """Partition of the states by eventual equality of orbits.

    On ``m`` states every orbit is periodic after at most ``m`` steps, so
    ``x ~ y`` iff ``T^m(x) = T^m(y)``.
    """
    _require_finite(system)
    states = system.space.all_points()
    return classes_from_map(system.params["table"], states)


def classes_from_map(table, states=None) -> list[list[int]]:
    table = np.asarray(table, dtype=np.int64)
    if states is None:
        states = np.arange(len(table))
    far = np.asarray(states)
    for _ in range(len(table)):
        far = table[far]
    groups: dict[int, list[int]] = {}
    for s, t in zip(states.tolist(), far.tolist()):
        groups.setdefault(t, []).append(s)
    return sorted(groups.values())


def is_doubly_zero_dimensional_finite(system: System) -> bool:
    """Every subset of a finite space is 0-dimensional, so always True."""
    _require_finite(system)
    return True


def check_self_map(system: System, rng, n=10_000, tol=1e-12) -> bool:
    """Whether sampled images stay in the space."""
    pts = system.space.sample(rng, n)
    img = system.apply(pts)
    try:
        ok = system.space.contains(img, tol)
    except PointError:
        return False
    return bool(np.all(ok))
