"""Entropy from (n, eps)-separated sets.

Two orbits are (n, eps)-separated when their distance reaches ``eps`` at
some time ``0 <= j < n``.  Counts of separated sets drawn from a finite
candidate net give lower bounds for ``s_n(eps)``; the slope of
``log s_n`` against ``n`` estimates the entropy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .delay import EmbeddingCheck, _require_certificate, delay_vectors
from .dynamics import Observable, System, orbit_array
from .errors import ReconError
from .spaces import Space

EXACT_LIMIT = 20
DEFAULT_SATURATION = 0.25
# offset of net points inside their cells; irrational so that no candidate is
# a dyadic rational (those collapse onto 0 under tent/doubling in a few steps)
NET_OFFSET = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class ReconstructedShift:
    """The shift on delay vectors over ``{0..k}``.

    One step advances the underlying point by ``T`` and re-evaluates the
    window, so distances at time ``j`` compare ``f T^{j+i}`` for ``i <= k``
    in the sup metric.
    """

    system: System
    observable: Observable
    k: int

    @property
    def space(self) -> Space:
        return self.system.space

    @property
    def label(self):
        return f"shift[{self.system.label},{self.observable.label},k={self.k}]"


def candidate_net(space: Space, mesh: float) -> np.ndarray:
    """Candidates with covering radius <= ``mesh``.

    Interval and circle use one point per ``mesh`` cell at a fixed irrational
    offset; other spaces use their own ``epsilon_net``.
    """
    if space.name in ("interval", "circle"):
        g = space.grid(mesh)
        w = 2 * g.radii[0]
        return g.reps - g.radii + w * NET_OFFSET
    return space.epsilon_net(mesh)


# ---------------------------------------------------------------------------
# orbit features


@dataclass
class OrbitFeatures:
    """Per-candidate orbit data of shape ``(N, steps, ...)`` and how to compare it.

    ``metric`` is ``"euclidean"``, ``"circle"`` or ``"sup"`` on real feature
    vectors, or ``"space"`` to defer to ``space.distances`` on raw points.
    """

    data: np.ndarray
    metric: str
    space: Space | None = None
    # distances over n steps use the first n + lag rows of data
    lag: int = 0

    def __len__(self):
        return len(self.data)

    @property
    def steps(self):
        return self.data.shape[1] - self.lag

    def __post_init__(self):
        # 1-D real features get a flat copy for the hot path
        self._flat = None
        if self.metric != "space" and self.data.ndim == 3 and self.data.shape[2] == 1:
            self._flat = np.ascontiguousarray(self.data[:, :, 0].T)

    def dist(self, j, idx, i) -> np.ndarray:
        if self._flat is not None:
            row = self._flat[j]
            d = np.abs(row[idx] - row[i])
            return np.minimum(d, 1.0 - d) if self.metric == "circle" else d
        a = self.data[idx, j]
        b = self.data[i, j]
        if self.metric == "space":
            return self.space.distances(a, np.broadcast_to(b, a.shape))
        d = np.abs(a - b)
        if self.metric == "circle":
            d = np.minimum(d % 1.0, 1.0 - d % 1.0)
            return d[:, 0]
        if self.metric == "sup":
            return d.max(axis=1)
        return np.sqrt((d * d).sum(axis=1))

    def bowen(self, idx, i, n) -> np.ndarray:
        """``max_{j<n}`` distance between candidate ``i`` and each of ``idx``."""
        n = n + self.lag
        if self.metric == "space":
            out = np.zeros(len(idx))
            for j in range(n):
                out = np.maximum(out, self.dist(j, idx, i))
            return out
        d = np.abs(self.data[idx, :n] - self.data[i, :n])
        if self.metric == "circle":
            d = np.minimum(d, 1.0 - d)
        if d.shape[2] == 1:
            d = d[:, :, 0]
        elif self.metric == "sup":
            d = d.max(axis=2)
        else:
            d = np.sqrt((d * d).sum(axis=2))
        return d.max(axis=1)


def _source_metric(space):
    if space.coord_metric in ("euclidean", "circle"):
        return space.coord_metric
    return "space"


def orbit_features(system: System, candidates, n: int) -> OrbitFeatures:
    space = system.space
    pts = np.asarray(candidates)
    orb = orbit_array(system, pts, n - 1)
    metric = _source_metric(space)
    if metric == "space":
        return OrbitFeatures(orb, metric, space)
    N = len(pts)
    c = space.coords(orb.reshape((N * n,) + pts.shape[1:]))
    return OrbitFeatures(c.reshape(N, n, -1), metric, space)


def delay_features(shift: ReconstructedShift, candidates, n: int) -> OrbitFeatures:
    # the sup over windows {j..j+k}, j < n, is the sup over times 0..n-1+k,
    # so the scalar series with lag k gives the same distances
    vec = delay_vectors(shift.system, shift.observable, n - 1 + shift.k, candidates)
    vec = np.asarray(vec, dtype=float)
    return OrbitFeatures(vec[:, :, None], "sup", lag=shift.k)


def features_for(target, candidates, n) -> OrbitFeatures:
    if isinstance(target, ReconstructedShift):
        return delay_features(target, candidates, n)
    return orbit_features(target, candidates, n)


class _Neighbours:
    """Candidates within ``eps`` of a given one over the first ``n`` steps."""

    def __init__(self, feat: OrbitFeatures, eps: float):
        self.feat, self.eps = feat, eps
        self.mode = "all"
        if feat.metric != "space":
            # every supported metric dominates the first-coordinate gap, so a
            # slab in that coordinate is a superset of the eps-ball
            x0 = feat.data[:, 0, 0]
            self.order = np.argsort(x0, kind="stable")
            self.sorted = x0[self.order]
            self.mode = "sorted"

    def window(self, i):
        f, eps = self.feat, self.eps
        if self.mode == "sorted":
            x = f.data[i, 0, 0]
            spans = [(x - eps, x + eps)]
            if f.metric == "circle":
                spans += [(x - eps + 1.0, x + eps + 1.0), (x - eps - 1.0, x + eps - 1.0)]
            parts = []
            for lo, hi in spans:
                a = np.searchsorted(self.sorted, lo, side="left")
                b = np.searchsorted(self.sorted, hi, side="right")
                if b > a:
                    parts.append(self.order[a:b])
            if len(parts) == 1:
                return parts[0]
            return np.unique(np.concatenate(parts)) if parts else np.array([i])
        return np.arange(len(f))

    def __call__(self, i, n, among=None):
        idx = self.window(i)
        if among is not None:
            idx = idx[among[idx]]
        # step-by-step filtering while the set is large, then one batched pass
        for j in range(n + self.feat.lag):
            if len(idx) <= 64:
                break
            idx = idx[self.feat.dist(j, idx, i) < self.eps]
        if len(idx):
            idx = idx[self.feat.bowen(idx, i, n) < self.eps]
        return idx


# ---------------------------------------------------------------------------
# separated sets


@dataclass
class SeparatedSetResult:
    n: int
    eps: float
    s_n_lower: int
    witness: np.ndarray
    exact: bool = False

    def to_row(self):
        return {"n": self.n, "eps": self.eps, "s_n": self.s_n_lower, "exact": self.exact}


def _greedy(feat, n, eps, seed=(), nb=None):
    N = len(feat)
    nb = nb or _Neighbours(feat, eps)
    free = np.ones(N, dtype=bool)
    chosen = []

    def take(i):
        chosen.append(i)
        free[i] = False
        free[nb(i, n, free)] = False

    for i in seed:
        take(int(i))
    for i in range(N):
        if free[i]:
            take(i)
    return np.sort(np.asarray(chosen, dtype=np.int64))


def _conflicts(feat, n, eps):
    N = len(feat)
    conf = np.zeros((N, N), dtype=bool)
    for i in range(N):
        conf[i] = feat.bowen(np.arange(N), i, n) < eps
    np.fill_diagonal(conf, False)
    return conf


def _max_independent(conf) -> list[int]:
    """Exact maximum independent set by branch and bound on bitmasks."""
    N = len(conf)
    adj = [sum(1 << int(j) for j in np.flatnonzero(conf[i])) for i in range(N)]
    best = [0, 0]

    def grow(cand, chosen, size):
        if cand == 0:
            if size > best[0]:
                best[:] = [size, chosen]
            return
        if size + bin(cand).count("1") <= best[0]:
            return
        v = (cand & -cand).bit_length() - 1
        grow(cand & ~adj[v] & ~(1 << v), chosen | (1 << v), size + 1)
        grow(cand & ~(1 << v), chosen, size)

    grow((1 << N) - 1, 0, 0)
    return [i for i in range(N) if best[1] >> i & 1]


def max_separated_greedy(target, candidates, n: int, eps: float, *, exact="auto",
                         features: OrbitFeatures | None = None, seed=()) -> SeparatedSetResult:
    """Greedy (n, eps)-separated subset of ``candidates``, taken in order.

    The result is separated and maximal among the candidates.  With
    ``exact="auto"`` candidate sets of at most 20 points are solved exactly
    instead.  ``seed`` lists candidate indices already known to be separated;
    they are kept and the greedy pass extends them.
    """
    if n < 1:
        raise ReconError("n must be >= 1")
    if eps <= 0:
        raise ReconError("eps must be > 0")
    if features is None:
        if len(candidates) == 0:
            raise ReconError("no candidates")
        features = features_for(target, candidates, n)
    if len(features) == 0:
        raise ReconError("no candidates")
    if features.steps < n:
        raise ReconError("features cover fewer than n steps")
    use_exact = exact is True or (exact == "auto" and len(features) <= EXACT_LIMIT)
    if use_exact:
        if len(features) > 30:
            raise ReconError("exact search is limited to 30 candidates")
        idx = np.asarray(_max_independent(_conflicts(features, n, eps)), dtype=np.int64)
        return SeparatedSetResult(n, float(eps), len(idx), idx, True)
    idx = _greedy(features, n, eps, seed)
    return SeparatedSetResult(n, float(eps), len(idx), idx, False)


def _pair_bowen(target, pts_a, pts_b, n):
    """Independent recomputation of Bowen distances between point pairs."""
    if isinstance(target, ReconstructedShift):
        va = np.asarray(delay_vectors(target.system, target.observable, n - 1 + target.k, pts_a),
                        dtype=float)
        vb = np.asarray(delay_vectors(target.system, target.observable, n - 1 + target.k, pts_b),
                        dtype=float)
        gaps = np.abs(va - vb)
        return np.max([gaps[:, j:j + target.k + 1].max(axis=1) for j in range(n)], axis=0)
    space = target.space
    a, b = np.asarray(pts_a), np.asarray(pts_b)
    out = np.zeros(len(a))
    for j in range(n):
        out = np.maximum(out, space.distances(a, b))
        a, b = target.apply(a), target.apply(b)
    return out


def is_separated(target, points, n, eps) -> bool:
    """Whether every pair of ``points`` is (n, eps)-separated."""
    pts = np.asarray(points)
    m = len(pts)
    if m < 2:
        return True
    i, j = np.triu_indices(m, k=1)
    return bool(np.all(_pair_bowen(target, pts[i], pts[j], n) >= eps))


def is_maximal(target, candidates, witness, n, eps) -> bool:
    """Whether no candidate outside ``witness`` can be added."""
    cand = np.asarray(candidates)
    w = np.asarray(witness, dtype=np.int64)
    rest = np.setdiff1d(np.arange(len(cand)), w)
    if not len(rest) or not len(w):
        return len(w) > 0 or not len(rest)
    blocked = np.zeros(len(rest), dtype=bool)
    for i in w:
        blocked |= _pair_bowen(target, cand[rest], np.repeat(cand[i:i + 1], len(rest), axis=0),
                               n) < eps
    return bool(blocked.all())


# ---------------------------------------------------------------------------
# entropy curves


@dataclass
class EntropyEstimate:
    target: str
    eps_list: list
    n_list: list
    n_candidates: int
    table: list
    slopes: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    windows: dict = field(default_factory=dict)
    h_estimate: float = math.nan

    def counts(self, eps) -> list:
        return [r.s_n_lower for r in self.table if r.eps == eps]

    def rows(self):
        return [r.to_row() for r in self.table]

    def to_dict(self):
        return {
            "target": self.target, "eps": self.eps_list, "n": self.n_list,
            "n_candidates": self.n_candidates, "h_estimate": self.h_estimate,
            "fits": [{"eps": e, "slope": self.slopes[e], "rms_residual": self.residuals[e],
                      "window": self.windows[e]} for e in self.eps_list],
        }


def _fit_window(ns, counts, n_candidates, window, saturation):
    ns = np.asarray(ns)
    counts = np.asarray(counts)
    if window is None or window == "auto":
        keep = counts < saturation * n_candidates
    else:
        lo, hi = window
        keep = (ns >= lo) & (ns <= hi)
    return ns[keep], counts[keep]


def entropy_curve(target, eps_list, n_list, mesh: float | None = None, *, candidates=None,
                  window=None, saturation: float = DEFAULT_SATURATION) -> EntropyEstimate:
    """Table of separated-set counts and per-eps slopes of ``log s_n`` against ``n``.

    Candidates default to the space's ``mesh``-net, which must satisfy
    ``mesh <= min(eps) / 2``.  Each cell starts from the larger witness of
    its neighbours at smaller ``n`` or larger ``eps`` (both stay separated),
    so counts are monotone in both directions.

    ``window="auto"`` fits only the ``n`` whose count is below
    ``saturation`` times the candidate count; past that point the finite net
    caps the count.  ``(lo, hi)`` fixes the window instead.  Fewer than three
    fitted ``n`` values is an error.
    """
    eps_list = sorted({float(e) for e in eps_list}, reverse=True)
    n_list = sorted({int(n) for n in n_list})
    if not eps_list or not n_list:
        raise ReconError("eps and n lists must be nonempty")
    if min(eps_list) <= 0 or n_list[0] < 1:
        raise ReconError("eps must be > 0 and n >= 1")
    if candidates is None:
        if mesh is None:
            raise ReconError("give a candidate mesh or explicit candidates")
        if mesh > min(eps_list) / 2 * (1 + 1e-12):
            raise ReconError(f"candidate mesh {mesh:g} exceeds min(eps)/2 = {min(eps_list) / 2:g}")
        candidates = candidate_net(target.space, mesh)
    feat = features_for(target, candidates, n_list[-1])
    N = len(feat)
    table = []
    prev_eps: dict = {}
    for eps in eps_list:
        nb = _Neighbours(feat, eps)
        prev_n = None
        row = {}
        for n in n_list:
            seeds = [s for s in (prev_n, prev_eps.get(n)) if s is not None]
            seed = max(seeds, key=len) if seeds else ()
            if N <= EXACT_LIMIT:
                res = max_separated_greedy(target, None, n, eps, features=feat, exact=True)
            else:
                idx = _greedy(feat, n, eps, seed, nb)
                res = SeparatedSetResult(n, eps, len(idx), idx, False)
            table.append(res)
            row[n] = res.witness
            prev_n = res.witness
        prev_eps = row
    est = EntropyEstimate(target.label, eps_list, n_list, N, table)
    for eps in eps_list:
        ns, counts = _fit_window(n_list, est.counts(eps), N, window, saturation)
        if len(ns) < 3:
            raise ReconError(f"fit window for eps={eps:g} has {len(ns)} n-values, need >= 3")
        y = np.log(counts)
        slope, icpt = np.polyfit(ns, y, 1)
        est.slopes[eps] = float(slope)
        est.residuals[eps] = float(np.sqrt(np.mean((y - (slope * ns + icpt)) ** 2)))
        est.windows[eps] = [int(ns[0]), int(ns[-1])]
    est.h_estimate = est.slopes[min(eps_list)]
    return est


@dataclass
class EntropyComparison:
    h_T: float
    h_sigma: float
    tolerance: float
    source: EntropyEstimate
    reconstructed: EntropyEstimate

    @property
    def difference(self):
        return abs(self.h_T - self.h_sigma)

    @property
    def passed(self):
        return self.difference <= self.tolerance

    def to_dict(self):
        return {"h_T": self.h_T, "h_sigma": self.h_sigma, "difference": self.difference,
                "tolerance": self.tolerance, "passed": self.passed,
                "source": self.source.to_dict(), "reconstructed": self.reconstructed.to_dict()}


def entropy_equality_check(system: System, f: Observable, k: int, eps_list, n_list,
                           mesh: float | None, certificate: EmbeddingCheck, *,
                           tolerance: float = 0.05, candidates=None, window=None,
                           saturation: float = DEFAULT_SATURATION) -> EntropyComparison:
    """Estimate ``h(T)`` and the entropy of the reconstructed shift on one grid."""
    _require_certificate(certificate, k)
    kw = dict(candidates=candidates, window=window, saturation=saturation)
    src = entropy_curve(system, eps_list, n_list, mesh, **kw)
    rec = entropy_curve(ReconstructedShift(system, f, k), eps_list, n_list, mesh, **kw)
    return EntropyComparison(src.h_estimate, rec.h_estimate, tolerance, src, rec)
