"""Chain recurrence on grids and trajectory-separation certificates.

Cells are joined ``c -> c'`` when an ``eps``-chain step from ``c`` could land
in ``c'``; the rule over-approximates so that no genuine chain is lost.
Chain-recurrent cells are the cells on directed cycles of that graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .dynamics import System, estimate_lipschitz, periodic_points
from .errors import ReconError, UnsupportedError
from .spaces import Circle, Dendrite, Grid, Interval, Space

DEFAULT_MAX_CELLS = 200_000
LIP_SAFETY = 1.5
EXACT_DIAMETER_LIMIT = 2_000


# ---------------------------------------------------------------------------
# transition graphs


@dataclass
class TransitionGraph:
    """Edges ``c -> c'`` with ``d(T rep c, rep c') <= eps + r(c') + lip * r(c)``."""

    grid: Grid
    eps: float
    lip: float
    src: np.ndarray
    dst: np.ndarray

    @property
    def n_cells(self):
        return len(self.grid)

    def out_degree(self) -> np.ndarray:
        return np.bincount(self.src, minlength=self.n_cells)

    def edge_rows(self):
        return [{"src": int(a), "dst": int(b)} for a, b in zip(self.src, self.dst)]


def _tree_for(space, reps):
    if isinstance(space, Circle):
        return cKDTree(np.asarray(reps, float).reshape(-1, 1) % 1.0, boxsize=1.0)
    if space.coord_metric == "euclidean":
        return cKDTree(space.coords(reps))
    return None


def _query_coords(space, pts):
    if isinstance(space, Circle):
        return np.asarray(pts, float).reshape(-1, 1) % 1.0
    return space.coords(pts)


def build_transition_graph(system: System, mesh: float, eps: float, *, lip: float | None = None,
                           seed: int = 0, max_cells: int = DEFAULT_MAX_CELLS) -> TransitionGraph:
    """Outer-approximating eps-chain graph on the ``mesh`` grid.

    ``lip`` defaults to the largest sampled local expansion times 1.5, drawn
    with a generator seeded by ``seed``.
    """
    if mesh <= 0 or eps <= 0:
        raise ReconError("mesh and eps must be > 0")
    space = system.space
    grid = space.grid(mesh)
    n = len(grid)
    if n > max_cells:
        raise ReconError(f"{n} cells exceed the cap of {max_cells}; "
                         f"try mesh >= {mesh * math.sqrt(n / max_cells):.3g}")
    if lip is None:
        lip = LIP_SAFETY * estimate_lipschitz(system, grid, np.random.default_rng(seed))
    radii = grid.radii
    images = system.apply(grid.reps)
    reach = eps + radii.max() + lip * radii
    tree = _tree_for(space, grid.reps)
    src, dst = [], []
    if tree is not None:
        q = _query_coords(space, images)
        for c, near in enumerate(tree.query_ball_point(q, reach * (1 + 1e-12))):
            near = np.asarray(near, dtype=np.int64)
            d = space.distances(np.repeat(images[c:c + 1], len(near), axis=0), grid.reps[near])
            keep = near[d <= eps + radii[near] + lip * radii[c]]
            src.append(np.full(len(keep), c, dtype=np.int64))
            dst.append(keep)
    else:
        for c in range(n):
            d = space.distances(np.repeat(images[c:c + 1], n, axis=0), grid.reps)
            keep = np.flatnonzero(d <= eps + radii + lip * radii[c])
            src.append(np.full(len(keep), c, dtype=np.int64))
            dst.append(keep)
    src_a = np.concatenate(src) if src else np.zeros(0, np.int64)
    dst_a = np.concatenate(dst) if dst else np.zeros(0, np.int64)
    order = np.lexsort((dst_a, src_a))
    return TransitionGraph(grid, float(eps), float(lip), src_a[order], dst_a[order])


@dataclass
class ChainRecurrentSet:
    eps: float
    mesh: float
    cells: np.ndarray
    graph: TransitionGraph = field(repr=False)

    def __contains__(self, cell):
        return int(cell) in set(self.cells.tolist())

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.graph.n_cells, dtype=bool)
        m[self.cells] = True
        return m

    def intervals(self):
        """Cell extents ``[rep - r, rep + r]`` for 1-dimensional grids."""
        g = self.graph.grid
        reps = np.asarray(g.reps, float)[self.cells]
        r = g.radii[self.cells]
        return np.column_stack([reps - r, reps + r])

    def contains_points(self, points) -> np.ndarray:
        return self.mask[self.graph.grid.locate(points)]


def chain_recurrent_cells(graph: TransitionGraph) -> ChainRecurrentSet:
    """Cells lying on a directed cycle: strong components of size >= 2, or self-loops."""
    n = graph.n_cells
    adj = coo_matrix((np.ones(len(graph.src)), (graph.src, graph.dst)), shape=(n, n)).tocsr()
    _, labels = connected_components(adj, directed=True, connection="strong")
    sizes = np.bincount(labels, minlength=labels.max() + 1)
    on_cycle = sizes[labels] >= 2
    on_cycle[graph.src[graph.src == graph.dst]] = True
    return ChainRecurrentSet(graph.eps, graph.grid.mesh, np.flatnonzero(on_cycle), graph)


def periodic_points_outside(system: System, cr: ChainRecurrentSet, n: int, mesh: float | None = None):
    """Periodic points ``(x, period)`` with period <= n whose cell is not chain recurrent."""
    found = periodic_points(system, n, mesh or cr.mesh)
    if not found:
        return []
    inside = cr.contains_points(system.space.asarray([x for x, _ in found]))
    return [pp for pp, ok in zip(found, inside) if not ok]


# ---------------------------------------------------------------------------
# D(A) < eta


@dataclass
class DecompositionCheck:
    eta: float
    pieces: list
    diameters: list

    @property
    def verdict(self) -> bool:
        return all(d < self.eta for d in self.diameters)

    def to_dict(self):
        return {"eta": self.eta, "verdict": self.verdict, "n_pieces": len(self.pieces),
                "diameters": self.diameters, "pieces": [p.tolist() for p in self.pieces]}


def _cluster_diameter(space, reps, radii):
    m = len(reps)
    if m == 1:
        return 2.0 * float(radii[0])
    if m <= EXACT_DIAMETER_LIMIT:
        i, j = np.triu_indices(m, k=1)
        spread = float(space.distances(reps[i], reps[j]).max())
    else:
        # diam <= 2 * eccentricity of any member
        spread = 2.0 * float(space.distances(reps, np.repeat(reps[:1], m, axis=0)).max())
    return min(spread + 2.0 * float(radii.max()), space.diameter)


def decomposition_check(grid: Grid, cells, eta: float, mesh: float | None = None) -> DecompositionCheck:
    """Split ``cells`` into touching clusters and compare their diameters with ``eta``.

    Cells ``a`` and ``b`` touch when their representatives are within
    ``r_a + r_b + mesh``.  Cluster diameters are upper bounds (representative
    spread plus one cell diameter), so a true verdict is sound at grid
    resolution.
    """
    cells = np.unique(np.asarray(getattr(cells, "cells", cells), dtype=np.int64))
    if not len(cells):
        raise ReconError("decomposition needs a nonempty cell set")
    if eta <= 0:
        raise ReconError("eta must be > 0")
    space = grid.space
    mesh = grid.mesh if mesh is None else mesh
    reps = grid.reps[cells]
    radii = grid.radii[cells]
    m = len(cells)
    link = 2 * radii.max() + mesh
    tree = _tree_for(space, reps)
    if tree is not None:
        pairs = tree.query_pairs(link * (1 + 1e-12), output_type="ndarray")
    else:
        i, j = np.triu_indices(m, k=1)
        pairs = np.column_stack([i, j])
    if len(pairs):
        d = space.distances(reps[pairs[:, 0]], reps[pairs[:, 1]])
        pairs = pairs[d <= radii[pairs[:, 0]] + radii[pairs[:, 1]] + mesh]
    adj = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(m, m)) if len(
        pairs) else coo_matrix((m, m))
    k, labels = connected_components(adj, directed=False)
    pieces, diams = [], []
    for c in range(k):
        member = np.flatnonzero(labels == c)
        pieces.append(cells[member])
        diams.append(_cluster_diameter(space, reps[member], radii[member]))
    order = np.argsort([p[0] for p in pieces])
    return DecompositionCheck(float(eta), [pieces[i] for i in order], [diams[i] for i in order])


# ---------------------------------------------------------------------------
# trajectory-separation certificates


@dataclass
class TSPCertificate:
    """A finite set ``H`` (fattened by ``guard``) witnessing the (k, eta) property.

    ``achieved_order`` is the largest number of times ``p in 0..k`` that a
    sampled orbit visits the fattened ``H``; ``pieces`` are the components
    of ``X \\ H`` with their diameters.
    """

    H: np.ndarray
    guard: float
    k: int
    eta: float
    d: int
    achieved_order: int = -1
    pieces: list = field(default_factory=list)
    piece_diameters: list = field(default_factory=list)
    worst_point: object = None

    @property
    def max_piece_diameter(self):
        return max(self.piece_diameters) if self.piece_diameters else math.inf

    @property
    def valid(self):
        return 0 <= self.achieved_order <= self.d and self.max_piece_diameter <= self.eta

    def to_dict(self):
        return {"H": np.asarray(self.H).tolist(), "guard": self.guard, "k": self.k,
                "eta": self.eta, "d": self.d, "achieved_order": self.achieved_order,
                "pieces": self.pieces, "piece_diameters": self.piece_diameters,
                "max_piece_diameter": self.max_piece_diameter, "valid": self.valid,
                "worst_point": np.asarray(self.worst_point).tolist()
                if self.worst_point is not None else None}


def _require_tsp_space(space: Space, d):
    if space.dim == 0 or d == 0:
        raise UnsupportedError("trajectory-separation with d = 0 is not supported")
    if not isinstance(space, (Interval, Circle, Dendrite)):
        raise UnsupportedError(f"TSP search needs a 1-dimensional real space, not {space.name}")
    if d != space.dim:
        raise ReconError(f"d must equal the space dimension {space.dim}")


def complement_pieces(space: Space, H):
    """Components of ``X \\ H`` and their diameters, for finite ``H``."""
    H = space.asarray(list(H)) if not isinstance(H, np.ndarray) else H
    if isinstance(space, Interval):
        cuts = np.unique(np.concatenate([[space.lo], np.asarray(H, float), [space.hi]]))
        pieces = [(float(a), float(b)) for a, b in zip(cuts[:-1], cuts[1:]) if b > a]
        return pieces, [b - a for a, b in pieces]
    if isinstance(space, Circle):
        h = np.unique(np.asarray(H, float) % 1.0)
        if not len(h):
            return [(0.0, 1.0)], [0.5]
        nxt = np.append(h[1:], h[0] + 1.0)
        pieces = [(float(a), float(b) % 1.0 if b > 1 else float(b)) for a, b in zip(h, nxt)]
        return pieces, [min(float(b - a), 0.5) for a, b in zip(h, nxt)]
    if isinstance(space, Dendrite):
        return _dendrite_pieces(space, np.asarray(H, float).reshape(-1, 2))
    raise UnsupportedError(space.name)


def _dendrite_pieces(space, H):
    # split edges at the cut points and glue segments at uncut vertices
    nv = space.n_vertices
    cut_vertex = set()
    cuts = {e: [] for e in range(len(space.edges))}
    for e, t in H:
        e = int(e)
        if t <= 0:
            cut_vertex.add(int(space.edges[e, 0]))
        elif t >= 1:
            cut_vertex.add(int(space.edges[e, 1]))
        else:
            cuts[e].append(float(t))
    segs = []
    for e, (u, v) in enumerate(space.edges):
        ts = [0.0] + sorted(set(cuts[e])) + [1.0]
        for a, b in zip(ts[:-1], ts[1:]):
            segs.append((e, a, b, int(u) if a == 0.0 else None, int(v) if b == 1.0 else None))
    parent = list(range(len(segs) + nv))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for s, (_, _, _, u, v) in enumerate(segs):
        for w in (u, v):
            if w is not None and w not in cut_vertex:
                parent[find(s)] = find(len(segs) + w)
    groups: dict = {}
    for s in range(len(segs)):
        groups.setdefault(find(s), []).append(s)
    pieces, diams = [], []
    for members in groups.values():
        ends = np.array([[segs[s][0], t] for s in members for t in (segs[s][1], segs[s][2])])
        i, j = np.triu_indices(len(ends), k=1)
        diam = float(space.distances(ends[i], ends[j]).max()) if len(i) else 0.0
        pieces.append([[segs[s][0], segs[s][1], segs[s][2]] for s in members])
        diams.append(diam)
    return pieces, diams


def _guard_samples(space, H, guard, m):
    """``m`` points spread over the ``guard``-neighbourhood of each point of ``H``."""
    u = np.linspace(-1.0, 1.0, m)
    if isinstance(space, Interval):
        pts = (np.asarray(H, float)[:, None] + guard * u[None, :]).ravel()
        return np.clip(pts, space.lo, space.hi)
    if isinstance(space, Circle):
        return ((np.asarray(H, float)[:, None] + guard * u[None, :]) % 1.0).ravel()
    # dendrite: along the carrying edge only
    out = []
    for e, t in np.asarray(H, float).reshape(-1, 2):
        tt = np.clip(t + guard / space.lengths[int(e)] * u, 0.0, 1.0)
        out.append(np.column_stack([np.full(m, e), tt]))
    return np.concatenate(out)


def _hits(system, pts, H, guard, k):
    """Per point, the number of ``p in 0..k`` with ``T^p x`` within ``guard`` of ``H``."""
    space = system.space
    Harr = np.asarray(H)
    x = np.asarray(pts)
    count = np.zeros(len(x), dtype=np.int64)
    for p in range(k + 1):
        near = np.zeros(len(x), dtype=bool)
        for h in Harr:
            near |= space.distances(x, np.broadcast_to(h, x.shape)) <= guard
        count += near
        if p < k:
            x = system.apply(x)
    return count


def _order(system, H, guard, k, n_guard, n_uniform, rng):
    """Largest sampled visit count of the fattened ``H`` within ``k`` steps.

    An orbit's first visit lands in the fattened ``H``, so sampling that
    neighbourhood (plus a uniform sample as a cross-check) covers the orbits
    that matter.
    """
    space = system.space
    pts = [space.asarray(list(H)) if not isinstance(H, np.ndarray) else H,
           _guard_samples(space, H, guard, n_guard)]
    if n_uniform:
        pts.append(space.sample(rng, n_uniform))
    pts = np.concatenate(pts)
    counts = _hits(system, pts, H, guard, k)
    w = int(np.argmax(counts))
    return int(counts[w]), space.point(pts[w])


@dataclass
class TSPVerification:
    verified: bool
    max_order: int
    max_piece_diameter: float
    worst_point: object
    n_samples: int

    def to_dict(self):
        return {"verified": self.verified, "max_order": self.max_order,
                "max_piece_diameter": self.max_piece_diameter,
                "worst_point": np.asarray(self.worst_point).tolist(), "n_samples": self.n_samples}


BASE_GUARD_SAMPLES = 257
BASE_UNIFORM_SAMPLES = 4_096


def make_certificate(system: System, H, k: int, eta: float, d: int, guard: float, *,
                     density: int = 1, seed: int = 0) -> TSPCertificate:
    """Evaluate a proposed ``H`` at the given sample density."""
    space = system.space
    _require_tsp_space(space, d)
    Harr = space.asarray(list(H))
    pieces, diams = complement_pieces(space, Harr)
    rng = np.random.default_rng(seed)
    order, worst = _order(system, Harr, guard, k, BASE_GUARD_SAMPLES * density,
                          BASE_UNIFORM_SAMPLES * density, rng)
    return TSPCertificate(Harr, float(guard), int(k), float(eta), int(d), order, pieces, diams,
                          worst)


def tsp_verify(system: System, cert: TSPCertificate, density: int = 4,
               seed: int = 1) -> TSPVerification:
    """Re-check both conditions on an independent, denser sample."""
    again = make_certificate(system, cert.H, cert.k, cert.eta, cert.d, cert.guard,
                             density=density, seed=seed)
    n = len(cert.H) * (1 + BASE_GUARD_SAMPLES * density) + BASE_UNIFORM_SAMPLES * density
    return TSPVerification(again.valid, again.achieved_order, again.max_piece_diameter,
                           again.worst_point, n)


@dataclass
class TSPSearchResult:
    certificate: TSPCertificate | None
    attempts: int
    reason: str = ""
    verification: TSPVerification | None = None

    @property
    def found(self):
        return self.certificate is not None

    def to_dict(self):
        return {"found": self.found, "attempts": self.attempts, "reason": self.reason,
                "certificate": self.certificate.to_dict() if self.certificate else None,
                "verification": self.verification.to_dict() if self.verification else None}


def _propose(space, m, eta, rng):
    """``m`` cut points at jittered, roughly even spacing."""
    if isinstance(space, Interval):
        s = space.diameter / (m + 1)
        base = space.lo + s * np.arange(1, m + 1)
        return np.sort(base + rng.uniform(-0.5, 0.5, m) * s)
    if isinstance(space, Circle):
        return np.sort((rng.uniform() + (np.arange(m) + rng.uniform(-0.3, 0.3, m)) / m) % 1.0)
    # dendrite: points on edges, proportional to length
    share = space.lengths / space.lengths.sum()
    per = np.maximum(1, np.round(share * m)).astype(int)
    pts = []
    for e, c in enumerate(per):
        t = (np.arange(1, c + 1) + rng.uniform(-0.4, 0.4, c)) / (c + 1)
        pts += [[e, float(tt)] for tt in t]
    return np.asarray(pts)


def tsp_search(system: System, k: int, eta: float, d: int, mesh: float, *, budget: int = 200,
               seed: int = 0, verify_density: int = 4) -> TSPSearchResult:
    """Seeded search for a finite ``H`` with the (k, eta) property.

    Proposals with increasing size are screened on forward images of ``H``
    (an image landing in the fattened ``H`` is rejected outright), then
    sampled, and the first valid one is re-verified at ``verify_density``.
    The guard radius is ``mesh``.
    """
    space = system.space
    _require_tsp_space(space, d)
    if k < 0 or eta <= 0 or mesh <= 0:
        raise ReconError("need k >= 0, eta > 0, mesh > 0")
    rng = np.random.default_rng(seed)
    m = max(1, math.ceil(space.diameter / eta) - (0 if isinstance(space, Circle) else 1))
    attempts = 0
    reason = "budget exhausted"
    while attempts < budget:
        for _ in range(max(1, budget // 8)):
            if attempts >= budget:
                break
            attempts += 1
            H = _propose(space, m, eta, rng)
            if len(H) == 0:
                continue
            _, diams = complement_pieces(space, H)
            if max(diams) > eta:
                continue
            if _hits(system, H, H, mesh, k).max() > d:
                continue
            cert = make_certificate(system, H, k, eta, d, mesh, seed=seed)
            if not cert.valid:
                continue
            ver = tsp_verify(system, cert, verify_density, seed + 1)
            if ver.verified:
                return TSPSearchResult(cert, attempts, "", ver)
            reason = "candidate failed re-verification"
        m += 1
    return TSPSearchResult(None, attempts, reason)
