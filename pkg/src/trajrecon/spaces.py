"""Compact metric spaces: metrics, epsilon-nets and cell grids.

Every space works on two point representations: a scalar one for single
points (a float, a tuple, an address word ...) and a canonical numpy array
holding many points along axis 0.  The heavy routines elsewhere in the
package only ever touch the array form.

Supported spaces:

* ``Interval`` -- ``[lo, hi]`` with the usual metric.
* ``Circle`` -- ``[0, 1)`` with the arc metric (diameter 1/2).
* ``Simplex2`` -- the closed unit equilateral triangle.
* ``AddressSpace`` -- attractors of similarity IFSs (``CantorSet``,
  ``SierpinskiGasket``, ``SierpinskiCarpet``), points are address words of a
  fixed depth ``L``.
* ``Dendrite`` -- a finite tree of arcs with the path-length metric.
* ``FiniteSpace`` -- ``m`` states with the discrete metric.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import PointError, ReconError

_TOL = 1e-12


@dataclass(frozen=True)
class Cell:
    """One piece of a grid.

    ``radius`` bounds the distance from ``rep`` to any point of the cell.
    """

    cell_id: int
    rep: object
    radius: float


class Grid(Sequence):
    """A finite cover of a space by cells, with vectorised accessors."""

    def __init__(self, space, reps, radii, mesh, level=None):
        self.space = space
        self.reps = reps
        self.radii = np.asarray(radii, dtype=float)
        self.mesh = float(mesh)
        self.level = level

    def __len__(self):
        return len(self.radii)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        return Cell(int(i), self.space.point(self.reps[i]), float(self.radii[i]))

    def __iter__(self) -> Iterator[Cell]:
        for i in range(len(self)):
            yield self[i]

    def locate(self, points) -> np.ndarray:
        """Index of a cell containing each point."""
        return self.space._locate(self, self.space.asarray(points))


class Space:
    """Base class.  Subclasses fill in the array-level primitives."""

    name = "space"
    dim = 0
    diameter = 1.0
    # How `coords` relates to the metric: 'euclidean', 'circle', 'discrete',
    # or None when the metric is not a function of the coordinates.
    coord_metric: str | None = None
    # Exact spaces compare points by representation (address words, states).
    exact = False

    # --- representation -------------------------------------------------
    def asarray(self, points) -> np.ndarray:
        raise NotImplementedError

    def point(self, row):
        raise NotImplementedError

    def check(self, p):
        """Validate a scalar point and return its canonical form."""
        return self.point(self.asarray([p])[0])

    # --- metric ---------------------------------------------------------
    def distances(self, a, b) -> np.ndarray:
        """Elementwise distances between two point arrays (broadcasting)."""
        raise NotImplementedError

    def metric(self, a, b) -> float:
        A = self.asarray([a])
        B = self.asarray([b])
        return float(self.distances(A, B)[0])

    def same(self, a, b) -> np.ndarray:
        """Elementwise representation equality (used by the exact tiers)."""
        a = np.asarray(a)
        b = np.asarray(b)
        if a.ndim > 1:
            return np.all(a == b, axis=tuple(range(1, a.ndim)))
        return a == b

    def coords(self, points) -> np.ndarray:
        """Real coordinates of shape (N, D)."""
        raise NotImplementedError

    # --- finite approximations ------------------------------------------
    def epsilon_net(self, eps):
        raise NotImplementedError

    def grid(self, mesh) -> Grid:
        raise NotImplementedError

    def sample(self, rng, n) -> np.ndarray:
        raise NotImplementedError

    def sample_cell(self, grid: Grid, index: int, rng, n) -> np.ndarray:
        raise NotImplementedError

    def contains(self, points, tol=_TOL) -> np.ndarray:
        raise NotImplementedError

    def _locate(self, grid, pts):
        # nearest representative; subclasses override with exact rules
        reps = grid.reps
        out = np.empty(len(pts), dtype=int)
        for i in range(len(pts)):
            d = self.distances(np.repeat(pts[i:i + 1], len(reps), axis=0), reps)
            out[i] = int(np.argmin(d))
        return out

    def describe(self) -> dict:
        return {"name": self.name, "dim": self.dim, "diameter": self.diameter}

    def __repr__(self):
        return f"{type(self).__name__}({self.describe()})"


def _positive(value, what):
    if not value > 0:
        raise ReconError(f"{what} must be > 0, got {value!r}")
    return float(value)


# ---------------------------------------------------------------------------
# one-dimensional real spaces


class Interval(Space):
    name = "interval"
    dim = 1
    coord_metric = "euclidean"

    def __init__(self, lo=0.0, hi=1.0):
        if not hi > lo:
            raise ReconError("interval needs hi > lo")
        self.lo = float(lo)
        self.hi = float(hi)
        self.diameter = self.hi - self.lo

    def describe(self):
        return {**super().describe(), "lo": self.lo, "hi": self.hi}

    def asarray(self, points):
        try:
            x = np.asarray(points, dtype=float).reshape(-1)
        except (TypeError, ValueError) as exc:
            raise PointError(f"{self.name}: points must be real numbers") from exc
        if not np.all(self.contains(x)):
            raise PointError(f"{self.name}: point outside [{self.lo}, {self.hi}]")
        return x

    def point(self, row):
        return float(row)

    def contains(self, points, tol=_TOL):
        x = np.asarray(points, dtype=float)
        return (x >= self.lo - tol) & (x <= self.hi + tol)

    def distances(self, a, b):
        return np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))

    def coords(self, points):
        return np.asarray(points, dtype=float).reshape(-1, 1)

    def epsilon_net(self, eps):
        eps = _positive(eps, "eps")
        n = max(1, math.ceil(self.diameter / eps - _TOL))
        return self.lo + self.diameter * np.arange(n + 1) / n

    def grid(self, mesh):
        mesh = _positive(mesh, "mesh")
        n = max(1, math.ceil(self.diameter / mesh - _TOL))
        w = self.diameter / n
        reps = self.lo + w * (np.arange(n) + 0.5)
        return Grid(self, reps, np.full(n, w / 2), mesh)

    def _locate(self, grid, pts):
        n = len(grid)
        idx = np.floor((pts - self.lo) / self.diameter * n).astype(int)
        return np.clip(idx, 0, n - 1)

    def sample(self, rng, n):
        return rng.uniform(self.lo, self.hi, size=n)

    def sample_cell(self, grid, index, rng, n):
        c, r = grid.reps[index], grid.radii[index]
        return rng.uniform(c - r, c + r, size=n)


class Circle(Space):
    """``[0, 1)`` with the wrap-around arc metric."""

    name = "circle"
    dim = 1
    diameter = 0.5
    coord_metric = "circle"

    def asarray(self, points):
        try:
            x = np.asarray(points, dtype=float).reshape(-1)
        except (TypeError, ValueError) as exc:
            raise PointError("circle: points must be real numbers") from exc
        if not np.all(self.contains(x)):
            raise PointError("circle: point outside [0, 1)")
        return np.where(x >= 1.0, x - 1.0, x)

    def point(self, row):
        return float(row)

    def contains(self, points, tol=_TOL):
        x = np.asarray(points, dtype=float)
        return (x >= -tol) & (x < 1.0 + tol)

    def distances(self, a, b):
        d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % 1.0
        return np.minimum(d, 1.0 - d)

    def coords(self, points):
        return np.asarray(points, dtype=float).reshape(-1, 1)

    def epsilon_net(self, eps):
        eps = _positive(eps, "eps")
        n = max(1, math.ceil(0.5 / eps - _TOL))
        return np.arange(n) / n

    def grid(self, mesh):
        mesh = _positive(mesh, "mesh")
        n = max(1, math.ceil(1.0 / mesh - _TOL))
        reps = (np.arange(n) + 0.5) / n
        return Grid(self, reps, np.full(n, 0.5 / n), mesh)

    def _locate(self, grid, pts):
        n = len(grid)
        return np.floor(pts * n).astype(int) % n

    def sample(self, rng, n):
        return rng.uniform(0.0, 1.0, size=n)

    def sample_cell(self, grid, index, rng, n):
        c, r = grid.reps[index], grid.radii[index]
        return rng.uniform(c - r, c + r, size=n) % 1.0


# ---------------------------------------------------------------------------
# the 2-simplex


_TRI = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])


def barycentric(points, vertices=_TRI):
    """Barycentric coordinates of planar points w.r.t. a triangle."""
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    v0, v1, v2 = vertices
    m = np.column_stack([v1 - v0, v2 - v0])
    l12 = np.linalg.solve(m, (p - v0).T).T
    return np.column_stack([1.0 - l12.sum(axis=1), l12])


class Simplex2(Space):
    """The unit equilateral triangle, a 2-dimensional polyhedron."""

    name = "simplex2"
    dim = 2
    diameter = 1.0
    coord_metric = "euclidean"
    vertices = _TRI

    def asarray(self, points):
        try:
            p = np.asarray(points, dtype=float).reshape(-1, 2)
        except (TypeError, ValueError) as exc:
            raise PointError("simplex2: points must be (x, y) pairs") from exc
        if not np.all(self.contains(p)):
            raise PointError("simplex2: point outside the triangle")
        return p

    def point(self, row):
        return (float(row[0]), float(row[1]))

    def contains(self, points, tol=1e-9):
        lam = barycentric(points)
        return np.all(lam >= -tol, axis=1)

    def distances(self, a, b):
        return np.linalg.norm(np.asarray(a, float) - np.asarray(b, float), axis=-1)

    def coords(self, points):
        return np.asarray(points, dtype=float).reshape(-1, 2)

    def _level_for(self, size):
        k = 0
        while 2.0 ** -k > size:
            k += 1
        return k

    def _triangles(self, k):
        # all 4**k subtriangles of side 2**-k, as vertex triples
        tris = [_TRI]
        for _ in range(k):
            nxt = []
            for a, b, c in tris:
                ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
                nxt += [np.array(t) for t in ((a, ab, ca), (ab, b, bc), (ca, bc, c), (bc, ca, ab))]
            tris = nxt
        return np.array(tris)

    def epsilon_net(self, eps):
        eps = _positive(eps, "eps")
        return self.grid(eps).reps

    def grid(self, mesh):
        mesh = _positive(mesh, "mesh")
        k = self._level_for(mesh)
        tris = self._triangles(k)
        reps = tris.mean(axis=1)
        radius = 2.0 ** -k / math.sqrt(3)
        g = Grid(self, reps, np.full(len(reps), radius), mesh, level=k)
        g.triangles = tris
        return g

    def sample(self, rng, n):
        u = rng.uniform(size=(n, 2))
        flip = u.sum(axis=1) > 1
        u[flip] = 1 - u[flip]
        v0, v1, v2 = _TRI
        return v0 + u[:, :1] * (v1 - v0) + u[:, 1:] * (v2 - v0)

    def sample_cell(self, grid, index, rng, n):
        a, b, c = grid.triangles[index]
        u = rng.uniform(size=(n, 2))
        flip = u.sum(axis=1) > 1
        u[flip] = 1 - u[flip]
        return a + u[:, :1] * (b - a) + u[:, 1:] * (c - a)


# ---------------------------------------------------------------------------
# address spaces of similarity IFSs


class AddressSpace(Space):
    """Attractor of an IFS ``phi_a(x) = ratio * x + offset_a``, coded by words.

    A word ``w_1 .. w_L`` stands for the eventually constant address
    ``w_1 .. w_L w_L w_L ...``, so its point is
    ``phi_{w_1} o ... o phi_{w_L}(fix(phi_{w_L}))``.  The word ``00...0`` is
    therefore exactly the fixed point of ``phi_0``.
    """

    coord_metric = "euclidean"
    exact = True

    def __init__(self, name, ratio, offsets, depth, dim, diameter):
        if not 0 < ratio < 1:
            raise ReconError("IFS ratio must lie in (0, 1)")
        if int(depth) < 1:
            raise ReconError("address depth must be >= 1")
        self.name = name
        self.ratio = float(ratio)
        self.offsets = np.atleast_2d(np.asarray(offsets, dtype=float))
        if self.offsets.shape[0] == 1 and np.ndim(offsets) == 1:
            self.offsets = self.offsets.T
        self.fixed_points = self.offsets / (1.0 - self.ratio)
        self.depth = int(depth)
        self.dim = int(dim)
        self.diameter = float(diameter)
        self.alphabet = tuple(range(len(self.offsets)))
        self._weights = self.ratio ** np.arange(self.depth)

    @property
    def resolution(self):
        """Diameter of a full-depth cell."""
        return self.diameter * self.ratio ** self.depth

    def describe(self):
        return {**super().describe(), "depth": self.depth, "ratio": self.ratio,
                "branches": len(self.alphabet)}

    def _word(self, p):
        if isinstance(p, str):
            try:
                return [int(ch) for ch in p]
            except ValueError as exc:
                raise PointError(f"{self.name}: bad address {p!r}") from exc
        return list(p)

    def asarray(self, points):
        if isinstance(points, np.ndarray) and points.ndim == 2:
            w = points
        else:
            rows = [self._word(p) for p in points]
            if any(len(r) != self.depth for r in rows):
                raise PointError(f"{self.name}: address length must equal depth {self.depth}")
            try:
                w = np.asarray(rows, dtype=np.int64).reshape(-1, self.depth)
            except (TypeError, ValueError) as exc:
                raise PointError(f"{self.name}: addresses must be words of letters") from exc
        if w.shape[1] != self.depth:
            raise PointError(f"{self.name}: address length must equal depth {self.depth}")
        if w.size and (w.min() < 0 or w.max() >= len(self.alphabet)):
            raise PointError(f"{self.name}: letter outside alphabet {self.alphabet}")
        return w.astype(np.int64, copy=False)

    def point(self, row):
        return tuple(int(a) for a in row)

    def pad(self, prefix, fill="repeat"):
        """Extend a prefix to a full-depth word (repeat-last or zeros)."""
        w = self._word(prefix)
        if len(w) > self.depth:
            raise PointError("prefix longer than depth")
        last = w[-1] if (w and fill == "repeat") else 0
        return tuple(w + [last] * (self.depth - len(w)))

    def contains(self, points, tol=_TOL):
        w = np.asarray(points)
        return np.all((w >= 0) & (w < len(self.alphabet)), axis=-1)

    def coords(self, points):
        w = np.asarray(points, dtype=np.int64).reshape(-1, self.depth)
        body = np.einsum("l,nld->nd", self._weights, self.offsets[w])
        tail = self.ratio ** self.depth * self.fixed_points[w[:, -1]]
        return body + tail

    def distances(self, a, b):
        ca = self.coords(a)
        cb = self.coords(b)
        return np.linalg.norm(ca - cb, axis=-1)

    def level_for(self, size):
        """Smallest prefix length whose cells have diameter <= size."""
        k = 0
        while self.diameter * self.ratio ** k > size * (1 + 1e-12):
            k += 1
            if k > self.depth:
                raise ReconError(
                    f"{self.name}: size {size:g} is finer than the address resolution "
                    f"{self.resolution:g}; increase depth")
        return k

    def cells_at_level(self, k) -> Grid:
        m = len(self.alphabet)
        if k == 0:
            reps = np.zeros((1, self.depth), dtype=np.int64)
        else:
            prefixes = np.array(list(itertools.product(range(m), repeat=k)), dtype=np.int64)
            fill = np.repeat(prefixes[:, -1:], self.depth - k, axis=1)
            reps = np.concatenate([prefixes, fill], axis=1)
        radius = self.diameter * self.ratio ** k
        return Grid(self, reps, np.full(len(reps), radius), radius, level=k)

    def epsilon_net(self, eps):
        eps = _positive(eps, "eps")
        return self.cells_at_level(self.level_for(eps)).reps

    def grid(self, mesh):
        mesh = _positive(mesh, "mesh")
        g = self.cells_at_level(self.level_for(mesh))
        g.mesh = mesh
        return g

    def _locate(self, grid, pts):
        m = len(self.alphabet)
        idx = np.zeros(len(pts), dtype=np.int64)
        for j in range(grid.level):
            idx = idx * m + pts[:, j]
        return idx

    def sample(self, rng, n):
        return rng.integers(0, len(self.alphabet), size=(n, self.depth))

    def sample_cell(self, grid, index, rng, n):
        w = self.sample(rng, n)
        w[:, :grid.level] = grid.reps[index, :grid.level]
        return w


def CantorSet(depth=12):
    """Middle-thirds Cantor set, two maps of ratio 1/3."""
    return AddressSpace("cantor", 1 / 3, [[0.0], [2 / 3]], depth, dim=0, diameter=1.0)


def SierpinskiGasket(depth=12):
    """Three maps of ratio 1/2 towards the unit-triangle vertices."""
    return AddressSpace("gasket", 0.5, _TRI / 2, depth, dim=1, diameter=1.0)


def SierpinskiCarpet(depth=6):
    """Eight maps of ratio 1/3 (the 3x3 subdivision minus the centre)."""
    offsets = [(i / 3, j / 3) for i in range(3) for j in range(3) if (i, j) != (1, 1)]
    return AddressSpace("carpet", 1 / 3, offsets, depth, dim=1, diameter=math.sqrt(2))


# ---------------------------------------------------------------------------
# dendrites


class Dendrite(Space):
    """A finite tree of arcs; a point is ``(edge, t)`` with ``t`` in [0, 1].

    ``t`` runs from the first to the second endpoint of the edge, scaled by
    the edge length.
    """

    name = "dendrite"
    dim = 1

    def __init__(self, edges=((0, 1), (0, 2), (0, 3)), lengths=None):
        self.edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        nv = int(self.edges.max()) + 1
        if len(self.edges) != nv - 1:
            raise ReconError("dendrite edges must form a tree (|E| = |V| - 1)")
        self.lengths = (np.ones(len(self.edges)) if lengths is None
                        else np.asarray(lengths, dtype=float))
        if np.any(self.lengths <= 0) or len(self.lengths) != len(self.edges):
            raise ReconError("dendrite edge lengths must be positive, one per edge")
        self.n_vertices = nv
        self.vdist = self._vertex_distances()
        if not np.all(np.isfinite(self.vdist)):
            raise ReconError("dendrite edges must form a connected tree")
        self.diameter = float(self.vdist.max())

    def describe(self):
        return {**super().describe(), "edges": self.edges.tolist(),
                "lengths": self.lengths.tolist()}

    def _vertex_distances(self):
        nv = self.n_vertices
        adj = [[] for _ in range(nv)]
        for e, (u, v) in enumerate(self.edges):
            adj[u].append((v, self.lengths[e]))
            adj[v].append((u, self.lengths[e]))
        dist = np.full((nv, nv), np.inf)
        for s in range(nv):
            dist[s, s] = 0.0
            stack = [s]
            while stack:
                u = stack.pop()
                for v, w in adj[u]:
                    if not np.isfinite(dist[s, v]):
                        dist[s, v] = dist[s, u] + w
                        stack.append(v)
        return dist

    def vertex_point(self, v):
        """Canonical ``(edge, t)`` for a vertex."""
        for e, (a, b) in enumerate(self.edges):
            if a == v:
                return (float(e), 0.0)
            if b == v:
                return (float(e), 1.0)
        raise PointError(f"dendrite: no vertex {v}")

    def asarray(self, points):
        try:
            p = np.asarray(points, dtype=float).reshape(-1, 2)
        except (TypeError, ValueError) as exc:
            raise PointError("dendrite: points must be (edge, t) pairs") from exc
        if not np.all(self.contains(p)):
            raise PointError("dendrite: point must reference an existing arc with t in [0, 1]")
        return p

    def point(self, row):
        return (int(row[0]), float(row[1]))

    def contains(self, points, tol=_TOL):
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        e = p[:, 0]
        ok_e = (e == np.round(e)) & (e >= 0) & (e < len(self.edges))
        return ok_e & (p[:, 1] >= -tol) & (p[:, 1] <= 1 + tol)

    def same(self, a, b):
        return self.distances(a, b) == 0.0

    def distances(self, a, b):
        a = np.asarray(a, dtype=float).reshape(-1, 2)
        b = np.asarray(b, dtype=float).reshape(-1, 2)
        a, b = np.broadcast_arrays(a, b)
        ea, eb = a[:, 0].astype(int), b[:, 0].astype(int)
        la, lb = self.lengths[ea], self.lengths[eb]
        ua, va = self.edges[ea, 0], self.edges[ea, 1]
        ub, vb = self.edges[eb, 0], self.edges[eb, 1]
        # distance along each arc to its two endpoints
        a0, a1 = a[:, 1] * la, (1 - a[:, 1]) * la
        b0, b1 = b[:, 1] * lb, (1 - b[:, 1]) * lb
        D = self.vdist
        via = np.minimum.reduce([
            a0 + D[ua, ub] + b0, a0 + D[ua, vb] + b1,
            a1 + D[va, ub] + b0, a1 + D[va, vb] + b1,
        ])
        same_edge = ea == eb
        return np.where(same_edge, np.abs(a[:, 1] - b[:, 1]) * la, via)

    def coords(self, points):
        # distance from vertex 0: continuous, used by observables only
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        root = np.tile([self.vertex_point(0)], (len(p), 1))
        return self.distances(p, root).reshape(-1, 1)

    def _edge_points(self, size, centred):
        pts, radii = [], []
        for e, length in enumerate(self.lengths):
            m = max(1, math.ceil(length / size - _TOL))
            if centred:
                t = (np.arange(m) + 0.5) / m
                radii += [length / (2 * m)] * m
            else:
                t = np.arange(m + 1) / m
            pts.append(np.column_stack([np.full(len(t), float(e)), t]))
        return np.concatenate(pts), np.asarray(radii)

    def epsilon_net(self, eps):
        eps = _positive(eps, "eps")
        return self._edge_points(eps, centred=False)[0]

    def grid(self, mesh):
        mesh = _positive(mesh, "mesh")
        reps, radii = self._edge_points(mesh, centred=True)
        g = Grid(self, reps, radii, mesh)
        g.edge_of = reps[:, 0].astype(int)
        return g

    def _locate(self, grid, pts):
        out = np.empty(len(pts), dtype=int)
        for i, (e, t) in enumerate(pts):
            on_edge = np.flatnonzero(grid.edge_of == int(e))
            if len(on_edge) == 0:
                continue
            m = len(on_edge)
            out[i] = on_edge[min(int(t * m), m - 1)]
        return out

    def sample(self, rng, n):
        e = rng.choice(len(self.edges), size=n, p=self.lengths / self.lengths.sum())
        return np.column_stack([e.astype(float), rng.uniform(size=n)])

    def sample_cell(self, grid, index, rng, n):
        e, t = grid.reps[index]
        half = grid.radii[index] / self.lengths[int(e)]
        tt = np.clip(rng.uniform(t - half, t + half, size=n), 0, 1)
        return np.column_stack([np.full(n, e), tt])


# ---------------------------------------------------------------------------
# finite spaces


class FiniteSpace(Space):
    """``m`` states ``0 .. m-1`` with the discrete metric."""

    name = "finite"
    dim = 0
    diameter = 1.0
    coord_metric = "discrete"
    exact = True

    def __init__(self, size=None, labels=None):
        if labels is not None:
            self.labels = tuple(str(s) for s in labels)
            if len(set(self.labels)) != len(self.labels):
                raise ReconError("finite space labels must be distinct")
        elif size is not None:
            self.labels = tuple(str(i) for i in range(int(size)))
        else:
            raise ReconError("finite space needs size or labels")
        if not self.labels:
            raise ReconError("finite space must be nonempty")
        self.size = len(self.labels)
        self._index = {s: i for i, s in enumerate(self.labels)}

    def describe(self):
        return {**super().describe(), "labels": list(self.labels)}

    def index(self, label):
        try:
            return self._index[str(label)]
        except KeyError:
            raise PointError(f"finite: unknown state {label!r}") from None

    def asarray(self, points):
        out = []
        for p in (points.tolist() if isinstance(points, np.ndarray) else points):
            if isinstance(p, (int, np.integer)) and not isinstance(p, bool) and 0 <= p < self.size:
                out.append(int(p))
            else:
                out.append(self.index(p))
        return np.asarray(out, dtype=np.int64)

    def point(self, row):
        return int(row)

    def contains(self, points, tol=0):
        p = np.asarray(points)
        return (p >= 0) & (p < self.size)

    def distances(self, a, b):
        return (np.asarray(a) != np.asarray(b)).astype(float)

    def coords(self, points):
        return np.asarray(points, dtype=float).reshape(-1, 1)

    def all_points(self):
        return np.arange(self.size, dtype=np.int64)

    def epsilon_net(self, eps):
        _positive(eps, "eps")
        return self.all_points()

    def grid(self, mesh):
        mesh = _positive(mesh, "mesh")
        return Grid(self, self.all_points(), np.zeros(self.size), mesh)

    def _locate(self, grid, pts):
        return np.asarray(pts, dtype=int)

    def sample(self, rng, n):
        return rng.integers(0, self.size, size=n)

    def sample_cell(self, grid, index, rng, n):
        return np.full(n, grid.reps[index], dtype=np.int64)


# ---------------------------------------------------------------------------


def metric(space: Space, a, b) -> float:
    """Distance between two scalar points of ``space``."""
    return space.metric(a, b)


def epsilon_net(space: Space, eps: float):
    """Points such that every point of ``space`` lies within ``eps`` of one."""
    return space.epsilon_net(eps)


def grid(space: Space, mesh: float) -> Grid:
    """Cover ``space`` by cells of radius at most ``mesh``."""
    return space.grid(mesh)


SPACES = {
    "interval": Interval,
    "circle": Circle,
    "simplex2": Simplex2,
    "cantor": CantorSet,
    "gasket": SierpinskiGasket,
    "carpet": SierpinskiCarpet,
    "dendrite": Dendrite,
    "finite": FiniteSpace,
}

# canonical covering dimensions
DIMENSIONS = {"interval": 1, "circle": 1, "simplex2": 2, "cantor": 0, "gasket": 1,
              "carpet": 1, "dendrite": 1, "finite": 0}


def make_space(name: str, **params) -> Space:
    try:
        factory = SPACES[name]
    except KeyError:
        raise ReconError(f"unknown space {name!r}; choose from {sorted(SPACES)}") from None
    return factory(**params)
