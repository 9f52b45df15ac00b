"""Pareto frontiers of convex polytopes and the distances between them.

A :class:`Frontier` is stored as the vertex list of a polytope; the set it
stands for is the lower Pareto frontier of the convex hull of those
vertices.  Frontier points are addressed through a family of lines
``x = t * 1 + p`` indexed by directions ``p`` on the faces of the unit cube
that have one zero coordinate.  :func:`frontier_intersect` returns the
lowest ``t`` whose point on such a line dominates something in the hull.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from . import lp as _lp

GEOM_TOL = 1e-7


def _as_points(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    return arr


def dominates(u, v) -> bool:
    """True iff ``u <= v`` componentwise (``u`` is at least as good as ``v``)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return bool(np.all(u <= v))


def pareto_mask(points, tol: float = 0.0) -> np.ndarray:
    """Boolean mask of the points not dominated by another listed point.

    Exact duplicates are collapsed onto their first occurrence.  ``tol`` is an
    absolute slack on the componentwise comparison.
    """
    pts = _as_points(points)
    n = pts.shape[0]
    keep = np.ones(n, dtype=bool)
    # Visit in lexicographic order so any dominator of a point precedes it.
    order = np.lexsort(pts.T[::-1])
    if pts.shape[1] == 2 and tol == 0.0:
        y = pts[order, 1]
        prev_min = np.minimum.accumulate(np.r_[np.inf, y[:-1]])
        keep[order] = y < prev_min
        return keep
    kept_idx: list[int] = []
    for i in order:
        p = pts[i]
        if kept_idx:
            cand = pts[kept_idx]
            if np.any(np.all(cand <= p + tol, axis=1)):
                keep[i] = False
                continue
        kept_idx.append(i)
    return keep


def pareto_prune(points) -> list[np.ndarray]:
    """Return the listed points that no other listed point dominates.

    Output keeps input order; exact duplicates appear once.
    """
    pts = _as_points(points)
    if pts.shape[0] == 0 or pts.size == 0:
        raise ValueError("pareto_prune needs at least one point")
    mask = pareto_mask(pts)
    return [pts[i] for i in np.flatnonzero(mask)]


@dataclass(frozen=True)
class ParamGrid:
    """The quantized direction set: every face of ``[0,1]^K`` with a zero
    coordinate, sampled at spacing ``1/N`` and deduplicated."""

    K: int
    N: int
    points: np.ndarray = field(repr=False)
    nominal_size: int = 0
    unit: float = 1.0
    """Extent of each face; the spacing is ``unit / N``."""

    def __len__(self) -> int:
        return self.points.shape[0]

    def index_of(self, p) -> int:
        p = np.asarray(p, dtype=float)
        hits = np.flatnonzero(np.all(np.abs(self.points - p) <= 1e-12, axis=1))
        if hits.size == 0:
            raise KeyError(f"{p} is not a grid point")
        return int(hits[0])

    def zero_index(self) -> int:
        return self.index_of(np.zeros(self.K))


def nominal_grid_size(K: int, N: int) -> int:
    return K * (N + 1) ** (K - 1) - (K - 1)


def param_grid(K: int, N: int, unit: float = 1.0) -> ParamGrid:
    """Directions with one coordinate pinned to 0 and the rest in
    ``{0, 1/N, ..., 1} * unit``.  Ordered face by face; first occurrence wins.

    ``unit < 1`` suits frontiers known to spread less than ``unit`` between
    any two components: the faces shrink to that width and keep ``N`` steps.
    """
    if K < 2:
        raise ValueError("param_grid needs K >= 2")
    if N < 1:
        raise ValueError("param_grid needs N >= 1")
    if not 0.0 < unit <= 1.0:
        raise ValueError("unit must lie in (0, 1]")
    levels = np.arange(N + 1)
    seen: dict[tuple[int, ...], None] = {}
    for k in range(K):
        for rest in itertools.product(levels, repeat=K - 1):
            key = rest[:k] + (0,) + rest[k:]
            seen.setdefault(key, None)
    pts = np.array(list(seen), dtype=float) * (unit / N)
    return ParamGrid(K, N, pts, nominal_grid_size(K, N), float(unit))


@dataclass(frozen=True)
class Frontier:
    """Lower Pareto frontier of the convex hull of ``vertices``.

    ``params`` optionally tags each vertex with the direction whose line
    produced it; ``None`` for untagged vertex sets.
    """

    vertices: np.ndarray
    params: np.ndarray | None = None

    def __post_init__(self):
        v = _as_points(self.vertices)
        if v.shape[0] == 0:
            raise ValueError("a frontier needs at least one vertex")
        if not np.all(np.isfinite(v)):
            raise ValueError("frontier vertices must be finite")
        object.__setattr__(self, "vertices", v)
        if self.params is not None:
            p = _as_points(self.params)
            if p.shape != v.shape:
                raise ValueError("params must tag every vertex")
            object.__setattr__(self, "params", p)

    @property
    def K(self) -> int:
        return self.vertices.shape[1]

    def shifted(self, c: float) -> "Frontier":
        return Frontier(self.vertices + c, self.params)

    def essential_vertices(self) -> np.ndarray:
        """Indices of vertices not dominated by another vertex."""
        return np.flatnonzero(pareto_mask(self.vertices))

    def to_json(self, beta: float | None = None) -> dict:
        out = {"k": self.K, "beta": beta, "vertices": self.vertices.tolist()}
        out["params"] = None if self.params is None else self.params.tolist()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Frontier":
        params = obj.get("params")
        return cls(np.array(obj["vertices"], dtype=float),
                   None if params is None else np.array(params, dtype=float))

    def to_csv(self, path) -> None:
        header = ",".join([f"x{k + 1}" for k in range(self.K)]
                          + ([f"p{k + 1}" for k in range(self.K)] if self.params is not None else []))
        rows = self.vertices if self.params is None else np.hstack([self.vertices, self.params])
        np.savetxt(path, rows, delimiter=",", header=header, comments="", fmt="%.17g")

    def dumps(self, beta: float | None = None) -> str:
        return json.dumps(self.to_json(beta))


# ---------------------------------------------------------------------------
# line / upset intersection

def lower_chain_2d(vertices) -> np.ndarray:
    """Vertices of the lower-left Pareto chain of a 2-D point set's hull,
    sorted by increasing first coordinate."""
    pts = _as_points(vertices)
    pts = pts[pareto_mask(pts, tol=0.0)]
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
    chain: list[np.ndarray] = []
    for q in pts:
        while len(chain) >= 2:
            a, b = chain[-2], chain[-1]
            cross = (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0])
            if cross <= 0:  # b is on or above segment a-q
                chain.pop()
            else:
                break
        chain.append(q)
    return np.array(chain)


def _intersect_2d(P: np.ndarray, chain: np.ndarray) -> np.ndarray:
    """Exact lowest-``t`` for many 2-D directions ``P`` against one chain."""
    x, y = chain[:, 0], chain[:, 1]
    delta = P[:, 1] - P[:, 0]
    gap = y - x  # strictly decreasing along the chain
    # first chain vertex with y_i - x_i <= delta, i.e. the line is at/above it
    i = np.searchsorted(-gap, -delta, side="left")
    out = np.empty(P.shape[0])
    left = i == 0
    out[left] = x[0] - P[left, 0]
    right = i >= chain.shape[0]
    out[right] = y[-1] - P[right, 1]
    mid = ~(left | right)
    if np.any(mid):
        j = i[mid]
        x0, y0, x1, y1 = x[j - 1], y[j - 1], x[j], y[j]
        d = delta[mid]
        # solve (x0 + s*(x1-x0)) + d = y0 + s*(y1-y0)
        s = (y0 - x0 - d) / ((x1 - x0) - (y1 - y0))
        out[mid] = x0 + s * (x1 - x0) - P[mid, 0]
    return out


class _IntersectLP:
    """Warm-started ``min t`` programs for one vertex set and many directions."""

    def __init__(self, vertices: np.ndarray):
        V = vertices
        J, K = V.shape
        # variables: t (free), w_1..w_J ; rows: -t + sum_j w_j v_jk <= p_k ; sum w = 1
        A = np.zeros((K + 1, J + 1))
        A[:K, 0] = -1.0
        A[:K, 1:] = V.T
        A[K, 1:] = 1.0
        c = np.zeros(J + 1)
        c[0] = 1.0
        lower = np.zeros(J + 1)
        lower[0] = -np.inf
        prog = _lp.LinearProgram(c, sparse.csc_matrix(A), (_lp.LE,) * K + (_lp.EQ,),
                                 np.r_[np.zeros(K), 1.0], lower=lower)
        self.K = K
        self.session = _lp.LpSession(prog)
        self.rows = np.arange(K)

    def solve(self, p: np.ndarray) -> tuple[float, np.ndarray]:
        self.session.set_rhs(self.rows, p)
        sol = self.session.solve(basis=False)
        if not sol.optimal:
            raise _lp.LpError(f"line intersection program {sol.status} at p={p}")
        return sol.objective, sol.x[1:]


def intersect_many(P, V: Frontier, method: str = "auto") -> np.ndarray:
    """Lowest ``t`` on each line ``t*1 + p`` (rows of ``P``) inside the upset
    of ``V``.  ``method`` is ``"lp"``, ``"exact2d"`` or ``"auto"``."""
    P = _as_points(P)
    if P.shape[1] != V.K:
        raise ValueError("direction and frontier dimensions differ")
    if method == "auto":
        method = "exact2d" if V.K == 2 else "lp"
    if method == "exact2d":
        if V.K != 2:
            raise ValueError("exact2d intersection needs K = 2")
        return _intersect_2d(P, lower_chain_2d(V.vertices))
    verts = V.vertices[V.essential_vertices()]
    prog = _IntersectLP(verts)
    return np.array([prog.solve(p)[0] for p in P])


def frontier_intersect(p, V: Frontier) -> tuple[float, np.ndarray]:
    """``(t, x)`` with ``x = t*1 + p`` the lowest point of that line that
    dominates a convex combination of ``V``'s vertices."""
    p = np.asarray(p, dtype=float)
    if p.shape != (V.K,):
        raise ValueError("direction and frontier dimensions differ")
    if np.any(p < -GEOM_TOL) or np.any(p > 1 + GEOM_TOL) or np.min(np.abs(p)) > GEOM_TOL:
        raise ValueError("direction must lie in [0,1]^K with a zero coordinate")
    verts = V.vertices[V.essential_vertices()]
    t, _ = _IntersectLP(verts).solve(p)
    return t, t + p


def e_distance(U: Frontier, V: Frontier, M: int) -> float:
    """Least ``eps`` with every point of ``U`` eps-dominating a point of
    ``V``, estimated on the direction grid of resolution ``M``."""
    if U.K != V.K:
        raise ValueError("dimension mismatch")
    if M < 1:
        raise ValueError("M must be positive")
    P = param_grid(U.K, M).points
    gap = intersect_many(P, V) - intersect_many(P, U)
    return float(max(0.0, gap.max()))


def d_distance(U: Frontier, V: Frontier, M: int) -> float:
    """Symmetric frontier distance, the larger of the two directed ones."""
    if U.K != V.K:
        raise ValueError("dimension mismatch")
    P = param_grid(U.K, M).points
    tu = intersect_many(P, U)
    tv = intersect_many(P, V)
    return float(max(0.0, (tv - tu).max(), (tu - tv).max()))


def gamma_approx(V: Frontier, grid: ParamGrid) -> Frontier:
    """Replace ``V`` by the hull of its intersections with the grid lines.

    Every grid direction contributes one vertex, dominated or not, so vertex
    ``i`` always belongs to ``grid.points[i]``.
    """
    if V.K != grid.K:
        raise ValueError("dimension mismatch")
    t = intersect_many(grid.points, V)
    return Frontier(t[:, None] + grid.points, grid.points.copy())
