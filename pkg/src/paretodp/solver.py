"""Set-valued value iteration on a direction grid.

Each iteration maps the current frontier ``G`` to the hull of the points
``F(p, Phi(G))``, one linear program per grid direction ``p``.  The program
for ``p`` picks a mixed action ``alpha`` and one continuation point ``Q(b)``
in the hull of ``G`` for every opponent action ``b`` so that the line point
``t*1 + p`` dominates every ``alpha @ r(., b) + beta * Q(b)``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from . import lp as _lp
from .game import NormalizationRecord, VectorGame, denormalize_vector, minmax_point
from .geometry import Frontier, ParamGrid, param_grid

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


def guarantee_vector(g: VectorGame, alpha, Q) -> np.ndarray:
    """Worst case over ``b`` of the stage loss plus discounted continuation,
    taken separately in every component."""
    alpha = np.asarray(alpha, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if alpha.shape != (g.m,):
        raise ValueError(f"alpha needs {g.m} entries")
    if Q.shape != (g.n, g.K):
        raise ValueError(f"Q needs shape {(g.n, g.K)}")
    stage = np.einsum("a,abk->bk", alpha, g.losses)
    return (stage + g.beta * Q).max(axis=0)


@dataclass
class StepSolution:
    """Per-direction optima of one dynamic-programming step."""

    t: np.ndarray  # (H,)
    alpha: np.ndarray  # (H, m)
    Q: np.ndarray  # (H, n, K)


class _StepProgram:
    """The direction-parameterized program for one continuation frontier."""

    def __init__(self, g: VectorGame, verts: np.ndarray):
        m, n, K = g.losses.shape
        J = verts.shape[0]
        nvar = 1 + m + n * J
        rows, cols, vals = [], [], []
        for b in range(n):
            for k in range(K):
                row = b * K + k
                rows.append(row); cols.append(0); vals.append(-1.0)
                for a in range(m):
                    if g.losses[a, b, k] != 0.0:
                        rows.append(row); cols.append(1 + a); vals.append(g.losses[a, b, k])
                nz = np.flatnonzero(verts[:, k])
                rows.extend([row] * nz.size)
                cols.extend((1 + m + b * J + nz).tolist())
                vals.extend((g.beta * verts[nz, k]).tolist())
        eq0 = n * K
        rows.extend([eq0] * m); cols.extend(range(1, 1 + m)); vals.extend([1.0] * m)
        for b in range(n):
            rows.extend([eq0 + 1 + b] * J)
            cols.extend(range(1 + m + b * J, 1 + m + (b + 1) * J))
            vals.extend([1.0] * J)
        A = sparse.csc_matrix((vals, (rows, cols)), shape=(eq0 + 1 + n, nvar))
        c = np.zeros(nvar)
        c[0] = 1.0
        lower = np.zeros(nvar)
        lower[0] = -np.inf
        prog = _lp.LinearProgram(c, A, (_lp.LE,) * eq0 + (_lp.EQ,) * (1 + n),
                                 np.r_[np.zeros(eq0), np.ones(1 + n)], lower=lower)
        self.session = _lp.LpSession(prog)
        self.dims = (m, n, K, J)
        self.verts = verts
        self.rows = np.arange(eq0)

    def solve(self, p: np.ndarray):
        m, n, K, J = self.dims
        self.session.set_rhs(self.rows, np.tile(p, n))
        sol = self.session.solve(basis=False)
        if not sol.optimal:
            raise SolverError(f"step program {sol.status} at direction p={p.tolist()}")
        x = sol.x
        alpha = np.clip(x[1:1 + m], 0.0, None)
        alpha /= alpha.sum()
        w = np.clip(x[1 + m:].reshape(n, J), 0.0, None)
        w /= w.sum(axis=1, keepdims=True)
        return x[0], alpha, w @ self.verts


def dp_step(g: VectorGame, V: Frontier, grid: ParamGrid) -> tuple[Frontier, StepSolution]:
    """One application of the quantized dynamic-programming operator."""
    if not g.is_normalized():
        raise SolverError("dp_step needs a game normalized into [0, 1 - beta]")
    if V.K != g.K or grid.K != g.K:
        raise ValueError("game, frontier and grid dimensions differ")
    # Dominated vertices never help as continuation points.
    verts = V.vertices[V.essential_vertices()]
    prog = _StepProgram(g, verts)
    H = len(grid)
    t = np.empty(H)
    alpha = np.empty((H, g.m))
    Q = np.empty((H, g.n, g.K))
    for i, p in enumerate(grid.points):
        t[i], alpha[i], Q[i] = prog.solve(p)
    frontier = Frontier(t[:, None] + grid.points, grid.points.copy())
    return frontier, StepSolution(t, alpha, Q)


def error_bounds(N: int, n: int, beta: float, unit: float = 1.0) -> tuple[float, float, float]:
    """``(e_upper, d_upper, strategy_d_upper)`` after ``n`` quantized steps
    on a grid of spacing ``unit / N`` (normalized units)."""
    if N < 1 or n < 0 or not 0.0 <= beta < 1.0 or not 0.0 < unit <= 1.0:
        raise ValueError("need N >= 1, n >= 0, beta in [0, 1) and unit in (0, 1]")
    bn = beta ** n
    h = unit / N
    quant = h * (1.0 - bn) / (1.0 - beta)
    e_upper = bn
    d_upper = quant + bn
    strategy = quant + 2.0 * bn + h * (2.0 - bn - beta ** (n + 1)) / (1.0 - beta) ** 2
    return e_upper, d_upper, strategy


@dataclass
class SolveResult:
    game: VectorGame
    record: NormalizationRecord
    grid: ParamGrid
    frontier: Frontier
    """G_n, one vertex per grid direction."""
    previous: Frontier
    """G_{n-1}: the continuation frontier the final step's programs used."""
    deltas: list[float]
    iterations: int
    step: StepSolution
    bounds: dict = field(default_factory=dict)

    def minmax(self) -> tuple[float, np.ndarray]:
        """Minmax readout of ``G_n`` in raw loss units.

        Iterating ``n`` times from ``{0}`` yields the ``n``-stage frontier, so
        the shifts are undone over an ``n``-stage horizon.
        """
        t, x = minmax_point(self.frontier)
        raw = denormalize_vector(x, self.record, self.game.beta, horizon=self.iterations)
        return float(raw.max()), raw

    def minmax_upper_bound(self) -> float:
        """Raw-unit upper bound on the infinite-horizon minmax value.

        Every point of the optimal frontier is dominated by some point of
        ``G_n`` raised by ``e_upper`` in normalized units.
        """
        t, x = minmax_point(self.frontier)
        raised = x + self.game.beta ** self.iterations
        return float(denormalize_vector(raised, self.record, self.game.beta).max())

    def raw_vertices(self) -> np.ndarray:
        """Vertices of ``G_n`` in raw units, read as an ``n``-stage frontier
        like :meth:`minmax`."""
        return denormalize_vector(self.frontier.vertices, self.record, self.game.beta,
                                  horizon=self.iterations)

    def to_json(self) -> dict:
        return {
            "beta": self.game.beta,
            "k": self.game.K,
            "grid_n": self.grid.N,
            "grid_unit": self.grid.unit,
            "grid_size": len(self.grid),
            "nominal_grid_size": self.grid.nominal_size,
            "iterations": self.iterations,
            "deltas": list(self.deltas),
            "game": self.game.to_json(),
            "normalization": self.record.to_json(),
            "frontier": self.frontier.to_json(self.game.beta),
            "previous": self.previous.to_json(self.game.beta),
            "t": self.step.t.tolist(),
            "alpha": self.step.alpha.tolist(),
            "Q": self.step.Q.tolist(),
            "bounds": dict(self.bounds),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SolveResult":
        game = VectorGame.from_json(obj["game"])
        grid = param_grid(game.K, int(obj["grid_n"]), float(obj.get("grid_unit", 1.0)))
        step = StepSolution(np.array(obj["t"]), np.array(obj["alpha"]), np.array(obj["Q"]))
        return cls(game, NormalizationRecord.from_json(obj["normalization"]), grid,
                   Frontier.from_json(obj["frontier"]), Frontier.from_json(obj["previous"]),
                   list(obj["deltas"]), int(obj["iterations"]), step, dict(obj["bounds"]))


def grid_unit(record: NormalizationRecord, beta: float, spread: float | None = None) -> float:
    """Grid unit matching a frontier whose raw components differ by at most
    ``spread / (1 - beta)``; ``None`` means no such knowledge (unit 1).

    Regret games built from losses in ``[lo, hi]`` have ``spread = hi - lo``:
    every optimal regret lies between 0 and ``(hi - lo) / (1 - beta)``.
    """
    if spread is None:
        return 1.0
    return float(min(1.0, record.scale * spread / (1.0 - beta)))


def initial_frontier(grid: ParamGrid) -> Frontier:
    """``{0}`` written on the grid: the line through ``p`` first meets the
    upset of the origin at ``p`` itself."""
    return Frontier(grid.points.copy(), grid.points.copy())


def value_iteration(g: VectorGame, N: int, iterations: int | None = None,
                    tol: float | None = None, record: NormalizationRecord | None = None,
                    callback=None, unit: float = 1.0) -> SolveResult:
    """Iterate the quantized operator from ``{0}``.

    Stops after ``iterations`` steps, or earlier once the sup-norm change of
    the per-direction vertices drops to ``tol``.  At least one of the two
    must be given.  ``unit`` is passed to :func:`param_grid`; see
    :func:`grid_unit` for the choice made for regret games.
    """
    if iterations is None and tol is None:
        raise ValueError("give an iteration count, a tolerance, or both")
    if iterations is not None and iterations < 1:
        raise ValueError("iterations must be positive")
    if not g.is_normalized():
        raise SolverError("value_iteration needs a game normalized into [0, 1 - beta]")
    grid = param_grid(g.K, N, unit)
    record = record if record is not None else NormalizationRecord.identity(g.K)
    G = initial_frontier(grid)
    t_prev = np.zeros(len(grid))
    deltas: list[float] = []
    i = 0
    while True:
        i += 1
        G_next, step = dp_step(g, G, grid)
        delta = float(np.max(np.abs(step.t - t_prev)))
        deltas.append(delta)
        log.debug("iteration %d: delta %.3e", i, delta)
        if callback is not None:
            callback(i, delta)
        previous, G, t_prev = G, G_next, step.t
        if (iterations is not None and i >= iterations) or (tol is not None and delta <= tol):
            break
    e_up, d_up, s_up = error_bounds(N, i, g.beta, unit)
    bounds = {"e_upper": e_up, "d_upper": d_up, "strategy_d_upper": s_up,
              "delta_bound": deltas[-1] * g.beta / (1.0 - g.beta) + unit / (N * (1.0 - g.beta))}
    return SolveResult(g, record, grid, G, previous, deltas, i, step, bounds)


# ---------------------------------------------------------------------------
# closed-form frontier of the two-expert regret game at beta = 1/2

def oracle_f(x):
    """Optimal regret against expert 2 given regret ``x`` against expert 1."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > 2):
        raise ValueError("oracle_f is defined on [0, 2]")
    out = -2.0 * np.sqrt(2.0 * x) + x + 2.0
    return float(out) if out.ndim == 0 else out


def oracle_frontier_k2_half(sample_count: int = 20001) -> Frontier:
    """Samples of ``{(x, oracle_f(x))}`` in raw regret units, denser near the
    endpoints where the curve bends fastest."""
    s = np.linspace(0.0, 1.0, sample_count)
    x = 2.0 * s ** 2
    pts = np.column_stack([x, oracle_f(x)])
    pts = np.vstack([pts, pts[:, ::-1]])
    return Frontier(pts)


def oracle_policy(point):
    """Mixed action and next target points that attain ``point`` on the
    exact frontier: returns ``(alpha, [next point after b=1, after b=2])``."""
    u = np.asarray(point, dtype=float)
    if u[0] <= 0.5:
        x = u[0]
        return np.array([1.0 - x, x]), [np.array([4 * x, oracle_f(min(4 * x, 2.0))]),
                                         np.array([0.0, oracle_f(0.0)])]
    x = u[1]
    if x > 0.5 + 1e-12:
        raise ValueError("point is not on the exact frontier")
    return np.array([x, 1.0 - x]), [np.array([oracle_f(0.0), 0.0]),
                                     np.array([oracle_f(min(4 * x, 2.0)), 4 * x])]
