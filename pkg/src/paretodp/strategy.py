"""Finite-mode stationary strategies read off a solved frontier.

Every grid direction is a mode.  In mode ``p`` the player mixes with the
final program's ``alpha(p)``; after seeing the opponent's action ``b`` the
next mode is drawn from the convex weights that rebuild the continuation
point ``Q(b, p)`` out of the previous frontier's vertices.  Transitions never
look at the player's own realized action.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import (NormalizationRecord, PointDecomposer, VectorGame, aumann_select,
                   denormalize_vector, minmax_point)
from .geometry import Frontier, ParamGrid, frontier_intersect, param_grid
from .solver import SolveResult

DIST_TOL = 1e-9


class StrategyError(ValueError):
    pass


@dataclass(frozen=True)
class ModeStrategy:
    """A randomized automaton with one mode per grid direction.

    ``next_modes[i, b]`` and ``next_weights[i, b]`` hold the transition list
    for mode ``i`` and opponent action ``b``, padded with zero weights to a
    common length of at most ``K + 1``.
    """

    grid: ParamGrid
    alpha: np.ndarray  # (H, m)
    next_modes: np.ndarray  # (H, n, L) int
    next_weights: np.ndarray  # (H, n, L)
    guarantee: np.ndarray  # (H, K), normalized units
    beta: float
    record: NormalizationRecord

    def __post_init__(self):
        H = len(self.grid)
        if self.alpha.shape[0] != H or self.guarantee.shape != (H, self.grid.K):
            raise StrategyError("one action distribution and guarantee per mode")
        if self.next_modes.shape != self.next_weights.shape or self.next_modes.shape[0] != H:
            raise StrategyError("transition arrays disagree in shape")
        if self.next_modes.shape[2] > self.grid.K + 1:
            raise StrategyError("transition support exceeds K + 1")
        if np.any(self.next_modes < 0) or np.any(self.next_modes >= H):
            raise StrategyError("transition to a nonexistent mode")
        if np.any(self.alpha < 0) or np.any(np.abs(self.alpha.sum(axis=1) - 1) > DIST_TOL):
            raise StrategyError("action distributions must be probability vectors")
        w = self.next_weights
        if np.any(w < 0) or np.any(np.abs(w.sum(axis=2) - 1) > DIST_TOL):
            raise StrategyError("transition weights must be probability vectors")

    @property
    def modes(self) -> int:
        return len(self.grid)

    @property
    def m(self) -> int:
        return self.alpha.shape[1]

    @property
    def n(self) -> int:
        return self.next_modes.shape[1]

    @property
    def K(self) -> int:
        return self.grid.K

    def transitions(self, mode: int, b: int) -> list[tuple[int, float]]:
        keep = self.next_weights[mode, b] > 0
        return list(zip(self.next_modes[mode, b][keep].tolist(),
                        self.next_weights[mode, b][keep].tolist()))

    def raw_guarantee(self) -> np.ndarray:
        return denormalize_vector(self.guarantee, self.record, self.beta)

    def to_json(self) -> dict:
        modes = []
        for i in range(self.modes):
            modes.append({
                "p": self.grid.points[i].tolist(),
                "alpha": self.alpha[i].tolist(),
                "transitions": [[[j, w] for j, w in self.transitions(i, b)] for b in range(self.n)],
                "guarantee": self.guarantee[i].tolist(),
            })
        return {"k": self.K, "beta": self.beta, "grid_n": self.grid.N, "grid_unit": self.grid.unit,
                "modes": modes, "normalization": self.record.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "ModeStrategy":
        grid = param_grid(int(obj["k"]), int(obj["grid_n"]), float(obj.get("grid_unit", 1.0)))
        modes = obj["modes"]
        if len(modes) != len(grid):
            raise StrategyError(f"expected {len(grid)} modes, found {len(modes)}")
        points = np.array([md["p"] for md in modes], dtype=float)
        if not np.allclose(points, grid.points, atol=1e-12):
            raise StrategyError("mode directions do not follow grid order")
        alpha = np.array([md["alpha"] for md in modes], dtype=float)
        guarantee = np.array([md["guarantee"] for md in modes], dtype=float)
        n = len(modes[0]["transitions"])
        lists = [[md["transitions"][b] for b in range(n)] for md in modes]
        L = max(len(t) for row in lists for t in row)
        idx = np.zeros((len(modes), n, L), dtype=int)
        wts = np.zeros((len(modes), n, L))
        for i, row in enumerate(lists):
            for b, t in enumerate(row):
                for l, (j, w) in enumerate(t):
                    idx[i, b, l] = int(j)
                    wts[i, b, l] = float(w)
        return cls(grid, alpha, idx, wts, guarantee, float(obj["beta"]),
                   NormalizationRecord.from_json(obj["normalization"]))


def _pack(lists, n_modes: int, n: int):
    L = max(len(idx) for row in lists for idx, _ in row)
    idx = np.zeros((n_modes, n, L), dtype=int)
    wts = np.zeros((n_modes, n, L))
    for i, row in enumerate(lists):
        for b, (j, w) in enumerate(row):
            idx[i, b, :j.size] = j
            wts[i, b, :w.size] = w
    return idx, wts


def extract_strategy(res: SolveResult, residual_tol: float = 1e-7) -> ModeStrategy:
    """Build the automaton from the final step of ``res``.

    Continuation points of the final programs are combinations of the
    previous frontier's vertices, which are tagged by grid direction, so the
    decomposition weights become transition probabilities between modes.
    """
    grid = res.grid
    prev = res.previous
    if prev.vertices.shape[0] != len(grid):
        raise StrategyError("previous frontier is not indexed by the grid")
    ess = prev.essential_vertices()
    decomp = PointDecomposer(prev.vertices[ess])
    H, n = len(grid), res.game.n
    lists = []
    for i in range(H):
        row = []
        for b in range(n):
            idx, w, resid = decomp(res.step.Q[i, b])
            if resid > residual_tol:
                raise StrategyError(f"continuation point of mode {i}, action {b} is off the hull "
                                    f"(residual {resid:.2e})")
            row.append((ess[idx], w))
        lists.append(row)
    idx, wts = _pack(lists, H, n)
    alpha = res.step.alpha / res.step.alpha.sum(axis=1, keepdims=True)
    return ModeStrategy(grid, alpha, idx, wts, res.frontier.vertices.copy(), res.game.beta,
                        res.record)


@dataclass
class EvaluationResult:
    F: np.ndarray  # (H, K) per-mode guarantees, normalized units
    iterations: int
    delta: float


def lookahead(g: VectorGame, s: ModeStrategy, F: np.ndarray) -> np.ndarray:
    """One application of the policy-evaluation operator to ``F``."""
    stage = np.einsum("ia,abk->ibk", s.alpha, g.losses)
    cont = np.einsum("ibl,iblk->ibk", s.next_weights, F[s.next_modes])
    return (stage + g.beta * cont).max(axis=1)


def evaluate_strategy(g: VectorGame, s: ModeStrategy, tol: float = 1e-8,
                      max_iter: int = 100_000) -> EvaluationResult:
    """Per-mode worst-case discounted losses of ``s``, each component taken
    against its own worst opponent, to within ``tol`` of the fixed point."""
    if not g.is_normalized():
        raise StrategyError("evaluate_strategy needs a normalized game")
    if (g.m, g.n, g.K) != (s.m, s.n, s.K):
        raise StrategyError("game and strategy dimensions differ")
    if tol <= 0:
        raise ValueError("tol must be positive")
    F = np.zeros((s.modes, s.K))
    stop = tol * (1.0 - g.beta)
    for it in range(1, max_iter + 1):
        F_next = lookahead(g, s, F)
        delta = float(np.max(np.abs(F_next - F)))
        F = F_next
        if delta <= stop:
            return EvaluationResult(F, it, delta)
    raise StrategyError("policy evaluation did not converge")


def _target_point(s: ModeStrategy, F: np.ndarray, target) -> np.ndarray:
    front = Frontier(F)
    if isinstance(target, str):
        if target == "minmax":
            return minmax_point(front)[1]
        raise ValueError(f"unknown target {target!r}")
    kind, value = target
    if kind == "prior":
        return aumann_select(front, value)
    if kind == "param":
        return frontier_intersect(np.asarray(value, dtype=float), front)[1]
    raise ValueError(f"unknown target kind {kind!r}")


def initial_modes(s: ModeStrategy, target="minmax", F: np.ndarray | None = None
                  ) -> list[tuple[int, float]]:
    """Starting randomization over modes that guarantees the chosen point.

    ``target`` is ``"minmax"``, ``("prior", weights)`` or ``("param", p)``;
    ``F`` defaults to the stored guarantees.
    """
    F = s.guarantee if F is None else np.asarray(F, dtype=float)
    point = _target_point(s, F, target)
    ess = Frontier(F).essential_vertices()
    idx, w, _ = PointDecomposer(F[ess], upset=True)(point + 1e-12)
    return list(zip(ess[idx].tolist(), w.tolist()))


def _pick(weights: np.ndarray, u):
    """Inverse-CDF draw along the last axis for uniforms ``u``."""
    cdf = np.cumsum(weights, axis=-1)
    u = np.asarray(u, dtype=float)[..., None] * cdf[..., -1:]
    out = (u >= cdf).sum(axis=-1)
    return np.minimum(out, weights.shape[-1] - 1)


def sample_action(s: ModeStrategy, mode, u):
    """Actions for (arrays of) modes given uniforms in ``[0, 1)``."""
    return _pick(s.alpha[mode], u)


def next_mode(s: ModeStrategy, mode, b, u):
    """Next modes for (arrays of) modes and opponent actions."""
    mode = np.asarray(mode)
    b = np.asarray(b)
    slot = _pick(s.next_weights[mode, b], u)
    return s.next_modes[mode, b, slot]


def _check(s: ModeStrategy, mode: int, b: int | None = None):
    if not 0 <= mode < s.modes:
        raise StrategyError(f"mode {mode} out of range")
    if b is not None and not 0 <= b < s.n:
        raise StrategyError(f"opponent action {b} out of range")


def step(s: ModeStrategy, mode: int, rng: np.random.Generator) -> int:
    _check(s, mode)
    return int(sample_action(s, mode, rng.random()))


def observe(s: ModeStrategy, mode: int, b: int, rng: np.random.Generator) -> int:
    _check(s, mode, b)
    return int(next_mode(s, mode, b, rng.random()))
