"""Vector-loss games, loss normalization, and frontier readouts."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from . import lp as _lp
from .geometry import Frontier, frontier_intersect


@dataclass(frozen=True)
class VectorGame:
    """Loss tensor ``losses[a, b, k]`` for Alice's action ``a``, Bob's ``b``."""

    losses: np.ndarray
    beta: float

    def __post_init__(self):
        r = np.asarray(self.losses, dtype=float)
        if r.ndim != 3:
            raise ValueError("losses must have shape (m, n, K)")
        if not np.all(np.isfinite(r)):
            raise ValueError("losses must be finite")
        if not 0.0 <= self.beta < 1.0:
            raise ValueError("beta must lie in [0, 1)")
        object.__setattr__(self, "losses", r)

    @property
    def m(self) -> int:
        return self.losses.shape[0]

    @property
    def n(self) -> int:
        return self.losses.shape[1]

    @property
    def K(self) -> int:
        return self.losses.shape[2]

    def is_normalized(self, tol: float = 1e-12) -> bool:
        return bool(self.losses.min() >= -tol and self.losses.max() <= 1 - self.beta + tol)

    def to_json(self) -> dict:
        return {"m": self.m, "n": self.n, "k": self.K, "beta": self.beta,
                "losses": self.losses.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "VectorGame":
        return cls(np.array(obj["losses"], dtype=float), float(obj["beta"]))


@dataclass(frozen=True)
class ScalarGame:
    losses: np.ndarray

    def __post_init__(self):
        l = np.asarray(self.losses, dtype=float)
        if l.ndim != 2 or not np.all(np.isfinite(l)):
            raise ValueError("scalar losses must be a finite (m, n) matrix")
        object.__setattr__(self, "losses", l)

    @property
    def m(self) -> int:
        return self.losses.shape[0]

    @property
    def n(self) -> int:
        return self.losses.shape[1]


@dataclass(frozen=True)
class NormalizationRecord:
    """Affine map ``r -> scale * r + shifts`` applied to stage losses."""

    scale: float
    shifts: np.ndarray

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("normalization scale must be positive")
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "shifts", np.asarray(self.shifts, dtype=float))

    def to_json(self) -> dict:
        return {"scale": self.scale, "shifts": self.shifts.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "NormalizationRecord":
        return cls(float(obj["scale"]), np.array(obj["shifts"], dtype=float))

    @classmethod
    def identity(cls, K: int) -> "NormalizationRecord":
        return cls(1.0, np.zeros(K))


def normalize(g: VectorGame) -> tuple[VectorGame, NormalizationRecord]:
    """Shift each loss component to start at 0 and scale all components by
    one common factor so every entry lands in ``[0, 1 - beta]``."""
    r = g.losses
    lo = r.min(axis=(0, 1))
    spread = (r.max(axis=(0, 1)) - lo).max()
    # a spread at rounding level is a constant game; dividing by it overflows
    tiny = spread <= 1e-12 * max(1.0, float(np.abs(r).max()))
    scale = 1.0 - g.beta if tiny else (1.0 - g.beta) / spread
    shifts = -scale * lo
    normalized = scale * r + shifts
    # guard the box against rounding at the top end
    normalized = np.clip(normalized, 0.0, 1.0 - g.beta)
    return VectorGame(normalized, g.beta), NormalizationRecord(scale, shifts)


def _shift_sum(rec: NormalizationRecord, beta: float, horizon: int | None) -> np.ndarray:
    weight = 1.0 / (1.0 - beta) if horizon is None else (1.0 - beta ** horizon) / (1.0 - beta)
    return rec.shifts * weight


def denormalize_vector(v, rec: NormalizationRecord, beta: float,
                       horizon: int | None = None) -> np.ndarray:
    """Map a normalized discounted-sum guarantee back to raw loss units.

    The per-stage shifts accumulate over the discounted horizon: infinite by
    default, or ``horizon`` stages for finite-horizon sums.
    """
    if rec.scale <= 0:
        raise ValueError("normalization scale must be positive")
    v = np.asarray(v, dtype=float)
    return (v - _shift_sum(rec, beta, horizon)) / rec.scale


def normalize_vector(v, rec: NormalizationRecord, beta: float,
                     horizon: int | None = None) -> np.ndarray:
    """Inverse of :func:`denormalize_vector`."""
    return rec.scale * np.asarray(v, dtype=float) + _shift_sum(rec, beta, horizon)


def regret_game(g: ScalarGame, beta: float) -> VectorGame:
    """Component ``k`` is the stage regret against always playing ``k``."""
    l = g.losses
    r = l[:, :, None] - l.T[None, :, :]  # r[a, b, k] = l[a, b] - l[k, b]
    return VectorGame(r, beta)


def expert_columns(K: int) -> list[tuple[int, ...]]:
    """Sets of erring experts (0-based), one per column of the experts game."""
    if K not in (2, 3):
        raise ValueError("experts games are defined for K = 2 or 3")
    if K == 2:
        return [(0,), (1,)]
    return [S for size in (1, 2) for S in itertools.combinations(range(3), size)]


def experts_game(K: int) -> ScalarGame:
    """Binary-loss expert advice: column ``S`` charges 1 to each expert in
    ``S``.  Constant columns (nobody or everybody errs) are left out."""
    cols = expert_columns(K)
    l = np.zeros((K, len(cols)))
    for j, S in enumerate(cols):
        l[list(S), j] = 1.0
    return ScalarGame(l)


def example_game() -> VectorGame:
    """Two-by-two game whose one-step guarantee set from ``{0}`` is the
    nonconvex union of segments (2,2)-(3,1) and (3,1)-(4,2)."""
    r = np.array([
        [[0.0, 2.0], [2.0, 0.0]],
        [[2.0, 0.0], [4.0, 2.0]],
    ])
    return VectorGame(r, 0.5)


def minmax_point(V: Frontier) -> tuple[float, np.ndarray]:
    """Smallest achievable worst component over the frontier's hull."""
    t, x = frontier_intersect(np.zeros(V.K), V)
    return t, x


def aumann_select(V: Frontier, prior) -> np.ndarray:
    """Vertex minimizing the prior-weighted loss; lowest index on ties."""
    prior = np.asarray(prior, dtype=float)
    if prior.shape != (V.K,) or np.any(prior < 0) or not np.isclose(prior.sum(), 1.0, atol=1e-9):
        raise ValueError("prior must be a probability vector of length K")
    scores = V.vertices @ prior
    best = scores.min()
    i = int(np.flatnonzero(scores <= best + 1e-12)[0])
    return V.vertices[i].copy()


class PointDecomposer:
    """Basic convex combinations of one fixed vertex set for many targets.

    The program minimizes the L1 gap between ``target`` and ``w @ vertices``
    over the simplex.  With ``upset=True`` only the part of the gap where the
    combination exceeds the target costs anything, so the combination just
    has to be dominated by the target.  A basic optimum has at most ``K + 1``
    nonzero entries because the program has ``K + 1`` rows.
    """

    def __init__(self, vertices, *, upset: bool = False):
        V = np.asarray(vertices, dtype=float)
        if V.ndim != 2 or V.shape[0] == 0:
            raise ValueError("need a nonempty (J, K) vertex array")
        J, K = V.shape
        # variables: w (J), s_plus (K), s_minus (K); rows: V.T w + s+ - s- = target, sum w = 1
        A = np.zeros((K + 1, J + 2 * K))
        A[:K, :J] = V.T
        A[:K, J:J + K] = np.eye(K)
        A[:K, J + K:] = -np.eye(K)
        A[K, :J] = 1.0
        c = np.r_[np.zeros(J), np.ones(K), np.ones(K)]
        upper = np.full(J + 2 * K, np.inf)
        if upset:
            c[J:J + K] = 0.0
            upper[J + K:] = 0.0
        prog = _lp.LinearProgram(c, sparse.csc_matrix(A), (_lp.EQ,) * (K + 1),
                                 np.r_[np.zeros(K), 1.0], upper=upper)
        self.vertices = V
        self.upset = upset
        self.session = _lp.LpSession(prog)
        self.rows = np.arange(K)

    def __call__(self, target):
        target = np.asarray(target, dtype=float)
        V = self.vertices
        if target.shape != (V.shape[1],):
            raise ValueError("target dimension differs from the vertices")
        self.session.set_rhs(self.rows, target)
        sol = self.session.solve(basis=False)
        if not sol.optimal:
            raise _lp.LpError(f"decomposition program {sol.status}")
        w = sol.x[:V.shape[0]]
        idx = np.flatnonzero(w > 1e-12)
        weights = w[idx] / w[idx].sum()
        combo = weights @ V[idx]
        gap = combo - target
        residual = float(np.max(gap)) if self.upset else float(np.max(np.abs(gap)))
        return idx, weights, max(residual, 0.0)


def decompose_point(target, vertices, *, upset: bool = False):
    """Express ``target`` as a basic convex combination of ``vertices``.

    Returns ``(indices, weights, residual)``; see :class:`PointDecomposer`.
    """
    return PointDecomposer(vertices, upset=upset)(target)


def game_from_json(obj: dict) -> VectorGame:
    """Vector games load as-is; scalar games become their regret game."""
    if "k" in obj or (np.ndim(obj["losses"]) == 3):
        return VectorGame.from_json(obj)
    return regret_game(ScalarGame(np.array(obj["losses"], dtype=float)), float(obj["beta"]))


def load_game(path) -> VectorGame:
    with open(path) as fh:
        return game_from_json(json.load(fh))
