"""Expert-advice forecasters, stochastic adversaries, and a regret harness.

Everything here is vectorized over independent runs: a forecaster holds one
state row per run and every stage consumes one row of uniforms per run.
Each run owns a generator seeded from ``(seed, run)``, so results do not
depend on how many runs are simulated together.  Within a run the uniform
columns have fixed roles: the first ``K`` feed the adversary, column ``K``
samples the forecaster's expert, and column ``K + 1`` drives mode
transitions.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .game import expert_columns, experts_game, normalize, regret_game
from .strategy import ModeStrategy, initial_modes, next_mode, sample_action

ADVERSARIES = {"A": 2, "B": 2, "C": 2, "D": 3, "E": 3, "F": 3}


def hedge_eta(K: int, beta: float) -> float:
    return math.sqrt(8.0 * math.log(K) * (1.0 - beta ** 2))


def hedge_distribution(L, beta: float, eta: float | None = None) -> np.ndarray:
    """Exponential weights on discounted cumulative losses ``L`` (last axis)."""
    L = np.asarray(L, dtype=float)
    K = L.shape[-1]
    if K < 2:
        raise ValueError("hedge needs at least two experts")
    eta = hedge_eta(K, beta) if eta is None else eta
    z = -eta * (L - L.min(axis=-1, keepdims=True))
    w = np.exp(z)
    return w / w.sum(axis=-1, keepdims=True)


def gps_xi(beta: float) -> float:
    if not 0.0 < beta < 1.0:
        raise ValueError("GPS needs beta in (0, 1)")
    return (1.0 - math.sqrt(1.0 - beta ** 2)) / beta


def gps2_distribution(d, beta: float) -> np.ndarray:
    """``(leader, laggard)`` probabilities for a cumulative-loss gap ``d``."""
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise ValueError("gaps must be nonnegative")
    lag = 0.5 * gps_xi(beta) ** d
    return np.stack([1.0 - lag, lag], axis=-1)


def gps3_distribution(d12, d13, d23, beta: float) -> np.ndarray:
    """``(leader, second, laggard)`` probabilities from the pairwise gaps of
    the ranked experts."""
    d12, d13, d23 = (np.asarray(x, dtype=float) for x in (d12, d13, d23))
    if np.any(d12 < 0) or np.any(d13 < 0) or np.any(d23 < 0):
        raise ValueError("gaps must be nonnegative")
    xi = gps_xi(beta)
    a = xi ** d12 / 2.0
    c = xi ** (d13 + d23) / 6.0
    out = np.stack([1.0 - a - c, a - c, 2.0 * c], axis=-1)
    assert np.all(out >= -1e-12) and np.all(out <= 1 + 1e-12)
    return out


def ranking(L) -> np.ndarray:
    """Expert indices from lowest to highest cumulative loss; ties keep the
    lower index first."""
    return np.argsort(np.asarray(L, dtype=float), axis=-1, kind="stable")


# ---------------------------------------------------------------------------
# adversaries

def _bernoulli_gap(beta: float) -> float:
    if beta < 0.75:
        raise ValueError("adversaries B and F need beta >= 0.75")
    return 0.5 - math.sqrt(1.0 - beta)


def adversary_losses(kind: str, t: int, L, beta: float, u) -> np.ndarray:
    """Loss vectors for stage ``t`` (1-based) of every run.

    ``L`` holds each run's undiscounted cumulative expert losses so far and
    ``u`` the adversary's uniforms, shape ``(runs, K)``.
    """
    if kind not in ADVERSARIES:
        raise ValueError(f"unknown adversary {kind!r}")
    K = ADVERSARIES[kind]
    u = np.asarray(u, dtype=float)
    L = np.asarray(L, dtype=float)
    if u.shape[-1] < K or L.shape[-1] != K:
        raise ValueError(f"adversary {kind} plays against {K} experts")
    runs = u.shape[0]
    out = np.zeros((runs, K))
    if kind == "A":
        first = u[:, 0] < 0.5
        out[:, 0] = first
        out[:, 1] = ~first
    elif kind == "B":
        q = _bernoulli_gap(beta)
        out[:, 0] = u[:, 0] < q
        out[:, 1] = u[:, 1] < 0.5
    elif kind == "C":
        q = 0.9 ** (1.0 / t) if t % 2 == 1 else 0.9 ** t
        first = u[:, 0] < q
        out[:, 0] = first
        out[:, 1] = ~first
    elif kind == "D":
        cols = expert_columns(3)
        j = np.minimum((u[:, 0] * len(cols)).astype(int), len(cols) - 1)
        table = np.zeros((len(cols), 3))
        for c, S in enumerate(cols):
            table[c, list(S)] = 1.0
        out[:] = table[j]
    elif kind == "E":
        tie = np.all(L == L[:, :1], axis=1)
        lucky = np.minimum((u[:, 0] * 3).astype(int), 2)
        leader = ranking(L)[:, 0]
        spare = u[:, 0] < 0.5  # the leader escapes and the others pay
        pick = np.where(tie, lucky, leader)
        rows = np.arange(runs)
        out[:] = 1.0
        out[rows, pick] = 0.0
        flip = ~tie & ~spare
        out[flip] = 0.0
        out[rows[flip], leader[flip]] = 1.0
    else:  # F
        q = _bernoulli_gap(beta)
        out[:, 0] = u[:, 0] < q
        out[:, 1] = u[:, 1] < 0.5
        out[:, 2] = u[:, 2] < 0.5
    return out


def adversary_sample(kind: str, t: int, history, beta: float,
                     rng: np.random.Generator) -> np.ndarray:
    """One loss vector given the past loss vectors ``history`` (rows)."""
    K = ADVERSARIES.get(kind)
    if K is None:
        raise ValueError(f"unknown adversary {kind!r}")
    hist = np.asarray(history, dtype=float).reshape(-1, K)
    L = hist.sum(axis=0)[None, :]
    return adversary_losses(kind, t, L, beta, rng.random((1, K)))[0]


# ---------------------------------------------------------------------------
# forecasters

class Forecaster:
    """Vectorized forecaster interface used by :func:`simulate`."""

    name = "forecaster"

    def __init__(self, K: int, beta: float):
        self.K = K
        self.beta = beta

    def start(self, runs: int, u0) -> None:
        self.disc = np.zeros((runs, self.K))
        self.cum = np.zeros((runs, self.K))

    def distribution(self) -> np.ndarray:
        raise NotImplementedError

    def update(self, t: int, loss: np.ndarray, u_mode) -> None:
        self.disc += self.beta ** (t - 1) * loss
        self.cum += loss


class Hedge(Forecaster):
    name = "hedge"

    def __init__(self, K: int, beta: float, eta: float | None = None):
        super().__init__(K, beta)
        self.eta = hedge_eta(K, beta) if eta is None else eta

    def distribution(self):
        return hedge_distribution(self.disc, self.beta, self.eta)


class GPS(Forecaster):
    name = "gps"

    def __init__(self, K: int, beta: float):
        if K not in (2, 3):
            raise ValueError("GPS is defined for 2 or 3 experts")
        super().__init__(K, beta)

    def distribution(self):
        order = ranking(self.cum)
        ranked = np.take_along_axis(self.cum, order, axis=1)
        if self.K == 2:
            probs = gps2_distribution(ranked[:, 1] - ranked[:, 0], self.beta)
        else:
            probs = gps3_distribution(ranked[:, 1] - ranked[:, 0], ranked[:, 2] - ranked[:, 0],
                                      ranked[:, 2] - ranked[:, 1], self.beta)
        out = np.empty_like(probs)
        np.put_along_axis(out, order, probs, axis=1)
        return out


class ModeForecaster(Forecaster):
    """Runs a mode strategy solved on the regret game of the experts game.

    Stages where every expert has the same loss carry no regret and leave
    the mode unchanged.
    """

    name = "ours"

    def __init__(self, s: ModeStrategy, target="minmax", F=None):
        K = s.K
        cols = expert_columns(K)
        if s.m != K or s.n != len(cols):
            raise ValueError("strategy does not match the experts game")
        super().__init__(K, s.beta)
        self.s = s
        start = initial_modes(s, target, F)
        self._start_modes = np.array([j for j, _ in start])
        self._start_weights = np.array([w for _, w in start])
        self._code = {sum(1 << k for k in S): c for c, S in enumerate(cols)}

    def start(self, runs, u0):
        super().start(runs, u0)
        cdf = np.cumsum(self._start_weights)
        slot = np.minimum((np.asarray(u0)[:, None] * cdf[-1] >= cdf).sum(axis=1),
                          cdf.size - 1)
        self.mode = self._start_modes[slot]

    def distribution(self):
        return self.s.alpha[self.mode]

    def columns(self, loss: np.ndarray) -> np.ndarray:
        """Column index per run, or -1 for constant loss vectors."""
        bits = (loss > 0.5).astype(int) @ (1 << np.arange(self.K))
        full = (1 << self.K) - 1
        out = np.full(loss.shape[0], -1)
        for i, code in enumerate(bits):
            if code == 0 or code == full:
                continue
            if code not in self._code:
                raise ValueError(f"loss vector {loss[i]} matches no column")
            out[i] = self._code[code]
        return out

    def update(self, t, loss, u_mode):
        super().update(t, loss, u_mode)
        b = self.columns(loss)
        moving = b >= 0
        if np.any(moving):
            self.mode[moving] = next_mode(self.s, self.mode[moving], b[moving],
                                          np.asarray(u_mode)[moving])


def mode_strategy_forecaster(s: ModeStrategy, target="minmax", F=None) -> ModeForecaster:
    return ModeForecaster(s, target, F)


def experts_regret_game(K: int, beta: float):
    """Normalized regret game of the ``K``-expert problem and its record."""
    return normalize(regret_game(experts_game(K), beta))


# ---------------------------------------------------------------------------
# harness

@dataclass
class RunStats:
    regrets: np.ndarray
    mean: float
    se: float
    half_width: float

    @classmethod
    def from_regrets(cls, regrets) -> "RunStats":
        r = np.asarray(regrets, dtype=float)
        se = float(r.std(ddof=1) / math.sqrt(r.size)) if r.size > 1 else 0.0
        return cls(r, float(r.mean()), se, 1.96 * se)

    @property
    def runs(self) -> int:
        return self.regrets.size

    def summary(self) -> dict:
        return {"mean": self.mean, "se": self.se, "half_width": self.half_width,
                "runs": self.runs}


def _uniforms(seed: int, runs: int, T: int, K: int) -> tuple[np.ndarray, np.ndarray]:
    U = np.empty((runs, T, K + 2))
    u0 = np.empty(runs)
    for r in range(runs):
        rng = np.random.default_rng(np.random.SeedSequence([seed, r]))
        U[r] = rng.random((T, K + 2))
        u0[r] = rng.random()
    return U, u0


def simulate(forecaster: Forecaster, adversary: str, beta: float, T: int = 100,
             runs: int = 10_000, seed: int = 0) -> RunStats:
    """Realized discounted regret of ``forecaster`` against ``adversary``."""
    if T < 1 or runs < 1:
        raise ValueError("need T >= 1 and runs >= 1")
    K = ADVERSARIES.get(adversary)
    if K is None:
        raise ValueError(f"unknown adversary {adversary!r}")
    if forecaster.K != K:
        raise ValueError(f"adversary {adversary} needs {K} experts, forecaster has {forecaster.K}")
    if adversary in ("B", "F"):
        _bernoulli_gap(beta)
    U, u0 = _uniforms(seed, runs, T, K)
    forecaster.start(runs, u0)
    rows = np.arange(runs)
    mine = np.zeros(runs)
    for t in range(1, T + 1):
        u = U[:, t - 1]
        loss = adversary_losses(adversary, t, forecaster.cum, beta, u[:, :K])
        probs = forecaster.distribution()
        cdf = np.cumsum(probs, axis=1)
        a = np.minimum((u[:, K:K + 1] * cdf[:, -1:] >= cdf).sum(axis=1), K - 1)
        mine += beta ** (t - 1) * loss[rows, a]
        forecaster.update(t, loss, u[:, K + 1])
    regrets = mine - forecaster.disc.min(axis=1)
    return RunStats.from_regrets(regrets)


RESULT_FIELDS = ["forecaster", "adversary", "beta", "seed", "mean", "se", "half_width",
                 "runs", "horizon"]


def write_results(rows: list[dict], csv_path=None, json_path=None) -> None:
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=RESULT_FIELDS, extrasaction="ignore")
            w.writeheader()
            w.writerows(rows)
    if json_path is not None:
        with open(json_path, "w") as fh:
            json.dump(rows, fh, indent=2)
