import json

import numpy as np
import pytest

from paretodp.game import NormalizationRecord, VectorGame, aumann_select
from paretodp.geometry import Frontier, d_distance, e_distance, param_grid
from paretodp.solver import error_bounds
from paretodp.strategy import (ModeStrategy, StrategyError, evaluate_strategy, extract_strategy,
                               initial_modes, lookahead, next_mode, observe, sample_action, step)

from conftest import regret_solve


def tiny_strategy(alpha, modes, weights, guarantee=None, beta=0.5):
    grid = param_grid(2, 1)  # (0,0), (0,1), (1,0)
    H = len(grid)
    g = np.zeros((H, 2)) if guarantee is None else np.asarray(guarantee, dtype=float)
    return ModeStrategy(grid, np.asarray(alpha, dtype=float), np.asarray(modes),
                        np.asarray(weights, dtype=float), g, beta, NormalizationRecord.identity(2))


@pytest.fixture(scope="module")
def extracted(solved_small):
    return solved_small, extract_strategy(solved_small)


def test_extraction_rebuilds_continuations(extracted):
    res, s = extracted
    V = res.previous.vertices
    rebuilt = np.einsum("ibl,iblk->ibk", s.next_weights, V[s.next_modes])
    np.testing.assert_allclose(rebuilt, res.step.Q, atol=1e-7)
    assert s.next_modes.shape[2] <= s.K + 1
    np.testing.assert_allclose(s.alpha.sum(axis=1), 1.0, atol=1e-12)


def test_vertex_continuation_gives_single_transition(extracted):
    res, s = extracted
    # the origin direction continues at stored vertices in this game
    counts = (s.next_weights > 0).sum(axis=2)
    single = counts == 1
    assert single.any()
    i, b = np.argwhere(single)[0]
    j = s.next_modes[i, b, 0]
    np.testing.assert_allclose(res.previous.vertices[j], res.step.Q[i, b], atol=1e-9)


def test_pure_self_loop_fixed_point():
    r = np.array([[[0.1, 0.3], [0.4, 0.0]], [[0.2, 0.2], [0.0, 0.1]]])
    g = VectorGame(r, 0.5)
    H = 3
    alpha = np.tile([1.0, 0.0], (H, 1))
    modes = np.tile(np.arange(H)[:, None, None], (1, 2, 1))
    s = tiny_strategy(alpha, modes, np.ones((H, 2, 1)))
    ev = evaluate_strategy(g, s, tol=1e-12)
    np.testing.assert_allclose(ev.F, np.tile(r[0].max(axis=0) / 0.5, (H, 1)), atol=1e-10)
    assert ev.delta <= 1e-12 * 0.5


def test_evaluation_matches_greedy_adversary_simulation(rng):
    beta = 0.6
    g = VectorGame(rng.uniform(0, 1 - beta, size=(2, 2, 2)), beta)
    alpha = rng.dirichlet(np.ones(2), size=3)
    modes = np.stack([np.stack([rng.permutation(3)[:2] for _ in range(2)]) for _ in range(3)])
    weights = rng.dirichlet(np.ones(2), size=(3, 2))
    s = tiny_strategy(alpha, modes, weights, beta=beta)
    F = evaluate_strategy(g, s, tol=1e-12).F
    stage = np.einsum("ia,abk->ibk", s.alpha, g.losses)
    cont = np.einsum("ibl,iblk->ibk", s.next_weights, F[s.next_modes])
    runs, T = 4000, 40
    for k in range(2):
        greedy = (stage[:, :, k] + beta * cont[:, :, k]).argmax(axis=1)
        mode = np.zeros(runs, dtype=int)
        total = np.zeros(runs)
        for t in range(T):
            b = greedy[mode]
            a = sample_action(s, mode, rng.random(runs))
            total += beta ** t * g.losses[a, b, k]
            mode = next_mode(s, mode, b, rng.random(runs))
        se = total.std(ddof=1) / np.sqrt(runs)
        assert abs(total.mean() - F[0, k]) <= 3 * se + beta ** T


def test_guarantee_consistency_and_one_sided_bound(extracted):
    res, s = extracted
    ev = evaluate_strategy(res.game, s)
    assert np.max(np.abs(lookahead(res.game, s, ev.F) - ev.F)) <= 1e-8
    slack = res.deltas[-1] / (1 - res.game.beta)
    assert np.max(ev.F - res.previous.vertices) <= slack + 1e-8


def test_strategy_frontier_near_high_resolution_proxy(extracted):
    res, s = extracted
    ev = evaluate_strategy(res.game, s)
    proxy = regret_solve(2, 0.8, 200, 60)
    Vpi = Frontier(ev.F)
    strat_bound = error_bounds(res.grid.N, res.iterations, 0.8, res.grid.unit)[2]
    assert d_distance(Vpi, proxy.frontier, 400) <= strat_bound
    # the strategy never promises more than the optimum allows
    assert e_distance(Vpi, proxy.frontier, 400) <= proxy.bounds["d_upper"] + 2 / 400


def test_initial_modes_targets():
    G = [[0.5, 0.5], [0.2, 1.2], [1.2, 0.2]]
    s = tiny_strategy(np.tile([1.0, 0.0], (3, 1)), np.zeros((3, 2, 1), dtype=int),
                      np.ones((3, 2, 1)), guarantee=G)
    assert initial_modes(s, ("param", [0.0, 1.0])) == [(1, pytest.approx(1.0))]
    assert initial_modes(s, "minmax") == [(0, pytest.approx(1.0))]
    with pytest.raises(ValueError):
        initial_modes(s, "maxmin")


def test_prior_target_matches_vertex_enumeration(extracted):
    res, s = extracted
    w = np.array([0.7, 0.3])
    start = initial_modes(s, ("prior", w))
    point = sum(wt * s.guarantee[j] for j, wt in start)
    best = aumann_select(Frontier(s.guarantee), w)
    assert point @ w == pytest.approx(best @ w, abs=1e-9)


def test_sampling_frequencies():
    alpha = np.array([[0.3, 0.7], [1.0, 0.0], [0.5, 0.5]])
    modes = np.zeros((3, 2, 2), dtype=int)
    modes[0, 1] = [1, 2]
    weights = np.tile([1.0, 0.0], (3, 2, 1))
    weights[0, 1] = [0.25, 0.75]
    s = tiny_strategy(alpha, modes, weights)
    rng = np.random.default_rng(0)
    n = 100_000
    acts = np.array([step(s, 0, rng) for _ in range(n)])
    sd = np.sqrt(0.3 * 0.7 / n)
    assert abs((acts == 0).mean() - 0.3) <= 4 * sd
    nxt = np.array([observe(s, 0, 1, rng) for _ in range(n)])
    sd = np.sqrt(0.25 * 0.75 / n)
    assert abs((nxt == 1).mean() - 0.25) <= 4 * sd
    assert {step(s, 1, rng) for _ in range(50)} == {0}
    assert {observe(s, 2, 0, rng) for _ in range(50)} == {0}
    with pytest.raises(StrategyError):
        step(s, 7, rng)
    with pytest.raises(StrategyError):
        observe(s, 0, 5, rng)


def test_modes_ignore_own_actions(extracted):
    _, s = extracted
    rng = np.random.default_rng(1)
    T = 200
    bs = rng.integers(0, s.n, size=T)
    u_mode = rng.random(T)
    paths = []
    for seed in (2, 3):
        act_rng = np.random.default_rng(seed)
        mode, path = 0, []
        for t in range(T):
            sample_action(s, mode, act_rng.random())
            mode = int(next_mode(s, mode, bs[t], u_mode[t]))
            path.append(mode)
        paths.append(path)
    assert paths[0] == paths[1]


def test_strategy_json_round_trip(extracted):
    _, s = extracted
    obj = json.loads(json.dumps(s.to_json()))
    assert set(obj) >= {"k", "beta", "grid_n", "modes", "normalization"}
    again = ModeStrategy.from_json(obj)
    np.testing.assert_array_equal(again.alpha, s.alpha)
    for i in range(0, s.modes, 7):
        for b in range(s.n):
            assert again.transitions(i, b) == s.transitions(i, b)


def test_invalid_strategies_rejected():
    ok = dict(alpha=np.tile([1.0, 0.0], (3, 1)), modes=np.zeros((3, 2, 1), dtype=int),
              weights=np.ones((3, 2, 1)))
    with pytest.raises(StrategyError):
        tiny_strategy(ok["alpha"] * 2, ok["modes"], ok["weights"])
    with pytest.raises(StrategyError):
        tiny_strategy(ok["alpha"], ok["modes"] + 5, ok["weights"])
    with pytest.raises(StrategyError):
        tiny_strategy(ok["alpha"], ok["modes"], ok["weights"] * 0.5)
