import json

import numpy as np
import pytest

from paretodp.game import VectorGame, example_game, experts_game, normalize, regret_game
from paretodp.geometry import Frontier, d_distance, lower_chain_2d, param_grid
from paretodp.solver import (SolveResult, SolverError, dp_step, error_bounds, grid_unit,
                             guarantee_vector, initial_frontier, oracle_f, oracle_policy,
                             value_iteration)


def chain_mesh(V, samples=200):
    chain = lower_chain_2d(V.vertices)
    if len(chain) == 1:
        return chain
    s = np.linspace(0.0, 1.0, samples)[:, None]
    return np.vstack([a + s * (b - a) for a, b in zip(chain[:-1], chain[1:])])


def brute_force_t(g, V, p):
    """Grid search over alice's mix and per-column continuation points."""
    mesh = chain_mesh(V)
    best = np.inf
    for a in np.linspace(0.0, 1.0, 101):
        alpha = np.array([a, 1.0 - a])
        need = -np.inf
        for b in range(g.n):
            stage = alpha @ g.losses[:, b, :]
            cost = (stage[None, :] + g.beta * mesh - p[None, :]).max(axis=1)
            need = max(need, cost.min())
        best = min(best, need)
    return best


def random_normalized_game(rng, m=2, n=2, K=2, beta=0.6):
    return VectorGame(rng.uniform(0, 1 - beta, size=(m, n, K)), beta)


def test_step_matches_brute_force(rng):
    for _ in range(3):
        g = random_normalized_game(rng)
        V = Frontier(rng.uniform(size=(4, 2)))
        grid = param_grid(2, 10)
        G, sol = dp_step(g, V, grid)
        for i in range(0, len(grid), 3):
            assert sol.t[i] == pytest.approx(brute_force_t(g, V, grid.points[i]), abs=2e-2)


def test_step_solution_is_consistent(rng):
    g = random_normalized_game(rng, m=3, n=2, K=3)
    V = Frontier(rng.uniform(size=(5, 3)))
    grid = param_grid(3, 4)
    G, sol = dp_step(g, V, grid)
    np.testing.assert_allclose(sol.alpha.sum(axis=1), 1.0)
    for i, p in enumerate(grid.points):
        u = guarantee_vector(g, sol.alpha[i], sol.Q[i])
        assert np.all(u <= sol.t[i] + p + 1e-8)
        assert np.isclose((sol.t[i] + p - u).min(), 0.0, atol=1e-8)
    np.testing.assert_allclose(G.vertices, sol.t[:, None] + grid.points)


def test_one_step_example_segment():
    raw = example_game()
    g, rec = normalize(raw)
    grid = param_grid(2, 40)
    G, _ = dp_step(g, Frontier([[0.0, 0.0]]), grid)
    chain = lower_chain_2d(G.vertices / rec.scale)
    np.testing.assert_allclose(chain[[0, -1]], [[2.0, 2.0], [3.0, 1.0]], atol=1e-9)
    np.testing.assert_allclose(chain.sum(axis=1), 4.0, atol=1e-9)


def test_step_needs_normalized_game():
    with pytest.raises(SolverError):
        dp_step(example_game(), Frontier([[0.0, 0.0]]), param_grid(2, 4))


def test_contraction(rng):
    g = random_normalized_game(rng, beta=0.7)
    N = 20
    grid = param_grid(2, N)
    for _ in range(5):
        U = Frontier(rng.uniform(size=(3, 2)))
        V = Frontier(rng.uniform(size=(3, 2)))
        PU, _ = dp_step(g, U, grid)
        PV, _ = dp_step(g, V, grid)
        assert d_distance(PU, PV, 200) <= 0.7 * d_distance(U, V, 200) + 4.0 / N


def test_error_bound_values():
    e, d, s = error_bounds(100, 30, 0.5)
    assert e == pytest.approx(0.5 ** 30)
    assert d == pytest.approx(0.0201, abs=1e-4)
    assert error_bounds(201, 66, 0.9)[1] == pytest.approx(0.0507, abs=1e-4)
    assert error_bounds(100, 30, 0.5, unit=0.5)[1] == pytest.approx(0.01, abs=1e-6)
    with pytest.raises(ValueError):
        error_bounds(0, 3, 0.5)


def test_grid_unit_for_regret_games():
    _, rec = normalize(regret_game(experts_game(3), 0.8))
    assert grid_unit(rec, 0.8, 1.0) == pytest.approx(0.5)
    assert grid_unit(rec, 0.8) == 1.0


def test_iteration_deltas_contract(solved_small):
    res = solved_small
    d = np.array(res.deltas)
    assert np.all(d >= 0)
    beta, N = res.game.beta, res.grid.N
    assert np.all(d[1:] <= beta * d[:-1] + 2.0 / N)
    assert len(res.frontier.vertices) == len(res.grid)


def test_tolerance_stopping():
    g, rec = normalize(regret_game(experts_game(2), 0.5))
    res = value_iteration(g, 20, tol=1e-6, record=rec)
    assert res.deltas[-1] <= 1e-6
    assert all(x > 1e-6 for x in res.deltas[:-1])
    with pytest.raises(ValueError):
        value_iteration(g, 20)


def test_initial_frontier_is_origin():
    grid = param_grid(3, 3)
    G0 = initial_frontier(grid)
    assert G0.vertices[G0.essential_vertices()].tolist() == [[0.0, 0.0, 0.0]]


def test_result_round_trip(solved_small):
    res = solved_small
    again = SolveResult.from_json(json.loads(json.dumps(res.to_json())))
    np.testing.assert_array_equal(again.frontier.vertices, res.frontier.vertices)
    np.testing.assert_array_equal(again.step.Q, res.step.Q)
    assert again.grid.unit == res.grid.unit
    assert again.minmax() == (res.minmax()[0], pytest.approx(res.minmax()[1]))


def test_closed_form_endpoints():
    assert oracle_f(0.0) == 2.0
    assert oracle_f(2.0) == pytest.approx(0.0)
    assert oracle_f(0.5) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        oracle_f(2.5)


@pytest.mark.parametrize("x", [0.0, 0.05, 0.2, 0.37, 0.5])
def test_closed_form_policy_attains_its_point(x):
    raw = regret_game(experts_game(2), 0.5)
    for u in (np.array([x, oracle_f(x)]), np.array([oracle_f(x), x])):
        alpha, nxt = oracle_policy(u)
        got = guarantee_vector(raw, alpha, np.array(nxt))
        np.testing.assert_allclose(got, u, atol=1e-12)


def test_readout_matches_closed_form(solved_half):
    value, point = solved_half.minmax()
    assert value == pytest.approx(0.5, abs=1e-6)
    raw = solved_half.raw_vertices()
    ok = raw[:, 0] <= 2.0
    np.testing.assert_allclose(raw[ok, 1], [oracle_f(max(x, 0.0)) for x in raw[ok, 0]], atol=1e-3)
