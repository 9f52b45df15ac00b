"""At discount 1/2 the two-expert frontier has a closed form.  Compare the
computed frontier with it and watch the distance shrink as the grid refines.
"""
from paretodp.baselines import experts_regret_game
from paretodp.game import normalize_vector
from paretodp.geometry import Frontier, d_distance
from paretodp.solver import error_bounds, grid_unit, oracle_frontier_k2_half, value_iteration

beta = 0.5
g, rec = experts_regret_game(2, beta)
unit = grid_unit(rec, beta, 1.0)
exact = oracle_frontier_k2_half()

print(f"{'N':>5s} {'n':>4s} {'distance':>12s} {'a priori bound':>15s}")
for N in (10, 25, 50, 100):
    res = value_iteration(g, N, iterations=30, record=rec, unit=unit)
    target = Frontier(normalize_vector(exact.vertices, rec, beta))
    d = d_distance(res.frontier, target, 2000)
    bound = error_bounds(N, 30, beta, unit)[1]
    print(f"{N:5d} {30:4d} {d:12.3e} {bound:15.3e}")
