"""Three experts at discount 0.8.  The grid over directions is a union of
three square faces, so this solve takes tens of seconds.
"""
import time

from paretodp.baselines import experts_regret_game
from paretodp.solver import grid_unit, value_iteration

beta = 0.8
g, rec = experts_regret_game(3, beta)
unit = grid_unit(rec, beta, 1.0)


def report(k, delta):
    if k % 5 == 0:
        print(f"  step {k:3d}: change {delta:.2e}")


start = time.perf_counter()
res = value_iteration(g, 20, iterations=20, record=rec, unit=unit, callback=report)
print(f"{len(res.grid)} directions, {time.perf_counter() - start:.1f}s")
print(f"minmax regret estimate {res.minmax()[0]:.4f}, upper bound {res.minmax_upper_bound():.4f}")
