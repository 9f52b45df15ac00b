"""Two experts, discount 0.9: solve the frontier, extract the automaton and
compare it with Hedge and GPS on a few adversaries.

Run from the repository root:  python3 demos/two_experts.py
"""
import numpy as np

from paretodp.baselines import GPS, Hedge, ModeForecaster, experts_regret_game, simulate
from paretodp.solver import grid_unit, value_iteration
from paretodp.strategy import evaluate_strategy, extract_strategy

beta = 0.9
g, rec = experts_regret_game(2, beta)

# Losses live in [0, 1], so the regret spread is 1.
res = value_iteration(g, 201, iterations=66, record=rec, unit=grid_unit(rec, beta, 1.0))
value, point = res.minmax()
print(f"frontier has {len(res.frontier.vertices)} vertices after {res.iterations} steps")
print(f"minmax regret estimate {value:.4f} at {np.round(point, 4)}")
print(f"certified upper bound   {res.minmax_upper_bound():.4f}")

s = extract_strategy(res)
ev = evaluate_strategy(g, s)
print(f"\nautomaton: {s.modes} modes, policy evaluation took {ev.iterations} sweeps")
print(f"largest excess of exact guarantee over promised one: {np.max(ev.F - res.previous.vertices):.2e}")

print("\nmean discounted regret over 2000 runs of 100 rounds")
print(f"{'':8s}" + "".join(f"{a:>9s}" for a in "ABC"))
for name, make in [("ours", lambda: ModeForecaster(s)), ("hedge", lambda: Hedge(2, beta)),
                   ("gps", lambda: GPS(2, beta))]:
    row = [simulate(make(), a, beta, T=100, runs=2000, seed=1).mean for a in "ABC"]
    print(f"{name:8s}" + "".join(f"{v:9.4f}" for v in row))
