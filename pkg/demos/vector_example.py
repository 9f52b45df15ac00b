"""A small vector-valued game where the one-shot frontier is a segment.

The player picks a row, the opponent a column; the losses are 2-vectors.
One step of the recursion from the origin recovers the lower boundary of
the set of guaranteeable loss vectors.
"""
import numpy as np

from paretodp.game import example_game, normalize
from paretodp.geometry import Frontier, frontier_intersect, param_grid
from paretodp.solver import dp_step

g, rec = normalize(example_game())
G, sol = dp_step(g, Frontier([[0.0, 0.0]]), param_grid(2, 40))
raw = Frontier(G.vertices / rec.scale)

print("one-shot frontier vertices (raw losses, collinear points kept):")
for v in raw.vertices[raw.essential_vertices()]:
    print("  ", np.round(v, 6))

for p in ([0.0, 0.3], [0.7, 0.0]):
    t, q = frontier_intersect(np.array(p), raw)
    print(f"direction {p}: meets the boundary at {np.round(q, 4)}")
