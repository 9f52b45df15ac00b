"""Pareto frontiers of minimal loss guarantees in discounted repeated games
with vector losses, computed by set-valued dynamic programming."""

__version__ = "0.1.0"
