"""Command-line front end: solve, extract, evaluate, simulate, compare.

Exit codes: 0 success, 2 bad configuration, 3 numerical failure, 4 I/O.
Failures print one JSON object to stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import ADVERSARIES, GPS, Hedge, ModeForecaster, simulate, write_results
from .game import (ScalarGame, VectorGame, denormalize_vector, example_game, experts_game,
                   normalize, normalize_vector, regret_game)
from .geometry import Frontier, d_distance
from .lp import LpError
from .solver import (SolveResult, SolverError, error_bounds, grid_unit, oracle_frontier_k2_half,
                     value_iteration)
from .strategy import StrategyError, evaluate_strategy, extract_strategy

log = logging.getLogger("paretodp")

EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 2, 3, 4


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--game", default="experts2",
                   help="experts2, experts3, example, or a JSON game file")
    p.add_argument("--beta", type=float, default=None, help="discount factor")
    p.add_argument("--grid", type=int, default=20, help="grid resolution N")
    p.add_argument("--iters", type=int, default=None, help="value-iteration steps n")
    p.add_argument("--tol", type=float, default=None, help="stop when the step change is below this")
    p.add_argument("--solution", default=None, help="reuse a solve.json instead of solving")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--target", default="minmax", help="minmax | prior:w1,w2,... | param:p1,p2,...")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="paretodp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"paretodp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, helptext in [
        ("solve", "approximate the optimal frontier"),
        ("strategy", "extract the finite-mode strategy"),
        ("evaluate", "evaluate the extracted strategy exactly"),
        ("simulate", "Monte-Carlo regret of forecasters against adversaries"),
        ("compare", "simulate and print a forecaster-by-adversary table"),
        ("oracle-check", "distance to the closed-form two-expert frontier at beta 1/2"),
    ]:
        p = sub.add_parser(name, help=helptext)
        _add_common(p)
        if name in ("simulate", "compare"):
            p.add_argument("--runs", type=int, default=10_000)
            p.add_argument("--horizon", type=int, default=100)
            p.add_argument("--adversaries", default=None, help="comma list, e.g. A,B,C")
            p.add_argument("--forecasters", default="ours,hedge,gps")
    return parser


# ---------------------------------------------------------------------------
# configuration helpers

def resolve_game(name: str, beta: float | None):
    """Return ``(vector game, experts K or None, spread or None)``.

    Regret games record the spread of the underlying losses, which fixes the
    grid unit.
    """
    if name in ("experts2", "experts3"):
        K = int(name[-1])
        return regret_game(experts_game(K), 0.9 if beta is None else beta), K, 1.0
    if name == "example":
        g = example_game()
        return (g if beta is None else VectorGame(g.losses, beta)), None, None
    path = Path(name)
    if not path.exists():
        raise ConfigError(f"unknown game {name!r}")
    with open(path) as fh:
        obj = json.load(fh)
    b = beta if beta is not None else obj.get("beta")
    if b is None:
        raise ConfigError("the game file has no beta; pass --beta")
    losses = np.array(obj["losses"], dtype=float)
    if losses.ndim == 3:
        return VectorGame(losses, float(b)), None, None
    sg = ScalarGame(losses)
    return regret_game(sg, float(b)), None, float(losses.max() - losses.min())


def parse_target(text: str):
    if text == "minmax":
        return "minmax"
    kind, _, rest = text.partition(":")
    if kind not in ("prior", "param") or not rest:
        raise ConfigError(f"bad target {text!r}")
    try:
        values = [float(x) for x in rest.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad target {text!r}") from exc
    return kind, np.array(values)


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("verbose",)}


def _validate(args):
    if args.beta is not None and not 0.0 <= args.beta < 1.0:
        raise ConfigError("--beta must lie in [0, 1)")
    if args.grid < 1:
        raise ConfigError("--grid must be positive")
    if args.iters is not None and args.iters < 1:
        raise ConfigError("--iters must be positive")
    if args.tol is not None and args.tol <= 0:
        raise ConfigError("--tol must be positive")
    if args.threads < 1:
        raise ConfigError("--threads must be positive")
    if getattr(args, "runs", 1) < 1 or getattr(args, "horizon", 1) < 1:
        raise ConfigError("--runs and --horizon must be positive")


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1)


def _solve(args, g: VectorGame, spread):
    if args.solution:
        with open(args.solution) as fh:
            return SolveResult.from_json(json.load(fh)["result"])
    ng, rec = normalize(g)
    iters, tol = args.iters, args.tol
    if iters is None and tol is None:
        iters = 20
    unit = grid_unit(rec, g.beta, spread)
    return value_iteration(ng, args.grid, iterations=iters, tol=tol, record=rec, unit=unit,
                           callback=lambda i, d: log.info("iteration %d delta %.3e", i, d))


def _frontier_csv(path: Path, vertices: np.ndarray, params: np.ndarray) -> None:
    K = vertices.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"p{k + 1}" for k in range(K)] + [f"x{k + 1}" for k in range(K)])
        for p, x in zip(params, vertices):
            w.writerow([repr(float(v)) for v in p] + [repr(float(v)) for v in x])


def solve_report(res: SolveResult) -> dict:
    value, point = res.minmax()
    return {
        "minmax": value,
        "minmax_point": point.tolist(),
        "minmax_upper_bound": res.minmax_upper_bound(),
        "iterations": res.iterations,
        "grid_size": len(res.grid),
        "nominal_grid_size": res.grid.nominal_size,
        "final_delta": res.deltas[-1],
        "bounds_normalized": dict(res.bounds),
    }


# ---------------------------------------------------------------------------
# commands

def cmd_solve(args, out: Path) -> dict:
    g, _, spread = resolve_game(args.game, args.beta)
    res = _solve(args, g, spread)
    report = solve_report(res)
    meta = {"config": _config(args), "version": __version__}
    _write_json(out / "solve.json", {**meta, "report": report, "result": res.to_json()})
    _frontier_csv(out / "frontier_raw.csv", res.raw_vertices(), res.grid.points)
    _frontier_csv(out / "frontier_normalized.csv", res.frontier.vertices, res.grid.points)
    _write_json(out / "bounds.json", {**meta, **report})
    return report


def _strategy(args):
    g, K, spread = resolve_game(args.game, args.beta)
    res = _solve(args, g, spread)
    return res, extract_strategy(res)


def cmd_strategy(args, out: Path) -> dict:
    res, s = _strategy(args)
    _write_json(out / "strategy.json", {"config": _config(args), "version": __version__,
                                        **s.to_json()})
    return {"modes": s.modes, "max_support": int((s.next_weights > 0).sum(axis=2).max())}


def cmd_evaluate(args, out: Path) -> dict:
    res, s = _strategy(args)
    ev = evaluate_strategy(res.game, s)
    Fn = res.previous.vertices
    gap = float(np.max(np.abs(ev.F - Fn)))
    one_sided = float(np.max(np.maximum(ev.F - Fn, 0.0)))
    allowed = res.deltas[-1] / (1.0 - res.game.beta)
    raw = denormalize_vector(ev.F, s.record, s.beta)
    with open(out / "guarantees.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        K = s.K
        w.writerow([f"p{k + 1}" for k in range(K)] + [f"g{k + 1}" for k in range(K)])
        for p, x in zip(s.grid.points, raw):
            w.writerow([repr(float(v)) for v in p] + [repr(float(v)) for v in x])
    e_up, d_up, strat_up = error_bounds(res.grid.N, res.iterations, res.game.beta, res.grid.unit)
    report = {
        "evaluation_iterations": ev.iterations,
        "evaluation_delta": ev.delta,
        "sup_gap": gap,
        "sup_excess": one_sided,
        "allowed_gap": allowed,
        "sup_gap_within_allowed": gap <= allowed,
        "sup_excess_within_allowed": one_sided <= allowed,
        "strategy_d_upper": strat_up,
    }
    _write_json(out / "evaluation.json", {"config": _config(args), "version": __version__,
                                          **report})
    return report


def _forecaster(name: str, K: int, beta: float, strategy_fn, target):
    if name == "hedge":
        return Hedge(K, beta)
    if name == "gps":
        return GPS(K, beta)
    if name == "ours":
        return ModeForecaster(strategy_fn(), target)
    raise ConfigError(f"unknown forecaster {name!r}")


def _simulation_rows(args) -> list[dict]:
    g, K, spread = resolve_game(args.game, args.beta)
    if K is None:
        raise ConfigError("simulations need --game experts2 or experts3")
    beta = g.beta
    advs = (args.adversaries.split(",") if args.adversaries
            else [a for a, k in ADVERSARIES.items() if k == K])
    for a in advs:
        if ADVERSARIES.get(a) != K:
            raise ConfigError(f"adversary {a!r} does not play {K} experts")
    names = [f.strip() for f in args.forecasters.split(",") if f.strip()]
    target = parse_target(args.target)
    cache = {}

    def strategy():
        if "s" not in cache:
            cache["s"] = _strategy(args)[1]
        return cache["s"]

    for name in names:
        if name not in ("ours", "hedge", "gps"):
            raise ConfigError(f"unknown forecaster {name!r}")
    if "ours" in names:
        strategy()
    cells = [(f, a) for f in names for a in advs]

    def run(cell):
        f, a = cell
        st = simulate(_forecaster(f, K, beta, strategy, target), a, beta,
                      args.horizon, args.runs, args.seed)
        return {"forecaster": f, "adversary": a, "beta": beta, "seed": args.seed,
                **st.summary(), "horizon": args.horizon}

    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        return list(pool.map(run, cells))


def cmd_simulate(args, out: Path) -> dict:
    rows = _simulation_rows(args)
    write_results(rows, out / "results.csv")
    _write_json(out / "results.json", {"config": _config(args), "version": __version__,
                                       "results": rows})
    return {"results": rows}


def cmd_compare(args, out: Path) -> dict:
    rows = _simulation_rows(args)
    write_results(rows, out / "compare.csv")
    _write_json(out / "compare.json", {"config": _config(args), "version": __version__,
                                       "results": rows})
    advs = sorted({r["adversary"] for r in rows})
    names = list(dict.fromkeys(r["forecaster"] for r in rows))
    lookup = {(r["forecaster"], r["adversary"]): r for r in rows}
    lines = ["forecaster " + " ".join(f"{a:>17}" for a in advs)]
    for f in names:
        cells = [f"{lookup[f, a]['mean']:8.4f}±{lookup[f, a]['half_width']:.4f}" for a in advs]
        lines.append(f"{f:<10} " + " ".join(f"{c:>17}" for c in cells))
    print("\n".join(lines), file=sys.stderr)
    return {"results": rows}


def cmd_oracle_check(args, out: Path) -> dict:
    if args.beta not in (None, 0.5) or args.game not in ("experts2",):
        raise ConfigError("oracle-check covers the two-expert game at beta 0.5 only")
    args.beta = 0.5
    args.game = "experts2"
    g, _, spread = resolve_game("experts2", 0.5)
    res = _solve(args, g, spread)
    oracle = Frontier(normalize_vector(oracle_frontier_k2_half().vertices, res.record, 0.5))
    M = 20 * args.grid
    dist = d_distance(res.frontier, oracle, M)
    report = {"d": dist, "d_upper": res.bounds["d_upper"], "sampling_slack": 2.0 / M,
              "within_bound": dist <= res.bounds["d_upper"] + 2.0 / M}
    _write_json(out / "oracle_check.json", {"config": _config(args), "version": __version__,
                                            **report})
    return report


COMMANDS = {
    "solve": cmd_solve,
    "strategy": cmd_strategy,
    "evaluate": cmd_evaluate,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "oracle-check": cmd_oracle_check,
}


def _fail(code: int, kind: str, exc: BaseException) -> int:
    print(json.dumps({"error": kind, "message": str(exc)}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(name)s: %(message)s")
        _validate(args)
        parse_target(args.target)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        report = COMMANDS[args.command](args, out)
        print(json.dumps(report, indent=1))
        return 0
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", exc)
    except (LpError, SolverError, StrategyError) as exc:
        return _fail(EXIT_NUMERIC, "numeric", exc)
    except OSError as exc:
        return _fail(EXIT_IO, "io", exc)
    except (ValueError, KeyError) as exc:
        return _fail(EXIT_CONFIG, "config", exc)


if __name__ == "__main__":
    sys.exit(main())
