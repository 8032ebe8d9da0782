"""Time the numpy and compiled tree-kernel backends.

Runs the full per-iteration kernel pipeline (edge probabilities,
forward reach products, backward values, counterfactual action values
for both players) on a few benchmark trees, then an end-to-end quantal
fixed-point solve with each backend patched in.

Usage: python3 benchmarks/bench_kernels.py [--reps 50] [--iters 200]
"""

import argparse
import time

import numpy as np

from quantalgames import kernels, zoo
from quantalgames.efg import FOLLOWER, LEADER, uniform_table
from quantalgames.kernels import _pytree
from quantalgames.regret import solve_qne
from quantalgames.response import QuantalModel

try:
    from quantalgames.kernels import _ctree
except ImportError:
    _ctree = None


def full_sweep(mod, game, lt, ft):
    ep = mod.edge_probs(game, lt, ft)
    val_l = mod.backward_values(game, ep, game.util[:, 0])
    val_f = mod.backward_values(game, ep, game.util[:, 1])
    out = 0.0
    for player, val in ((LEADER, val_l), (FOLLOWER, val_f)):
        other = ft if player == LEADER else lt
        pm = mod.forward_products(
            game, mod.edge_probs(game, None if player == LEADER else other,
                                 other if player == LEADER else None))
        out += mod.infoset_action_values(game, player, pm, val).sum()
    return out


def time_fn(fn, reps):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def use_backend(mod):
    for name in ("edge_probs", "forward_products", "backward_values",
                 "infoset_action_values"):
        setattr(kernels, name, getattr(mod, name))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--iters", type=int, default=200,
                    help="iterations for the end-to-end solve")
    args = ap.parse_args()

    games = {
        "random set 3": zoo.random_efg_set(3, 0),
        "random set 4": zoo.random_efg_set(4, 0),
        "goofspiel 4": zoo.goofspiel(4),
        "leduc": zoo.leduc_holdem(),
    }
    backends = {"numpy": _pytree}
    if _ctree is not None:
        backends["compiled"] = _ctree
    else:
        print("compiled backend unavailable; timing numpy only")

    print(f"{'game':<14} {'nodes':>6}  " +
          "  ".join(f"{n + ' sweep':>15}" for n in backends) +
          ("  speedup" if len(backends) == 2 else ""))
    for name, game in games.items():
        lt = uniform_table(game, LEADER)
        ft = uniform_table(game, FOLLOWER)
        times = [time_fn(lambda m=mod: full_sweep(m, game, lt, ft), args.reps)
                 for mod in backends.values()]
        line = f"{name:<14} {game.n_nodes:>6}  " + \
            "  ".join(f"{t * 1e3:>13.3f}ms" for t in times)
        if len(times) == 2:
            line += f"  {times[0] / times[1]:>6.2f}x"
        print(line)

    saved = {n: getattr(kernels, n) for n in
             ("edge_probs", "forward_products", "backward_values",
              "infoset_action_values")}
    model = QuantalModel.logit(1.0)
    print(f"\nend-to-end: solve_qne on leduc, {args.iters} iterations")
    game = games["leduc"]
    try:
        for name, mod in backends.items():
            use_backend(mod)
            t0 = time.perf_counter()
            report = solve_qne(game, model, args.iters)
            dt = time.perf_counter() - t0
            print(f"  {name:<9} {dt:.3f}s  "
                  f"(leader eps-BR certificate {report.epsilon_br_of_opponent:.3e})")
    finally:
        for n, fn in saved.items():
            setattr(kernels, n, fn)


if __name__ == "__main__":
    main()
