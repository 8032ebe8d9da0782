"""Timing and agreement check for the two tree-kernel backends.

Spawns itself twice, once with the compiled extension and once with
QUANTALGAMES_PURE=1, times the core sweeps on a range of tree sizes and
prints per-operation timings plus the largest numeric deviation between
the backends. Exits nonzero when the backends disagree beyond 1e-9
relative error.

Usage: python3 scripts/benchmark_backends.py [--repeats N]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def bench_games():
    from quantalgames import zoo

    return [
        ("random-tree-2", zoo.random_efg_set(2, 0)),
        ("random-tree-4", zoo.random_efg_set(4, 0)),
        ("one-card-poker-4", zoo.one_card_poker(4)),
        ("goofspiel-4", zoo.goofspiel(4)),
        ("leduc", zoo.leduc_holdem()),
    ]


def random_tables(game, seed):
    rng = np.random.default_rng(seed)
    out = []
    for p in (0, 1):
        t = np.empty(game.table_size[p])
        for i in game.player_isets[p]:
            sl = game.iset_slice(i)
            t[sl] = rng.dirichlet(np.ones(sl.stop - sl.start))
        out.append(t)
    return out


def best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best * 1e3


def run_worker(repeats):
    from quantalgames import QuantalModel, backend_name, clqr, expected_utility
    from quantalgames.efg import FOLLOWER, BehavioralStrategy, counterfactual_values

    model = QuantalModel(lam=1.0)
    report = {"backend": backend_name(), "games": {}}
    for name, game in bench_games():
        lt, ft = random_tables(game, seed=0)
        prof = (BehavioralStrategy(game, 0, lt), BehavioralStrategy(game, 1, ft))
        eu = expected_utility(game, prof)
        _, v_act = counterfactual_values(game, prof, FOLLOWER)
        qr = clqr(game, prof[0], model)
        report["games"][name] = {
            "nodes": game.n_nodes,
            "eu": eu[0],
            "cf": v_act.tolist(),
            "qr": qr.table.tolist(),
            "ms_eu": best_of(lambda: expected_utility(game, prof), repeats),
            "ms_cf": best_of(
                lambda: counterfactual_values(game, prof, FOLLOWER), repeats
            ),
            "ms_qr": best_of(lambda: clqr(game, prof[0], model), repeats),
        }
    json.dump(report, sys.stdout)
    return 0


def spawn(pure, repeats):
    env = dict(os.environ)
    if pure:
        env["QUANTALGAMES_PURE"] = "1"
    else:
        env.pop("QUANTALGAMES_PURE", None)
    proc = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--worker",
         "--repeats", str(repeats)],
        env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(proc.stdout)


def rel_dev(a, b):
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0)
    return float(np.max(np.abs(a - b) / scale)) if a.size else 0.0


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args(argv)
    if args.worker:
        return run_worker(args.repeats)

    fast = spawn(pure=False, repeats=args.repeats)
    pure = spawn(pure=True, repeats=args.repeats)
    if fast["backend"] != "compiled":
        print("warning: compiled extension unavailable, comparing "
              "python against itself", file=sys.stderr)

    hdr = f"{'game':>18} {'nodes':>6}  {'op':>3} {'python':>9} {'compiled':>9} {'speedup':>8}  {'max rel dev':>11}"
    print(f"backends: {pure['backend']} vs {fast['backend']}")
    print(hdr)
    worst = 0.0
    for name, pg in pure["games"].items():
        fg = fast["games"][name]
        dev = max(rel_dev(pg["eu"], fg["eu"]), rel_dev(pg["cf"], fg["cf"]),
                  rel_dev(pg["qr"], fg["qr"]))
        worst = max(worst, dev)
        for op in ("eu", "cf", "qr"):
            tp, tf = pg[f"ms_{op}"], fg[f"ms_{op}"]
            print(f"{name:>18} {pg['nodes']:>6}  {op:>3} "
                  f"{tp:>8.3f}ms {tf:>8.3f}ms {tp / tf:>7.1f}x  {dev:>11.2e}")
    print(f"largest relative deviation: {worst:.2e}")
    if worst > 1e-9:
        print("backends disagree", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
