"""Benchmark command line.

Subcommands:
  generate      write game JSON files for every configured game
  solve         run every (game, algorithm) pair, write results.csv
  sweep-lambda  evaluate solved strategies against followers of varying
                rationality
  p-profile     trace gain/exploitability across the mixing grid of the
                restricted-response solver and the convex-combination
                heuristic
  validate      recompute metric columns of a results.csv from the
                stored strategy artifacts

All commands are deterministic for fixed seeds: jobs are pure functions
of their payload, submitted in sorted order, and merged in submission
order, so worker count never changes the output. Wall-clock fields stay
zero unless --timing is passed, keeping CSVs byte-stable.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import zoo
from .efg import FOLLOWER, LEADER, BehavioralStrategy, ExtensiveFormGame, expected_utility
from .metrics import (RESULTS_COLUMNS, attach_metrics, format_results_csv,
                      lambda_sweep, reference_game_value, write_results_csv)
from .nfg import NormalFormGame
from .qse import GAConfig, solve_qse_ga
from .regret import (convex_combine_efg, solve_cfr_br, solve_comb, solve_nash,
                     solve_qne, solve_restricted, solve_rqr)
from .response import QuantalModel, quantal_response


class ConfigError(Exception):
    pass


# -- game specs --------------------------------------------------------

SEEDED_FAMILIES = {"random_nfg", "random_efg", "gamut"}


def _game_id(entry: dict, seed) -> str:
    fam = entry["family"]
    if fam == "random_nfg":
        tag = f"{entry.get('rows', 5)}x{entry.get('cols', 5)}"
        if not entry.get("zero_sum", True):
            tag += "gs"
        return f"random_nfg_{tag}_s{seed}"
    if fam == "random_efg":
        if "set" in entry:
            return f"random_efg_set{entry['set']}_s{seed}"
        return f"random_efg_b{entry['b']}o{entry['o']}l{entry['l']}_s{seed}"
    if fam == "gamut":
        return f"{entry['sub']}_n{entry.get('n_actions', 10)}_s{seed}"
    if fam == "goofspiel":
        return f"goofspiel_k{entry.get('k', 4)}"
    if fam == "one_card_poker":
        return f"one_card_poker_d{entry.get('deck_size', 4)}"
    if fam == "leduc_holdem":
        return "leduc_holdem"
    if fam == "partition":
        items = "-".join(str(x) for x in entry["items"])
        return f"partition_{items}_{entry.get('variant', 'zero_sum')}"
    if fam == "example":
        return entry["name"]
    if fam == "file":
        return os.path.splitext(os.path.basename(entry["path"]))[0]
    raise ConfigError(f"unknown game family {fam!r}")


def expand_games(config: dict, seed_override=None, base_dir=".") -> list[dict]:
    """Normalize config game entries to one spec per (entry, seed)."""
    games = config.get("games", [])
    if not games:
        raise ConfigError("config lists no games")
    specs = []
    for entry in games:
        if "family" not in entry:
            raise ConfigError(f"game entry missing family: {entry}")
        fam = entry["family"]
        if fam in SEEDED_FAMILIES:
            seeds = [seed_override] if seed_override is not None \
                else entry.get("seeds", [0])
            if len(set(seeds)) != len(seeds):
                raise ConfigError(f"duplicate seeds in {entry}")
        else:
            seeds = [None]
        for seed in seeds:
            spec = copy.deepcopy(entry)
            spec.pop("seeds", None)
            spec["seed"] = seed
            if fam == "file":
                spec["path"] = os.path.normpath(
                    os.path.join(base_dir, spec["path"]))
            spec["id"] = _game_id(entry, seed)
            specs.append(spec)
    ids = [s["id"] for s in specs]
    if len(set(ids)) != len(ids):
        raise ConfigError("game ids collide; use distinct seeds/params")
    return sorted(specs, key=lambda s: s["id"])


def build_game(spec: dict):
    fam = spec["family"]
    seed = spec.get("seed")
    if fam == "random_nfg":
        return zoo.random_nfg(spec.get("rows", 5), spec.get("cols", 5), seed,
                              zero_sum=spec.get("zero_sum", True))
    if fam == "random_efg":
        if "set" in spec:
            return zoo.random_efg_set(spec["set"], seed)
        return zoo.random_efg(spec["b"], spec["o"], spec["l"], seed)
    if fam == "gamut":
        return zoo.gamut_style(spec["sub"], spec.get("n_actions", 10), seed)
    if fam == "goofspiel":
        return zoo.goofspiel(spec.get("k", 4))
    if fam == "one_card_poker":
        return zoo.one_card_poker(spec.get("deck_size", 4))
    if fam == "leduc_holdem":
        return zoo.leduc_holdem()
    if fam == "partition":
        return zoo.partition_reduction_game(spec["items"],
                                            spec.get("variant", "zero_sum"))
    if fam == "example":
        return zoo.example_nfg(spec["name"])
    if fam == "file":
        with open(spec["path"]) as fh:
            text = fh.read()
        head = json.loads(text)
        if "nodes" in head:
            return ExtensiveFormGame.from_json(text)
        return NormalFormGame.from_json(text)
    raise ConfigError(f"unknown game family {fam!r}")


def game_to_json(game) -> str:
    return json.dumps(json.loads(game.to_json()), indent=1, sort_keys=True) + "\n"


# -- model / algorithms ------------------------------------------------


def load_model(config: dict) -> QuantalModel:
    entry = config.get("model", {"kind": "logit", "lambda": 1.0})
    return QuantalModel.from_json(json.dumps(entry))


def model_lambda(model: QuantalModel):
    return model.lam if model.kind == "logit" else None


def run_algorithm(game, model: QuantalModel, alg: dict, game_value):
    name = alg.get("name")
    iters = alg.get("iterations", 10000)
    tol = alg.get("tolerance")
    seed = alg.get("seed", 0)
    if name == "nash":
        report = solve_nash(game, iters, tol)
    elif name == "qne":
        report = solve_qne(game, model, iters, tol)
    elif name == "cfr-br":
        report = solve_cfr_br(game, iters, tol)
    elif name == "restricted":
        report = solve_restricted(game, model, alg["p"], iters, seed=seed)
    elif name == "rqr":
        report = solve_rqr(game, model, alg.get("phase1", iters // 2),
                           alg.get("phase2", iters - iters // 2), seed=seed,
                           game_value=game_value)
    elif name == "comb":
        ne = solve_nash(game, iters, tol)
        qn = solve_qne(game, model, iters, tol)
        report = solve_comb(game, model, ne.output_strategy(),
                            qn.output_strategy(), alg.get("sweep", 11))
    elif name == "qse-ga":
        cfg = GAConfig(max_iters=alg.get("max_iters", 500),
                       restarts=alg.get("restarts", 8))
        report = solve_qse_ga(game, model, cfg, seed=seed)
    else:
        raise ConfigError(f"unknown algorithm {name!r}")
    return attach_metrics(report, game, model, game_value)


# -- artifacts ---------------------------------------------------------


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return "%.12g" % x
    return str(x)


def artifact_name(game_id: str, algorithm: str, tuned_param) -> str:
    stem = f"{game_id}__{algorithm}"
    if tuned_param is not None:
        stem += f"__{_fmt(tuned_param)}"
    return stem + ".json"


def strategy_payload(game, strategy):
    if isinstance(game, NormalFormGame):
        return [float(x) for x in np.asarray(strategy)]
    if isinstance(strategy, BehavioralStrategy):
        return strategy.to_dict()
    return BehavioralStrategy(game, LEADER, np.asarray(strategy)).to_dict()


def load_leader_strategy(game, payload):
    if isinstance(game, NormalFormGame):
        return np.asarray(payload, dtype=np.float64)
    return BehavioralStrategy.from_dict(game, payload)


# -- jobs --------------------------------------------------------------


def _reference_job(payload):
    game = build_game(payload["spec"])
    if not game.zero_sum:
        return payload["spec"]["id"], None
    ref = payload.get("reference", {})
    value = reference_game_value(game, ref.get("iterations", 100000),
                                 ref.get("tolerance", 1e-6))
    return payload["spec"]["id"], value


def _row_base(spec, model, alg_name):
    return {
        "game_id": spec["id"],
        "family": spec["family"],
        "seed": spec.get("seed"),
        "algorithm": alg_name,
        "lambda": model_lambda(model),
    }


def _report_row(spec, model, report, timing):
    row = _row_base(spec, model, report.algorithm)
    row.update({
        "iterations": report.iterations,
        "gain": report.gain,
        "exploitability": report.exploitability,
        "eu_vs_qr": report.eu_vs_qr,
        "eu_vs_br": report.eu_vs_br,
        "tuned_param": report.tuned_param,
        "wall_ms": report.wall_time * 1000.0 if timing else 0.0,
    })
    return row


def _solve_job(payload):
    try:
        spec = payload["spec"]
        model = QuantalModel.from_json(payload["model"])
        game = build_game(spec)
        report = run_algorithm(game, model, payload["alg"], payload["value"])
        row = _report_row(spec, model, report, payload["timing"])
        artifact = {
            "game_id": spec["id"],
            "family": spec["family"],
            "seed": spec.get("seed"),
            "algorithm": report.algorithm,
            "lambda": model_lambda(model),
            "tuned_param": report.tuned_param,
            "iterations": report.iterations,
            "leader": strategy_payload(game, report.output_strategy()),
        }
        if report.follower_strategy is not None:
            artifact["follower"] = strategy_payload(game, report.follower_strategy)
        return {"row": row, "artifact": artifact}
    except ConfigError:
        raise
    except Exception as exc:  # noqa: BLE001 - reported to the CLI caller
        return {"error": f"{payload['spec']['id']}/{payload['alg'].get('name')}: {exc!r}"}


def _sweep_job(payload):
    try:
        spec = payload["spec"]
        model = QuantalModel.from_json(payload["model"])
        game = build_game(spec)
        report = run_algorithm(game, model, payload["alg"], payload["value"])
        sigma = report.output_strategy()
        rows = []
        swept = lambda_sweep(game, {report.algorithm: sigma},
                             payload["lambdas"], payload["value"])
        for entry in swept:
            row = _row_base(spec, model, report.algorithm)
            row.update({
                "lambda": entry["lambda"],
                "iterations": report.iterations,
                "gain": entry.get("gain"),
                "exploitability": entry.get("exploitability"),
                "eu_vs_qr": entry["eu_vs_qr"],
                "eu_vs_br": entry.get("eu_vs_br"),
                "tuned_param": report.tuned_param,
                "wall_ms": report.wall_time * 1000.0 if payload["timing"] else 0.0,
            })
            rows.append(row)
        artifact = {
            "game_id": spec["id"],
            "family": spec["family"],
            "seed": spec.get("seed"),
            "algorithm": report.algorithm,
            "lambda": model_lambda(model),
            "tuned_param": report.tuned_param,
            "iterations": report.iterations,
            "leader": strategy_payload(game, report.output_strategy()),
        }
        return {"rows": rows, "artifact": artifact}
    except ConfigError:
        raise
    except Exception as exc:  # noqa: BLE001
        return {"error": f"{payload['spec']['id']}/{payload['alg'].get('name')}: {exc!r}"}


def _profile_job(payload):
    """Full mixing-grid profile for one game: a restricted-response run
    per grid point plus the fixed-weight convex combinations of one
    Nash/QNE pair."""
    try:
        spec = payload["spec"]
        model = QuantalModel.from_json(payload["model"])
        game = build_game(spec)
        value = payload["value"]
        prof = payload["profile"]
        iters = prof.get("iterations", 1000)
        tol = prof.get("tolerance")
        seed = prof.get("seed", 0)
        grid = prof.get("grid")
        grid = [float(g) for g in grid] if grid is not None \
            else [round(x, 10) for x in np.linspace(0.0, 1.0, 11)]
        ne = solve_nash(game, iters, tol)
        qn = solve_qne(game, model, iters, tol)
        rows, artifacts = [], []

        def emit(report):
            rows.append(_report_row(spec, model, report, payload["timing"]))
            artifacts.append({
                "game_id": spec["id"],
                "family": spec["family"],
                "seed": spec.get("seed"),
                "algorithm": report.algorithm,
                "lambda": model_lambda(model),
                "tuned_param": report.tuned_param,
                "iterations": report.iterations,
                "leader": strategy_payload(game, report.output_strategy()),
            })

        for p in grid:
            rep = solve_restricted(game, model, p, iters, seed=seed)
            emit(attach_metrics(rep, game, model, value))
        for alpha in grid:
            t0 = time.perf_counter()
            if isinstance(game, NormalFormGame):
                comb = (1.0 - alpha) * np.asarray(ne.output_strategy()) \
                    + alpha * np.asarray(qn.output_strategy())
            else:
                comb, _ = convex_combine_efg(ne.output_strategy(),
                                             qn.output_strategy(), alpha)
            from .report import SolveReport
            rep = SolveReport(algorithm="comb", final_strategy=comb,
                              avg_strategy=comb, tuned_param=alpha,
                              iterations=iters,
                              wall_time=time.perf_counter() - t0)
            emit(attach_metrics(rep, game, model, value))
        return {"rows": rows, "artifacts": artifacts}
    except ConfigError:
        raise
    except Exception as exc:  # noqa: BLE001
        return {"error": f"{payload['spec']['id']}/profile: {exc!r}"}


def _run_jobs(job_fn, payloads, workers: int):
    if workers <= 1 or len(payloads) <= 1:
        return [job_fn(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job_fn, payloads))


# -- commands ----------------------------------------------------------


def _reference_values(specs, config, workers):
    ref = config.get("reference", {})
    payloads = [{"spec": s, "reference": ref} for s in specs]
    return dict(_run_jobs(_reference_job, payloads, workers))


def _algorithms(config) -> list[dict]:
    algs = config.get("algorithms", [])
    if not algs:
        raise ConfigError("config lists no algorithms")
    for alg in algs:
        if "name" not in alg:
            raise ConfigError(f"algorithm entry missing name: {alg}")
    return algs


def _write_artifacts(out, artifacts):
    adir = os.path.join(out, "strategies")
    os.makedirs(adir, exist_ok=True)
    for art in artifacts:
        name = artifact_name(art["game_id"], art["algorithm"], art["tuned_param"])
        with open(os.path.join(adir, name), "w") as fh:
            json.dump(art, fh, indent=1, sort_keys=True)
            fh.write("\n")


def cmd_generate(config, out, workers, seed_override, timing, base_dir):
    specs = expand_games(config, seed_override, base_dir)
    gdir = os.path.join(out, "games")
    os.makedirs(gdir, exist_ok=True)
    for spec in specs:
        game = build_game(spec)
        with open(os.path.join(gdir, spec["id"] + ".json"), "w") as fh:
            fh.write(game_to_json(game))
    print(f"wrote {len(specs)} game files to {gdir}")
    return 0


def _solve_like(config, out, workers, seed_override, timing, base_dir, sweep):
    specs = expand_games(config, seed_override, base_dir)
    algs = _algorithms(config)
    values = _reference_values(specs, config, workers)
    payloads = []
    for spec in specs:
        for alg in algs:
            payloads.append({
                "spec": spec,
                "alg": alg,
                "model": load_model(config).to_json(),
                "value": values[spec["id"]],
                "timing": timing,
            })
    if sweep:
        lambdas = config.get("lambdas")
        if not lambdas:
            raise ConfigError("sweep-lambda needs a non-empty 'lambdas' list")
        for p in payloads:
            p["lambdas"] = [float(x) for x in lambdas]
        results = _run_jobs(_sweep_job, payloads, workers)
    else:
        results = _run_jobs(_solve_job, payloads, workers)
    rows, artifacts, errors = [], [], []
    for res in results:
        if "error" in res:
            errors.append(res["error"])
        elif "rows" in res:
            rows.extend(res["rows"])
            artifacts.append(res["artifact"])
        else:
            rows.append(res["row"])
            artifacts.append(res["artifact"])
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "results.csv")
    write_results_csv(rows, path)
    _write_artifacts(out, artifacts)
    for err in errors:
        print(f"solver error: {err}", file=sys.stderr)
    print(f"wrote {len(rows)} rows to {path}")
    return 1 if errors else 0


def cmd_solve(config, out, workers, seed_override, timing, base_dir):
    return _solve_like(config, out, workers, seed_override, timing, base_dir,
                       sweep=False)


def cmd_sweep_lambda(config, out, workers, seed_override, timing, base_dir):
    return _solve_like(config, out, workers, seed_override, timing, base_dir,
                       sweep=True)


def cmd_p_profile(config, out, workers, seed_override, timing, base_dir):
    specs = expand_games(config, seed_override, base_dir)
    values = _reference_values(specs, config, workers)
    payloads = [{
        "spec": spec,
        "model": load_model(config).to_json(),
        "value": values[spec["id"]],
        "profile": config.get("profile", {}),
        "timing": timing,
    } for spec in specs]
    results = _run_jobs(_profile_job, payloads, workers)
    rows, artifacts, errors = [], [], []
    for res in results:
        if "error" in res:
            errors.append(res["error"])
        else:
            rows.extend(res["rows"])
            artifacts.extend(res["artifacts"])
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "results.csv")
    write_results_csv(rows, path)
    _write_artifacts(out, artifacts)
    for err in errors:
        print(f"solver error: {err}", file=sys.stderr)
    print(f"wrote {len(rows)} rows to {path}")
    return 1 if errors else 0


def _recompute_row(game, sigma, model, value):
    """Metric columns recomputed from a stored leader strategy."""
    from .metrics import _uniform_follower, evaluate_general_sum
    from .response import best_response

    resp = _uniform_follower(game) if model is None \
        else quantal_response(game, sigma, model)
    eu_qr = expected_utility(game, (sigma, resp))[LEADER]
    got = {"eu_vs_qr": eu_qr}
    if game.zero_sum:
        _, br_val = best_response(game, sigma, FOLLOWER)
        got["eu_vs_br"] = -br_val
        got["gain"] = eu_qr - value
        got["exploitability"] = value - got["eu_vs_br"]
    else:
        ev = evaluate_general_sum(game, sigma,
                                  model if model is not None else QuantalModel.logit(1.0))
        got["eu_vs_br"] = ev["eu_vs_br"]
    return got


def cmd_validate(config, out, workers, seed_override, timing, base_dir):
    """Recompute the metric columns of results.csv from stored strategies."""
    path = os.path.join(out, "results.csv")
    if not os.path.exists(path):
        print(f"no results at {path}", file=sys.stderr)
        return 1
    specs = {s["id"]: s for s in expand_games(config, seed_override, base_dir)}
    config_model = load_model(config)
    ref = config.get("reference", {})
    games, values = {}, {}
    tol = 1e-9
    bad = 0
    with open(path) as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    for row in rows:
        gid = row["game_id"]
        if gid not in specs:
            print(f"{gid}: not in config", file=sys.stderr)
            bad += 1
            continue
        if gid not in games:
            games[gid] = build_game(specs[gid])
            values[gid] = reference_game_value(
                games[gid], ref.get("iterations", 100000),
                ref.get("tolerance", 1e-6)) if games[gid].zero_sum else None
        game, value = games[gid], values[gid]
        tuned = float(row["tuned_param"]) if row["tuned_param"] else None
        name = artifact_name(gid, row["algorithm"], tuned)
        apath = os.path.join(out, "strategies", name)
        with open(apath) as fh:
            sigma = load_leader_strategy(game, json.load(fh)["leader"])
        lam = float(row["lambda"]) if row["lambda"] else None
        if lam is not None and config_model.kind == "logit":
            model = QuantalModel.logit(lam) if lam > 0 else None
        else:
            model = config_model
        # model None encodes an exactly uniform follower (lambda 0)
        got = _recompute_row(game, sigma, model, value)
        for col in ("gain", "exploitability", "eu_vs_qr", "eu_vs_br"):
            cell = row[col]
            if cell == "":
                continue
            want = float(cell)
            have = got.get(col)
            if have is None or abs(have - want) > tol:
                print(f"{gid}/{row['algorithm']}: {col} mismatch "
                      f"{want} vs {have}", file=sys.stderr)
                bad += 1
    if bad:
        print(f"{bad} mismatching cells", file=sys.stderr)
        return 1
    print(f"validated {len(rows)} rows")
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "solve": cmd_solve,
    "sweep-lambda": cmd_sweep_lambda,
    "p-profile": cmd_p_profile,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="quantalgames",
        description="Benchmark solvers for games against quantal-response "
                    "followers.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="experiment JSON")
    parser.add_argument("--out", default="results", help="output directory")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--seed", type=int, default=None,
                        help="override every game seed list with one seed")
    parser.add_argument("--timing", action="store_true",
                        help="record wall-clock times (breaks byte-stability)")
    args = parser.parse_args(argv)
    try:
        with open(args.config) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    base_dir = os.path.dirname(os.path.abspath(args.config))
    try:
        return COMMANDS[args.command](config, args.out, args.workers,
                                      args.seed, args.timing, base_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
