"""Strategy evaluation: gain, exploitability, and robustness sweeps.

Zero-sum strategies are scored against the game value of a cached
high-iteration self-play reference run. General-sum strategies report
raw expected utilities against the quantal response and against a
best response that breaks follower ties in the leader's favor.
"""

from __future__ import annotations

import weakref

import numpy as np

from . import kernels
from .efg import (
    FOLLOWER,
    LEADER,
    BehavioralStrategy,
    ExtensiveFormGame,
    expected_utility,
    uniform_table,
)
from .nfg import NormalFormGame, uniform_mixed, validate_mixed
from .regret import solve_nash
from .report import SolveReport
from .response import QuantalModel, best_response, quantal_response

BR_TIE_TOL = 1e-9

_reference_cache: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def reference_nash(game, iterations=100000, tolerance=1e-6) -> SolveReport:
    """Cached self-play reference solve used for game values."""
    per_game = _reference_cache.setdefault(game, {})
    key = (iterations, tolerance)
    if key not in per_game:
        per_game[key] = solve_nash(game, iterations, tolerance=tolerance)
    return per_game[key]


def reference_game_value(game, iterations=100000, tolerance=1e-6) -> float:
    if not game.zero_sum:
        raise ValueError("game value is defined for zero-sum games only")
    rep = reference_nash(game, iterations, tolerance)
    return expected_utility(game, (rep.avg_strategy, rep.follower_strategy))[LEADER]


def exploitability(game, strategy, player: int, game_value: float) -> float:
    """Utility a perfectly rational opponent extracts above their share
    of the game value."""
    if not game.zero_sum:
        raise ValueError("exploitability is defined for zero-sum games only")
    other = FOLLOWER if player == LEADER else LEADER
    _, opp_value = best_response(game, strategy, other)
    opp_ne_value = -game_value if player == LEADER else game_value
    return opp_value - opp_ne_value


def gain(game, strategy, model: QuantalModel, game_value: float) -> float:
    """Leader utility against the quantal response, above the game value."""
    if not game.zero_sum:
        raise ValueError("gain is defined for zero-sum games only")
    resp = quantal_response(game, strategy, model)
    return expected_utility(game, (strategy, resp))[LEADER] - game_value


def _nfg_br_leader_favoring(game: NormalFormGame, leader_strategy):
    sigma = validate_mixed(leader_strategy, game.n_rows)
    vf = sigma @ game.follower_payoffs
    vl = sigma @ game.leader_payoffs
    tied = np.nonzero(vf >= vf.max() - BR_TIE_TOL)[0]
    k = tied[int(np.argmax(vl[tied]))]
    br = np.zeros(game.n_cols)
    br[k] = 1.0
    return br


def _efg_br_leader_favoring(game: ExtensiveFormGame, leader_strategy):
    """Follower best response whose ties (per infoset, within BR_TIE_TOL)
    are resolved toward the leader's counterfactual value."""
    if isinstance(leader_strategy, BehavioralStrategy):
        lt = leader_strategy.table
    else:
        lt = np.asarray(leader_strategy, dtype=np.float64)
    br = BehavioralStrategy.uniform(game, FOLLOWER)
    if game.table_size[FOLLOWER] == 0:
        return br
    pi_minus = kernels.forward_products(game, kernels.edge_probs(game, lt, None))
    bounds = game.g_bounds[FOLLOWER]
    for lev in range(len(game.g_levels[FOLLOWER]) - 1, -1, -1):
        ep = kernels.edge_probs(game, lt, br.table)
        vf = kernels.infoset_action_values(
            game, FOLLOWER, pi_minus,
            kernels.backward_values(game, ep, game.util[:, FOLLOWER]),
            bounds[lev], bounds[lev + 1],
        )
        vl = kernels.infoset_action_values(
            game, FOLLOWER, pi_minus,
            kernels.backward_values(game, ep, game.util[:, LEADER]),
            bounds[lev], bounds[lev + 1],
        )
        for i in game.lv_isets[FOLLOWER][lev]:
            sl = game.iset_slice(i)
            f, l = vf[sl], vl[sl]
            tied = np.nonzero(f >= f.max() - BR_TIE_TOL)[0]
            k = int(tied[int(np.argmax(l[tied]))])
            br.table[sl] = 0.0
            br.table[sl.start + k] = 1.0
    return br


def evaluate_general_sum(game, leader_strategy, model: QuantalModel) -> dict:
    """Leader expected utility against the quantal response and against
    the leader-favoring best response."""
    resp = quantal_response(game, leader_strategy, model)
    eu_qr = expected_utility(game, (leader_strategy, resp))[LEADER]
    if isinstance(game, NormalFormGame):
        br = _nfg_br_leader_favoring(game, leader_strategy)
    else:
        br = _efg_br_leader_favoring(game, leader_strategy)
    eu_br = expected_utility(game, (leader_strategy, br))[LEADER]
    return {"eu_vs_qr": eu_qr, "eu_vs_br": eu_br}


def _uniform_follower(game):
    if isinstance(game, NormalFormGame):
        return uniform_mixed(game.n_cols)
    return uniform_table(game, FOLLOWER)


def attach_metrics(report: SolveReport, game, model: QuantalModel,
                   game_value: float | None = None) -> SolveReport:
    """Recompute every reported metric from the run's output strategy."""
    sigma = report.output_strategy()
    resp = quantal_response(game, sigma, model)
    report.eu_vs_qr = expected_utility(game, (sigma, resp))[LEADER]
    if game.zero_sum:
        if game_value is None:
            game_value = reference_game_value(game)
        _, br_val = best_response(game, sigma, FOLLOWER)
        report.eu_vs_br = -br_val
        report.gain = report.eu_vs_qr - game_value
        report.exploitability = game_value - report.eu_vs_br
    else:
        ev = evaluate_general_sum(game, sigma, model)
        report.eu_vs_br = ev["eu_vs_br"]
        report.gain = None
        report.exploitability = None
    return report


def lambda_sweep(game, strategies: dict, lambdas, game_value: float | None = None) -> list[dict]:
    """Evaluate each named leader strategy against logit opponents of
    varying rationality; lambda 0 means an exactly uniform opponent."""
    rows = []
    if game.zero_sum and game_value is None:
        game_value = reference_game_value(game)
    for name, sigma in strategies.items():
        if game.zero_sum:
            _, br_val = best_response(game, sigma, FOLLOWER)
            expl = game_value - (-br_val)
        for lam in lambdas:
            if lam == 0:
                resp = _uniform_follower(game)
            else:
                resp = quantal_response(game, sigma, QuantalModel.logit(lam))
            eu_qr = expected_utility(game, (sigma, resp))[LEADER]
            row = {"name": name, "lambda": float(lam), "eu_vs_qr": eu_qr}
            if game.zero_sum:
                row["gain"] = eu_qr - game_value
                row["exploitability"] = expl
                row["eu_vs_br"] = game_value - expl
            else:
                if isinstance(game, NormalFormGame):
                    br = _nfg_br_leader_favoring(game, sigma)
                else:
                    br = _efg_br_leader_favoring(game, sigma)
                row["eu_vs_br"] = expected_utility(game, (sigma, br))[LEADER]
            rows.append(row)
    return rows


RESULTS_HEADER = (
    "game_id,family,seed,algorithm,lambda,iterations,gain,exploitability,"
    "eu_vs_qr,eu_vs_br,tuned_param,wall_ms"
)
RESULTS_COLUMNS = RESULTS_HEADER.split(",")


def _format_cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "%.12g" % x
    return str(x)


def format_results_csv(rows: list[dict]) -> str:
    """Render result rows in the fixed column order, bit-stable."""
    lines = [RESULTS_HEADER]
    for row in rows:
        lines.append(",".join(_format_cell(row.get(c)) for c in RESULTS_COLUMNS))
    return "\n".join(lines) + "\n"


def write_results_csv(rows: list[dict], path) -> None:
    with open(path, "w") as fh:
        fh.write(format_results_csv(rows))
