"""Gradient-ascent search for the leader's optimal commitment against a
quantal follower.

The objective is the leader's expected utility against the follower's
quantal response to the committed strategy. It is non-concave (small
games already exhibit three local maxima), so every solver multi-starts
from a Nash strategy plus random draws. Matrix games use the analytic
logit gradient; tree games differentiate through the tree response by
central finite differences.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .efg import (
    FOLLOWER,
    LEADER,
    BehavioralStrategy,
    ExtensiveFormGame,
    expected_utility,
)
from .metrics import reference_game_value, reference_nash
from .nfg import NormalFormGame, uniform_mixed, validate_mixed
from .report import SolveReport
from .response import (
    QuantalModel,
    epsilon_br_certificate,
    nfg_quantal_response,
    quantal_response,
)

_MIN_STEP = 1e-14


@dataclass
class GAConfig:
    max_iters: int = 500
    step_size_init: float = 1.0
    armijo_backtrack_factor: float = 0.5
    convergence_tol: float = 1e-10
    restarts: int = 8
    finite_diff_h: float = 1e-6

    def __post_init__(self):
        if (
            self.max_iters <= 0
            or self.step_size_init <= 0
            or not 0 < self.armijo_backtrack_factor < 1
            or self.convergence_tol <= 0
            or self.restarts < 1
            or self.finite_diff_h <= 0
        ):
            raise ValueError("invalid gradient-ascent configuration")


def project_to_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = np.asarray(v, dtype=np.float64)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.nonzero(u * np.arange(1, v.size + 1) > css)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1.0), 0.0)


def qse_objective_nfg(game: NormalFormGame, leader_strategy, model: QuantalModel) -> float:
    """Leader expected utility against the quantal response."""
    sigma = validate_mixed(leader_strategy, game.n_rows)
    y = nfg_quantal_response(game, sigma, model)
    return float(sigma @ game.leader_payoffs @ y)


def _nfg_objective_raw(game, sigma, model):
    y = model.distribution(sigma @ game.follower_payoffs)
    return float(sigma @ game.leader_payoffs @ y)


def nfg_qse_gradient(game: NormalFormGame, sigma, model: QuantalModel) -> np.ndarray:
    """Analytic gradient of the commitment objective for logit models."""
    if model.kind != "logit":
        raise ValueError("analytic gradient requires a logit model")
    y = model.distribution(sigma @ game.follower_payoffs)
    c = game.leader_payoffs.T @ sigma
    f = float(y @ c)
    return game.leader_payoffs @ y + model.lam * (game.follower_payoffs @ (y * (c - f)))


def _fd_gradient(objective, x, h):
    g = np.empty(x.size)
    for i in range(x.size):
        xp = x.copy()
        xp[i] = x[i] + h
        fp = objective(xp)
        xp[i] = x[i] - h
        fm = objective(xp)
        g[i] = (fp - fm) / (2.0 * h)
    return g


def _ascend(objective, gradient, project, x0, config: GAConfig):
    """Projected gradient ascent with backtracking; accepted steps never
    decrease the objective. Returns (x, f, converged)."""
    x = project(x0)
    f = objective(x)
    for _ in range(config.max_iters):
        g = gradient(x)
        eta = config.step_size_init
        x_new = f_new = None
        while eta >= _MIN_STEP:
            cand = project(x + eta * g)
            fc = objective(cand)
            if fc > f:
                x_new, f_new = cand, fc
                break
            eta *= config.armijo_backtrack_factor
        if x_new is None:
            return x, f, True
        if f_new - f < config.convergence_tol:
            return x_new, f_new, True
        x, f = x_new, f_new
    return x, f, False


def _nfg_starts(game, config, rng):
    starts = [reference_nash(game).avg_strategy] if game.zero_sum else [
        uniform_mixed(game.n_rows)
    ]
    for _ in range(config.restarts - 1):
        starts.append(rng.dirichlet(np.ones(game.n_rows)))
    return starts


def solve_qse_ga_nfg(game: NormalFormGame, model: QuantalModel,
                     config: GAConfig | None = None, seed=0) -> SolveReport:
    """Multi-start projected gradient ascent over the leader simplex."""
    config = config or GAConfig()
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)

    def objective(x):
        return _nfg_objective_raw(game, x, model)

    if model.kind == "logit":
        def gradient(x):
            return nfg_qse_gradient(game, x, model)
    else:
        def gradient(x):
            return _fd_gradient(objective, x, config.finite_diff_h)

    best = None
    converged = False
    for x0 in _nfg_starts(game, config, rng):
        x, f, conv = _ascend(objective, gradient, project_to_simplex, x0, config)
        if best is None or f > best[1]:
            best = (x, f)
            converged = conv
    x, f = best
    resp = nfg_quantal_response(game, x, model)
    return SolveReport(
        algorithm="qse-ga",
        final_strategy=x,
        avg_strategy=x,
        follower_strategy=resp,
        epsilon_br_of_opponent=epsilon_br_certificate(game, (x, resp), LEADER),
        iterations=config.max_iters,
        wall_time=time.perf_counter() - t0,
        converged=converged,
    )


def _project_blocks(game, table):
    out = np.empty_like(table)
    for i in game.player_isets[LEADER]:
        sl = game.iset_slice(i)
        out[sl] = project_to_simplex(table[sl])
    return out


def solve_qse_ga_efg(game: ExtensiveFormGame, model: QuantalModel,
                     config: GAConfig | None = None, seed=0) -> SolveReport:
    """Commitment search over the leader's behavioral tables.

    The follower is eliminated by the tree quantal response, so the
    feasible set is a product of per-infoset simplices; the gradient is
    taken by central finite differences through the response.
    """
    config = config or GAConfig()
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)

    def objective(table):
        resp = quantal_response(game, table, model)
        return expected_utility(game, (table, resp.table))[LEADER]

    def gradient(table):
        return _fd_gradient(objective, table, config.finite_diff_h)

    def project(table):
        return _project_blocks(game, table)

    starts = [reference_nash(game).avg_strategy.table if game.zero_sum
              else BehavioralStrategy.uniform(game, LEADER).table]
    for _ in range(config.restarts - 1):
        t = np.empty(game.table_size[LEADER])
        for i in game.player_isets[LEADER]:
            sl = game.iset_slice(i)
            t[sl] = rng.dirichlet(np.ones(sl.stop - sl.start))
        starts.append(t)

    best = None
    converged = False
    for x0 in starts:
        x, f, conv = _ascend(objective, gradient, project, x0, config)
        if best is None or f > best[1]:
            best = (x, f)
            converged = conv
    x, _ = best
    leader = BehavioralStrategy(game, LEADER, x)
    resp = quantal_response(game, leader, model)
    return SolveReport(
        algorithm="qse-ga",
        final_strategy=leader,
        avg_strategy=leader,
        follower_strategy=resp,
        epsilon_br_of_opponent=epsilon_br_certificate(game, (leader, resp), LEADER),
        iterations=config.max_iters,
        wall_time=time.perf_counter() - t0,
        converged=converged,
    )


def solve_qse_ga(game, model: QuantalModel, config: GAConfig | None = None,
                 seed=0) -> SolveReport:
    if isinstance(game, NormalFormGame):
        return solve_qse_ga_nfg(game, model, config, seed)
    return solve_qse_ga_efg(game, model, config, seed)


def best_ne_search(game: NormalFormGame, model: QuantalModel,
                   config: GAConfig | None = None, seed=0,
                   feasibility_tol=1e-6, penalty=1e4) -> SolveReport:
    """Maximize utility against the quantal response over (near-)Nash
    leader strategies of a zero-sum matrix game.

    Feasibility means the strategy's security value stays within
    feasibility_tol of the game value; violations are penalized linearly
    with weight `penalty`. Returns the best feasible iterate, or the
    Nash start (flagged) if no feasible point was seen.
    """
    if not isinstance(game, NormalFormGame) or not game.zero_sum:
        raise ValueError("constrained search expects a zero-sum matrix game")
    config = config or GAConfig()
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    v_star = reference_game_value(game)
    floor = v_star - feasibility_tol

    def security(x):
        return float(np.min(x @ game.leader_payoffs))

    def objective(x):
        return _nfg_objective_raw(game, x, model) - penalty * max(0.0, floor - security(x))

    if model.kind == "logit":
        def base_grad(x):
            return nfg_qse_gradient(game, x, model)
    else:
        def base_grad(x):
            return _fd_gradient(lambda z: _nfg_objective_raw(game, z, model),
                                x, config.finite_diff_h)

    def gradient(x):
        g = base_grad(x)
        vals = x @ game.leader_payoffs
        if vals.min() < floor:
            g = g + penalty * game.leader_payoffs[:, int(np.argmin(vals))]
        return g

    ne_start = reference_nash(game).avg_strategy
    starts = [ne_start]
    for _ in range(config.restarts - 1):
        starts.append(rng.dirichlet(np.ones(game.n_rows)))

    best = None
    for x0 in starts:
        x, _, _ = _ascend(objective, gradient, project_to_simplex, x0, config)
        if security(x) >= floor:
            f = _nfg_objective_raw(game, x, model)
            if best is None or f > best[1]:
                best = (x, f)
    flags = []
    if best is None:
        best = (np.asarray(ne_start, dtype=np.float64),
                _nfg_objective_raw(game, ne_start, model))
        flags.append("no_feasible_iterate")
    x, _ = best
    resp = nfg_quantal_response(game, x, model)
    return SolveReport(
        algorithm="ne-search",
        final_strategy=x,
        avg_strategy=x,
        follower_strategy=resp,
        epsilon_br_of_opponent=epsilon_br_certificate(game, (x, resp), LEADER),
        iterations=config.max_iters,
        wall_time=time.perf_counter() - t0,
        flags=flags,
    )
