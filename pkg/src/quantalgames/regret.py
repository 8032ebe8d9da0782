"""Regret-matching solvers.

All solvers share one machinery: RM+ (cumulative regrets clamped at
zero) over flat per-infoset tables, alternating updates, and linearly
weighted strategy averaging (iteration t contributes with weight t).
Linear weighting is what pushes the averaged iterate past the 1e-6
certificate targets within 1e5 iterations; uniform weighting stalls
around 1e-4.

Matrix games are treated as trees with a single infoset per player, so
the same state object drives both.

Solvers:
  solve_nash     self-play RM+/CFR+, Nash baseline
  solve_qne      leader regret-matching against the quantal response to
                 the leader's current strategy
  solve_cfr_br   same loop with an exact-best-response oracle
  solve_restricted  frozen-p mix of the two oracles
  solve_rqr      two-phase restricted run with the adaptive p schedule
  solve_comb     best convex combination of a Nash and a QNE strategy
"""

from __future__ import annotations

import time

import numpy as np

from . import kernels
from .efg import (
    FOLLOWER,
    LEADER,
    BehavioralStrategy,
    expected_utility,
    sequence_reaches,
)
from .nfg import NormalFormGame
from .report import SolveReport
from .response import QuantalModel, best_response, epsilon_br_certificate, quantal_response


def _grouped_normalize(x, starts, counts):
    """Normalize each group to a distribution; empty mass -> uniform."""
    if x.size == 0:
        return x.copy()
    rep = np.repeat(np.add.reduceat(x, starts), counts)
    uni = 1.0 / np.repeat(counts.astype(np.float64), counts)
    return np.where(rep > 0, x / np.where(rep > 0, rep, 1.0), uni)


class RegretState:
    """RM+ accumulator for one player in flat table layout."""

    def __init__(self, size, starts, counts):
        self.cumulative_regret = np.zeros(size)
        self.cumulative_strategy = np.zeros(size)
        self.iteration = 0
        self._starts = starts
        self._counts = counts

    def current(self) -> np.ndarray:
        return _grouped_normalize(self.cumulative_regret, self._starts, self._counts)

    def observe(self, v_act, cur):
        """RM+ regret update from counterfactual action values."""
        if self.cumulative_regret.size == 0:
            return
        v_iset = np.add.reduceat(cur * v_act, self._starts)
        self.cumulative_regret = np.maximum(
            self.cumulative_regret + v_act - np.repeat(v_iset, self._counts), 0.0
        )

    def accumulate(self, seq_mass, weight):
        self.iteration += 1
        self.cumulative_strategy += weight * seq_mass

    def average(self) -> np.ndarray:
        return _grouped_normalize(self.cumulative_strategy, self._starts, self._counts)


class _Ctx:
    """Uniform access to per-player layout, values and reach masses for
    matrix and tree games."""

    def __init__(self, game):
        self.game = game
        self.is_nfg = isinstance(game, NormalFormGame)

    def state(self, player) -> RegretState:
        if self.is_nfg:
            n = self.game.n_rows if player == LEADER else self.game.n_cols
            return RegretState(n, np.array([0]), np.array([n]))
        g = self.game
        counts = g.iset_nact[g.player_isets[player]].astype(np.int64)
        return RegretState(g.table_size[player], g.table_starts[player], counts)

    def action_values(self, player, tables) -> np.ndarray:
        if self.is_nfg:
            if player == LEADER:
                return self.game.leader_payoffs @ tables[FOLLOWER]
            return tables[LEADER] @ self.game.follower_payoffs
        g = self.game
        ep = kernels.edge_probs(g, tables[0], tables[1])
        val = kernels.backward_values(g, ep, g.util[:, player])
        pm_ep = kernels.edge_probs(
            g,
            None if player == LEADER else tables[0],
            tables[1] if player == LEADER else None,
        )
        pi_minus = kernels.forward_products(g, pm_ep)
        return kernels.infoset_action_values(g, player, pi_minus, val)

    def seq_mass(self, player, table) -> np.ndarray:
        """Reach-weighted table mass used for strategy averaging."""
        if self.is_nfg:
            return table
        return sequence_reaches(self.game, player, table)[1:]

    def wrap(self, player, table):
        if self.is_nfg:
            return table.copy()
        return BehavioralStrategy(self.game, player, table)


def solve_nash(game, iterations, tolerance=None, check_every=200) -> SolveReport:
    """Self-play regret matching; returns average strategies for both
    players and the Nash gap (max of the two best-response certificates)."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    t0 = time.perf_counter()
    ctx = _Ctx(game)
    states = [ctx.state(LEADER), ctx.state(FOLLOWER)]
    tables = [states[0].current(), states[1].current()]
    done = iterations
    for t in range(1, iterations + 1):
        for p in (LEADER, FOLLOWER):
            v = ctx.action_values(p, tables)
            states[p].observe(v, tables[p])
            tables[p] = states[p].current()
            states[p].accumulate(ctx.seq_mass(p, tables[p]), t)
        if tolerance is not None and (t % check_every == 0 or t == iterations):
            if _nash_gap(game, states) < tolerance:
                done = t
                break
    avg = (states[0].average(), states[1].average())
    gap = _nash_gap(game, states)
    return SolveReport(
        algorithm="nash",
        final_strategy=ctx.wrap(LEADER, tables[0]),
        avg_strategy=ctx.wrap(LEADER, avg[0]),
        follower_strategy=ctx.wrap(FOLLOWER, avg[1]),
        epsilon_br_of_opponent=gap,
        iterations=done,
        wall_time=time.perf_counter() - t0,
        converged=tolerance is not None and gap < tolerance,
    )


def _nash_gap(game, states) -> float:
    avg = (states[0].average(), states[1].average())
    return max(
        epsilon_br_certificate(game, avg, LEADER),
        epsilon_br_certificate(game, avg, FOLLOWER),
    )


def nash_value(game, iterations=100000, tolerance=1e-6) -> tuple[float, float]:
    """Leader's game value and Nash gap from a reference self-play run."""
    rep = solve_nash(game, iterations, tolerance=tolerance)
    value = expected_utility(game, (rep.avg_strategy, rep.follower_strategy))[LEADER]
    return value, rep.epsilon_br_of_opponent


def _solve_vs_oracle(game, oracle, iterations, tolerance, check_every, algorithm,
                     rng=None, p=None) -> SolveReport:
    """Leader regret matching against a follower oracle applied to the
    leader's current strategy each iteration; output is the average."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    t0 = time.perf_counter()
    ctx = _Ctx(game)
    state = ctx.state(LEADER)
    cur = state.current()
    done = iterations
    converged = False
    for t in range(1, iterations + 1):
        resp = oracle(cur, None if rng is None else (rng.random() < p))
        v = ctx.action_values(LEADER, (cur, resp))
        state.observe(v, cur)
        cur = state.current()
        state.accumulate(ctx.seq_mass(LEADER, cur), t)
        if tolerance is not None and (t % check_every == 0 or t == iterations):
            avg = state.average()
            eps = epsilon_br_certificate(game, (avg, oracle(avg, True)), LEADER)
            if eps < tolerance:
                done = t
                converged = True
                break
    avg = state.average()
    resp = oracle(avg, True)
    eps = epsilon_br_certificate(game, (avg, resp), LEADER)
    return SolveReport(
        algorithm=algorithm,
        final_strategy=ctx.wrap(LEADER, cur),
        avg_strategy=ctx.wrap(LEADER, avg),
        follower_strategy=ctx.wrap(FOLLOWER, resp),
        epsilon_br_of_opponent=eps,
        tuned_param=p,
        iterations=done,
        wall_time=time.perf_counter() - t0,
        converged=converged,
    )


def _qr_oracle(game, model):
    def oracle(table, _use_qr=True):
        resp = quantal_response(game, table, model)
        return resp.table if isinstance(resp, BehavioralStrategy) else resp

    return oracle


def _br_oracle(game):
    def oracle(table, _use_qr=False):
        br, _ = best_response(game, table, FOLLOWER)
        return br.table if isinstance(br, BehavioralStrategy) else br

    return oracle


def _mixed_oracle(game, model):
    qr = _qr_oracle(game, model)
    br = _br_oracle(game)

    def oracle(table, use_qr):
        return qr(table) if use_qr else br(table)

    return oracle


def solve_qne(game, model: QuantalModel, iterations, tolerance=None,
              check_every=250) -> SolveReport:
    """Leader regret matching against the quantal response to the
    leader's own current strategy (fixed point: the quantal equilibrium)."""
    rep = _solve_vs_oracle(
        game, _qr_oracle(game, model), iterations, tolerance, check_every, "qne"
    )
    return rep


def solve_cfr_br(game, iterations, tolerance=None, check_every=250) -> SolveReport:
    """Leader regret matching against an exact best response."""
    return _solve_vs_oracle(
        game, _br_oracle(game), iterations, tolerance, check_every, "cfr-br"
    )


def solve_restricted(game, model: QuantalModel, p: float, iterations, seed=0,
                     rng=None, algorithm="restricted") -> SolveReport:
    """Frozen-p restricted run: each iteration the follower oracle is the
    quantal response with probability p and the best response otherwise."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if rng is None:
        rng = np.random.default_rng(seed)
    return _solve_vs_oracle(
        game, _mixed_oracle(game, model), iterations, None, 0, algorithm,
        rng=rng, p=p,
    )


def _significant_change(old, new, threshold):
    """Direction of a gain change beyond the multiplicative band around
    the previous gain (band orientation flips with the sign)."""
    hi = max(old * threshold, old / threshold)
    lo = min(old * threshold, old / threshold)
    if new > hi:
        return 1
    if new < lo:
        return -1
    return 0


def solve_rqr(game, model: QuantalModel, phase1_iters, phase2_iters, seed=0,
              game_value=None) -> SolveReport:
    """Two-phase restricted-response run.

    Phase 1 adapts the QR/BR mixing probability p online. Each iteration
    measures the updated strategy's gain against the full quantal
    response (one extra response per iteration) and compares it to the
    previous iteration's gain; a significant improvement after a QR
    iteration moves p toward QR, a significant improvement after a BR
    iteration moves it toward BR (and significant drops move it the
    opposite way). Step 0.01 at start, decayed by 2^(-1/phase1_iters)
    per iteration, change band 1.00001. Phase 2 reruns from scratch
    with p frozen and returns that run's average strategy.
    """
    if phase1_iters < 1 or phase2_iters < 1:
        raise ValueError("phase iterations must be >= 1")
    t0 = time.perf_counter()
    if game_value is None:
        if getattr(game, "zero_sum", False):
            from .metrics import reference_game_value

            game_value = reference_game_value(game)
        else:
            game_value = 0.0
    rng = np.random.default_rng(seed)
    ctx = _Ctx(game)
    oracle = _mixed_oracle(game, model)

    p = 0.5
    step = 0.01
    decay = 2.0 ** (-1.0 / phase1_iters)
    threshold = 1.00001
    state = ctx.state(LEADER)
    cur = state.current()
    last_gain = None
    qr_resp = None
    for t in range(1, phase1_iters + 1):
        use_qr = rng.random() < p
        # the measurement response for the previous strategy doubles as
        # the update response when the draw lands on QR
        resp = qr_resp if use_qr and qr_resp is not None else oracle(cur, use_qr)
        v = ctx.action_values(LEADER, (cur, resp))
        state.observe(v, cur)
        cur = state.current()
        state.accumulate(ctx.seq_mass(LEADER, cur), t)
        qr_resp = oracle(cur, True)
        gain = expected_utility(game, (cur, qr_resp))[LEADER] - game_value
        if last_gain is not None:
            direction = _significant_change(last_gain, gain, threshold)
            if direction != 0:
                toward_qr = use_qr == (direction > 0)
                p = min(1.0, max(0.0, p + (step if toward_qr else -step)))
        last_gain = gain
        step *= decay

    rep = solve_restricted(game, model, p, phase2_iters, rng=rng, algorithm="rqr")
    rep.tuned_param = p
    rep.iterations = phase1_iters + phase2_iters
    rep.wall_time = time.perf_counter() - t0
    return rep


def convex_combine_efg(s1: BehavioralStrategy, s2: BehavioralStrategy, alpha: float):
    """Reach-weighted convex combination of two behavioral strategies.

    Each infoset mixes the two local distributions with weights
    proportional to (1-alpha) * reach-under-s1 and alpha * reach-under-s2,
    which makes the combined strategy realize the alpha-mixture of the
    two realization plans. Returns (strategy, flagged) where flagged
    lists infosets both strategies leave unreached (uniform fallback).
    Endpoints return exact copies.
    """
    if s1.game is not s2.game or s1.player != s2.player:
        raise ValueError("strategies must share a game and player")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if alpha == 0.0:
        return s1.copy(), []
    if alpha == 1.0:
        return s2.copy(), []
    g, player = s1.game, s1.player
    w1 = sequence_reaches(g, player, s1.table)
    w2 = sequence_reaches(g, player, s2.table)
    out = BehavioralStrategy(g, player)
    flagged = []
    for i in g.player_isets[player]:
        sl = g.iset_slice(i)
        r1 = (1.0 - alpha) * w1[g.iset_parent_seq[i]]
        r2 = alpha * w2[g.iset_parent_seq[i]]
        denom = r1 + r2
        if denom <= 0.0:
            flagged.append(int(i))
            continue
        out.table[sl] = (r1 * s1.table[sl] + r2 * s2.table[sl]) / denom
    return out, flagged


def solve_comb(game, model: QuantalModel, nash_strategy, qne_strategy,
               sweep_size=11) -> SolveReport:
    """Best convex combination of a Nash and a QNE strategy.

    Sweeps sweep_size uniformly spaced mixture weights, scores each
    combined strategy by expected utility against the quantal response
    to itself, and returns the best (ties -> smaller weight). Since
    weight 0 is in the sweep, the result never scores below the Nash
    input.
    """
    if sweep_size < 2:
        raise ValueError("sweep must contain at least the two endpoints")
    t0 = time.perf_counter()
    is_nfg = isinstance(game, NormalFormGame)
    alphas = np.linspace(0.0, 1.0, sweep_size)
    best = None
    for alpha in alphas:
        if is_nfg:
            comb = (1.0 - alpha) * np.asarray(nash_strategy) + alpha * np.asarray(qne_strategy)
            flagged = []
        else:
            comb, flagged = convex_combine_efg(nash_strategy, qne_strategy, float(alpha))
        resp = quantal_response(game, comb, model)
        score = expected_utility(game, (comb, resp))[LEADER]
        if best is None or score > best[0]:
            best = (score, float(alpha), comb, resp, flagged)
    _, alpha, comb, resp, flagged = best
    return SolveReport(
        algorithm="comb",
        final_strategy=comb,
        avg_strategy=comb,
        follower_strategy=resp,
        epsilon_br_of_opponent=epsilon_br_certificate(game, (comb, resp), LEADER),
        tuned_param=alpha,
        iterations=sweep_size,
        wall_time=time.perf_counter() - t0,
        flags=flagged,
    )
