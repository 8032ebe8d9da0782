"""Follower response oracles.

Covers exact best responses, epsilon-best-response certificates, and
quantal responses: a quantal model maps a vector of action utilities to
a distribution that plays better actions more often. For tree games the
counterfactual logit response is computed in one reverse sweep over the
follower's infosets ordered by decreasing own-sequence length, so each
infoset's action values already account for the quantal play below it.
"""

from __future__ import annotations

import json

import numpy as np

from . import kernels
from .efg import (
    FOLLOWER,
    LEADER,
    BehavioralStrategy,
    ExtensiveFormGame,
    _tables,
    expected_utility,
)
from .nfg import NormalFormGame, validate_mixed


def softmax(values, lam: float) -> np.ndarray:
    """Overflow-safe softmax of ``lam * values``."""
    x = lam * np.asarray(values, dtype=np.float64)
    x = x - x.max()
    e = np.exp(x)
    return e / e.sum()


def lambert_w(x: float, iters: int = 50) -> float:
    """Principal branch of w * e^w = x by Newton iteration."""
    w = x if x < 1.0 else np.log(x)
    for _ in range(iters):
        ew = np.exp(w)
        w -= (w * ew - x) / (ew * (w + 1.0))
    return float(w)


def softmax_suboptimality_bound(lam: float, n: int) -> float:
    """Upper bound on max(A) - softmax_lam-weighted mean of A, valid for
    any utility vector A of n >= 2 entries with positive maximum."""
    if n < 2:
        raise ValueError("bound requires at least two actions")
    return lambert_w(1.0 / np.e) / lam + (n - 2) / (lam * np.e)


def default_ordering_weights(n: int) -> np.ndarray:
    """Descending rank weights: 0.5, 0.3, remaining 0.2 split uniformly.

    With fewer than three actions the leading weights are renormalized.
    """
    if n <= 0:
        raise ValueError("need at least one action")
    if n == 1:
        return np.array([1.0])
    if n == 2:
        return np.array([0.5, 0.3]) / 0.8
    return np.concatenate([[0.5, 0.3], np.full(n - 2, 0.2 / (n - 2))])


class QuantalModel:
    """Response model: kind 'logit' (softmax with rationality lam),
    'ordering_based' (fixed weights by utility rank, ties share their
    ranks' mass), or 'custom_generator' (positive increasing q)."""

    def __init__(self, kind="logit", lam=1.0, weights=None, generator=None):
        self.kind = kind
        if kind == "logit":
            if not lam > 0:
                raise ValueError("rationality parameter must be positive")
            self.lam = float(lam)
        elif kind == "ordering_based":
            if weights is not None:
                w = np.asarray(weights, dtype=np.float64)
                if np.any(w < 0) or np.any(np.diff(w) > 1e-12) or abs(w.sum() - 1) > 1e-9:
                    raise ValueError("rank weights must be descending and sum to 1")
                self.weights = w
            else:
                self.weights = None
        elif kind == "custom_generator":
            if generator is None:
                raise ValueError("custom model needs a generator function")
            self.generator = generator
        else:
            raise ValueError(f"unknown model kind {kind!r}")

    @classmethod
    def logit(cls, lam: float) -> "QuantalModel":
        return cls("logit", lam=lam)

    @classmethod
    def ordering_based(cls, weights=None) -> "QuantalModel":
        return cls("ordering_based", weights=weights)

    def distribution(self, values) -> np.ndarray:
        """Response distribution over actions with the given utilities."""
        v = np.asarray(values, dtype=np.float64)
        if self.kind == "logit":
            return softmax(v, self.lam)
        if self.kind == "ordering_based":
            w = self.weights if self.weights is not None else default_ordering_weights(v.size)
            if w.size != v.size:
                raise ValueError("rank weight count does not match action count")
            out = np.empty(v.size)
            order = np.argsort(-v, kind="stable")
            sv = v[order]
            k = 0
            while k < v.size:
                j = k
                while j < v.size and sv[j] == sv[k]:
                    j += 1
                out[order[k:j]] = w[k:j].mean()
                k = j
            return out
        q = np.asarray([self.generator(x) for x in v], dtype=np.float64)
        if np.any(q <= 0):
            raise ValueError("generator must be strictly positive")
        return q / q.sum()

    def to_json(self) -> str:
        if self.kind == "logit":
            return json.dumps({"kind": "logit", "lambda": self.lam})
        if self.kind == "ordering_based":
            d = {"kind": "ordering_based"}
            if self.weights is not None:
                d["weights"] = [float(w) for w in self.weights]
            return json.dumps(d)
        raise ValueError("custom generator models are not serializable")

    @classmethod
    def from_json(cls, text: str) -> "QuantalModel":
        d = json.loads(text)
        if d["kind"] == "logit":
            return cls.logit(d["lambda"])
        if d["kind"] == "ordering_based":
            return cls.ordering_based(d.get("weights"))
        raise ValueError(f"cannot load model kind {d['kind']!r}")

    def __repr__(self):
        if self.kind == "logit":
            return f"QuantalModel(logit, lam={self.lam})"
        return f"QuantalModel({self.kind})"


def follower_action_utilities(game: NormalFormGame, leader_strategy) -> np.ndarray:
    """Follower's expected utility of each action against the leader mix."""
    sigma = validate_mixed(leader_strategy, game.n_rows)
    return sigma @ game.follower_payoffs


def nfg_quantal_response(game: NormalFormGame, leader_strategy, model: QuantalModel):
    """Quantal response mix of the follower in a matrix game."""
    return model.distribution(follower_action_utilities(game, leader_strategy))


def _grouped_logit(v, idx, starts, lam):
    """Softmax within each group of v[idx]; returns flat probabilities."""
    x = lam * v[idx]
    counts = np.diff(np.append(starts, len(idx)))
    x = x - np.repeat(np.maximum.reduceat(x, starts), counts)
    e = np.exp(x)
    return e / np.repeat(np.add.reduceat(e, starts), counts)


def clqr(game: ExtensiveFormGame, leader_strategy, model: QuantalModel) -> BehavioralStrategy:
    """Counterfactual quantal response in a tree game.

    Each follower infoset responds to the counterfactual utilities of its
    actions given the leader strategy and the quantal play already fixed
    at longer follower sequences. Defined (and strictly positive, for
    logit) at every infoset, reachable or not.
    """
    lt, _ = _tables(game, (leader_strategy, np.zeros(game.table_size[FOLLOWER])))
    resp = BehavioralStrategy.uniform(game, FOLLOWER)
    if game.table_size[FOLLOWER] == 0:
        return resp
    pi_minus = kernels.forward_products(
        game, kernels.edge_probs(game, lt, None)
    )
    bounds = game.g_bounds[FOLLOWER]
    for lev in range(len(game.g_levels[FOLLOWER]) - 1, -1, -1):
        ep = kernels.edge_probs(game, lt, resp.table)
        val = kernels.backward_values(game, ep, game.util[:, FOLLOWER])
        v = kernels.infoset_action_values(
            game, FOLLOWER, pi_minus, val, bounds[lev], bounds[lev + 1]
        )
        idx = game.lv_flat_idx[FOLLOWER][lev]
        starts = game.lv_starts[FOLLOWER][lev]
        if model.kind == "logit":
            resp.table[idx] = _grouped_logit(v, idx, starts, model.lam)
        else:
            ends = np.append(starts[1:], len(idx))
            for s, e in zip(starts, ends):
                resp.table[idx[s:e]] = model.distribution(v[idx[s:e]])
    return resp


def quantal_response(game, leader_strategy, model: QuantalModel):
    """Dispatch to the matrix or tree quantal response."""
    if isinstance(game, NormalFormGame):
        return nfg_quantal_response(game, leader_strategy, model)
    return clqr(game, leader_strategy, model)


def _grouped_first_argmax(x, starts):
    """Index (into x) of the first maximum within each group."""
    counts = np.diff(np.append(starts, len(x)))
    gmax = np.repeat(np.maximum.reduceat(x, starts), counts)
    pos = np.where(x == gmax, np.arange(len(x)), len(x))
    return np.minimum.reduceat(pos, starts)


def best_response(game, opponent_strategy, player: int):
    """Exact pure best response and its value; ties take the lowest
    action index."""
    if isinstance(game, NormalFormGame):
        if player == LEADER:
            vals = game.leader_payoffs @ validate_mixed(opponent_strategy, game.n_cols)
        else:
            vals = validate_mixed(opponent_strategy, game.n_rows) @ game.follower_payoffs
        k = int(np.argmax(vals))
        br = np.zeros(vals.size)
        br[k] = 1.0
        return br, float(vals[k])

    other = FOLLOWER if player == LEADER else LEADER
    profile = [None, None]
    br = BehavioralStrategy.uniform(game, player)
    profile[player] = br
    if isinstance(opponent_strategy, BehavioralStrategy):
        profile[other] = opponent_strategy
    else:
        profile[other] = BehavioralStrategy(game, other, opponent_strategy)
    opp_table = profile[other].table
    if game.table_size[player] > 0:
        pi_minus = kernels.forward_products(
            game,
            kernels.edge_probs(
                game,
                None if player == LEADER else opp_table,
                None if player == FOLLOWER else opp_table,
            ),
        )
        bounds = game.g_bounds[player]
        for lev in range(len(game.g_levels[player]) - 1, -1, -1):
            ep = kernels.edge_probs(game, profile[0].table, profile[1].table)
            val = kernels.backward_values(game, ep, game.util[:, player])
            v = kernels.infoset_action_values(
                game, player, pi_minus, val, bounds[lev], bounds[lev + 1]
            )
            idx = game.lv_flat_idx[player][lev]
            starts = game.lv_starts[player][lev]
            firsts = _grouped_first_argmax(v[idx], starts)
            br.table[idx] = 0.0
            br.table[idx[firsts]] = 1.0
    value = expected_utility(game, profile)[player]
    return br, value


def epsilon_br_certificate(game, profile, player: int) -> float:
    """How much the player gains by deviating to an exact best response."""
    current = expected_utility(game, profile)[player]
    other = FOLLOWER if player == LEADER else LEADER
    _, best = best_response(game, profile[other], player)
    return best - current
