"""Two-player normal-form (matrix) games and mixed strategies.

The row player is the leader, the column player the follower. Mixed
strategies are plain 1-D numpy probability vectors.
"""

from __future__ import annotations

import json

import numpy as np

STRATEGY_SUM_TOL = 1e-9


class NormalFormGame:
    """A bimatrix game; ``zero_sum`` games store exactly negated follower payoffs."""

    def __init__(self, leader_payoffs, follower_payoffs=None, zero_sum: bool = False):
        lp = np.asarray(leader_payoffs, dtype=np.float64)
        if lp.ndim != 2 or lp.size == 0:
            raise ValueError("payoff matrix must be 2-D and non-empty")
        if follower_payoffs is None:
            if not zero_sum:
                raise ValueError("follower payoffs required for general-sum games")
            fp = -lp
        else:
            fp = np.asarray(follower_payoffs, dtype=np.float64)
        if fp.shape != lp.shape:
            raise ValueError(f"payoff shapes differ: {lp.shape} vs {fp.shape}")
        if zero_sum and not np.array_equal(fp, -lp):
            raise ValueError("zero_sum game requires follower_payoffs == -leader_payoffs")
        lp.setflags(write=False)
        fp.setflags(write=False)
        self.leader_payoffs = lp
        self.follower_payoffs = fp
        self.zero_sum = zero_sum

    @property
    def n_rows(self) -> int:
        return self.leader_payoffs.shape[0]

    @property
    def n_cols(self) -> int:
        return self.leader_payoffs.shape[1]

    def __repr__(self):
        kind = "zero-sum" if self.zero_sum else "general-sum"
        return f"NormalFormGame({self.n_rows}x{self.n_cols}, {kind})"

    def to_json(self) -> str:
        return json.dumps(
            {
                "leader_payoffs": self.leader_payoffs.tolist(),
                "follower_payoffs": self.follower_payoffs.tolist(),
                "zero_sum": self.zero_sum,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "NormalFormGame":
        d = json.loads(text)
        return cls(d["leader_payoffs"], d["follower_payoffs"], bool(d["zero_sum"]))


def zero_sum_nfg(leader_payoffs) -> NormalFormGame:
    return NormalFormGame(leader_payoffs, zero_sum=True)


def uniform_mixed(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def validate_mixed(sigma, n: int) -> np.ndarray:
    """Check a mixed strategy against a pure-strategy count and return it as float64."""
    s = np.asarray(sigma, dtype=np.float64)
    if s.shape != (n,):
        raise ValueError(f"strategy has shape {s.shape}, expected ({n},)")
    if np.any(s < -STRATEGY_SUM_TOL):
        raise ValueError("strategy has negative entries")
    if abs(s.sum() - 1.0) > STRATEGY_SUM_TOL:
        raise ValueError(f"strategy sums to {s.sum()}, not 1")
    return s


def nfg_expected_utility(game: NormalFormGame, leader, follower) -> tuple[float, float]:
    """Expected payoff pair for a mixed-strategy profile."""
    s = validate_mixed(leader, game.n_rows)
    t = validate_mixed(follower, game.n_cols)
    return float(s @ game.leader_payoffs @ t), float(s @ game.follower_payoffs @ t)
