"""Seeded constructors for every evaluation domain.

All constructors are deterministic functions of their parameters and
seed. Tree games are built through the validated builder, so each
returned game has passed the prefix-tree, infoset-consistency and
perfect-recall checks.
"""

from __future__ import annotations

import numpy as np

from .efg import FOLLOWER, LEADER, ExtensiveFormGame, TreeBuilder
from .nfg import NormalFormGame
from .response import QuantalModel


EXAMPLE_MATRICES = {
    # 2x3 game where the Nash strategy beats the quantal fixed point
    # against a logit follower
    "badqne": [[-6.0, 9.0, 9.0], [3.0, 0.0, 2.0]],
    # 2x4 game whose commitment objective has three local maxima
    "multipeak": [[-4.0, -5.0, 8.0, -4.0], [-5.0, -4.0, -4.0, 8.0]],
    # 2x2 game whose optimal commitment mixes in a strictly dominated row
    "dominated_row": [[-2.0, 8.0], [-2.2, -2.5]],
    # follower payoffs [[1,0],[2,0]]: logit responses here are not
    # pretty-good-responses
    "response_trap": [[-1.0, 0.0], [-2.0, 0.0]],
}


def example_nfg(name: str) -> NormalFormGame:
    """Small named zero-sum matrix games used across the test suite."""
    if name not in EXAMPLE_MATRICES:
        raise ValueError(f"unknown example {name!r}")
    return NormalFormGame(np.array(EXAMPLE_MATRICES[name]), zero_sum=True)


def random_nfg(rows: int, cols: int, seed: int, zero_sum: bool = True) -> NormalFormGame:
    """Matrix game with integer payoffs uniform on [-9, 10]."""
    rng = np.random.default_rng(seed)
    lp = rng.integers(-9, 11, size=(rows, cols)).astype(np.float64)
    if zero_sum:
        return NormalFormGame(lp, zero_sum=True)
    fp = rng.integers(-9, 11, size=(rows, cols)).astype(np.float64)
    return NormalFormGame(lp, fp)


def random_efg(b: int, o: int, l: int, seed: int) -> ExtensiveFormGame:
    """Alternating-move zero-sum tree game.

    Players alternate starting with the leader for 2*l plies. Each
    infoset draws its action count uniformly from {2..b}; the opponent
    observes a move only as its child index mod o, and infosets group
    histories with identical own action/observation sequences. Terminal
    utility is a +-1 random walk accumulated along the path.
    """
    if l < 0 or b < 2 or o < 1:
        raise ValueError("need b >= 2, o >= 1, l >= 0")
    rng = np.random.default_rng(seed)
    bld = TreeBuilder(zero_sum=True)
    n_actions: dict[str, int] = {}

    def key_for(player, trace):
        parts = []
        for mover, pos in trace:
            if mover == player:
                parts.append(f"a{pos}")
            else:
                parts.append(f"o{pos % o}")
        return f"P{player}|" + ".".join(parts)

    def grow(parent, depth, trace, walk):
        if depth == 2 * l:
            bld.terminal(parent, float(walk))
            return
        player = depth % 2
        key = key_for(player, trace)
        if key not in n_actions:
            n_actions[key] = int(rng.integers(2, b + 1))
        k = n_actions[key]
        node = bld.decision(parent, player, key, [f"a{j}" for j in range(k)])
        for j in range(k):
            step = 1 if rng.random() < 0.5 else -1
            grow(node, depth + 1, trace + [(player, j)], walk + step)

    if l == 0:
        bld.terminal(None, 0.0)
    else:
        root_key = key_for(LEADER, [])
        n_actions[root_key] = int(rng.integers(2, b + 1))
        k = n_actions[root_key]
        node = bld.decision(None, LEADER, root_key, [f"a{j}" for j in range(k)])
        for j in range(k):
            step = 1 if rng.random() < 0.5 else -1
            grow(node, 1, [(LEADER, j)], step)
    return bld.build()


EFG_SETS = {1: (3, 2, 1), 2: (3, 2, 2), 3: (5, 3, 2), 4: (5, 3, 3)}


def random_efg_set(set_id: int, seed: int) -> ExtensiveFormGame:
    """The four pinned random-tree parameter sets."""
    b, o, l = EFG_SETS[set_id]
    return random_efg(b, o, l, seed)


def discard_degenerate(game, model: QuantalModel, tol: float = 1e-6,
                       nash_iters: int = 50000, ga_config=None) -> bool:
    """True when commitment search cannot beat the Nash strategy against
    the quantal follower (such games carry no signal for comparisons)."""
    from .metrics import reference_nash
    from .qse import solve_qse_ga
    from .response import quantal_response
    from .efg import expected_utility

    ne = reference_nash(game, iterations=nash_iters, tolerance=1e-6)
    sigma = ne.avg_strategy
    eu_ne = expected_utility(game, (sigma, quantal_response(game, sigma, model)))[LEADER]
    ga = solve_qse_ga(game, model, ga_config)
    eu_ga = expected_utility(
        game, (ga.final_strategy, quantal_response(game, ga.final_strategy, model))
    )[LEADER]
    return abs(eu_ga - eu_ne) <= tol


# -- fixed-rule matrix families ----------------------------------------


def gamut_style(family: str, n_actions: int, seed: int = 0) -> NormalFormGame:
    """General-sum matrix families built from fixed documented rules."""
    builders = {
        "grab_the_dollar": _grab_the_dollar,
        "majority_voting": _majority_voting,
        "travelers_dilemma": _travelers_dilemma,
        "war_of_attrition": _war_of_attrition,
    }
    if family not in builders:
        raise ValueError(f"unknown family {family!r}")
    if n_actions < 2:
        raise ValueError("need at least two actions")
    return builders[family](n_actions, seed)


def _grab_the_dollar(n, seed):
    # Payoffs: grabbing first 2, grabbing second 1, simultaneous grab 0.
    lp = np.empty((n, n))
    fp = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                lp[i, j] = fp[i, j] = 0.0
            elif i < j:
                lp[i, j], fp[i, j] = 2.0, 1.0
            else:
                lp[i, j], fp[i, j] = 1.0, 2.0
    return NormalFormGame(lp, fp)


def _majority_voting(n, seed):
    # Candidate utilities per player are seeded integers in [-9, 10];
    # ties go to the lower-indexed candidate.
    rng = np.random.default_rng(seed)
    ul = rng.integers(-9, 11, size=n).astype(np.float64)
    uf = rng.integers(-9, 11, size=n).astype(np.float64)
    lp = np.empty((n, n))
    fp = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            winner = i if i == j else min(i, j)
            lp[i, j] = ul[winner]
            fp[i, j] = uf[winner]
    return NormalFormGame(lp, fp)


def _travelers_dilemma(n, seed):
    # Action k proposes k+2; the lower proposal wins its value +2, the
    # other side gets it -2; equal proposals pay face value.
    bonus = 2.0
    lp = np.empty((n, n))
    fp = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            pi, pj = i + 2.0, j + 2.0
            if i < j:
                lp[i, j], fp[i, j] = pi + bonus, pi - bonus
            elif i > j:
                lp[i, j], fp[i, j] = pj - bonus, pj + bonus
            else:
                lp[i, j] = fp[i, j] = pi
    return NormalFormGame(lp, fp)


def _war_of_attrition(n, seed):
    # Seeded object valuations; unit cost per waited step; simultaneous
    # concession splits the object.
    rng = np.random.default_rng(seed)
    vl = float(rng.integers(2, 11))
    vf = float(rng.integers(2, 11))
    lp = np.empty((n, n))
    fp = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            t = min(i, j)
            if i == j:
                lp[i, j] = vl / 2.0 - t
                fp[i, j] = vf / 2.0 - t
            elif i < j:
                lp[i, j] = -float(t)
                fp[i, j] = vf - t
            else:
                lp[i, j] = vl - t
                fp[i, j] = -float(t)
    return NormalFormGame(lp, fp)


# -- card and bidding games --------------------------------------------


def one_card_poker(deck_size: int) -> ExtensiveFormGame:
    """One-card poker: ante 1, single bet of 1, higher card wins.

    Leader may bet or check; facing a bet the opponent calls or folds;
    after a leader check the follower may bet, and the leader then calls
    or folds.
    """
    if deck_size < 2:
        raise ValueError("deck needs at least two cards")
    bld = TreeBuilder(zero_sum=True)
    deals = [(i, j) for i in range(deck_size) for j in range(deck_size) if i != j]
    root = bld.chance(None, [1.0 / len(deals)] * len(deals))

    def showdown(i, j, stake) -> float:
        return float(stake) if i > j else -float(stake)

    for i, j in deals:
        ln = bld.decision(root, LEADER, f"L|{i}|", ["bet", "check"])
        fb = bld.decision(ln, FOLLOWER, f"F|{j}|bet", ["call", "fold"])
        bld.terminal(fb, showdown(i, j, 2))
        bld.terminal(fb, 1.0)
        fc = bld.decision(ln, FOLLOWER, f"F|{j}|check", ["bet", "check"])
        lc = bld.decision(fc, LEADER, f"L|{i}|check-bet", ["call", "fold"])
        bld.terminal(lc, showdown(i, j, 2))
        bld.terminal(lc, -1.0)
        bld.terminal(fc, showdown(i, j, 1))
    return bld.build()


def leduc_holdem() -> ExtensiveFormGame:
    """Two-round limit poker: 6 cards in 3 ranks, ante 1, round bets 2
    then 4, at most two raises per round, board card dealt between
    rounds. Players observe ranks only."""
    bld = TreeBuilder(zero_sum=True)
    cards = list(range(6))

    def rank(c):
        return c // 2

    deals = [(i, j) for i in cards for j in cards if i != j]
    root = bld.chance(None, [1.0 / 30.0] * 30)

    def winner(i, j, board) -> int:
        # +1 leader, -1 follower, 0 split
        if rank(i) == rank(board):
            return 1
        if rank(j) == rank(board):
            return -1
        if rank(i) == rank(j):
            return 0
        return 1 if rank(i) > rank(j) else -1

    def terminal_fold(parent, folder, pots):
        # Folder forfeits their committed chips.
        bld.terminal(parent, float(pots[folder]) if folder == FOLLOWER else -float(pots[LEADER]))

    def betting(parent, i, j, prefix, rnd, hist, to_act, raises, pots, on_close):
        """One betting round; on_close(node, pots, closed_hist) continues.

        Infoset keys carry the full public line (prefix holds the prior
        round) so both players keep perfect recall across rounds.
        """
        bet = 2 if rnd == 1 else 4
        me, other = to_act, 1 - to_act
        card = i if to_act == LEADER else j
        key = f"P{to_act}|{rank(card)}|{prefix}r{rnd}:{hist}"
        facing = pots[other] > pots[me]
        actions = (["call"] + (["raise"] if raises < 2 else []) + ["fold"]) if facing \
            else ["check", "raise"]
        node = bld.decision(parent, to_act, key, actions)
        for act in actions:
            if act == "fold":
                terminal_fold(node, me, pots)
            elif act == "call":
                p2 = dict(pots)
                p2[me] = p2[other]
                on_close(node, p2, hist + "c")
            elif act == "check":
                if hist == "":
                    betting(node, i, j, prefix, rnd, "k", other, raises,
                            dict(pots), on_close)
                else:
                    on_close(node, dict(pots), hist + "k")
            else:  # raise
                p2 = dict(pots)
                p2[me] = p2[other] + bet
                betting(node, i, j, prefix, rnd, hist + "r", other, raises + 1,
                        p2, on_close)

    for i, j in deals:
        remaining = [c for c in cards if c not in (i, j)]

        def deal_board(parent, pots, h1, i=i, j=j, remaining=remaining):
            ch = bld.chance(parent, [0.25] * 4)
            for board in remaining:
                prefix = f"r1:{h1}|b{rank(board)}|"
                betting(ch, i, j, prefix, 2, "", LEADER, 0,
                        {LEADER: pots[LEADER], FOLLOWER: pots[FOLLOWER]},
                        lambda p, q, _h, board=board, i=i, j=j: bld.terminal(
                            p, float(winner(i, j, board) * q[FOLLOWER])))

        betting(root, i, j, "", 1, "", LEADER, 0, {LEADER: 1, FOLLOWER: 1},
                deal_board)
    return bld.build()


def goofspiel(k: int) -> ExtensiveFormGame:
    """Fixed-deck bidding game: point cards 1..k revealed in ascending
    order; each turn both players secretly bid one remaining card, the
    higher bid takes the point card, ties discard it. Past bids are
    public; the follower does not see the leader's current bid."""
    if k < 1:
        raise ValueError("need at least one card")
    bld = TreeBuilder(zero_sum=True)

    def grow(parent, turn, rem_l, rem_f, past, score):
        if turn > k:
            bld.terminal(parent, float(score))
            return
        ln = bld.decision(parent, LEADER, f"L|{past}", [str(c) for c in rem_l])
        for lb in rem_l:
            fkey = f"F|{past}"
            fn = bld.decision(ln, FOLLOWER, fkey, [str(c) for c in rem_f])
            for fb in rem_f:
                delta = turn if lb > fb else (-turn if fb > lb else 0)
                grow(fn, turn + 1,
                     tuple(c for c in rem_l if c != lb),
                     tuple(c for c in rem_f if c != fb),
                     f"{past}{lb}v{fb};", score + delta)

    grow(None, 1, tuple(range(1, k + 1)), tuple(range(1, k + 1)), "", 0)
    return bld.build()


# -- hardness-reduction game -------------------------------------------

PARTITION_NFG = np.array([[0.0, 10.0, 0.0], [0.0, 0.0, 10.0]])
COORDINATION_NFG = np.array([[1.0, 0.0], [0.0, 1.0]])


def partition_reduction_game(items, variant: str = "zero_sum") -> ExtensiveFormGame:
    """Tree game whose optimal-commitment value separates solvable from
    unsolvable partition instances.

    A uniform chance node picks one of 2n branches: for each item a
    matrix-game branch and a placement branch. The leader has one
    infoset per item covering both branches (she cannot tell them
    apart). Matrix-branch payoffs are scaled by 2n so the follower's
    per-item response is exactly the standalone matrix response.
    The placement branches share a single follower infoset whose two
    actions pay the leader x_i when they match her placement choice.
    """
    items = list(items)
    n = len(items)
    if n == 0 or any(x <= 0 for x in items):
        raise ValueError("need a non-empty multiset of positive integers")
    if variant not in ("zero_sum", "general_sum"):
        raise ValueError(f"unknown variant {variant!r}")
    zero_sum = variant == "zero_sum"
    matrix = PARTITION_NFG if zero_sum else COORDINATION_NFG
    scale = 2.0 * n
    bld = TreeBuilder(zero_sum=zero_sum)
    root = bld.chance(None, [1.0 / (2 * n)] * (2 * n))
    follower_cols = matrix.shape[1]
    for idx, x in enumerate(items):
        # matrix branch
        ln = bld.decision(root, LEADER, f"item{idx}", ["X", "Y"])
        for row in range(2):
            fn = bld.decision(ln, FOLLOWER, f"matrix{idx}",
                              [chr(ord("A") + c) for c in range(follower_cols)])
            for col in range(follower_cols):
                u = scale * matrix[row, col]
                if zero_sum:
                    bld.terminal(fn, u)
                else:
                    bld.terminal(fn, u, u)
        # placement branch (same leader infoset, shared follower infoset)
        ln2 = bld.decision(root, LEADER, f"item{idx}", ["X", "Y"])
        for row in range(2):
            fn2 = bld.decision(ln2, FOLLOWER, "placement", ["a1", "a2"])
            for col in range(2):
                u = float(x) if row == col else 0.0
                if zero_sum:
                    bld.terminal(fn2, u)
                else:
                    bld.terminal(fn2, u, -u)
    return bld.build()
