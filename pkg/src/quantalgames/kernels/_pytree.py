"""Numpy implementations of the tree sweep kernels.

All functions operate on the flat BFS arrays of an
:class:`~quantalgames.efg.ExtensiveFormGame` and are level-vectorized:
one gather/scatter per depth instead of one call per node.
"""

import numpy as np

_LEADER = 0
_FOLLOWER = 1


def edge_probs(game, leader_table, follower_table, chance=True):
    """Probability of the incoming edge of every node under the given
    tables; ``None`` excludes that source (its edges count as 1)."""
    if chance:
        ep = game.edge_chance_prob.copy()
    else:
        ep = np.ones(game.n_nodes)
    if leader_table is not None:
        m = game.edge_player == _LEADER
        ep[m] *= leader_table[game.edge_flat[m]]
    if follower_table is not None:
        m = game.edge_player == _FOLLOWER
        ep[m] *= follower_table[game.edge_flat[m]]
    return ep


def forward_products(game, ep):
    """Cumulative product of edge probabilities from the root down."""
    pi = np.empty(game.n_nodes)
    pi[0] = 1.0
    ls = game.level_start
    for d in range(1, len(ls) - 1):
        lo, hi = ls[d], ls[d + 1]
        pi[lo:hi] = pi[game.parent[lo:hi]] * ep[lo:hi]
    return pi


def backward_values(game, ep, util):
    """Expected value of ``util`` at every node when play continues
    according to ``ep`` below it (terminals keep their utility)."""
    val = np.asarray(util, dtype=np.float64).copy()
    ls = game.level_start
    for d in range(len(ls) - 3, -1, -1):
        lo, hi = ls[d + 1], ls[d + 2]
        if lo == hi:
            continue
        w = ep[lo:hi] * val[lo:hi]
        par = game.level_parents[d]
        if par.size:
            val[par] = np.add.reduceat(w, game.first_child[par] - lo)
    return val


def infoset_action_values(game, player, pi_minus, val, lo=0, hi=None):
    """Counterfactual action values in flat table layout:
    v[(I,a)] = sum over members h of pi_minus[h] * val[child(h,a)].

    ``lo:hi`` restricts to a slice of the player's gather arrays, which
    are grouped by own-sequence length.
    """
    go = game.g_out[player]
    if hi is None:
        hi = len(go)
    sl = slice(lo, hi)
    w = pi_minus[game.g_node[player][sl]] * val[game.g_child[player][sl]]
    return np.bincount(go[sl], weights=w, minlength=game.table_size[player])
