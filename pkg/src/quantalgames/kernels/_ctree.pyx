# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""C implementations of the tree sweep kernels.

Loop orders mirror the numpy versions (children ascending, gather
entries in array order). Segmented sums still differ from numpy's
unrolled reductions by float rounding, so cross-backend agreement is
to ~1e-15 relative, while each backend on its own is bit-deterministic.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

_LEADER = 0
_FOLLOWER = 1


def edge_probs(game, leader_table, follower_table, chance=True):
    """Probability of the incoming edge of every node under the given
    tables; ``None`` excludes that source (its edges count as 1)."""
    cdef Py_ssize_t n = game.n_nodes
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ep
    if chance:
        ep = game.edge_chance_prob.copy()
    else:
        ep = np.ones(n, dtype=np.float64)
    cdef double[::1] epv = ep
    cdef signed char[::1] epl = game.edge_player
    cdef int[::1] ef = game.edge_flat
    cdef double[::1] tab
    cdef Py_ssize_t i
    if leader_table is not None:
        tab = np.ascontiguousarray(leader_table, dtype=np.float64)
        for i in range(n):
            if epl[i] == _LEADER:
                epv[i] *= tab[ef[i]]
    if follower_table is not None:
        tab = np.ascontiguousarray(follower_table, dtype=np.float64)
        for i in range(n):
            if epl[i] == _FOLLOWER:
                epv[i] *= tab[ef[i]]
    return ep


def forward_products(game, ep):
    """Cumulative product of edge probabilities from the root down."""
    cdef Py_ssize_t n = game.n_nodes
    cdef cnp.ndarray[cnp.float64_t, ndim=1] pi = np.empty(n, dtype=np.float64)
    cdef double[::1] piv = pi
    cdef double[::1] epv = np.ascontiguousarray(ep, dtype=np.float64)
    cdef int[::1] parent = game.parent
    cdef Py_ssize_t i
    piv[0] = 1.0
    for i in range(1, n):
        piv[i] = piv[parent[i]] * epv[i]
    return pi


def backward_values(game, ep, util):
    """Expected value of ``util`` at every node when play continues
    according to ``ep`` below it (terminals keep their utility)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] val = \
        np.asarray(util, dtype=np.float64).copy()
    cdef double[::1] vv = val
    cdef double[::1] epv = np.ascontiguousarray(ep, dtype=np.float64)
    cdef int[::1] fc = game.first_child
    cdef int[::1] nc = game.num_children
    cdef Py_ssize_t n = game.n_nodes
    cdef Py_ssize_t i, c
    cdef double acc
    for i in range(n - 1, -1, -1):
        if nc[i] > 0:
            acc = 0.0
            for c in range(fc[i], fc[i] + nc[i]):
                acc += epv[c] * vv[c]
            vv[i] = acc
    return val


def infoset_action_values(game, player, pi_minus, val, lo=0, hi=None):
    """Counterfactual action values in flat table layout:
    v[(I,a)] = sum over members h of pi_minus[h] * val[child(h,a)].

    ``lo:hi`` restricts to a slice of the player's gather arrays, which
    are grouped by own-sequence length.
    """
    cdef int[::1] go = game.g_out[player]
    cdef int[::1] gc = game.g_child[player]
    cdef int[::1] gn = game.g_node[player]
    cdef Py_ssize_t lo_i = lo
    cdef Py_ssize_t hi_i = go.shape[0] if hi is None else hi
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = \
        np.zeros(game.table_size[player], dtype=np.float64)
    cdef double[::1] ov = out
    cdef double[::1] pm = np.ascontiguousarray(pi_minus, dtype=np.float64)
    cdef double[::1] vv = np.ascontiguousarray(val, dtype=np.float64)
    cdef Py_ssize_t k
    for k in range(lo_i, hi_i):
        ov[go[k]] += pm[gn[k]] * vv[gc[k]]
    return out
